//! Compare exact ln q_n with the coarse clock ln q ~ base + l ln lambda(theta)
//! across a two-block schedule. The error stays below the budget L.

use limitset::coarse::{coarse_log_q, error_budget, GrowthModel, LogQuantity};
use limitset::contfrac::{convergents, CFSchedule};
use limitset::numeric::ln_biguint;

fn main() -> limitset::Result<()> {
    let s = CFSchedule::new(0, &[(3, 6), (1000, 4)])?;
    let cs = convergents(&s, 10)?;
    let budget = error_budget();
    println!("error budget L = {:.6}", budget.l);
    println!("{:>3} {:>3} {:>12} {:>12} {:>12} {:>10}", "n", "j", "ln q exact", "coarse", "closed form", "error");
    let mut base = LogQuantity::log_q(0.0);
    let mut start = 0usize;
    for (j, b) in s.blocks.iter().enumerate() {
        let j = j + 1;
        let run: usize = b.run_length.to_string().parse().unwrap();
        let model = GrowthModel::new(&b.digit, j, &cs[start].q, &cs[start + 1].q)?;
        for ell in 0..=run {
            let n = start + ell;
            let exact = ln_biguint(&cs[n].q);
            let coarse = coarse_log_q(&s, j, ell as u64, base)?;
            println!(
                "{n:>3} {j:>3} {exact:>12.6} {:>12.6} {:>12.6} {:>10.3e}",
                coarse.value,
                model.log_q(ell as u64),
                (exact - coarse.value).abs()
            );
        }
        base = coarse_log_q(&s, j, run as u64, base)?;
        start += run;
    }
    Ok(())
}
