//! Random schedules through both the coarse engine and exact arithmetic.
//!
//!     cargo run --release --example cross_validate -- [trials] [seed]

use limitset::verify::cross_validate;

fn main() -> limitset::Result<()> {
    let mut args = std::env::args().skip(1);
    let trials = args.next().and_then(|s| s.parse().ok()).unwrap_or(100);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let rep = cross_validate(seed, trials, 1_000_000)?;
    println!("{} schedules, {} comparisons", rep.trials, rep.comparisons);
    println!("max |ln q error| = {:.4}", rep.max_log_q_error);
    println!("max |T error|    = {:.4}", rep.max_balance_error);
    println!("budget L         = {:.4}", rep.l);
    println!("half-log windows checked: {}", rep.half_log_checks);
    for f in &rep.failures {
        println!("  {f}");
    }
    println!("{}", if rep.pass { "pass" } else { "FAIL" });
    Ok(())
}
