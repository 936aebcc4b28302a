//! Balance times of the convergent curves on one torus of a slit surface:
//! the exact T_n (horizontal and vertical flat parts equal) next to the
//! coarse half-log estimate (ln q_n + ln q_{n+1}) / 2.

use num_bigint::BigUint;

use limitset::contfrac::{convergents, value_enclosure, Block, CFSchedule};
use limitset::flatsurf::{balance_time_exact, flat_components, slit_threshold, SlitSurface, TorusCurve};
use limitset::numeric::ln_biguint;

fn main() -> limitset::Result<()> {
    let mut s = CFSchedule::new(0, &[(2, 4), (17, 3), (2, 4)])?;
    let depth = 11;
    // a long tail of 2s pins the slope down to far below f64 resolution
    s.blocks.push(Block { digit: BigUint::from(2u32), run_length: BigUint::from(60u32) });
    let enc = value_enclosure(&s, depth + 58)?;
    let slit = slit_threshold(1.0, 0.25)? / 2.0;
    println!("slit length {slit:.4e}");
    let surface = SlitSurface::new(slit, [enc.clone(), enc.clone(), enc])?;
    let cs = convergents(&s, depth + 1)?;
    println!("{:>3} {:>10} {:>10} {:>10} {:>12}", "n", "T exact", "half-log", "diff", "|h-v|/h");
    for n in 0..depth as usize {
        let curve = TorusCurve::from_convergent(0, &cs[n]);
        let t = balance_time_exact(&surface, &curve)?;
        let half = 0.5 * (ln_biguint(&cs[n].q) + ln_biguint(&cs[n + 1].q));
        let (h, v) = flat_components(&surface, &curve, t)?;
        println!("{n:>3} {t:>10.5} {half:>10.5} {:>10.5} {:>12.2e}", t - half, (h - v).abs() / h);
    }
    Ok(())
}
