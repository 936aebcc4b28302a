//! Expand a block schedule, print its convergents and check unimodularity
//! and the approximation bounds at every index.
//!
//!     cargo run --example convergents -- [digit:run ...]
//!
//! With no arguments the schedule is 2:3 10:2 5:4 (three 2s, two 10s, four 5s).

use limitset::contfrac::{approximation_bounds_hold, check_unimodular, convergents, CFSchedule};

fn main() -> limitset::Result<()> {
    let mut blocks: Vec<(u64, u64)> = std::env::args()
        .skip(1)
        .filter_map(|a| {
            let (d, n) = a.split_once(':')?;
            Some((d.parse().ok()?, n.parse().ok()?))
        })
        .collect();
    if blocks.is_empty() {
        blocks = vec![(2, 3), (10, 2), (5, 4)];
    }
    let s = CFSchedule::new(0, &blocks)?;
    let depth: u64 = blocks.iter().map(|b| b.1).sum();
    let cs = convergents(&s, depth)?;
    println!("{:>4} {:>6} {:>24} {:>24}  unimodular  bounds", "n", "a_n", "p_n", "q_n");
    // the bounds at n look three digits ahead
    for n in 0..depth.saturating_sub(3) as usize {
        let a = s.digit(n as u64).map(|d| d.to_string()).unwrap_or_default();
        let uni = check_unimodular(&cs[n], &cs[n + 1])?;
        let bounds = approximation_bounds_hold(&cs, n);
        println!("{:>4} {:>6} {:>24} {:>24}  {:<10}  {}", n, a, cs[n].p, cs[n].q, uni, bounds);
    }
    Ok(())
}
