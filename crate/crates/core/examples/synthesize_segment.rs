//! Synthesize a certificate for the boundary edge (1,0,0) -> (0,1,0) and
//! print the block structure and the tightest audit margins.
//!
//!     cargo run --release --example synthesize_segment -- [K]

use limitset::constructor::{audit, synthesize, SynthConfig, TargetCurve};
use limitset::numeric::rational_to_f64;

fn main() -> limitset::Result<()> {
    let k = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(25);
    let curve = TargetCurve::segment([1.0, 0.0, 0.0], [0.0, 1.0, 0.0])?;
    let t = std::time::Instant::now();
    let cert = synthesize(&curve, &SynthConfig { k, ..SynthConfig::default() })?;
    println!("K = {k}, synthesized in {:.2?}", t.elapsed());
    println!("{:>3} {:>12} {:>12} {:>12} {:>10}", "j", "s_0", "s_1", "s_2", "n_0 bits");
    for (b, n) in cert.thetas.iter().zip(&cert.lengths) {
        println!(
            "{:>3} {:>12.4e} {:>12.4e} {:>12.4e} {:>10}",
            b.j,
            rational_to_f64(&b.scales[0]),
            rational_to_f64(&b.scales[1]),
            rational_to_f64(&b.scales[2]),
            n[0].bits()
        );
    }
    println!("{} audit entries, all passing", cert.audit.len());
    for (id, m) in audit::worst_margins(&cert.audit) {
        println!("  {id:<18} worst margin {m:.3e}");
    }
    Ok(())
}
