//! Follow phi(t) through every window of a triangle certificate and print
//! the window averages against the plan point, plus the horoball ratios.
//!
//!     cargo run --release --example track_trajectory -- [K]

use limitset::constructor::{synthesize, SynthConfig, TargetCurve};
use limitset::trajectory::{checkpoints, trajectory_table, WINDOW_POINTS};

fn main() -> limitset::Result<()> {
    let k = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(16);
    let curve = TargetCurve::polyline(vec![[0.6, 0.2, 0.2], [0.2, 0.6, 0.2], [0.2, 0.2, 0.6], [0.6, 0.2, 0.2]])?;
    let cert = synthesize(&curve, &SynthConfig { k, ..SynthConfig::default() })?;
    let rows = trajectory_table(&cert, WINDOW_POINTS)?;
    let cps = checkpoints(&cert)?;
    println!("{:>3} {:>22} {:>22} {:>9} {:>9} {:>9}", "k", "target", "phi (window start)", "max dev", "11 eps", "horo/eps");
    for (w, cp) in rows.chunks(WINDOW_POINTS).zip(&cps) {
        let worst = w.iter().map(|r| r.deviation).fold(0.0, f64::max);
        let r = &w[0];
        println!(
            "{:>3} ({:.3},{:.3},{:.3}) ({:.3},{:.3},{:.3}) {:>9.4} {:>9.4} {:>9.2e}",
            r.k,
            r.target[0],
            r.target[1],
            r.target[2],
            r.phi[0],
            r.phi[1],
            r.phi[2],
            worst,
            11.0 * cp.epsilon,
            cp.horoball_ratio / cp.epsilon
        );
    }
    Ok(())
}
