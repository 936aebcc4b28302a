//! Synthesize certificates for three curves, then verify each one from
//! scratch: audit replay, interleaving, tracking, horoballs, digits,
//! growth and the two-sided limit set comparison.
//!
//!     cargo run --release --example verify_certificate -- [K] [mesh]

use limitset::constructor::{synthesize, SynthConfig, TargetCurve};
use limitset::verify::{verify_certificate, VerifyOptions};

fn main() -> limitset::Result<()> {
    let mut args = std::env::args().skip(1);
    let k = args.next().and_then(|s| s.parse().ok()).unwrap_or(25);
    let mesh = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.05);
    let curves = [
        ("constant", TargetCurve::constant([0.2, 0.3, 0.5])?),
        ("segment", TargetCurve::segment([1.0, 0.0, 0.0], [0.0, 1.0, 0.0])?),
        (
            "triangle",
            TargetCurve::polyline(vec![[0.6, 0.2, 0.2], [0.2, 0.6, 0.2], [0.2, 0.2, 0.6], [0.6, 0.2, 0.2]])?,
        ),
    ];
    for (name, curve) in curves {
        let cert = synthesize(&curve, &SynthConfig { k, ..SynthConfig::default() })?;
        let t = std::time::Instant::now();
        let rep = verify_certificate(&cert, VerifyOptions { mesh, ..VerifyOptions::default() })?;
        println!("{name}: K = {k}, verified in {:.2?}", t.elapsed());
        println!("  audit entries {} (replay matches: {})", rep.audit_entries, rep.audit_replay_matches);
        println!("  tracking worst deviation / 11 eps = {:.4}", rep.tracking.worst_ratio);
        let worst_h = rep
            .horoball
            .iter()
            .map(|c| c.horoball_ratio / c.epsilon)
            .fold(0.0, f64::max);
        println!("  horoball worst ratio / eps = {worst_h:.4}");
        let ls = &rep.limit_set;
        println!(
            "  limit set from window {}: (a) {:.4} <= {:.4}, (b) {:.4} <= {:.4} (resolution {:.4}, strict mesh form {})",
            ls.from_window, ls.direction_a, ls.bound_a, ls.direction_b, ls.bound_b, ls.plan_resolution,
            if ls.strict_b_pass { "holds" } else { "fails" }
        );
        let failed = rep.failed_checks();
        println!("  verdict: {}", if failed.is_empty() { "pass".to_string() } else { format!("FAIL {failed:?}") });
    }
    Ok(())
}
