//! Synthesis of a certified continued-fraction schedule for a target curve.
//!
//! Pipeline: dense plan -> block scales -> run lengths block by block ->
//! audit. The result is a [`Certificate`] that can be replayed without the
//! constructor.

pub mod audit;
pub mod certificate;
pub mod curve;
pub mod growth;
pub mod plan;
pub mod thetas;

use num_rational::BigRational;

pub use audit::{run_audit, AuditEntry};
pub use certificate::{Certificate, SynthConfig};
pub use curve::{parse_curve_json, Bary, CurveSpec, TargetCurve};
pub use growth::{GrowthBound, GrowthParams, GrowthState};
pub use plan::{build_dense_plan, DensePlan, EpsilonRule};
pub use thetas::{select_thetas, ThetaBlock};

use crate::coarse::error_budget;
use crate::error::{Error, Result};
use crate::flatsurf::slit_threshold;
use crate::numeric::{grid_ceil_f64, pow2_neg};

/// Bits of headroom between L and the constant used in the interleaving
/// chain. The drift of the coarse clocks has to fit into 2^-8.
pub const L_HEADROOM_BITS: u32 = 8;

/// L rounded up onto the scale grid plus 2^-8 headroom.
pub fn l_hat() -> BigRational {
    grid_ceil_f64(error_budget().l) + pow2_neg(L_HEADROOM_BITS)
}

/// Resolve the slit length: `None` picks the threshold for (epsilon0, R0).
pub fn resolve_slit(slit: Option<f64>, epsilon0: f64, r0: f64) -> Result<(f64, bool)> {
    let thr = slit_threshold(epsilon0, r0)?;
    match slit {
        None => Ok((thr, true)),
        Some(s) if s > 0.0 && s <= thr => Ok((s, false)),
        Some(s) => Err(Error::Domain(format!(
            "slit length {s} must lie in (0, {thr:e}] for epsilon0 = {epsilon0}, R0 = {r0}"
        ))),
    }
}

/// Build and audit a certificate. Fails with `AuditFailed` if any audited
/// inequality does not hold.
pub fn synthesize(curve: &TargetCurve, config: &SynthConfig) -> Result<Certificate> {
    let mut config = config.clone();
    if config.k == 0 {
        return Err(Error::Domain("K must be at least 1".into()));
    }
    let (slit, auto) = resolve_slit(
        if config.slit_auto { None } else { Some(config.slit) },
        config.epsilon0,
        config.r0,
    )?;
    config.slit = slit;
    config.slit_auto = auto;

    let l_hat = l_hat();
    let plan = build_dense_plan(curve, config.k, config.epsilon)?;
    let thetas = select_thetas(&plan, &l_hat, config.digit_cap)?;
    let mut state = GrowthState::new(&plan, &thetas, l_hat.clone(), config.growth);
    let mut bounds = Vec::with_capacity(config.k);
    for k in 1..=config.k {
        let gb = growth::growth_lower_bound(k, &state)?;
        let n = growth::choose_block_lengths(k, &gb.n, &state)?;
        state.lengths.push(n);
        bounds.push(gb);
    }
    let lengths = state.lengths;
    let mut cert = Certificate {
        format: certificate::FORMAT.into(),
        config,
        error_budget: error_budget(),
        l_hat,
        curve: curve.spec.clone(),
        plan,
        thetas,
        growth: bounds,
        lengths,
        audit: Vec::new(),
    };
    cert.audit = run_audit(&cert)?;
    let failed = audit::failures(&cert.audit);
    if !failed.is_empty() {
        return Err(Error::AuditFailed(failed));
    }
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rational_to_f64;

    #[test]
    fn l_hat_sits_just_above_l() {
        let l = error_budget().l;
        let lh = rational_to_f64(&l_hat());
        assert!(lh > l && lh - l < 0.0040);
    }

    #[test]
    fn minimal_run_has_the_expected_audit_shape() {
        let c = TargetCurve::constant([0.2, 0.3, 0.5]).unwrap();
        let cfg = SynthConfig { k: 2, ..SynthConfig::default() };
        let cert = synthesize(&c, &cfg).unwrap();
        let count = |id: &str| cert.audit.iter().filter(|e| e.id == id).count();
        assert_eq!(count("scale-floor"), 6);
        assert_eq!(count("scale-separation"), 9);
        assert_eq!(count("proxy-closeness"), 6);
        assert_eq!(count("interleave-right"), 4);
        assert_eq!(count("interleave-left"), 4);
        assert!(cert.audit.iter().all(|e| e.pass));
        assert!(cert.audit.iter().all(|e| e.k_or_j <= 2));
    }

    #[test]
    fn certificate_round_trips_and_replays() {
        let c = TargetCurve::segment([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]).unwrap();
        let cfg = SynthConfig { k: 6, ..SynthConfig::default() };
        let cert = synthesize(&c, &cfg).unwrap();
        let back = Certificate::from_json(&cert.to_json().unwrap()).unwrap();
        assert_eq!(back, cert);
        assert_eq!(run_audit(&back).unwrap(), cert.audit);
    }

    #[test]
    fn slit_choice() {
        let (s, auto) = resolve_slit(None, 1.0, 0.25).unwrap();
        assert!(auto && s > 0.0);
        assert!(resolve_slit(Some(1.0), 1.0, 0.25).is_err());
        assert_eq!(resolve_slit(Some(s / 2.0), 1.0, 0.25).unwrap(), (s / 2.0, false));
    }
}
