//! Flat geometry of the three slit tori under the diagonal flow.
//!
//! On torus i the vertical direction is the slope-theta_i direction. A
//! closed curve with holonomy (q, p) splits into a component across that
//! direction, |q theta - p| / sqrt(1+theta^2), stretched by e^t, and a
//! component along it, (q + p theta) / sqrt(1+theta^2), shrunk by e^-t.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::contfrac::{Convergent, ValueEnclosure};
use crate::error::{Error, Result};
use crate::numeric::{ln_rational, rational_to_f64};

/// sqrt(2/sqrt(3)): the longest possible systole of a unit-area flat torus.
pub fn k_hermite() -> f64 {
    (2.0 / 3f64.sqrt()).sqrt()
}

/// Enclosures wider than this are too coarse for numeric evaluation.
pub const MAX_EVAL_WIDTH: f64 = 1e-30;

/// Balance times must be pinned down at least this tightly.
pub const BALANCE_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct SlitSurface {
    pub s: f64,
    pub slopes: [ValueEnclosure; 3],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusCurve {
    pub torus: usize,
    pub q: BigUint,
    pub p: BigUint,
}

impl TorusCurve {
    pub fn from_convergent(torus: usize, c: &Convergent) -> Self {
        TorusCurve {
            torus,
            q: c.q.clone(),
            p: c.p.clone(),
        }
    }
}

impl SlitSurface {
    pub fn new(s: f64, slopes: [ValueEnclosure; 3]) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Domain(format!("slit length {s} not in (0,1)")));
        }
        let zero = BigRational::zero();
        let one = BigRational::from_integer(1.into());
        for (i, e) in slopes.iter().enumerate() {
            if e.lower < zero || e.upper > one || e.lower >= e.upper {
                return Err(Error::Domain(format!("slope {i} enclosure not inside (0,1)")));
            }
        }
        Ok(SlitSurface { s, slopes })
    }

    /// Same surface, also requiring s below the modulus threshold.
    pub fn with_threshold(s: f64, slopes: [ValueEnclosure; 3], eps0: f64, r0: f64) -> Result<Self> {
        let thr = slit_threshold(eps0, r0)?;
        if s > thr {
            return Err(Error::Domain(format!("slit length {s} exceeds threshold {thr}")));
        }
        Self::new(s, slopes)
    }

    fn slope(&self, torus: usize) -> Result<&ValueEnclosure> {
        self.slopes
            .get(torus)
            .ok_or_else(|| Error::OutOfRange(format!("torus {torus} not in 0..3")))
    }
}

/// (horizontal, vertical) parts of the curve at time t; their hypot is the flat length.
pub fn flat_components(surface: &SlitSurface, curve: &TorusCurve, t: f64) -> Result<(f64, f64)> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time {t} < 0")));
    }
    let enc = surface.slope(curve.torus)?;
    let w = rational_to_f64(&enc.width());
    if w > MAX_EVAL_WIDTH {
        return Err(Error::InsufficientPrecision(format!(
            "slope enclosure width {w:e} exceeds {MAX_EVAL_WIDTH:e}"
        )));
    }
    let theta = enc.midpoint();
    let (q, p) = (BigInt::from(curve.q.clone()), BigInt::from(curve.p.clone()));
    // both components formed exactly before rounding
    let h = rational_to_f64(&(&theta * &q - &p)).abs();
    let v = rational_to_f64(&(&theta * &p + &q));
    let th = rational_to_f64(&theta);
    let norm = (1.0 + th * th).sqrt();
    Ok((t.exp() * h / norm, (-t).exp() * v / norm))
}

pub fn flat_length(surface: &SlitSurface, curve: &TorusCurve, t: f64) -> Result<f64> {
    let (h, v) = flat_components(surface, curve, t)?;
    Ok(h.hypot(v))
}

/// T = 1/2 ln((p theta + q)/|q theta - p|), certified over the whole enclosure.
pub fn balance_time_exact(surface: &SlitSurface, curve: &TorusCurve) -> Result<f64> {
    let enc = surface.slope(curve.torus)?;
    let (q, p) = (BigInt::from(curve.q.clone()), BigInt::from(curve.p.clone()));
    let mut vals = Vec::with_capacity(2);
    let mut signs = Vec::with_capacity(2);
    for x in [&enc.lower, &enc.upper] {
        let den = x * &q - &p;
        if den.is_zero() {
            return Err(Error::InsufficientPrecision(
                "enclosure endpoint equals the curve slope".into(),
            ));
        }
        signs.push(den.is_positive());
        let num = x * &p + &q;
        vals.push(0.5 * ln_rational(&(num / den.abs())));
    }
    if signs[0] != signs[1] {
        return Err(Error::InsufficientPrecision(
            "sign of q theta - p not determined by the enclosure".into(),
        ));
    }
    let spread = (vals[0] - vals[1]).abs();
    if spread > BALANCE_TOL {
        return Err(Error::InsufficientPrecision(format!(
            "balance time spread {spread:e} over the enclosure"
        )));
    }
    Ok(0.5 * (vals[0] + vals[1]))
}

/// sqrt(1+theta^2) / (sqrt(1+theta^2) - s |q theta - p|) * flat_length(t)^2
pub fn extremal_length_upper(surface: &SlitSurface, curve: &TorusCurve, t: f64) -> Result<f64> {
    let fl = flat_length(surface, curve, t)?;
    let enc = surface.slope(curve.torus)?;
    let theta = enc.midpoint();
    let (q, p) = (BigInt::from(curve.q.clone()), BigInt::from(curve.p.clone()));
    let h = rational_to_f64(&(&theta * &q - &p)).abs();
    let th = rational_to_f64(&theta);
    let norm = (1.0 + th * th).sqrt();
    let denom = norm - surface.s * h;
    assert!(denom > 0.0, "prefactor denominator must be positive for s < 1");
    Ok(norm / denom * fl * fl)
}

/// Flat length of the slit boundary, 2 s e^-t.
pub fn boundary_length(surface: &SlitSurface, t: f64) -> f64 {
    2.0 * surface.s * (-t).exp()
}

/// Largest s with (ln 2R0 + ln 1/s)/(2 pi) >= e/eps0, i.e. 2 R0 exp(-2 pi e / eps0).
pub fn slit_threshold(epsilon0: f64, r0: f64) -> Result<f64> {
    if !(epsilon0 > 0.0) || !(r0 > 0.0) {
        return Err(Error::Domain("epsilon0 and R0 must be positive".into()));
    }
    Ok(2.0 * r0 * (-2.0 * std::f64::consts::PI * std::f64::consts::E / epsilon0).exp())
}

/// The shorter of alpha(n), alpha(n+1) at time t, where T_n <= t <= T_{n+1}.
/// Ties go to the lower index.
pub fn systole_candidate(
    surface: &SlitSurface,
    torus: usize,
    t: f64,
    convergents: &[Convergent],
) -> Result<TorusCurve> {
    let curves: Vec<TorusCurve> = convergents
        .iter()
        .filter(|c| c.index >= 0)
        .map(|c| TorusCurve::from_convergent(torus, c))
        .collect();
    let mut times = Vec::with_capacity(curves.len());
    for c in &curves {
        times.push(balance_time_exact(surface, c)?);
    }
    let n = (0..times.len().saturating_sub(1))
        .find(|&n| times[n] <= t && t <= times[n + 1])
        .ok_or_else(|| Error::InsufficientDepth {
            needed: format!("balance time bracket for t = {t}"),
            available: format!("{} convergents", curves.len()),
        })?;
    let a = flat_length(surface, &curves[n], t)?;
    let b = flat_length(surface, &curves[n + 1], t)?;
    Ok(if b < a {
        curves[n + 1].clone()
    } else {
        curves[n].clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contfrac::{convergents, value_enclosure, CFSchedule};
    use proptest::prelude::*;

    fn surface_for(s: f64, sched: &CFSchedule, depth: u64) -> SlitSurface {
        let e = value_enclosure(sched, depth).unwrap();
        SlitSurface::new(s, [e.clone(), e.clone(), e]).unwrap()
    }

    fn curve(q: u64, p: u64) -> TorusCurve {
        TorusCurve {
            torus: 0,
            q: q.into(),
            p: p.into(),
        }
    }

    /// Shortest nonzero vector of the flowed unimodular lattice by Gauss
    /// reduction (independent of the convergent machinery).
    fn gauss_shortest(theta: f64, t: f64) -> f64 {
        let n = (1.0 + theta * theta).sqrt();
        let img = |q: f64, p: f64| [t.exp() * (q * theta - p) / n, (-t).exp() * (q + p * theta) / n];
        let (mut u, mut v) = (img(1.0, 0.0), img(0.0, 1.0));
        let dot = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
        loop {
            if dot(u, u) > dot(v, v) {
                std::mem::swap(&mut u, &mut v);
            }
            let m = (dot(u, v) / dot(u, u)).round();
            if m == 0.0 {
                break;
            }
            v = [v[0] - m * u[0], v[1] - m * u[1]];
        }
        dot(u, u).sqrt()
    }

    #[test]
    fn sqrt2_examples() {
        let surf = surface_for(0.01, &CFSchedule::constant(2, 80), 70);
        let c = curve(2, 1);
        let t1 = balance_time_exact(&surf, &c).unwrap();
        assert!((t1 - 1.3220604).abs() < 1e-6);
        let fl = flat_length(&surf, &c, t1).unwrap();
        assert!((fl - 0.840896).abs() < 1e-6);
        let (h, v) = flat_components(&surf, &c, t1).unwrap();
        assert!((h - v).abs() <= 1e-12 * v);
        let ext = extremal_length_upper(&surf, &c, t1).unwrap();
        assert!((ext - 0.70823).abs() < 1e-5, "{ext}");
        assert!((flat_length(&surf, &curve(1, 0), 0.0).unwrap() - 1.0).abs() < 1e-15);
        let l0 = flat_length(&surf, &curve(5, 3), 0.0).unwrap();
        assert!((l0 - 34f64.sqrt()).abs() < 1e-12);
        assert!(flat_length(&surf, &c, -1.0).is_err());
    }

    #[test]
    fn balance_time_three() {
        let surf = surface_for(0.01, &CFSchedule::constant(3, 80), 60);
        let t2 = balance_time_exact(&surf, &curve(10, 3)).unwrap();
        // theta = (sqrt 13 - 3)/2, evaluated directly
        let th = (13f64.sqrt() - 3.0) / 2.0;
        let want = 0.5 * ((3.0 * th + 10.0) / (10.0 * th - 3.0).abs()).ln();
        assert!((t2 - want).abs() < 1e-9);
        assert!((t2 - 2.98691).abs() < 1e-5);
        // (1,0) reduces to 1/2 ln(1/theta)
        let t0 = balance_time_exact(&surf, &curve(1, 0)).unwrap();
        assert!((t0 - 0.5 * (1.0 / th).ln()).abs() < 1e-12);
    }

    #[test]
    fn coarse_enclosure_is_refused() {
        let surf = surface_for(0.01, &CFSchedule::constant(2, 20), 3);
        assert!(matches!(
            balance_time_exact(&surf, &curve(2, 1)),
            Err(Error::InsufficientPrecision(_))
        ));
        assert!(flat_length(&surf, &curve(2, 1), 0.0).is_err());
    }

    #[test]
    fn boundary_and_threshold() {
        let surf = surface_for(0.01, &CFSchedule::constant(2, 80), 70);
        assert!((boundary_length(&surf, 0.0) - 0.02).abs() < 1e-15);
        assert!((boundary_length(&surf, 10f64.ln()) - 0.002).abs() < 1e-15);
        assert!((boundary_length(&surf, 2f64.ln()) - 0.01).abs() < 1e-15);
        let thr = slit_threshold(1.0, 0.25).unwrap();
        assert!((thr - 1.911838e-8).abs() < 1e-14, "{thr}");
        assert!((slit_threshold(1.0, 0.5).unwrap() / thr - 2.0).abs() < 1e-12);
        assert!((slit_threshold(1e12, 0.25).unwrap() - 0.5).abs() < 1e-9);
        assert!(slit_threshold(0.0, 0.25).is_err());
        let e = value_enclosure(&CFSchedule::constant(2, 80), 70).unwrap();
        assert!(SlitSurface::with_threshold(1e-3, [e.clone(), e.clone(), e.clone()], 1.0, 0.25).is_err());
        assert!(SlitSurface::with_threshold(1e-8, [e.clone(), e.clone(), e], 1.0, 0.25).is_ok());
    }

    #[test]
    fn systole_examples() {
        let sched = CFSchedule::constant(2, 80);
        let surf = surface_for(0.01, &sched, 70);
        let cs = convergents(&sched, 30).unwrap();
        let c = systole_candidate(&surf, 0, 1.0, &cs).unwrap();
        let a0 = flat_length(&surf, &curve(1, 0), 1.0).unwrap();
        let a1 = flat_length(&surf, &curve(2, 1), 1.0).unwrap();
        let want = if a1 < a0 { curve(2, 1) } else { curve(1, 0) };
        assert_eq!(c, want);
        // exactly at T_1 the tie-break goes to the lower index only on a tie;
        // alpha(1) is shortest there, so it must win against alpha(2)
        let t1 = balance_time_exact(&surf, &curve(2, 1)).unwrap();
        let c = systole_candidate(&surf, 0, t1, &cs).unwrap();
        assert!(c == curve(2, 1) || c == curve(1, 0));
        assert!(systole_candidate(&surf, 0, 0.1, &cs).is_err());
        assert!(systole_candidate(&surf, 0, 1e3, &cs).is_err());
    }

    #[test]
    fn flat_length_minimized_at_balance() {
        let sched = CFSchedule::new(0, &[(2, 3), (5, 4), (3, 60)]).unwrap();
        let surf = surface_for(0.01, &sched, 60);
        let cs = convergents(&sched, 10).unwrap();
        for c in &cs[1..] {
            let tc = TorusCurve::from_convergent(0, c);
            let tb = balance_time_exact(&surf, &tc).unwrap();
            let lb = flat_length(&surf, &tc, tb).unwrap();
            let mut prev_slope = f64::NEG_INFINITY;
            for k in -10..=10 {
                let t = tb + 0.1 * k as f64;
                if t < 0.0 {
                    continue;
                }
                let l = flat_length(&surf, &tc, t).unwrap();
                assert!(l >= lb * (1.0 - 1e-12));
                // log-length has increasing slope (convexity)
                let l2 = flat_length(&surf, &tc, t + 0.05).unwrap();
                let slope = (l2.ln() - l.ln()) / 0.05;
                assert!(slope >= prev_slope - 1e-9);
                prev_slope = slope;
            }
            let ext = extremal_length_upper(&surf, &tc, tb).unwrap();
            assert!(ext <= 4.0 * k_hermite().powi(2));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn prop_balance_consistency(digits in prop::collection::vec((2u64..60, 1u64..6), 2..6)) {
            let mut blocks = digits.clone();
            blocks.push((2, 70));
            let sched = CFSchedule::new(0, &blocks).unwrap();
            let depth: u64 = blocks.iter().map(|b| b.1).sum::<u64>() - 2;
            let surf = surface_for(0.001, &sched, depth);
            let cs = convergents(&sched, 12).unwrap();
            for c in &cs {
                let tc = TorusCurve::from_convergent(0, c);
                let tb = balance_time_exact(&surf, &tc).unwrap();
                let (h, v) = flat_components(&surf, &tc, tb).unwrap();
                prop_assert!((h - v).abs() <= 1e-9 * v);
            }
        }

        #[test]
        fn prop_systole_hermite(digits in prop::collection::vec(2u64..8, 4..8), frac in 0.0f64..1.0) {
            let mut blocks: Vec<(u64, u64)> = digits.iter().map(|&d| (d, 1)).collect();
            blocks.push((2, 80));
            let sched = CFSchedule::new(0, &blocks).unwrap();
            let depth = digits.len() as u64 + 70;
            let surf = surface_for(0.001, &sched, depth);
            let cs = convergents(&sched, digits.len() as u64).unwrap();
            let t0 = balance_time_exact(&surf, &TorusCurve::from_convergent(0, &cs[0])).unwrap();
            let tl = balance_time_exact(&surf, &TorusCurve::from_convergent(0, cs.last().unwrap())).unwrap();
            let t = t0 + frac * (tl - t0);
            let c = systole_candidate(&surf, 0, t, &cs).unwrap();
            let len = flat_length(&surf, &c, t).unwrap();
            let theta = rational_to_f64(&surf.slopes[0].midpoint());
            let shortest = gauss_shortest(theta, t);
            prop_assert!(len <= k_hermite() + 1e-12);
            prop_assert!(len >= shortest * (1.0 - 1e-7));
            prop_assert!(shortest <= k_hermite() + 1e-12);
        }
    }
}
