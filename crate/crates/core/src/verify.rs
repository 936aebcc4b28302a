//! Independent checks of a certificate and of the coarse engine.
//!
//! Nothing here trusts the constructor's bookkeeping: clocks are rebuilt
//! from the serialized scales and lengths, digits are recomputed from their
//! scales, and the audit is replayed from scratch.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::coarse::{coarse_balance_time, coarse_log_q, error_budget, LogQuantity};
use crate::constructor::curve::{l1, Bary, TargetCurve};
use crate::constructor::{audit, growth, Certificate, GrowthState};
use crate::contfrac::{convergents_capped, enclosure_from, CFSchedule, Convergent, ValueEnclosure};
use crate::error::{Error, Result};
use crate::flatsurf::{balance_time_exact, SlitSurface, TorusCurve};
use crate::numeric::{self, digit_bits_for_scale, digit_from_scale};
use crate::trajectory::{self, Checkpoint, Ray};

/// Distance slacks swept by the tracking check.
pub const R_SWEEP: [u64; 4] = [0, 1, 2, 4];

// ---------------------------------------------------------------- cross-validation

#[derive(Clone, Debug, Serialize)]
pub struct CrossValidationReport {
    pub seed: u64,
    pub trials: usize,
    pub comparisons: usize,
    pub l: f64,
    pub max_log_q_error: f64,
    pub max_balance_error: f64,
    /// balance times checked against 1/2 ln(q_n q_{n+1}) <= T_n <= that + ln 2
    pub half_log_checks: usize,
    pub failures: Vec<String>,
    pub pass: bool,
}

/// Random schedule: up to 8 blocks, digits log-uniform in [2, 1e6], run
/// lengths 1..=20, at most 150 digits in total.
pub fn random_schedule(rng: &mut ChaCha8Rng) -> CFSchedule {
    let nblocks = rng.gen_range(1..=8);
    let mut blocks = Vec::new();
    let mut total = 0u64;
    for _ in 0..nblocks {
        let d = (rng.gen_range(2f64.ln()..1e6f64.ln())).exp().round().max(2.0) as u64;
        let n = rng.gen_range(1..=20u64).min(150 - total);
        if n == 0 {
            break;
        }
        total += n;
        blocks.push((d, n));
    }
    CFSchedule::new(0, &blocks).expect("digits >= 2 and positive runs")
}

/// Compare exact log q_n and exact balance times with the coarse engine
/// (per-block exact base) on random schedules.
pub fn cross_validate(seed: u64, trials: usize, depth_cap: u64) -> Result<CrossValidationReport> {
    let l = error_budget().l;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = CrossValidationReport {
        seed,
        trials,
        comparisons: 0,
        l,
        max_log_q_error: 0.0,
        max_balance_error: 0.0,
        half_log_checks: 0,
        failures: Vec::new(),
        pass: true,
    };
    for trial in 0..trials {
        let sched = random_schedule(&mut rng);
        let total = sched.total_depth().to_u64().unwrap();
        // a tail of twos pins the value down far past the last compared index
        let mut ext = sched.clone();
        ext.blocks.push(crate::contfrac::Block {
            digit: BigUint::from(2u32),
            run_length: BigUint::from(40u32),
        });
        let depth = total + 38;
        let cs = convergents_capped(&ext, depth + 1, depth_cap)?;
        let enc = enclosure_from(&cs[depth as usize], &cs[depth as usize + 1]);
        let surface = SlitSurface::new(1e-3, [enc.clone(), enc.clone(), enc])?;
        let mut start = 0u64;
        for (jj, b) in sched.blocks.iter().enumerate() {
            let j = jj + 1;
            let n = b.run_length.to_u64().unwrap();
            let base = LogQuantity::log_q(numeric::ln_biguint(&cs[start as usize].q));
            for ell in 0..=n {
                let idx = (start + ell) as usize;
                let exact = numeric::ln_biguint(&cs[idx].q);
                let coarse = coarse_log_q(&sched, j, ell, base)?.value;
                let e = (exact - coarse).abs();
                rep.max_log_q_error = rep.max_log_q_error.max(e);
                rep.comparisons += 1;
                if e > l {
                    rep.failures.push(format!("trial {trial}: log q_{idx} off by {e}"));
                }
                if ell < n {
                    let curve = TorusCurve::from_convergent(0, &cs[idx]);
                    let t = balance_time_exact(&surface, &curve)?;
                    let ct = coarse_balance_time(&sched, j, ell, base)?.value;
                    let e = (t - ct).abs();
                    rep.max_balance_error = rep.max_balance_error.max(e);
                    rep.comparisons += 1;
                    if e > l {
                        rep.failures.push(format!("trial {trial}: T_{idx} off by {e}"));
                    }
                    rep.half_log_checks += 1;
                    if !half_log_window_holds(&surface.slopes[0], &cs[idx], &cs[idx + 1]) {
                        rep.failures.push(format!("trial {trial}: T_{idx} outside the half-log window"));
                    }
                }
            }
            start += n;
        }
    }
    rep.pass = rep.failures.is_empty();
    Ok(rep)
}

/// Exact check of 1 <= e^(2 T_n) / (q_n q_{n+1}) <= 4 over the whole
/// enclosure. e^(2T) = (p x + q)/|q x - p| is monotone in x on either side
/// of p/q, so the enclosure endpoints bound it.
pub fn half_log_window_holds(enc: &ValueEnclosure, c: &Convergent, next: &Convergent) -> bool {
    let q = BigInt::from(c.q.clone());
    let p = BigInt::from(c.p.clone());
    let qq = BigRational::from_integer(&q * BigInt::from(next.q.clone()));
    let one = BigRational::one();
    let four = BigRational::from_integer(4.into());
    let mut side = None;
    for x in [&enc.lower, &enc.upper] {
        let den = x * &q - &p;
        if den.is_zero() {
            return false;
        }
        if *side.get_or_insert(den.is_positive()) != den.is_positive() {
            return false;
        }
        let r = (x * &p + &q) / den.abs() / &qq;
        if r < one || r > four {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------- interleaving

#[derive(Clone, Debug, Serialize)]
pub struct InterleaveCheck {
    pub k: usize,
    pub i: usize,
    /// (T^0_{N_0(k)-1} - L) - (T^i_{N_i(k)-3} + L)
    pub left_margin: f64,
    /// (T^i_{N_i(k)-1} - L) - (T^0_{N_0(k)-1} + L)
    pub right_margin: f64,
    pub pass: bool,
}

/// The chain T^i_{N_i(k)-3} < T^0_{N_0(k)-1} <= T^i_{N_i(k)-1}, robust by
/// the certificate's L on each side, re-derived from fresh clocks.
pub fn check_interleaving(cert: &Certificate) -> Result<Vec<InterleaveCheck>> {
    let clocks = cert.clocks()?;
    let l = &cert.l_hat;
    let mut out = Vec::new();
    for k in 1..=cert.k() {
        let t0 = clocks[0].time(&(&clocks[0].starts[k] - 1u32))?;
        for (i, c) in clocks.iter().enumerate().skip(1) {
            let n = &c.starts[k];
            if n < &BigUint::from(3u32) {
                out.push(InterleaveCheck {
                    k,
                    i,
                    left_margin: f64::NEG_INFINITY,
                    right_margin: f64::NEG_INFINITY,
                    pass: false,
                });
                continue;
            }
            let left = c.time(&(n - 3u32))?;
            let right = c.time(&(n - 1u32))?;
            let lm = (&t0 - l) - (&left + l);
            let rm = (&right - l) - (&t0 + l);
            let pass = lm > BigRational::zero() && rm >= BigRational::zero();
            out.push(InterleaveCheck {
                k,
                i,
                left_margin: numeric::rational_to_f64(&lm),
                right_margin: numeric::rational_to_f64(&rm),
                pass,
            });
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------- tracking

#[derive(Clone, Debug, Serialize)]
pub struct TrackingPoint {
    pub k: usize,
    pub g: usize,
    pub phi: Bary,
    pub target: Bary,
    pub epsilon: f64,
    /// worst max-coordinate deviation per R in the sweep
    pub deviation: Vec<f64>,
    /// allowed deviation per R in the sweep
    pub bound: Vec<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrackingReport {
    pub points: Vec<TrackingPoint>,
    /// largest deviation / (11 epsilon_k) at R = 0
    pub worst_ratio: f64,
    pub pass: bool,
}

/// phi at `grid_density` grid points of every window k in [2, K], compared with
/// gamma(t_k). For each R the distances may be off by R, so phi_i lies in
/// [(d_i - R)/(S + 3R), (d_i + R)/(S - 3R)].
pub fn check_tracking(cert: &Certificate, grid_density: usize) -> Result<TrackingReport> {
    let ray = Ray::from_certificate(cert)?;
    let mut points = Vec::new();
    let mut worst = 0.0f64;
    for k in 2..=cert.k() {
        let target = *cert.plan.point(k);
        let eps = cert.plan.eps(k);
        for (g, t) in ray.window_grid(k, grid_density)?.iter().enumerate() {
            let p = ray.phi(t)?;
            let total: f64 = p.d.iter().map(|d| d.to_f64().unwrap()).sum();
            let mut devs = Vec::new();
            let mut bounds = Vec::new();
            let mut pass = true;
            for r in R_SWEEP {
                let r = r as f64;
                let mut dev = 0.0f64;
                for i in 0..3 {
                    let d = p.d[i].to_f64().unwrap();
                    let lo = ((d - r) / (total + 3.0 * r)).max(0.0);
                    let hi = if total > 3.0 * r { (d + r) / (total - 3.0 * r) } else { 1.0 };
                    dev = dev.max((lo - target[i]).abs()).max((hi - target[i]).abs());
                }
                let bound = 11.0 * eps + 3.0 * r / total;
                pass &= dev <= bound;
                devs.push(dev);
                bounds.push(bound);
            }
            worst = worst.max(devs[0] / (11.0 * eps));
            points.push(TrackingPoint {
                k,
                g,
                phi: p.phi,
                target,
                epsilon: eps,
                deviation: devs,
                bound: bounds,
                pass,
            });
        }
    }
    let pass = points.iter().all(|p| p.pass);
    Ok(TrackingReport {
        points,
        worst_ratio: worst,
        pass,
    })
}

// ---------------------------------------------------------------- limit set

#[derive(Clone, Debug, Serialize)]
pub struct LimitSetReport {
    pub from_window: usize,
    pub mesh: f64,
    pub epsilon: f64,
    pub collected: usize,
    pub samples: usize,
    /// max over collected phi of the l1 distance to the curve samples
    pub direction_a: f64,
    pub bound_a: f64,
    /// max over curve samples of the l1 distance to collected phi
    pub direction_b: f64,
    /// 33 epsilon + plan resolution on the tail
    pub bound_b: f64,
    pub plan_resolution: f64,
    /// direction (b) against 33 epsilon + mesh
    pub strict_b_pass: bool,
    pub pass: bool,
}

fn nearest(p: &Bary, set: &[Bary]) -> f64 {
    set.iter().map(|q| l1(p, q)).fold(f64::INFINITY, f64::min)
}

/// Two-sided comparison between phi over the windows k >= ceil(K/2) and
/// the sampled curve image.
pub fn check_limit_set(cert: &Certificate, mesh: f64) -> Result<LimitSetReport> {
    if !(mesh > 0.0) {
        return Err(Error::Domain("mesh must be positive".into()));
    }
    let k_max = cert.k();
    let from = k_max.div_ceil(2).max(2);
    let curve = TargetCurve::from_spec(cert.curve.clone())?;
    let ray = Ray::from_certificate(cert)?;
    let mut collected = Vec::new();
    for k in from..=k_max {
        for t in ray.window_grid(k, trajectory::WINDOW_POINTS)? {
            collected.push(ray.phi(&t)?.phi);
        }
    }
    let samples = curve.image_samples(mesh);
    let eps = cert.plan.eps(from);
    let a = collected.iter().map(|p| nearest(p, &samples)).fold(0.0, f64::max);
    let b = samples.iter().map(|p| nearest(p, &collected)).fold(0.0, f64::max);
    let res = cert.plan.resolution(&curve, from, mesh);
    let bound_a = 33.0 * eps + mesh;
    let bound_b = 33.0 * eps + res;
    Ok(LimitSetReport {
        from_window: from,
        mesh,
        epsilon: eps,
        collected: collected.len(),
        samples: samples.len(),
        direction_a: a,
        bound_a,
        direction_b: b,
        bound_b,
        plan_resolution: res,
        strict_b_pass: b <= 33.0 * eps + mesh,
        pass: a <= bound_a && b <= bound_b,
    })
}

// ---------------------------------------------------------------- digits, growth, audit

#[derive(Clone, Debug, Serialize)]
pub struct DigitCheck {
    pub j: usize,
    pub i: usize,
    pub materialized: bool,
    pub pass: bool,
}

/// Every written digit equals round(e^s - e^-s) for its scale, and a digit
/// is omitted only when it would exceed the cap.
pub fn check_digits(cert: &Certificate) -> Vec<DigitCheck> {
    let cap = cert.config.digit_cap;
    let mut out = Vec::new();
    for b in &cert.thetas {
        for i in 0..3 {
            let s = &b.scales[i];
            let fits = digit_bits_for_scale(s) <= cap;
            let pass = match &b.digits[i] {
                Some(d) => fits && digit_from_scale(s, cap).map(|x| &x == d).unwrap_or(false),
                None => !fits,
            };
            out.push(DigitCheck {
                j: b.j,
                i,
                materialized: b.digits[i].is_some(),
                pass,
            });
        }
    }
    out
}

/// Recompute N(k) from the certificate and compare with the recorded
/// bound and the chosen lengths.
pub fn check_growth(cert: &Certificate) -> Result<Vec<(usize, bool)>> {
    let mut st = GrowthState::new(&cert.plan, &cert.thetas, cert.l_hat.clone(), cert.config.growth);
    let mut out = Vec::new();
    for k in 1..=cert.k() {
        let gb = growth::growth_lower_bound(k, &st)?;
        let n = &cert.lengths[k - 1];
        let ok = gb == cert.growth[k - 1] && n.iter().all(|x| x >= &gb.n);
        out.push((k, ok));
        st.lengths.push(n.clone());
    }
    Ok(out)
}

// ---------------------------------------------------------------- full verification

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub k: usize,
    pub audit_entries: usize,
    pub audit_replay_matches: bool,
    pub audit_failures: Vec<String>,
    pub interleaving_pass: bool,
    pub tracking: TrackingReport,
    pub horoball: Vec<Checkpoint>,
    pub horoball_pass: bool,
    pub digits_pass: bool,
    pub growth_pass: bool,
    pub limit_set: LimitSetReport,
    pub pass: bool,
}

impl VerificationReport {
    pub fn failed_checks(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if !self.audit_replay_matches {
            v.push("audit-replay");
        }
        if !self.audit_failures.is_empty() {
            v.push("audit");
        }
        if !self.interleaving_pass {
            v.push("interleaving");
        }
        if !self.tracking.pass {
            v.push("tracking");
        }
        if !self.horoball_pass {
            v.push("horoball");
        }
        if !self.digits_pass {
            v.push("digits");
        }
        if !self.growth_pass {
            v.push("growth");
        }
        if !self.limit_set.pass {
            v.push("limit-set");
        }
        v
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub mesh: f64,
    pub grid_density: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            mesh: 0.05,
            grid_density: trajectory::WINDOW_POINTS,
        }
    }
}

pub fn verify_certificate(cert: &Certificate, opts: VerifyOptions) -> Result<VerificationReport> {
    cert.validate_shape()?;
    let replay = audit::run_audit(cert)?;
    let audit_failures = audit::failures(&replay);
    let interleaving_pass = check_interleaving(cert)?.iter().all(|c| c.pass);
    let tracking = check_tracking(cert, opts.grid_density)?;
    let horoball = trajectory::checkpoints(cert)?;
    let horoball_pass = horoball.iter().all(|c| c.pass);
    let digits_pass = check_digits(cert).iter().all(|c| c.pass);
    let growth_pass = check_growth(cert)?.iter().all(|(_, ok)| *ok);
    let limit_set = check_limit_set(cert, opts.mesh)?;
    let mut rep = VerificationReport {
        k: cert.k(),
        audit_entries: replay.len(),
        audit_replay_matches: replay == cert.audit,
        audit_failures,
        interleaving_pass,
        tracking,
        horoball,
        horoball_pass,
        digits_pass,
        growth_pass,
        limit_set,
        pass: false,
    };
    rep.pass = rep.failed_checks().is_empty();
    Ok(rep)
}

// ---------------------------------------------------------------- mutations

#[derive(Clone, Debug, Serialize)]
pub struct Mutation {
    pub description: String,
    pub detected: bool,
    pub caught_by: Vec<&'static str>,
}

/// Certificates with one run length or one written digit moved by +-1.
/// Even slots perturb run lengths, odd slots digits (when any are written).
pub fn mutations(cert: &Certificate, count: usize, seed: u64) -> Vec<(String, Certificate)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let digit_slots: Vec<(usize, usize)> = cert
        .thetas
        .iter()
        .enumerate()
        .flat_map(|(j, b)| (0..3).filter(move |&i| b.digits[i].is_some()).map(move |i| (j, i)))
        .collect();
    let mut out = Vec::with_capacity(count);
    for m in 0..count {
        let mut c = cert.clone();
        let up = rng.gen_bool(0.5);
        let description = if m % 2 == 0 || digit_slots.is_empty() {
            let k = rng.gen_range(0..c.k());
            let i = rng.gen_range(0..3);
            let n = &mut c.lengths[k][i];
            if up || *n <= BigUint::from(1u32) {
                *n += 1u32;
                format!("n_{i}({}) + 1", k + 1)
            } else {
                *n -= 1u32;
                format!("n_{i}({}) - 1", k + 1)
            }
        } else {
            let (j, i) = digit_slots[rng.gen_range(0..digit_slots.len())];
            let d = c.thetas[j].digits[i].as_mut().unwrap();
            if up {
                *d += 1u32;
                format!("theta_{i}({}) + 1", j + 1)
            } else {
                *d -= 1u32;
                format!("theta_{i}({}) - 1", j + 1)
            }
        };
        out.push((description, c));
    }
    out
}

/// Verify every mutation and record which checks caught it.
pub fn mutation_corpus(cert: &Certificate, count: usize, seed: u64, opts: VerifyOptions) -> Result<Vec<Mutation>> {
    Ok(mutations(cert, count, seed)
        .into_iter()
        .map(|(description, c)| {
            let caught_by = match verify_certificate(&c, opts) {
                Ok(rep) => rep.failed_checks(),
                Err(_) => vec!["load"],
            };
            Mutation {
                description,
                detected: !caught_by.is_empty(),
                caught_by,
            }
        })
        .collect())
}
