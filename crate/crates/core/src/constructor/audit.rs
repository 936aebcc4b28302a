//! Per-inequality audit of a certificate. The audit only reads the
//! serialized data, so replaying it on a loaded certificate reproduces the
//! verdicts exactly.

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::certificate::Certificate;
use super::curve::TargetCurve;
use super::growth::{self, GrowthState};
use super::thetas::{closeness_lhs, separation_ratio};
use crate::error::Result;
use crate::numeric::{self, eta_for_scale, f64_str, f64_to_rational, half, int, rational_to_f64, uint_to_rational};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub id: String,
    /// block index j or window index k, depending on the inequality
    pub k_or_j: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub i: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub l: Option<usize>,
    pub lhs: String,
    pub rhs: String,
    /// rhs - lhs, positive when the inequality holds with room
    pub margin: String,
    pub pass: bool,
}

impl AuditEntry {
    pub fn label(&self) -> String {
        let mut s = format!("{}[{}]", self.id, self.k_or_j);
        if let Some(i) = self.i {
            s.push_str(&format!(" i={i}"));
        }
        if let Some(l) = self.l {
            s.push_str(&format!(" l={l}"));
        }
        s
    }
}

struct Sink(Vec<AuditEntry>);

impl Sink {
    fn push(&mut self, id: &str, kj: usize, i: Option<usize>, l: Option<usize>, lhs: String, rhs: String, margin: f64, pass: bool) {
        self.0.push(AuditEntry {
            id: id.into(),
            k_or_j: kj,
            i,
            l,
            lhs,
            rhs,
            margin: f64_str(margin),
            pass,
        });
    }

    /// lhs < rhs (strict) or lhs <= rhs, exactly in rationals.
    fn rat(&mut self, id: &str, kj: usize, i: Option<usize>, l: Option<usize>, lhs: &BigRational, rhs: &BigRational, strict: bool) {
        let pass = if strict { lhs < rhs } else { lhs <= rhs };
        let m = rational_to_f64(&(rhs - lhs));
        self.push(id, kj, i, l, f64_str(rational_to_f64(lhs)), f64_str(rational_to_f64(rhs)), m, pass);
    }

    fn float(&mut self, id: &str, kj: usize, i: Option<usize>, l: Option<usize>, lhs: f64, rhs: f64, strict: bool) {
        let pass = if strict { lhs < rhs } else { lhs <= rhs };
        self.push(id, kj, i, l, f64_str(lhs), f64_str(rhs), rhs - lhs, pass);
    }
}

/// Per-block bound on the gap between the true log q and the coarse
/// clock: 3/lambda for the block boundary term plus n * eta for using the
/// scale in place of ln lambda.
pub fn drift_bound(cert: &Certificate, i: usize) -> f64 {
    let mut d = 0.0;
    for (b, n) in cert.thetas.iter().zip(&cert.lengths) {
        let s = &b.scales[i];
        let eta = eta_for_scale(s);
        let lam_lo = rational_to_f64(&(s - &eta));
        d += 3.0 * (-lam_lo).exp().max(1e-300);
        d += rational_to_f64(&(uint_to_rational(&n[i]) * &eta)).max(1e-300);
    }
    d
}

pub fn run_audit(cert: &Certificate) -> Result<Vec<AuditEntry>> {
    let plan = &cert.plan;
    let k_max = plan.k();
    let curve = TargetCurve::from_spec(cert.curve.clone())?;
    let mut a = Sink(Vec::new());
    let four_l = &cert.l_hat * int(4);

    // plan steps and plan/curve consistency
    for j in 2..=k_max {
        for i in 0..3 {
            let d = (plan.point(j)[i] - plan.point(j - 1)[i]).abs();
            a.float("plan-step", j, Some(i), None, d, plan.eps(j), true);
        }
    }
    for j in 1..=k_max {
        let want = curve.sample(plan.params[j - 1]);
        let dev = super::curve::linf(&want, plan.point(j));
        a.float("plan-sample", j, None, None, dev, 1e-12, false);
    }

    for j in 1..=k_max {
        let b = &cert.thetas[j - 1];
        for i in 0..3 {
            let s = &b.scales[i];
            a.rat("scale-floor", j, Some(i), None, &four_l, &(s - eta_for_scale(s)), false);
        }
        if j >= 2 {
            let prev = &cert.thetas[j - 2];
            let eps = f64_to_rational(plan.eps(j));
            for i in 0..3 {
                for l in 0..3 {
                    let r = separation_ratio(&prev.scales[l], &b.scales[i]);
                    a.rat("scale-separation", j, Some(i), Some(l), &r, &eps, true);
                }
            }
        }
        let lhs = closeness_lhs(&b.scales, plan.point(j));
        for (i, x) in lhs.iter().enumerate() {
            a.float("proxy-closeness", j, Some(i), None, *x, plan.eps(j + 1), true);
        }
    }

    let mut st = GrowthState::new(plan, &cert.thetas, cert.l_hat.clone(), cert.config.growth);
    let three = int(3);
    for k in 1..=k_max {
        let n = &cert.lengths[k - 1];
        let gb = growth::growth_lower_bound(k, &st)?;
        for i in 0..3 {
            let ni = uint_to_rational(&n[i]);
            a.rat("min-length", k, Some(i), None, &three, &ni, false);
            a.rat("growth", k, Some(i), None, &uint_to_rational(&gb.n), &ni, false);
        }
        let recorded = cert.growth.get(k - 1).map(|g| g == &gb).unwrap_or(false);
        a.push(
            "growth-record",
            k,
            None,
            None,
            gb.n.to_str_radix(10),
            cert.growth.get(k - 1).map(|g| g.n.to_str_radix(10)).unwrap_or_default(),
            0.0,
            recorded,
        );
        if k < k_max {
            let tau = f64_to_rational(cert.config.growth.closeness * plan.eps(k + 1));
            for i in 0..3 {
                let off = st.closeness_offset(i, k);
                a.rat("growth-closeness", k, Some(i), None, &off, &(&tau * uint_to_rational(&n[i])), false);
                let h = st.horoball_at(i, k, n[i].to_f64().unwrap_or(f64::INFINITY));
                a.float("growth-horoball", k, Some(i), None, h, plan.eps(k + 1), true);
            }
        }

        // interleaving of block ends, coarse clocks threaded from block 1
        let n0_min = growth::n0_minimum(k, &gb.n, &st);
        a.rat("n0-min", k, Some(0), None, &uint_to_rational(&n0_min), &uint_to_rational(&n[0]), false);
        if n0_min != n[0] {
            // the minimum is an equality requirement
            a.0.last_mut().unwrap().pass = false;
        }
        let l = &cert.l_hat;
        let t0 = st.lq(0, k - 1) + st.scale(0, k) * (uint_to_rational(&n[0]) - half());
        for i in 1..3 {
            let ti = st.lq(i, k - 1) + st.scale(i, k) * (uint_to_rational(&n[i]) - half());
            a.rat("interleave-right", k, Some(i), None, &(&t0 + l), &(&ti - l), false);
            let x = growth::interleave_x(k, i, &n[0], &st);
            let ni = uint_to_rational(&n[i]);
            let pass = &ni - int(1) <= x && x < ni;
            let m = rational_to_f64(&(&ni - &x));
            a.push("interleave-min", k, Some(i), None, f64_str(rational_to_f64(&x)), n[i].to_str_radix(10), m, pass);
            let left = st.lq(i, k - 1) + st.scale(i, k) * (&ni - int(3) + half());
            a.rat("interleave-left", k, Some(i), None, &(&left + l), &(&t0 - l), true);
        }
        st.lengths.push(n.clone());
    }

    let headroom = &cert.l_hat - f64_to_rational(cert.error_budget.l);
    for i in 0..3 {
        a.float("drift", k_max, Some(i), None, drift_bound(cert, i), rational_to_f64(&headroom), false);
    }
    Ok(a.0)
}

pub fn failures(entries: &[AuditEntry]) -> Vec<String> {
    entries.iter().filter(|e| !e.pass).map(|e| e.label()).collect()
}

/// Helper for reports: smallest margin per audit id.
pub fn worst_margins(entries: &[AuditEntry]) -> Vec<(String, f64)> {
    let mut out: Vec<(String, f64)> = Vec::new();
    for e in entries {
        let m = numeric::parse_f64(&e.margin, "margin").unwrap_or(f64::NAN);
        match out.iter_mut().find(|(id, _)| id == &e.id) {
            Some((_, w)) => {
                if m < *w {
                    *w = m
                }
            }
            None => out.push((e.id.clone(), m)),
        }
    }
    out
}
