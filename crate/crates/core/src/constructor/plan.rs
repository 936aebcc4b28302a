//! Dense plan: parameters t_1..t_K whose images walk back and forth along
//! the curve in steps small enough for the per-block epsilon budget.

use serde::{Deserialize, Serialize};

use super::curve::{l1, linf, Bary, TargetCurve};
use crate::error::{Error, Result};

/// epsilon_j = first * ratio^(j-1).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonRule {
    #[serde(with = "crate::serde_num::f64s")]
    pub first: f64,
    #[serde(with = "crate::serde_num::f64s")]
    pub ratio: f64,
}

impl Default for EpsilonRule {
    fn default() -> Self {
        EpsilonRule { first: 0.4, ratio: 0.8 }
    }
}

impl EpsilonRule {
    pub fn validate(&self) -> Result<()> {
        if !(self.first > 0.0 && self.first < 0.5) {
            return Err(Error::Domain(format!("epsilon_1 = {} must lie in (0, 1/2)", self.first)));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::Domain(format!("epsilon ratio {} must lie in (0, 1)", self.ratio)));
        }
        Ok(())
    }

    pub fn eps(&self, j: usize) -> f64 {
        self.first * self.ratio.powi(j as i32 - 1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensePlan {
    /// t_j for j = 1..=K
    #[serde(with = "crate::serde_num::vec_f64s")]
    pub params: Vec<f64>,
    #[serde(with = "points")]
    pub points: Vec<Bary>,
    /// epsilon_j for j = 1..=K+1
    #[serde(with = "crate::serde_num::vec_f64s")]
    pub epsilons: Vec<f64>,
}

impl DensePlan {
    pub fn k(&self) -> usize {
        self.params.len()
    }

    /// epsilon_j, 1-based.
    pub fn eps(&self, j: usize) -> f64 {
        self.epsilons[j - 1]
    }

    /// gamma(t_j), 1-based.
    pub fn point(&self, j: usize) -> &Bary {
        &self.points[j - 1]
    }

    /// Largest l1 distance from a curve sample to the plan points with
    /// index in `from..=K`.
    pub fn resolution(&self, curve: &TargetCurve, from: usize, mesh: f64) -> f64 {
        let tail = &self.points[from.max(1) - 1..];
        curve
            .image_samples(mesh)
            .iter()
            .map(|p| tail.iter().map(|q| l1(p, q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    }
}

/// Zig-zag targets: level m visits i / 2^m, forwards on even levels and
/// backwards on odd ones, so every dyadic parameter is visited again and
/// again.
struct ZigZag {
    level: u32,
    pos: u64,
}

impl Iterator for ZigZag {
    type Item = f64;
    fn next(&mut self) -> Option<f64> {
        let n = 1u64 << self.level.min(52);
        if self.pos > n {
            self.level += 1;
            self.pos = 0;
            return self.next();
        }
        let i = if self.level % 2 == 0 { self.pos } else { n - self.pos };
        self.pos += 1;
        Some(i as f64 / n as f64)
    }
}

pub fn build_dense_plan(curve: &TargetCurve, k: usize, rule: EpsilonRule) -> Result<DensePlan> {
    rule.validate()?;
    if k == 0 {
        return Err(Error::Domain("K must be at least 1".into()));
    }
    let lip = curve.lipschitz();
    let epsilons: Vec<f64> = (1..=k + 1).map(|j| rule.eps(j)).collect();
    let mut targets = ZigZag { level: 0, pos: 0 };
    let mut u = targets.next().unwrap();
    let mut target = targets.next().unwrap();
    let mut params = vec![u];
    let mut points = vec![curve.sample(u)];
    for j in 2..=k {
        let eps = epsilons[j - 1];
        while target == u {
            target = targets.next().unwrap();
        }
        let step = if lip > 0.0 { 0.9 * eps / lip } else { f64::INFINITY };
        let gap = target - u;
        let next = if gap.abs() <= step { target } else { u + step * gap.signum() };
        let p = curve.sample(next);
        let moved = linf(&p, points.last().unwrap());
        if !(moved < eps) {
            return Err(Error::PlanInfeasible {
                j,
                detail: format!("step moves a coordinate by {moved}, budget {eps}"),
            });
        }
        u = next;
        params.push(u);
        points.push(p);
    }
    Ok(DensePlan { params, points, epsilons })
}

mod points {
    use super::Bary;
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Bary], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for p in v {
            let t: Vec<String> = p.iter().map(|x| crate::numeric::f64_str(*x)).collect();
            seq.serialize_element(&t)?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Bary>, D::Error> {
        let rows = Vec::<[String; 3]>::deserialize(d)?;
        rows.iter()
            .map(|r| {
                let mut p = [0.0; 3];
                for i in 0..3 {
                    p[i] = r[i].parse().map_err(serde::de::Error::custom)?;
                }
                Ok(p)
            })
            .collect()
    }
}
