//! Per-block digit scales. Block j of torus i uses the digit whose log
//! lambda is (up to eta) the scale s_i(j); the scales are inversely
//! proportional to the plan weights so the balance proxy lands near the
//! plan point.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use super::plan::DensePlan;
use crate::error::Result;
use crate::numeric::{self, digit_bits_for_scale, digit_from_scale, eta_for_scale, grid_ceil};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaBlock {
    pub j: usize,
    /// smallest scale of the block, a power-of-two multiple of c_1
    #[serde(with = "crate::serde_num::dyadic")]
    pub c: BigRational,
    /// floor weight delta_j = epsilon_{j+1} / 6
    #[serde(with = "crate::serde_num::f64s")]
    pub delta: f64,
    /// renormalized weights max(gamma_i, delta)
    #[serde(with = "crate::serde_num::triple_f64s")]
    pub weights: [f64; 3],
    #[serde(with = "scales3")]
    pub scales: [BigRational; 3],
    /// round(e^s - e^-s) when it fits under the digit cap
    #[serde(with = "digits3")]
    pub digits: [Option<BigUint>; 3],
}

impl ThetaBlock {
    pub fn max_scale(&self) -> &BigRational {
        self.scales.iter().max().unwrap()
    }

    pub fn min_scale(&self) -> &BigRational {
        self.scales.iter().min().unwrap()
    }
}

fn weights_for(gamma: &[f64; 3], delta: f64) -> [f64; 3] {
    let g = [gamma[0].max(delta), gamma[1].max(delta), gamma[2].max(delta)];
    let s: f64 = g.iter().sum();
    [g[0] / s, g[1] / s, g[2] / s]
}

fn scales_for(c: &BigRational, w: &[f64; 3]) -> [BigRational; 3] {
    let wmax = w.iter().cloned().fold(0.0, f64::max);
    let wmax_r = numeric::f64_to_rational(wmax);
    std::array::from_fn(|i| {
        if w[i] == wmax {
            c.clone()
        } else {
            grid_ceil(&(c * &wmax_r / numeric::f64_to_rational(w[i])))
        }
    })
}

/// Largest ratio (s_l(j-1) + eta) / (s_i(j) - eta) over the pairs (i, l).
pub fn separation_worst(prev: &[BigRational; 3], cur: &[BigRational; 3]) -> BigRational {
    let mut worst = BigRational::from_integer(0.into());
    for si in cur {
        for sl in prev {
            let r = separation_ratio(sl, si);
            if r > worst {
                worst = r;
            }
        }
    }
    worst
}

pub fn separation_ratio(s_prev: &BigRational, s_cur: &BigRational) -> BigRational {
    (s_prev + eta_for_scale(s_prev)) / (s_cur - eta_for_scale(s_cur))
}

/// Balance proxy (1/s_i) / sum_l (1/s_l) together with a bound on how far
/// the true proxy (with ln lambda in place of s) can move.
pub fn proxy_with_slack(scales: &[BigRational; 3]) -> ([f64; 3], f64) {
    let inv: Vec<BigRational> = scales.iter().map(|s| s.recip()).collect();
    let total: BigRational = inv.iter().sum();
    let p = std::array::from_fn(|i| numeric::rational_to_f64(&(&inv[i] / &total)));
    // each log moves by at most a relative eta/(s-eta); the proxy by twice that
    let rel = scales
        .iter()
        .map(|s| {
            let e = eta_for_scale(s);
            numeric::rational_to_f64(&(&e / (s - &e)))
        })
        .fold(0.0, f64::max);
    (p, 4.0 * rel)
}

/// Closeness left side: max_i |proxy_i - gamma_i| plus the slack.
pub fn closeness_lhs(scales: &[BigRational; 3], gamma: &[f64; 3]) -> [f64; 3] {
    let (p, slack) = proxy_with_slack(scales);
    std::array::from_fn(|i| (p[i] - gamma[i]).abs() + slack)
}

/// Choose the scales for every block of the plan.
///
/// `l_hat` is the grid-rounded error constant; c_1 = ceil(4 l_hat) and each
/// later c_j doubles c_{j-1} until the scale separation and closeness
/// conditions both hold.
pub fn select_thetas(plan: &DensePlan, l_hat: &BigRational, digit_cap: u64) -> Result<Vec<ThetaBlock>> {
    let four_l = l_hat * BigRational::from_integer(4.into());
    let mut c = BigRational::from_integer(four_l.ceil().to_integer());
    while &c - eta_for_scale(&c) < four_l {
        c += BigRational::one();
    }
    let mut out: Vec<ThetaBlock> = Vec::with_capacity(plan.k());
    for j in 1..=plan.k() {
        let gamma = plan.point(j);
        let eps_next = plan.eps(j + 1);
        let delta = eps_next / 6.0;
        let weights = weights_for(gamma, delta);
        let two = BigRational::from_integer(2.into());
        let mut scales = scales_for(&c, &weights);
        loop {
            let sep_ok = match out.last() {
                None => true,
                Some(prev) => {
                    separation_worst(&prev.scales, &scales) < numeric::f64_to_rational(plan.eps(j))
                }
            };
            let close_ok = closeness_lhs(&scales, gamma).iter().all(|&x| x < eps_next);
            if sep_ok && close_ok {
                break;
            }
            c = &c * &two;
            scales = scales_for(&c, &weights);
        }
        let digits = std::array::from_fn(|i| {
            let s = &scales[i];
            if digit_bits_for_scale(s) <= digit_cap {
                digit_from_scale(s, digit_cap).ok()
            } else {
                None
            }
        });
        debug_assert!(scales.iter().all(|s| s.is_positive()));
        out.push(ThetaBlock {
            j,
            c: c.clone(),
            delta,
            weights,
            scales,
            digits,
        });
    }
    Ok(out)
}

mod scales3 {
    use num_rational::BigRational;
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[BigRational; 3], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(3))?;
        for x in v {
            let t = crate::numeric::rational_to_decimal(x)
                .ok_or_else(|| serde::ser::Error::custom("scale is not a finite decimal"))?;
            seq.serialize_element(&t)?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[BigRational; 3], D::Error> {
        let v = <[String; 3]>::deserialize(d)?;
        let mut out = Vec::with_capacity(3);
        for t in &v {
            out.push(crate::numeric::parse_decimal(t).map_err(serde::de::Error::custom)?);
        }
        Ok(out.try_into().unwrap())
    }
}

mod digits3 {
    use num_bigint::BigUint;
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Option<BigUint>; 3], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(3))?;
        for x in v {
            seq.serialize_element(&x.as_ref().map(|d| d.to_str_radix(10)))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[Option<BigUint>; 3], D::Error> {
        let v = <[Option<String>; 3]>::deserialize(d)?;
        let mut out = Vec::with_capacity(3);
        for t in v {
            out.push(t.map(|t| t.parse::<BigUint>().map_err(serde::de::Error::custom)).transpose()?);
        }
        Ok(out.try_into().unwrap())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructor::curve::TargetCurve;
    use crate::constructor::plan::{build_dense_plan, EpsilonRule};
    use crate::numeric::{int, rational_to_f64};

    fn l_hat() -> BigRational {
        crate::constructor::l_hat()
    }

    #[test]
    fn first_block_of_constant_curve() {
        let c = TargetCurve::constant([1.0 / 3.0; 3]).unwrap();
        let plan = build_dense_plan(&c, 2, EpsilonRule::default()).unwrap();
        let th = select_thetas(&plan, &l_hat(), 4096).unwrap();
        assert_eq!(th[0].c, int(16));
        // equal weights: every torus gets scale 16, digit round(e^16 - e^-16)
        for i in 0..3 {
            assert_eq!(th[0].scales[i], int(16));
            assert_eq!(th[0].digits[i].as_ref().unwrap(), &BigUint::from(8886111u64));
        }
    }

    #[test]
    fn scales_satisfy_the_block_conditions() {
        let c = TargetCurve::segment([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]).unwrap();
        let plan = build_dense_plan(&c, 8, EpsilonRule::default()).unwrap();
        let th = select_thetas(&plan, &l_hat(), 4096).unwrap();
        let four_l = &l_hat() * int(4);
        for j in 1..=8 {
            let b = &th[j - 1];
            for s in &b.scales {
                assert!(s - eta_for_scale(s) >= four_l);
            }
            for (i, x) in closeness_lhs(&b.scales, plan.point(j)).iter().enumerate() {
                assert!(*x < plan.eps(j + 1), "j={j} i={i}");
            }
            if j >= 2 {
                let w = separation_worst(&th[j - 2].scales, &b.scales);
                assert!(rational_to_f64(&w) < plan.eps(j));
            }
            // c only ever doubles
            if j >= 2 {
                let q = &b.c / &th[j - 2].c;
                assert!(q.is_integer() && q.numer().magnitude().count_ones() == 1);
            }
        }
    }

    #[test]
    fn digit_cap_leaves_scale_only_blocks() {
        let c = TargetCurve::segment([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]).unwrap();
        let plan = build_dense_plan(&c, 6, EpsilonRule::default()).unwrap();
        let th = select_thetas(&plan, &l_hat(), 64).unwrap();
        assert!(th[0].digits[0].is_some());
        assert!(th.last().unwrap().digits.iter().any(|d| d.is_none()));
    }

    #[test]
    fn serde_round_trip() {
        let c = TargetCurve::circle([1.0 / 3.0; 3], 0.1).unwrap();
        let plan = build_dense_plan(&c, 4, EpsilonRule::default()).unwrap();
        let th = select_thetas(&plan, &l_hat(), 4096).unwrap();
        let txt = serde_json::to_string(&th).unwrap();
        let back: Vec<ThetaBlock> = serde_json::from_str(&txt).unwrap();
        assert_eq!(back, th);
    }
}
