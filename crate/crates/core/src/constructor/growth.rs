//! Run-length lower bounds and the block length choice.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::plan::DensePlan;
use super::thetas::ThetaBlock;
use crate::error::{Error, Result};
use crate::numeric::{self, f64_to_rational, floor_uint, half, int, uint_to_rational};

/// Tuning constants of the growth conditions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthParams {
    /// additive slack between the curve graph distance and the index proxy
    pub r: u64,
    #[serde(with = "crate::serde_num::f64s")]
    pub c_h: f64,
    #[serde(with = "crate::serde_num::f64s")]
    pub d_h: f64,
    /// tau = closeness * epsilon_{k+1}
    #[serde(with = "crate::serde_num::f64s")]
    pub closeness: f64,
}

impl Default for GrowthParams {
    fn default() -> Self {
        GrowthParams {
            r: 4,
            c_h: 1.0,
            d_h: 0.0,
            closeness: 0.25,
        }
    }
}

/// Everything the growth conditions look at: the plan, all block scales
/// and the run lengths chosen so far.
#[derive(Clone, Debug)]
pub struct GrowthState<'a> {
    pub plan: &'a DensePlan,
    pub thetas: &'a [ThetaBlock],
    pub l_hat: BigRational,
    pub params: GrowthParams,
    /// n_i(j) for the blocks chosen so far
    pub lengths: Vec<[BigUint; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthBound {
    pub k: usize,
    #[serde(with = "crate::serde_num::biguint")]
    pub closeness: BigUint,
    #[serde(with = "crate::serde_num::biguint")]
    pub horoball: BigUint,
    /// max(3, closeness, horoball)
    #[serde(with = "crate::serde_num::biguint")]
    pub n: BigUint,
}

impl<'a> GrowthState<'a> {
    pub fn new(plan: &'a DensePlan, thetas: &'a [ThetaBlock], l_hat: BigRational, params: GrowthParams) -> Self {
        GrowthState {
            plan,
            thetas,
            l_hat,
            params,
            lengths: Vec::new(),
        }
    }

    pub fn k_max(&self) -> usize {
        self.thetas.len()
    }

    pub fn scale(&self, i: usize, j: usize) -> &BigRational {
        &self.thetas[j - 1].scales[i]
    }

    /// N_i(j), the index where block j ends.
    pub fn start(&self, i: usize, j: usize) -> BigUint {
        self.lengths[..j].iter().map(|n| &n[i]).sum()
    }

    /// coarse log q_{N_i(j)}.
    pub fn lq(&self, i: usize, j: usize) -> BigRational {
        let mut acc = BigRational::zero();
        for (jj, n) in self.lengths[..j].iter().enumerate() {
            acc += self.scale(i, jj + 1) * uint_to_rational(&n[i]);
        }
        acc
    }

    fn tau(&self, k: usize) -> f64 {
        self.params.closeness * self.plan.eps(k + 1)
    }

    /// Offset the closeness condition has to absorb for torus i when block
    /// k is chosen: the earlier blocks, the boundary terms of the window
    /// and the comparison slack R.
    pub fn closeness_offset(&self, i: usize, k: usize) -> BigRational {
        let s_next = self.scale(i, k + 1);
        let max_next = self.thetas[k].max_scale();
        let max_cur = self.thetas[k - 1].max_scale();
        let h = BigRational::new(5.into(), 2.into())
            + (&self.l_hat * int(3) + max_next * half() + max_cur) / s_next;
        uint_to_rational(&self.start(i, k - 1))
            + self.lq(i, k - 1) / self.scale(i, k)
            + int(2 * self.params.r as i64)
            + h
    }

    /// Horoball ratio bound h(n) at the checkpoint that opens window k+1.
    pub fn horoball_at(&self, i: usize, k: usize, n: f64) -> f64 {
        let (beta, m0, ln_s) = self.horoball_consts(i, k);
        horoball_h(self.params, beta, m0, ln_s, n)
    }

    fn horoball_consts(&self, i: usize, k: usize) -> (f64, f64, f64) {
        let s = self.scale(i, k);
        let beta = (self.lq(i, k - 1) + self.scale(i, k + 1) * half()) / s;
        let m0 = self.start(i, k - 1).to_f64().unwrap() - 2.0;
        (numeric::rational_to_f64(&beta), m0, numeric::ln_rational(s))
    }
}

fn horoball_h(p: GrowthParams, beta: f64, m0: f64, ln_s: f64, x: f64) -> f64 {
    let m = m0 + x;
    (p.c_h * (ln_s + (beta + x).ln() + (1.0 + 2.0 * m).ln()) + p.d_h) / m
}

// sign of h'(x); decreasing in x because the numerator is concave
fn horoball_slope(p: GrowthParams, beta: f64, m0: f64, ln_s: f64, x: f64) -> f64 {
    let m = m0 + x;
    let f = p.c_h * (ln_s + (beta + x).ln() + (1.0 + 2.0 * m).ln()) + p.d_h;
    let fp = p.c_h * (1.0 / (beta + x) + 2.0 / (1.0 + 2.0 * m));
    fp * m - f
}

/// Smallest integer N >= 3 with h(n) < target for every n >= N.
fn horoball_threshold(p: GrowthParams, beta: f64, m0: f64, ln_s: f64, target: f64) -> Result<BigUint> {
    let h = |x: f64| horoball_h(p, beta, m0, ln_s, x);
    let slope = |x: f64| horoball_slope(p, beta, m0, ln_s, x);
    let x0 = 3.0f64.max(3.0 - m0);
    // peak of the unimodal h on [x0, inf)
    let peak = if slope(x0) <= 0.0 {
        x0
    } else {
        let mut hi = x0.max(1.0) * 2.0;
        while slope(hi) > 0.0 {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::InsufficientPrecision("horoball peak search diverged".into()));
            }
        }
        let mut lo = x0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if slope(mid) > 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        hi
    };
    if h(peak) < target && h(x0) < target {
        return Ok(BigUint::from(3u32));
    }
    let mut hi = peak.max(1.0) * 2.0;
    while h(hi) >= target {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::InsufficientPrecision("horoball threshold search diverged".into()));
        }
    }
    let mut lo = peak;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) >= target {
            lo = mid
        } else {
            hi = mid
        }
    }
    let n = BigUint::from_f64(hi.ceil()).unwrap() + 1u32;
    Ok(n.max(BigUint::from(3u32)))
}

/// Lower bound N(k) on every n_i(k).
pub fn growth_lower_bound(k: usize, state: &GrowthState) -> Result<GrowthBound> {
    if k == 0 || k > state.k_max() || state.lengths.len() < k - 1 {
        return Err(Error::ContractViolation(format!(
            "growth bound for block {k} needs blocks 1..{} chosen",
            k - 1
        )));
    }
    let three = BigUint::from(3u32);
    if k == state.k_max() {
        return Ok(GrowthBound {
            k,
            closeness: three.clone(),
            horoball: three.clone(),
            n: three,
        });
    }
    let tau = f64_to_rational(state.tau(k));
    let mut closeness = three.clone();
    let mut horoball = three.clone();
    for i in 0..3 {
        let a = floor_uint(&(state.closeness_offset(i, k) / &tau)) + 2u32;
        closeness = closeness.max(a);
        let (beta, m0, ln_s) = state.horoball_consts(i, k);
        let b = horoball_threshold(state.params, beta, m0, ln_s, state.plan.eps(k + 1))?;
        horoball = horoball.max(b);
    }
    let n = closeness.clone().max(horoball.clone());
    Ok(GrowthBound {
        k,
        closeness,
        horoball,
        n,
    })
}

/// Minimum n_0(k) such that every other torus can interleave with run
/// length at least `n_min`.
pub fn n0_minimum(k: usize, n_min: &BigUint, state: &GrowthState) -> BigUint {
    let lq0 = state.lq(0, k - 1);
    let s0 = state.scale(0, k);
    let two_l = &state.l_hat * int(2);
    let mut n0 = n_min.clone().max(BigUint::from(3u32));
    let nm = uint_to_rational(n_min) - BigRational::new(3.into(), 2.into());
    for i in 1..3 {
        let y = (&nm * state.scale(i, k) - &lq0 + state.lq(i, k - 1) - &two_l) / s0 + half();
        let c = y.ceil().to_integer();
        if c.is_positive() {
            n0 = n0.max(c.magnitude().clone());
        }
    }
    n0
}

/// X_i: the interleaving bound with n_i - 1 <= X_i < n_i.
pub fn interleave_x(k: usize, i: usize, n0: &BigUint, state: &GrowthState) -> BigRational {
    let lq0 = state.lq(0, k - 1);
    let s0 = state.scale(0, k);
    let two_l = &state.l_hat * int(2);
    (lq0 - state.lq(i, k - 1) + (uint_to_rational(n0) - half()) * s0 + two_l) / state.scale(i, k) + half()
}

/// n(k) for all three tori; ties at the interleaving boundary round up.
pub fn choose_block_lengths(k: usize, n_min: &BigUint, state: &GrowthState) -> Result<[BigUint; 3]> {
    if state.lengths.len() != k - 1 {
        return Err(Error::ContractViolation(format!("block {k} chosen out of order")));
    }
    let n0 = n0_minimum(k, n_min, state);
    let mut out = [n0.clone(), BigUint::zero(), BigUint::zero()];
    for (i, slot) in out.iter_mut().enumerate().skip(1) {
        let x = interleave_x(k, i, &n0, state);
        *slot = floor_uint(&x) + 1u32;
        if &*slot < n_min {
            return Err(Error::ContractViolation(format!("n_{i}({k}) fell below the growth bound")));
        }
    }
    Ok(out)
}
