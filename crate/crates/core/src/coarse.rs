//! Log-space growth engine.
//!
//! Two layers live here. The f64 layer evaluates the closed forms
//! `log q_{N(j-1)+l} ~ log q_{N(j-1)} + l ln lambda` and
//! `T_{N(j-1)+l} ~ log q_{N(j-1)} + (l+1/2) ln lambda` for schedules whose
//! digits are ordinary numbers. `BlockClock` is the exact layer used at
//! construction scale: scales and coarse logs are rationals, so comparisons
//! between astronomically large coarse times stay exact.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::contfrac::CFSchedule;
use crate::error::{Error, Result};
use crate::numeric::{self, half, uint_to_rational};

/// lambda(x) = (x + sqrt(x^2+4))/2, the dominant root of y^2 = x y + 1.
pub fn lambda(x: f64) -> Result<f64> {
    check_digit(x)?;
    Ok(ln_lambda_unchecked(x).exp())
}

/// The other root, written as -1/lambda to avoid cancellation.
pub fn lambda_bar(x: f64) -> Result<f64> {
    Ok(-1.0 / lambda(x)?)
}

/// ln lambda(x) = asinh(x/2).
pub fn ln_lambda(x: f64) -> Result<f64> {
    check_digit(x)?;
    Ok(ln_lambda_unchecked(x))
}

fn ln_lambda_unchecked(x: f64) -> f64 {
    (x / 2.0).asinh()
}

fn check_digit(x: f64) -> Result<()> {
    if !(x >= 2.0) || !x.is_finite() {
        return Err(Error::Domain(format!("lambda needs a digit >= 2, got {x}")));
    }
    Ok(())
}

/// ln lambda of an arbitrary-precision digit.
pub fn ln_lambda_big(d: &BigUint) -> Result<f64> {
    if d < &BigUint::from(2u32) {
        return Err(Error::Domain(format!("lambda needs a digit >= 2, got {d}")));
    }
    if d.bits() <= 1000 {
        ln_lambda(d.to_f64().unwrap())
    } else {
        // lambda(d) = d (1 + O(d^-2)), far below f64 resolution here
        Ok(numeric::ln_biguint(d))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogKind {
    LogDenominator,
    BalanceTime,
    Generic,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogQuantity {
    pub value: f64,
    pub kind: LogKind,
}

impl LogQuantity {
    pub fn log_q(value: f64) -> Self {
        LogQuantity {
            value,
            kind: LogKind::LogDenominator,
        }
    }
    pub fn time(value: f64) -> Self {
        LogQuantity {
            value,
            kind: LogKind::BalanceTime,
        }
    }
}

/// The additive constant L and where it comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    #[serde(with = "crate::serde_num::f64s")]
    pub l: f64,
    /// |ln(1 + 2 lambda_bar(2))|
    #[serde(with = "crate::serde_num::f64s")]
    pub geometric_tail: f64,
    /// ln 4, from A(j) <= 4 q_{N(j-1)}
    #[serde(with = "crate::serde_num::f64s")]
    pub a_vs_q: f64,
    /// ln 2, from q_n q_{n+1} <= ... <= 4 q_n q_{n+1}
    #[serde(with = "crate::serde_num::f64s")]
    pub t_vs_half_log: f64,
}

pub fn error_budget() -> ErrorBudget {
    let lb2 = 1.0 - std::f64::consts::SQRT_2;
    let geometric_tail = (1.0 + 2.0 * lb2).ln().abs();
    let a_vs_q = 4f64.ln();
    let t_vs_half_log = 2f64.ln();
    ErrorBudget {
        l: geometric_tail + a_vs_q + t_vs_half_log,
        geometric_tail,
        a_vs_q,
        t_vs_half_log,
    }
}

fn block_digit(schedule: &CFSchedule, j: usize) -> Result<(f64, u64)> {
    if j == 0 || j > schedule.blocks.len() {
        return Err(Error::OutOfRange(format!(
            "block {j} not in 1..={}",
            schedule.blocks.len()
        )));
    }
    let b = &schedule.blocks[j - 1];
    let n = b.run_length.to_u64().unwrap_or(u64::MAX);
    Ok((ln_lambda_big(&b.digit)?, n))
}

/// base + ell * ln lambda(theta(j)), for 0 <= ell <= n(j).
pub fn coarse_log_q(
    schedule: &CFSchedule,
    j: usize,
    ell: u64,
    base_log_q: LogQuantity,
) -> Result<LogQuantity> {
    let (ll, n) = block_digit(schedule, j)?;
    if ell > n {
        return Err(Error::OutOfRange(format!("ell = {ell} exceeds n({j}) = {n}")));
    }
    Ok(LogQuantity::log_q(base_log_q.value + ell as f64 * ll))
}

/// base + (ell + 1/2) ln lambda(theta(j)), for 0 <= ell <= n(j) - 1.
pub fn coarse_balance_time(
    schedule: &CFSchedule,
    j: usize,
    ell: u64,
    base_log_q: LogQuantity,
) -> Result<LogQuantity> {
    let (ll, n) = block_digit(schedule, j)?;
    if ell >= n {
        return Err(Error::OutOfRange(format!(
            "ell = {ell} has no in-block successor (n({j}) = {n})"
        )));
    }
    Ok(LogQuantity::time(base_log_q.value + (ell as f64 + 0.5) * ll))
}

/// T_n ~ (log q_n + log q_{n+1}) / 2; the true T_n exceeds this by at most ln 2.
pub fn coarse_t_from_pair(log_q_n: LogQuantity, log_q_next: LogQuantity) -> LogQuantity {
    LogQuantity::time(0.5 * (log_q_n.value + log_q_next.value))
}

/// Closed form q_{N(j-1)+l} = A lambda^l + B lambda_bar^l inside one block.
/// A and B are stored divided by q_{N(j-1)} so they stay in f64 range.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthModel {
    pub block_index: usize,
    pub lambda_val: f64,
    pub lambda_bar_val: f64,
    pub a_scaled: f64,
    pub b_scaled: f64,
    pub log_q_base: f64,
}

impl GrowthModel {
    /// `q_base = q_{N(j-1)}`, `q_next = q_{N(j-1)+1}`.
    pub fn new(digit: &BigUint, j: usize, q_base: &BigUint, q_next: &BigUint) -> Result<Self> {
        let ll = ln_lambda_big(digit)?;
        let lam = ll.exp();
        let lbar = -(-ll).exp();
        let r = numeric::rational_to_f64(&BigRational::new(
            q_next.clone().into(),
            q_base.clone().into(),
        ));
        let denom = lam - lbar;
        Ok(GrowthModel {
            block_index: j,
            lambda_val: lam,
            lambda_bar_val: lbar,
            a_scaled: (r - lbar) / denom,
            b_scaled: (lam - r) / denom,
            log_q_base: numeric::ln_biguint(q_base),
        })
    }

    /// ln q_{N(j-1)+l} from the closed form.
    pub fn log_q(&self, ell: u64) -> f64 {
        let ll = self.lambda_val.ln();
        let ratio = (self.lambda_bar_val / self.lambda_val).powf(ell as f64);
        self.log_q_base + self.a_scaled.ln() + ell as f64 * ll + (1.0 + self.b_scaled / self.a_scaled * ratio).ln()
    }
}

/// Exact coarse clock for one torus: block scales s_j (stand-ins for
/// ln lambda(theta(j))) and run lengths n(j), with coarse log q threaded
/// from block to block.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockClock {
    pub scales: Vec<BigRational>,
    pub lengths: Vec<BigUint>,
    /// N(j) for j = 0..=K
    pub starts: Vec<BigUint>,
    /// coarse log q_{N(j)} for j = 0..=K
    pub lq: Vec<BigRational>,
}

impl BlockClock {
    pub fn new(scales: Vec<BigRational>, lengths: Vec<BigUint>) -> Result<Self> {
        if scales.len() != lengths.len() || scales.is_empty() {
            return Err(Error::InvalidSchedule(
                "clock needs one scale per block and at least one block".into(),
            ));
        }
        let mut starts = vec![BigUint::zero()];
        let mut lq = vec![BigRational::zero()];
        for (s, n) in scales.iter().zip(&lengths) {
            if !s.is_positive() || n.is_zero() {
                return Err(Error::InvalidSchedule(
                    "scales must be positive and run lengths nonzero".into(),
                ));
            }
            starts.push(starts.last().unwrap() + n);
            lq.push(lq.last().unwrap() + s * uint_to_rational(n));
        }
        Ok(BlockClock {
            scales,
            lengths,
            starts,
            lq,
        })
    }

    pub fn blocks(&self) -> usize {
        self.scales.len()
    }

    /// Block j (1-based) containing index n, with N(j-1) <= n < N(j).
    fn block_of(&self, n: &BigUint) -> Option<usize> {
        (1..=self.blocks()).find(|&j| n < &self.starts[j])
    }

    /// Coarse log q_n for 0 <= n <= N(K).
    pub fn log_q(&self, n: &BigUint) -> Result<BigRational> {
        if n == self.starts.last().unwrap() {
            return Ok(self.lq.last().unwrap().clone());
        }
        let j = self.block_of(n).ok_or_else(|| self.beyond(n))?;
        let ell = n - &self.starts[j - 1];
        Ok(&self.lq[j - 1] + &self.scales[j - 1] * uint_to_rational(&ell))
    }

    /// Coarse balance time T_n for 0 <= n < N(K).
    pub fn time(&self, n: &BigUint) -> Result<BigRational> {
        let j = self.block_of(n).ok_or_else(|| self.beyond(n))?;
        let ell = n - &self.starts[j - 1];
        Ok(&self.lq[j - 1] + &self.scales[j - 1] * (uint_to_rational(&ell) + half()))
    }

    pub fn time_u(&self, n: u64) -> Result<BigRational> {
        self.time(&BigUint::from(n))
    }

    /// Last balance time the clock covers, T_{N(K)-1}.
    pub fn horizon(&self) -> BigRational {
        let k = self.blocks();
        &self.lq[k] - &self.scales[k - 1] * half()
    }

    /// Distance proxy: the n with T_{n-1} < t <= T_n (0 when t <= T_0).
    pub fn index_at(&self, t: &BigRational) -> Result<BigUint> {
        if t > &self.horizon() {
            return Err(Error::HorizonExceeded(format!(
                "{:.6e}",
                numeric::rational_to_f64(t)
            )));
        }
        for j in 1..=self.blocks() {
            let last = &self.lq[j] - &self.scales[j - 1] * half();
            if t <= &last {
                let x = (t - &self.lq[j - 1]) / &self.scales[j - 1] - half();
                let c = x.ceil().to_integer();
                let ell = if c.is_positive() {
                    c.magnitude().clone()
                } else {
                    BigUint::zero()
                };
                return Ok(&self.starts[j - 1] + ell);
            }
        }
        unreachable!("t below horizon must land in a block")
    }

    fn beyond(&self, n: &BigUint) -> Error {
        Error::OutOfRange(format!(
            "index {n} beyond clock depth {}",
            self.starts.last().unwrap()
        ))
    }

    /// Clock for an ordinary schedule, scales taken as f64 ln lambda rounded
    /// to the grid. Only for small illustrative schedules.
    pub fn from_schedule(schedule: &CFSchedule) -> Result<Self> {
        let mut scales = Vec::new();
        for b in &schedule.blocks {
            scales.push(numeric::f64_to_rational(ln_lambda_big(&b.digit)?));
        }
        Self::new(scales, schedule.blocks.iter().map(|b| b.run_length.clone()).collect())
    }
}

impl Default for LogQuantity {
    fn default() -> Self {
        LogQuantity {
            value: 0.0,
            kind: LogKind::Generic,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contfrac::{convergents, CFSchedule};
    use crate::numeric::{int, rational_to_f64};
    use proptest::prelude::*;

    #[test]
    fn lambda_examples() {
        assert!((lambda(2.0).unwrap() - (1.0 + 2f64.sqrt())).abs() < 1e-14);
        assert!((lambda(3.0).unwrap() - 3.3027756377).abs() < 1e-9);
        assert!(lambda(1.5).is_err());
        assert!(lambda(f64::NAN).is_err());
    }

    #[test]
    fn budget_terms() {
        let b = error_budget();
        assert!((b.geometric_tail - 1.7627471740).abs() < 1e-9);
        assert!((b.a_vs_q - 1.3862943611).abs() < 1e-9);
        assert!((b.t_vs_half_log - 0.6931471806).abs() < 1e-9);
        assert!((b.l - (b.geometric_tail + b.a_vs_q + b.t_vs_half_log)).abs() < 1e-15);
        assert!((b.l - 3.8421887157).abs() < 1e-9);
        for t in [b.geometric_tail, b.a_vs_q, b.t_vs_half_log] {
            assert!(b.l >= t);
        }
    }

    #[test]
    fn coarse_log_q_examples() {
        let s3 = CFSchedule::constant(3, 5);
        let z = LogQuantity::log_q(0.0);
        assert_eq!(coarse_log_q(&s3, 1, 0, z).unwrap().value, 0.0);
        let v = coarse_log_q(&s3, 1, 5, z).unwrap().value;
        assert!((v - 5.0 * 3.3027756377f64.ln()).abs() < 1e-9);
        let gap = v - 360f64.ln();
        assert!((gap - 0.087712).abs() < 1e-5, "gap {gap}");
        assert!(gap <= error_budget().l);
        let s2 = CFSchedule::constant(2, 4);
        let v = coarse_log_q(&s2, 1, 4, z).unwrap().value;
        assert!((v - 3.5255).abs() < 1e-4);
        assert!((v - 29f64.ln() - 0.158).abs() < 1e-3);
        assert!(coarse_log_q(&s2, 1, 5, z).is_err());
        assert!(coarse_log_q(&s2, 2, 0, z).is_err());
    }

    #[test]
    fn coarse_time_examples() {
        let s2 = CFSchedule::constant(2, 10);
        let z = LogQuantity::log_q(0.0);
        let t = coarse_balance_time(&s2, 1, 1, z).unwrap();
        assert!((t.value - 1.5 * (1.0 + 2f64.sqrt()).ln()).abs() < 1e-12);
        assert!((t.value - 1.3221).abs() < 1e-4);
        assert_eq!(t.kind, LogKind::BalanceTime);
        let t0 = coarse_balance_time(&s2, 1, 0, z).unwrap();
        assert!((t0.value - 0.5 * (1.0 + 2f64.sqrt()).ln()).abs() < 1e-12);
        let s3 = CFSchedule::constant(3, 10);
        let t2 = coarse_balance_time(&s3, 1, 2, z).unwrap();
        assert!((t2.value - 2.9869).abs() < 1e-4);
        assert!(coarse_balance_time(&s3, 1, 10, z).is_err());
    }

    #[test]
    fn pair_examples() {
        let v = coarse_t_from_pair(LogQuantity::log_q(2f64.ln()), LogQuantity::log_q(5f64.ln()));
        assert!((v.value - 0.5 * 10f64.ln()).abs() < 1e-12);
        assert_eq!(coarse_t_from_pair(LogQuantity::log_q(0.0), LogQuantity::log_q(0.0)).value, 0.0);
        let v = coarse_t_from_pair(LogQuantity::log_q(10f64.ln()), LogQuantity::log_q(33f64.ln()));
        assert!((v.value - 2.899546).abs() < 1e-5);
    }

    #[test]
    fn growth_model_reproduces_recurrence() {
        // block 2 of [0; 2 x3, 7 x6]: q_{N(1)} = q_3 = 12
        let s = CFSchedule::new(0, &[(2, 3), (7, 6)]).unwrap();
        let cs = convergents(&s, 9).unwrap();
        let m = GrowthModel::new(&BigUint::from(7u32), 2, &cs[3].q, &cs[4].q).unwrap();
        assert!(m.a_scaled > 0.0);
        assert!((m.lambda_val * m.lambda_bar_val + 1.0).abs() < 1e-12);
        for ell in 0..=6u64 {
            let exact = cs[3 + ell as usize].q.to_f64().unwrap().ln();
            assert!((m.log_q(ell) - exact).abs() < 1e-12, "ell {ell}");
        }
    }

    #[test]
    fn block_clock_times_and_index() {
        let c = BlockClock::new(vec![int(16), int(64)], vec![4u32.into(), 5u32.into()]).unwrap();
        assert_eq!(c.starts[2], BigUint::from(9u32));
        assert_eq!(c.lq[1], int(64));
        assert_eq!(c.time_u(0).unwrap(), int(8));
        assert_eq!(c.time_u(3).unwrap(), int(56));
        assert_eq!(c.time_u(4).unwrap(), int(96));
        assert_eq!(c.horizon(), c.time_u(8).unwrap());
        assert!(c.time_u(9).is_err());
        // right-closed convention
        assert_eq!(c.index_at(&int(8)).unwrap(), BigUint::from(0u32));
        assert_eq!(c.index_at(&int(9)).unwrap(), BigUint::from(1u32));
        assert_eq!(c.index_at(&int(24)).unwrap(), BigUint::from(1u32));
        assert_eq!(c.index_at(&int(25)).unwrap(), BigUint::from(2u32));
        assert_eq!(c.index_at(&int(57)).unwrap(), BigUint::from(4u32));
        assert_eq!(c.index_at(&int(96)).unwrap(), BigUint::from(4u32));
        assert!(matches!(c.index_at(&int(1000)), Err(Error::HorizonExceeded(_))));
        assert_eq!(c.log_q(&BigUint::from(9u32)).unwrap(), int(64 + 320));
    }

    proptest! {
        #[test]
        fn prop_root_identities(x in 2.0f64..1e9) {
            let l = lambda(x).unwrap();
            let lb = lambda_bar(x).unwrap();
            prop_assert!(((l + lb) - x).abs() <= 1e-12 * x);
            prop_assert!((l * lb + 1.0).abs() <= 1e-12);
            prop_assert!(l >= x * (1.0 - 1e-14) && lb > -1.0 && lb < 0.0);
        }

        #[test]
        fn prop_coarse_log_q_increasing(d in 2u64..1_000_000, n in 2u64..50, base in 0.0f64..100.0) {
            let s = CFSchedule::constant(d, n);
            let b = LogQuantity::log_q(base);
            let mut prev = coarse_log_q(&s, 1, 0, b).unwrap().value;
            for ell in 1..=n {
                let v = coarse_log_q(&s, 1, ell, b).unwrap().value;
                prop_assert!(v > prev);
                prev = v;
            }
        }

        #[test]
        fn prop_index_partition(s1 in 1u32..50, s2 in 1u32..50, n1 in 1u32..6, n2 in 1u32..6, frac in 0.0f64..1.0) {
            let c = BlockClock::new(vec![int(s1 as i64), int(s2 as i64)], vec![n1.into(), n2.into()]).unwrap();
            let total = (n1 + n2) as u64;
            for n in 1..total {
                let lo = c.time_u(n - 1).unwrap();
                let hi = c.time_u(n).unwrap();
                prop_assert!(lo < hi);
                let t = &lo + (&hi - &lo) * crate::numeric::f64_to_rational(frac.max(1e-9));
                prop_assert_eq!(c.index_at(&t).unwrap(), BigUint::from(n));
                prop_assert_eq!(c.index_at(&hi).unwrap(), BigUint::from(n));
            }
            prop_assert!(rational_to_f64(&c.horizon()) > 0.0);
        }
    }
}
