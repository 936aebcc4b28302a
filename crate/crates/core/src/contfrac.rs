//! Exact continued-fraction engine.
//!
//! Schedules are run-length encoded; run lengths are arbitrary precision
//! because the synthesized schedules are astronomically deep. Only the
//! first `depth_cap` digits can ever be expanded exactly.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default refusal threshold for exact expansion.
pub const DEFAULT_DEPTH_CAP: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    #[serde(with = "crate::serde_num::biguint")]
    pub digit: BigUint,
    #[serde(with = "crate::serde_num::biguint")]
    pub run_length: BigUint,
}

/// `[a0; d1 x n1, d2 x n2, ...]`
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CFSchedule {
    #[serde(with = "crate::serde_num::biguint")]
    pub a0: BigUint,
    pub blocks: Vec<Block>,
}

impl CFSchedule {
    pub fn new(a0: u64, blocks: &[(u64, u64)]) -> Result<Self> {
        let s = CFSchedule {
            a0: BigUint::from(a0),
            blocks: blocks
                .iter()
                .map(|&(d, n)| Block {
                    digit: BigUint::from(d),
                    run_length: BigUint::from(n),
                })
                .collect(),
        };
        s.validate()?;
        Ok(s)
    }

    /// `[0; d, d, ..., d]` with `n` copies.
    pub fn constant(digit: u64, n: u64) -> Self {
        Self::new(0, &[(digit, n)]).expect("valid constant schedule")
    }

    pub fn validate(&self) -> Result<()> {
        for (j, b) in self.blocks.iter().enumerate() {
            if b.digit < BigUint::from(2u32) {
                return Err(Error::InvalidSchedule(format!(
                    "block {} has digit {} < 2",
                    j + 1,
                    b.digit
                )));
            }
            if b.run_length.is_zero() {
                return Err(Error::InvalidSchedule(format!(
                    "block {} has zero run length",
                    j + 1
                )));
            }
        }
        Ok(())
    }

    /// N(k): digits in the first k blocks.
    pub fn cumulative(&self, k: usize) -> BigUint {
        self.blocks[..k.min(self.blocks.len())]
            .iter()
            .map(|b| &b.run_length)
            .sum()
    }

    pub fn total_depth(&self) -> BigUint {
        self.cumulative(self.blocks.len())
    }

    /// Digit a_n for n >= 1 (a_0 for n = 0). `None` past the end.
    pub fn digit(&self, n: u64) -> Option<BigUint> {
        if n == 0 {
            return Some(self.a0.clone());
        }
        let mut rem = BigUint::from(n - 1);
        for b in &self.blocks {
            if rem < b.run_length {
                return Some(b.digit.clone());
            }
            rem -= &b.run_length;
        }
        None
    }

    /// Expand a_1..a_count exactly, refusing beyond `depth_cap`.
    pub fn expand(&self, count: u64, depth_cap: u64) -> Result<Vec<BigUint>> {
        if count > depth_cap {
            return Err(Error::DepthCapExceeded {
                requested: count.to_string(),
                cap: depth_cap,
            });
        }
        let total = self.total_depth();
        if BigUint::from(count) > total {
            return Err(Error::InsufficientDepth {
                needed: count.to_string(),
                available: total.to_string(),
            });
        }
        let mut out = Vec::with_capacity(count as usize);
        'outer: for b in &self.blocks {
            let n = b.run_length.to_u64().unwrap_or(u64::MAX);
            for _ in 0..n {
                if out.len() as u64 == count {
                    break 'outer;
                }
                out.push(b.digit.clone());
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Convergent {
    pub index: i64,
    pub p: BigUint,
    pub q: BigUint,
}

/// Exact bracket around an irrational slope.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValueEnclosure {
    pub lower: BigRational,
    pub upper: BigRational,
}

impl ValueEnclosure {
    pub fn width(&self) -> BigRational {
        &self.upper - &self.lower
    }

    pub fn midpoint(&self) -> BigRational {
        (&self.lower + &self.upper) / BigInt::from(2)
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        &self.lower < x && x < &self.upper
    }
}

/// The recurrence seeds (p, q) at indices -2 and -1.
pub fn seeds() -> [Convergent; 2] {
    [
        Convergent {
            index: -2,
            p: BigUint::zero(),
            q: BigUint::one(),
        },
        Convergent {
            index: -1,
            p: BigUint::one(),
            q: BigUint::zero(),
        },
    ]
}

/// Convergents 0..=max_index from the recurrence x_n = a_n x_{n-1} + x_{n-2}.
///
/// Needs at least `max_index` digits after a0.
pub fn convergents(schedule: &CFSchedule, max_index: u64) -> Result<Vec<Convergent>> {
    convergents_capped(schedule, max_index, DEFAULT_DEPTH_CAP)
}

pub fn convergents_capped(
    schedule: &CFSchedule,
    max_index: u64,
    depth_cap: u64,
) -> Result<Vec<Convergent>> {
    schedule.validate()?;
    let digits = schedule.expand(max_index, depth_cap)?;
    let [s2, s1] = seeds();
    let (mut p2, mut q2, mut p1, mut q1) = (s2.p, s2.q, s1.p, s1.q);
    let mut out = Vec::with_capacity(max_index as usize + 1);
    let all = std::iter::once(&schedule.a0).chain(digits.iter());
    for (n, a) in all.enumerate() {
        let p = a * &p1 + &p2;
        let q = a * &q1 + &q2;
        out.push(Convergent {
            index: n as i64,
            p: p.clone(),
            q: q.clone(),
        });
        p2 = std::mem::replace(&mut p1, p);
        q2 = std::mem::replace(&mut q1, q);
    }
    Ok(out)
}

/// |p_n q_{n+1} - q_n p_{n+1}| == 1.
pub fn check_unimodular(c_n: &Convergent, c_next: &Convergent) -> Result<bool> {
    if c_next.index != c_n.index + 1 {
        return Err(Error::ContractViolation(format!(
            "convergent indices {} and {} are not consecutive",
            c_n.index, c_next.index
        )));
    }
    let a = BigInt::from(c_n.p.clone()) * BigInt::from(c_next.q.clone());
    let b = BigInt::from(c_n.q.clone()) * BigInt::from(c_next.p.clone());
    let d = a - b;
    Ok(d == BigInt::one() || d == -BigInt::one())
}

fn ratio(c: &Convergent) -> BigRational {
    BigRational::new(BigInt::from(c.p.clone()), BigInt::from(c.q.clone()))
}

/// Bracket with endpoints p_depth/q_depth and p_{depth+1}/q_{depth+1}.
pub fn value_enclosure(schedule: &CFSchedule, depth: u64) -> Result<ValueEnclosure> {
    if depth < 1 {
        return Err(Error::ContractViolation("enclosure depth must be >= 1".into()));
    }
    let cs = convergents(schedule, depth + 1)?;
    Ok(enclosure_from(&cs[depth as usize], &cs[depth as usize + 1]))
}

pub fn enclosure_from(a: &Convergent, b: &Convergent) -> ValueEnclosure {
    let (x, y) = (ratio(a), ratio(b));
    if x < y {
        ValueEnclosure { lower: x, upper: y }
    } else {
        ValueEnclosure { lower: y, upper: x }
    }
}

/// Two-sided approximation bounds 1/(q_n+q_{n+1}) <= |p_n - theta q_n| <= 1/q_{n+1}
/// and a0 <= p_n/q_n <= a0+1, with theta ranging over the depth n+2
/// enclosure. |p_n - x q_n| is linear on the enclosure, so checking both
/// endpoints covers every theta inside it.
pub fn check_approximation_bounds(schedule: &CFSchedule, n: u64) -> Result<bool> {
    let cs = convergents(schedule, n + 3)?;
    Ok(approximation_bounds_hold(&cs, n as usize))
}

/// Same check on an already-expanded convergent list (needs index n+3).
pub fn approximation_bounds_hold(cs: &[Convergent], n: usize) -> bool {
    let (pn, qn) = (BigInt::from(cs[n].p.clone()), BigInt::from(cs[n].q.clone()));
    let qn1 = BigInt::from(cs[n + 1].q.clone());
    for d in [n + 2, n + 3] {
        let (pd, qd) = (BigInt::from(cs[d].p.clone()), BigInt::from(cs[d].q.clone()));
        // |p_n - (p_d/q_d) q_n| = |p_n q_d - q_n p_d| / q_d
        let num = (&pn * &qd - &qn * &pd).magnitude().clone();
        let num = BigInt::from(num);
        if &num * &qn1 > qd {
            return false;
        }
        if &num * (&qn + &qn1) < qd {
            return false;
        }
    }
    // a0 <= p_n/q_n <= a0 + 1 (a0 = p_0 since q_0 = 1)
    let a0 = BigInt::from(cs[0].p.clone());
    let lo = &a0 * &qn <= pn;
    let hi = pn <= (&a0 + 1) * &qn;
    lo && hi
}
