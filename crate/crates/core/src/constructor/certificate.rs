//! The certificate: everything needed to replay the construction, with
//! all numbers written as decimal strings.

use std::path::Path;

use num_bigint::BigUint;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::audit::AuditEntry;
use super::curve::CurveSpec;
use super::growth::{GrowthBound, GrowthParams};
use super::plan::{DensePlan, EpsilonRule};
use super::thetas::ThetaBlock;
use crate::coarse::{BlockClock, ErrorBudget};
use crate::error::{Error, Result};

pub const FORMAT: &str = "limitset-certificate/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub k: usize,
    pub epsilon: EpsilonRule,
    pub growth: GrowthParams,
    /// slit length s of the surface
    #[serde(with = "crate::serde_num::f64s")]
    pub slit: f64,
    pub slit_auto: bool,
    #[serde(with = "crate::serde_num::f64s")]
    pub epsilon0: f64,
    #[serde(with = "crate::serde_num::f64s")]
    pub r0: f64,
    /// largest digit (in bits) that is written out explicitly
    pub digit_cap: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            k: 25,
            epsilon: EpsilonRule::default(),
            growth: GrowthParams::default(),
            slit: 0.0,
            slit_auto: true,
            epsilon0: 1.0,
            r0: 0.25,
            digit_cap: 4096,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub format: String,
    pub config: SynthConfig,
    pub error_budget: ErrorBudget,
    /// L rounded up onto the scale grid, plus drift headroom
    #[serde(with = "crate::serde_num::dyadic")]
    pub l_hat: BigRational,
    pub curve: CurveSpec,
    pub plan: DensePlan,
    pub thetas: Vec<ThetaBlock>,
    pub growth: Vec<GrowthBound>,
    /// n_i(k) for k = 1..=K
    #[serde(with = "lengths")]
    pub lengths: Vec<[BigUint; 3]>,
    pub audit: Vec<AuditEntry>,
}

impl Certificate {
    pub fn k(&self) -> usize {
        self.plan.k()
    }

    /// Shape checks, done before anything indexes into the vectors.
    pub fn validate_shape(&self) -> Result<()> {
        let k = self.config.k;
        let bad = |what: &str| Err(Error::InvalidSchedule(format!("certificate: {what}")));
        if self.format != FORMAT {
            return bad(&format!("unknown format {:?}", self.format));
        }
        if k == 0 {
            return bad("K must be positive");
        }
        if self.plan.params.len() != k || self.plan.points.len() != k || self.plan.epsilons.len() != k + 1 {
            return bad("plan length does not match K");
        }
        if self.thetas.len() != k || self.lengths.len() != k || self.growth.len() != k {
            return bad("block data length does not match K");
        }
        for (j, b) in self.thetas.iter().enumerate() {
            if b.j != j + 1 {
                return bad("blocks out of order");
            }
            if b.scales.iter().any(|s| s <= &BigRational::from_integer(1.into())) {
                return bad("scales must exceed 1");
            }
        }
        if self.lengths.iter().flatten().any(|n| n == &BigUint::default()) {
            return bad("run lengths must be positive");
        }
        Ok(())
    }

    /// Coarse clocks for the three tori.
    pub fn clocks(&self) -> Result<[BlockClock; 3]> {
        let mk = |i: usize| {
            BlockClock::new(
                self.thetas.iter().map(|b| b.scales[i].clone()).collect(),
                self.lengths.iter().map(|n| n[i].clone()).collect(),
            )
        };
        Ok([mk(0)?, mk(1)?, mk(2)?])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Certificate = serde_json::from_str(text).map_err(|e| Error::Parse {
            context: format!("certificate (line {}, column {})", e.line(), e.column()),
            message: e.to_string(),
        })?;
        c.validate_shape()?;
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }
}

mod lengths {
    use num_bigint::BigUint;
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[[BigUint; 3]], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for n in v {
            let t: Vec<String> = n.iter().map(|x| x.to_str_radix(10)).collect();
            seq.serialize_element(&t)?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<[BigUint; 3]>, D::Error> {
        let rows = Vec::<[String; 3]>::deserialize(d)?;
        rows.iter()
            .map(|r| {
                let mut out: [BigUint; 3] = Default::default();
                for i in 0..3 {
                    out[i] = r[i].parse().map_err(serde::de::Error::custom)?;
                }
                Ok(out)
            })
            .collect()
    }
}
