//! Target curves in the 2-simplex, parameterized on u in [0, 1].

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub type Bary = [f64; 3];

/// Curve description as it appears in curve files and certificates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum CurveSpec {
    Polyline {
        #[serde(with = "bary_list")]
        points: Vec<Bary>,
    },
    Parametric {
        name: String,
        #[serde(with = "param_map")]
        params: Vec<(String, Vec<f64>)>,
    },
}

/// Sampled, validated curve.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetCurve {
    pub spec: CurveSpec,
    shape: Shape,
}

#[derive(Clone, Debug, PartialEq)]
enum Shape {
    Polyline { points: Vec<Bary>, cum: Vec<f64> },
    Circle { center: Bary, radius: f64 },
}

pub fn l1(a: &Bary, b: &Bary) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).abs()).sum()
}

pub fn linf(a: &Bary, b: &Bary) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max)
}

fn check_point(p: &Bary, what: &str) -> Result<Bary> {
    if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidCurve(format!("{what}: negative or non-finite entry {p:?}")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidCurve(format!("{what}: entries sum to {s}, not 1")));
    }
    Ok([p[0] / s, p[1] / s, p[2] / s])
}

// plane basis for circles: e1 = (1,-1,0)/sqrt2, e2 = (1,1,-2)/sqrt6
const E1: Bary = [std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2, 0.0];
fn e2() -> Bary {
    let r = 1.0 / 6f64.sqrt();
    [r, r, -2.0 * r]
}

impl TargetCurve {
    pub fn from_spec(spec: CurveSpec) -> Result<Self> {
        let shape = match &spec {
            CurveSpec::Polyline { points } => {
                if points.is_empty() {
                    return Err(Error::InvalidCurve("polyline needs at least one point".into()));
                }
                let pts = points
                    .iter()
                    .enumerate()
                    .map(|(k, p)| check_point(p, &format!("point {k}")))
                    .collect::<Result<Vec<_>>>()?;
                Shape::polyline(pts)
            }
            CurveSpec::Parametric { name, params } => {
                let get = |key: &str, len: usize| -> Result<Vec<f64>> {
                    let v = params
                        .iter()
                        .find(|(k, _)| k == key)
                        .map(|(_, v)| v.clone())
                        .ok_or_else(|| Error::InvalidCurve(format!("{name}: missing parameter {key:?}")))?;
                    if v.len() != len {
                        return Err(Error::InvalidCurve(format!(
                            "{name}: parameter {key:?} needs {len} entries"
                        )));
                    }
                    Ok(v)
                };
                let bary = |key: &str| -> Result<Bary> {
                    let v = get(key, 3)?;
                    check_point(&[v[0], v[1], v[2]], key)
                };
                match name.as_str() {
                    "constant" => Shape::polyline(vec![bary("point")?]),
                    "segment" => Shape::polyline(vec![bary("from")?, bary("to")?]),
                    "circle-in-simplex" => {
                        let center = bary("center")?;
                        let radius = get("radius", 1)?[0];
                        if !(radius > 0.0) {
                            return Err(Error::InvalidCurve("circle radius must be positive".into()));
                        }
                        // each coordinate swings by radius * sqrt(2/3)
                        let reach = radius * (2.0f64 / 3.0).sqrt();
                        if center.iter().any(|&c| c - reach < -1e-12) {
                            return Err(Error::InvalidCurve("circle leaves the simplex".into()));
                        }
                        Shape::Circle { center, radius }
                    }
                    other => {
                        return Err(Error::InvalidCurve(format!("unknown parametric family {other:?}")))
                    }
                }
            }
        };
        Ok(TargetCurve { spec, shape })
    }

    pub fn polyline(points: Vec<Bary>) -> Result<Self> {
        Self::from_spec(CurveSpec::Polyline { points })
    }

    pub fn constant(p: Bary) -> Result<Self> {
        Self::polyline(vec![p])
    }

    pub fn segment(a: Bary, b: Bary) -> Result<Self> {
        Self::polyline(vec![a, b])
    }

    pub fn circle(center: Bary, radius: f64) -> Result<Self> {
        Self::from_spec(CurveSpec::Parametric {
            name: "circle-in-simplex".into(),
            params: vec![
                ("center".into(), center.to_vec()),
                ("radius".into(), vec![radius]),
            ],
        })
    }

    /// Point at parameter u in [0,1].
    pub fn sample(&self, u: f64) -> Bary {
        let u = u.clamp(0.0, 1.0);
        match &self.shape {
            Shape::Polyline { points, cum } => {
                let total = *cum.last().unwrap();
                if points.len() == 1 || total == 0.0 {
                    return points[0];
                }
                let target = u * total;
                let k = cum.partition_point(|&c| c <= target).clamp(1, points.len() - 1);
                let seg = cum[k] - cum[k - 1];
                let w = if seg > 0.0 {
                    ((target - cum[k - 1]) / seg).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let (a, b) = (points[k - 1], points[k]);
                let p = [
                    a[0] + w * (b[0] - a[0]),
                    a[1] + w * (b[1] - a[1]),
                    a[2] + w * (b[2] - a[2]),
                ];
                let s: f64 = p.iter().sum();
                [p[0].max(0.0) / s, p[1].max(0.0) / s, p[2].max(0.0) / s]
            }
            Shape::Circle { center, radius } => {
                let a = 2.0 * std::f64::consts::PI * u;
                let (c, s) = (a.cos(), a.sin());
                let e2 = e2();
                let p: Vec<f64> = (0..3)
                    .map(|i| (center[i] + radius * (c * E1[i] + s * e2[i])).max(0.0))
                    .collect();
                let sum: f64 = p.iter().sum();
                [p[0] / sum, p[1] / sum, p[2] / sum]
            }
        }
    }

    /// Bound on |gamma_i(u) - gamma_i(v)| / |u - v| over all coordinates.
    pub fn lipschitz(&self) -> f64 {
        // coordinates sum to one, so the largest coordinate change is at
        // most half the l1 change
        0.5 * self.l1_length()
    }

    /// Total l1 arclength.
    pub fn l1_length(&self) -> f64 {
        match &self.shape {
            Shape::Polyline { cum, .. } => *cum.last().unwrap(),
            Shape::Circle { radius, .. } => {
                2.0 * std::f64::consts::PI * radius * 3.0 * (2.0f64 / 3.0).sqrt()
            }
        }
    }

    /// Samples with consecutive l1 spacing at most `mesh`.
    pub fn image_samples(&self, mesh: f64) -> Vec<Bary> {
        let len = self.l1_length();
        let n = if len == 0.0 {
            1
        } else {
            (len / mesh).ceil().max(1.0) as usize + 1
        };
        if n == 1 {
            return vec![self.sample(0.0)];
        }
        (0..n).map(|k| self.sample(k as f64 / (n - 1) as f64)).collect()
    }
}

impl Shape {
    fn polyline(points: Vec<Bary>) -> Shape {
        let mut cum = vec![0.0];
        for w in points.windows(2) {
            cum.push(cum.last().unwrap() + l1(&w[0], &w[1]));
        }
        Shape::Polyline { points, cum }
    }
}

/// Parse a curve file. Numbers may be JSON numbers or decimal strings.
pub fn parse_curve_json(text: &str) -> Result<TargetCurve> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        context: format!("curve spec (line {}, column {})", e.line(), e.column()),
        message: e.to_string(),
    })?;
    let spec: CurveSpec = serde_json::from_value(v).map_err(|e| Error::Parse {
        context: "curve spec".into(),
        message: e.to_string(),
    })?;
    TargetCurve::from_spec(spec)
}

fn num_from_value(v: &Value) -> std::result::Result<f64, String> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| format!("bad number {n}")),
        Value::String(s) => s.trim().parse::<f64>().map_err(|e| format!("{s:?}: {e}")),
        other => Err(format!("expected a number, got {other}")),
    }
}

mod bary_list {
    use super::{num_from_value, Bary};
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use serde_json::Value;

    pub fn serialize<S: Serializer>(v: &[Bary], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> = v
            .iter()
            .map(|p| p.iter().map(|x| crate::numeric::f64_str(*x)).collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Bary>, D::Error> {
        let rows = Vec::<Vec<Value>>::deserialize(d)?;
        rows.iter()
            .enumerate()
            .map(|(k, r)| {
                if r.len() != 3 {
                    return Err(D::Error::custom(format!("point {k} needs 3 entries")));
                }
                let mut p = [0.0; 3];
                for (i, x) in r.iter().enumerate() {
                    p[i] = num_from_value(x)
                        .map_err(|m| D::Error::custom(format!("point {k}, entry {i}: {m}")))?;
                }
                Ok(p)
            })
            .collect()
    }
}

mod param_map {
    use super::num_from_value;
    use serde::de::Error as _;
    use serde::ser::SerializeMap;
    use serde::{Deserialize, Deserializer, Serializer};
    use serde_json::Value;

    pub fn serialize<S: Serializer>(v: &[(String, Vec<f64>)], s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(v.len()))?;
        for (k, xs) in v {
            let txt: Vec<String> = xs.iter().map(|x| crate::numeric::f64_str(*x)).collect();
            if txt.len() == 1 {
                m.serialize_entry(k, &txt[0])?;
            } else {
                m.serialize_entry(k, &txt)?;
            }
        }
        m.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(String, Vec<f64>)>, D::Error> {
        // serde_json's default map keeps keys sorted, so the order is stable
        let m = serde_json::Map::<String, Value>::deserialize(d)?;
        m.iter()
            .map(|(k, v)| {
                let xs = match v {
                    Value::Array(a) => a
                        .iter()
                        .map(num_from_value)
                        .collect::<Result<Vec<_>, _>>(),
                    other => num_from_value(other).map(|x| vec![x]),
                }
                .map_err(|e| D::Error::custom(format!("parameter {k:?}: {e}")))?;
                Ok((k.clone(), xs))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_polyline_and_parametric() {
        let c = parse_curve_json(r#"{"type":"polyline","points":[[1,0,0],["0.5","0.5","0"]]}"#).unwrap();
        assert_eq!(c.sample(0.0), [1.0, 0.0, 0.0]);
        assert_eq!(c.sample(1.0), [0.5, 0.5, 0.0]);
        let c = parse_curve_json(
            r#"{"type":"parametric","name":"circle-in-simplex","params":{"radius":0.1,"center":[0.4,0.3,0.3]}}"#,
        )
        .unwrap();
        let p = c.sample(0.3);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // distance from the center in the plane equals the radius
        let d: f64 = (0..3).map(|i| (p[i] - [0.4, 0.3, 0.3][i]).powi(2)).sum::<f64>().sqrt();
        assert!((d - 0.1).abs() < 1e-12);
    }

    #[test]
    fn parse_errors_carry_context() {
        let e = parse_curve_json("{\"type\":\"polyline\",\n\"points\": [[1,0]]}").unwrap_err();
        assert!(e.to_string().contains("3 entries"), "{e}");
        let e = parse_curve_json("{\"type\": ").unwrap_err();
        assert!(e.to_string().contains("line"), "{e}");
        assert!(parse_curve_json(r#"{"type":"polyline","points":[[0.5,0.6,0]]}"#).is_err());
        assert!(parse_curve_json(r#"{"type":"polyline","points":[[1.5,-0.5,0]]}"#).is_err());
        assert!(parse_curve_json(
            r#"{"type":"parametric","name":"circle-in-simplex","params":{"radius":0.5,"center":[0.4,0.3,0.3]}}"#
        )
        .is_err());
        assert!(parse_curve_json(r#"{"type":"parametric","name":"spiral","params":{}}"#).is_err());
    }

    #[test]
    fn arclength_parameterization() {
        let c = TargetCurve::polyline(vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(c.l1_length(), 4.0);
        let m = c.sample(0.5);
        assert!(l1(&m, &[0.0, 1.0, 0.0]) < 1e-12);
        assert!(l1(&c.sample(0.25), &[0.5, 0.5, 0.0]) < 1e-12);
    }

    #[test]
    fn spec_round_trips_through_json() {
        let c = TargetCurve::circle([0.4, 0.3, 0.3], 0.1).unwrap();
        let txt = serde_json::to_string(&c.spec).unwrap();
        let back = parse_curve_json(&txt).unwrap();
        assert_eq!(back.spec, c.spec);
        let p = TargetCurve::segment([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]).unwrap();
        let txt = serde_json::to_string(&p.spec).unwrap();
        assert_eq!(parse_curve_json(&txt).unwrap(), p);
    }

    #[test]
    fn samples_respect_mesh() {
        let c = TargetCurve::polyline(vec![[0.6, 0.2, 0.2], [0.2, 0.6, 0.2], [0.2, 0.2, 0.6], [0.6, 0.2, 0.2]]).unwrap();
        let s = c.image_samples(0.05);
        for w in s.windows(2) {
            assert!(l1(&w[0], &w[1]) <= 0.05 + 1e-12);
        }
        assert_eq!(TargetCurve::constant([0.2, 0.3, 0.5]).unwrap().image_samples(0.05).len(), 1);
    }

    proptest! {
        #[test]
        fn prop_samples_in_simplex_and_lipschitz(u in 0.0f64..1.0, v in 0.0f64..1.0, r in 0.01f64..0.2) {
            let curves = [
                TargetCurve::polyline(vec![[0.6, 0.2, 0.2], [0.2, 0.6, 0.2], [0.2, 0.2, 0.6], [0.6, 0.2, 0.2]]).unwrap(),
                TargetCurve::segment([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]).unwrap(),
                TargetCurve::circle([1.0 / 3.0; 3], r).unwrap(),
            ];
            for c in &curves {
                let (a, b) = (c.sample(u), c.sample(v));
                prop_assert!(a.iter().all(|&x| x >= 0.0));
                prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                prop_assert!(linf(&a, &b) <= c.lipschitz() * (u - v).abs() + 1e-12);
            }
        }
    }
}
