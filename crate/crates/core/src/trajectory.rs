//! Coarse trajectory along the ray: curve graph distance proxies, the
//! barycentric map phi and the horoball checks at window checkpoints.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::coarse::BlockClock;
use crate::constructor::curve::{l1, linf, Bary};
use crate::constructor::Certificate;
use crate::error::{Error, Result};
use crate::numeric::{self, int, rational_to_f64, uint_to_rational};

/// Default number of grid points per window.
pub const WINDOW_POINTS: usize = 10;

/// The three coarse clocks of a certificate.
#[derive(Clone, Debug)]
pub struct Ray {
    pub clocks: [BlockClock; 3],
    pub k: usize,
}

/// phi(t) together with the distances it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct PhiPoint {
    pub d: [BigUint; 3],
    pub phi: Bary,
}

impl Ray {
    pub fn from_certificate(cert: &Certificate) -> Result<Self> {
        Ok(Ray {
            clocks: cert.clocks()?,
            k: cert.k(),
        })
    }

    /// Index proxy for d_C(alpha_i(0), alpha_i(t)): the n with
    /// T_{n-1} < t <= T_n on torus i.
    pub fn curve_graph_distance(&self, i: usize, t: &BigRational) -> Result<BigUint> {
        self.clocks
            .get(i)
            .ok_or_else(|| Error::OutOfRange(format!("torus {i} not in 0..3")))?
            .index_at(t)
    }

    /// Window k (2 <= k <= K): [T^0_{N_0(k-1)-1}, T^0_{N_0(k)-1}).
    pub fn window(&self, k: usize) -> Result<(BigRational, BigRational)> {
        if k < 2 || k > self.k {
            return Err(Error::OutOfRange(format!("window {k} not in 2..={}", self.k)));
        }
        let c = &self.clocks[0];
        let a = c.time(&(&c.starts[k - 1] - 1u32))?;
        let b = c.time(&(&c.starts[k] - 1u32))?;
        Ok((a, b))
    }

    /// Grid points a + (b - a) g / m, g = 0..m.
    pub fn window_grid(&self, k: usize, m: usize) -> Result<Vec<BigRational>> {
        if m == 0 {
            return Err(Error::Domain("grid density must be at least 1".into()));
        }
        let (a, b) = self.window(k)?;
        let w = &b - &a;
        Ok((0..m)
            .map(|g| &a + &w * BigRational::new((g as i64).into(), (m as i64).into()))
            .collect())
    }

    /// The checkpoint opening window k.
    pub fn checkpoint(&self, k: usize) -> Result<BigRational> {
        Ok(self.window(k)?.0)
    }

    pub fn phi(&self, t: &BigRational) -> Result<PhiPoint> {
        let d: [BigUint; 3] = [
            self.curve_graph_distance(0, t)?,
            self.curve_graph_distance(1, t)?,
            self.curve_graph_distance(2, t)?,
        ];
        let total: BigUint = d.iter().sum();
        if total.is_zero() {
            return Err(Error::Domain("phi undefined before the first balance time".into()));
        }
        let tr = uint_to_rational(&total);
        let phi = std::array::from_fn(|i| rational_to_f64(&(uint_to_rational(&d[i]) / &tr)));
        Ok(PhiPoint { d, phi })
    }
}

/// Upper bound for the distance from the ray to the horoball at time t
/// when the shortest tracked curve sits at distance d:
/// C_h (ln t + ln(1 + 2d)) + D_h.
pub fn horoball_distance_upper(t: &BigRational, d: &BigUint, c_h: f64, d_h: f64) -> f64 {
    let ln_t = if t > &int(1) { numeric::ln_rational(t) } else { 0.0 };
    let df = d.to_f64().unwrap_or(f64::INFINITY);
    c_h * (ln_t + (1.0 + 2.0 * df).ln()) + d_h
}

/// Horoball upper bound divided by the smallest distance proxy.
pub fn horoball_ratio(ray: &Ray, t: &BigRational, c_h: f64, d_h: f64) -> Result<f64> {
    let p = ray.phi(t)?;
    let dmin = p.d.iter().min().unwrap().clone();
    if dmin.is_zero() {
        return Ok(f64::INFINITY);
    }
    Ok(horoball_distance_upper(t, &dmin, c_h, d_h) / dmin.to_f64().unwrap_or(f64::INFINITY))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub k: usize,
    #[serde(with = "crate::serde_num::f64s")]
    pub t: f64,
    #[serde(with = "crate::serde_num::triple_f64s")]
    pub phi: [f64; 3],
    #[serde(with = "crate::serde_num::f64s")]
    pub horoball_ratio: f64,
    #[serde(with = "crate::serde_num::f64s")]
    pub epsilon: f64,
    pub pass: bool,
}

/// Horoball check at every checkpoint k = 2..=K: ratio < epsilon_k.
pub fn checkpoints(cert: &Certificate) -> Result<Vec<Checkpoint>> {
    let ray = Ray::from_certificate(cert)?;
    let g = cert.config.growth;
    (2..=cert.k())
        .map(|k| {
            let t = ray.checkpoint(k)?;
            let p = ray.phi(&t)?;
            let r = horoball_ratio(&ray, &t, g.c_h, g.d_h)?;
            let eps = cert.plan.eps(k);
            Ok(Checkpoint {
                k,
                t: rational_to_f64(&t),
                phi: p.phi,
                horoball_ratio: r,
                epsilon: eps,
                pass: r < eps,
            })
        })
        .collect()
}

/// One row of the trajectory table used for plotting.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub k: usize,
    pub g: usize,
    pub t: f64,
    pub d: [BigUint; 3],
    pub phi: Bary,
    pub target: Bary,
    /// max-coordinate deviation of phi from gamma(t_k)
    pub deviation: f64,
    /// l1 deviation
    pub deviation_l1: f64,
}

pub fn trajectory_table(cert: &Certificate, grid_density: usize) -> Result<Vec<TrajectoryRow>> {
    let ray = Ray::from_certificate(cert)?;
    let mut rows = Vec::new();
    for k in 2..=cert.k() {
        let target = *cert.plan.point(k);
        for (g, t) in ray.window_grid(k, grid_density)?.iter().enumerate() {
            let p = ray.phi(t)?;
            rows.push(TrajectoryRow {
                k,
                g,
                t: rational_to_f64(t),
                deviation: linf(&p.phi, &target),
                deviation_l1: l1(&p.phi, &target),
                d: p.d,
                phi: p.phi,
                target,
            });
        }
    }
    Ok(rows)
}

/// Planar coordinates of a barycentric point: x = b1 + b2/2, y = (sqrt3/2) b2.
pub fn to_plane(b: &Bary) -> (f64, f64) {
    (b[1] + 0.5 * b[2], 0.5 * 3f64.sqrt() * b[2])
}

pub const TABLE_HEADER: &str = "k,g,t,d0,d1,d2,phi0,phi1,phi2,target0,target1,target2,deviation,x,y";

/// CSV rendering of the trajectory table.
pub fn table_csv(rows: &[TrajectoryRow]) -> String {
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for r in rows {
        let (x, y) = to_plane(&r.phi);
        out.push_str(&format!(
            "{},{},{:e},{},{},{},{},{},{},{},{},{},{:e},{},{}\n",
            r.k,
            r.g,
            r.t,
            r.d[0],
            r.d[1],
            r.d[2],
            r.phi[0],
            r.phi[1],
            r.phi[2],
            r.target[0],
            r.target[1],
            r.target[2],
            r.deviation,
            x,
            y
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructor::{synthesize, SynthConfig, TargetCurve};

    fn cert(k: usize) -> Certificate {
        let c = TargetCurve::constant([0.2, 0.3, 0.5]).unwrap();
        synthesize(&c, &SynthConfig { k, ..SynthConfig::default() }).unwrap()
    }

    #[test]
    fn windows_tile_the_clock() {
        let c = cert(5);
        let ray = Ray::from_certificate(&c).unwrap();
        for k in 2..5 {
            assert_eq!(ray.window(k).unwrap().1, ray.window(k + 1).unwrap().0);
        }
        assert!(ray.window(1).is_err());
        assert!(ray.window(6).is_err());
        // right end of the last window is the clock horizon
        assert_eq!(ray.window(5).unwrap().1, ray.clocks[0].horizon());
    }

    #[test]
    fn phi_is_a_barycentric_point() {
        let c = cert(4);
        for row in trajectory_table(&c, WINDOW_POINTS).unwrap() {
            assert!((row.phi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(row.phi.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn horizon_is_enforced() {
        let c = cert(3);
        let ray = Ray::from_certificate(&c).unwrap();
        let beyond = ray.clocks[0].horizon() + ray.clocks[1].horizon() + ray.clocks[2].horizon();
        assert!(matches!(ray.phi(&beyond), Err(Error::HorizonExceeded(_))));
    }

    #[test]
    fn plane_map() {
        assert_eq!(to_plane(&[1.0, 0.0, 0.0]), (0.0, 0.0));
        assert_eq!(to_plane(&[0.0, 1.0, 0.0]), (1.0, 0.0));
        let (x, y) = to_plane(&[0.0, 0.0, 1.0]);
        assert!((x - 0.5).abs() < 1e-15 && (y - 0.75f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn horoball_bound_shape() {
        let t = int(100);
        let d = BigUint::from(10u32);
        let h = horoball_distance_upper(&t, &d, 1.0, 0.0);
        assert!((h - (100f64.ln() + 21f64.ln())).abs() < 1e-12);
    }
}
