//! Point sampling from bounded densities, l^p distances and radius schedules.
//!
//! All sampling goes through [`ChaCha8Rng`] seeded with [`SeedableRng::seed_from_u64`], so a
//! cloud is a pure function of `(n, density, d, seed)` for a given crate version.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::{Error, Result};

/// The `p` of an l^p norm, `1 <= p <= inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Norm {
    P(f64),
    Inf,
}

impl Norm {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::Usage(format!("norm parameter p must be >= 1, got {p}")));
        }
        Ok(if p.is_infinite() { Norm::Inf } else { Norm::P(p) })
    }

    /// Distance between two coordinate slices of equal length. No dimension check.
    #[inline]
    pub fn distance(self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Norm::Inf => x.iter().zip(y).fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs())),
            Norm::P(p) if p == 1.0 => x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum(),
            Norm::P(p) if p == 2.0 => x
                .iter()
                .zip(y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            Norm::P(p) => x
                .iter()
                .zip(y)
                .map(|(a, b)| (a - b).abs().powf(p))
                .sum::<f64>()
                .powf(1.0 / p),
        }
    }

    /// Lebesgue volume of the unit ball `{x : ||x||_p <= 1}` in `d` dimensions.
    pub fn unit_ball_volume(self, d: usize) -> f64 {
        match self {
            Norm::Inf => 2f64.powi(d as i32),
            Norm::P(p) => {
                let log_vol = d as f64 * (2f64.ln() + ln_gamma(1.0 + 1.0 / p))
                    - ln_gamma(1.0 + d as f64 / p);
                log_vol.exp()
            }
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Norm::Inf => write!(f, "inf"),
            Norm::P(p) => write!(f, "{p}"),
        }
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "Inf" => Ok(Norm::Inf),
            other => {
                let p: f64 = other
                    .parse()
                    .map_err(|_| Error::Usage(format!("cannot parse norm parameter '{s}'")))?;
                Norm::new(p)
            }
        }
    }
}

/// `||x - y||_p`, checking that both points live in the same dimension.
pub fn lp_distance(x: &[f64], y: &[f64], norm: Norm) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Usage(format!(
            "dimension mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    Ok(norm.distance(x, y))
}

/// Bounded sampling densities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Density {
    /// `1` on `[0,1]^d`.
    UniformCube,
    /// Standard normal product density.
    Gaussian,
    /// Piecewise constant on `[0,1]^d`: `lo` where `x_0 < 1/2`, `hi` elsewhere; `lo + hi = 2`.
    StepCube { lo: f64, hi: f64 },
}

impl Density {
    pub fn step_cube(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || hi < 0.0 {
            return Err(Error::Usage(format!(
                "step-cube levels must be finite and nonnegative, got {lo},{hi}"
            )));
        }
        if ((lo + hi) / 2.0 - 1.0).abs() > 1e-12 {
            return Err(Error::Usage(format!(
                "step-cube levels must integrate to one (lo + hi = 2), got {lo},{hi}"
            )));
        }
        Ok(Density::StepCube { lo, hi })
    }

    /// Essential supremum of the density in dimension `d`.
    pub fn f_max(&self, d: usize) -> f64 {
        match *self {
            Density::UniformCube => 1.0,
            Density::Gaussian => (2.0 * std::f64::consts::PI).powf(-(d as f64) / 2.0),
            Density::StepCube { lo, hi } => lo.max(hi),
        }
    }

    /// Essential infimum over the support.
    pub fn f_0(&self, _d: usize) -> f64 {
        match *self {
            Density::UniformCube => 1.0,
            Density::Gaussian => 0.0,
            // A zero level is outside the support, so the infimum is the other level.
            Density::StepCube { lo, hi } if lo == 0.0 || hi == 0.0 => lo.max(hi),
            Density::StepCube { lo, hi } => lo.min(hi),
        }
    }

    fn sample_into<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
        match *self {
            Density::UniformCube => out.iter_mut().for_each(|x| *x = rng.random::<f64>()),
            Density::Gaussian => out.iter_mut().for_each(|x| *x = rng.sample(StandardNormal)),
            Density::StepCube { lo, .. } => {
                // Mass of the low half is lo * 1/2.
                let low = rng.random::<f64>() < lo / 2.0;
                let u: f64 = rng.random();
                out[0] = if low { 0.5 * u } else { 0.5 + 0.5 * u };
                out[1..].iter_mut().for_each(|x| *x = rng.random::<f64>());
            }
        }
    }
}

impl fmt::Display for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Density::UniformCube => write!(f, "uniform-cube"),
            Density::Gaussian => write!(f, "gaussian"),
            Density::StepCube { lo, hi } => write!(f, "step-cube:{lo},{hi}"),
        }
    }
}

impl FromStr for Density {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "uniform-cube" | "uniform" => Ok(Density::UniformCube),
            "gaussian" | "normal" => Ok(Density::Gaussian),
            other => {
                let levels = other
                    .strip_prefix("step-cube:")
                    .ok_or_else(|| Error::Usage(format!("unsupported density '{s}'")))?;
                let (lo, hi) = levels
                    .split_once(',')
                    .ok_or_else(|| Error::Usage(format!("step-cube needs 'lo,hi', got '{levels}'")))?;
                let parse = |v: &str| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Usage(format!("bad step-cube level '{v}'")))
                };
                Density::step_cube(parse(lo)?, parse(hi)?)
            }
        }
    }
}

/// `n` points in `d` dimensions, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    d: usize,
    coords: Vec<f64>,
}

impl Points {
    pub fn new(d: usize, coords: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::Usage("dimension must be at least 1".into()));
        }
        if !coords.len().is_multiple_of(d) {
            return Err(Error::Usage(format!(
                "{} coordinates do not split into {d}-dimensional points",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Usage("point coordinates must be finite".into()));
        }
        Ok(Points { d, coords })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(1, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Usage("points have inconsistent dimensions".into()));
        }
        Points::new(d, rows.concat())
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.d)
    }
}

/// A realised vertex set together with the connection radius and norm.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Points,
    pub radius: f64,
    pub norm: Norm,
}

impl PointCloud {
    pub fn new(points: Points, radius: f64, norm: Norm) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Usage(format!("radius must be positive and finite, got {radius}")));
        }
        Ok(PointCloud { points, radius, norm })
    }

    /// The same points at a different connection radius.
    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        PointCloud::new(self.points.clone(), radius, self.norm)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }
}

/// Draws `n` i.i.d. points from `density` in dimension `d`.
pub fn sample_points(n: usize, density: Density, d: usize, seed: u64) -> Result<Points> {
    if n == 0 {
        return Err(Error::Usage("need at least one point".into()));
    }
    if d == 0 {
        return Err(Error::Usage("dimension must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = vec![0.0; n * d];
    for row in coords.chunks_exact_mut(d) {
        density.sample_into(&mut rng, row);
    }
    Points::new(d, coords)
}

/// Canonical radius schedules, parametrised by the target value of `n r^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RadiusSchedule {
    /// `n r^d = (ln n)^b`, `0 < b < 1`.
    Sub { b: f64 },
    /// `n r^d = t ln n`, `t > 0`.
    Conn { t: f64 },
    /// `n r^d = (ln n)^(1 + a)`, `a > 0`.
    Super { a: f64 },
    /// `n r^d = n^(-eps)`, `eps > 0`.
    Sparse { eps: f64 },
}

impl RadiusSchedule {
    pub fn new_checked(self) -> Result<Self> {
        let ok = match self {
            RadiusSchedule::Sub { b } => b > 0.0 && b < 1.0,
            RadiusSchedule::Conn { t } => t > 0.0 && t.is_finite(),
            RadiusSchedule::Super { a } => a > 0.0 && a.is_finite(),
            RadiusSchedule::Sparse { eps } => eps > 0.0 && eps.is_finite(),
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::Usage(format!("schedule parameter out of range: {self}")))
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RadiusSchedule::Sub { .. } => "sub",
            RadiusSchedule::Conn { .. } => "conn",
            RadiusSchedule::Super { .. } => "super",
            RadiusSchedule::Sparse { .. } => "sparse",
        }
    }

    pub fn param(&self) -> f64 {
        match *self {
            RadiusSchedule::Sub { b } => b,
            RadiusSchedule::Conn { t } => t,
            RadiusSchedule::Super { a } => a,
            RadiusSchedule::Sparse { eps } => eps,
        }
    }

    /// Target value of `n r^d`.
    pub fn target(&self, n: usize) -> f64 {
        let n = n as f64;
        let ln_n = n.ln();
        match *self {
            RadiusSchedule::Sub { b } => ln_n.powf(b),
            RadiusSchedule::Conn { t } => t * ln_n,
            RadiusSchedule::Super { a } => ln_n.powf(1.0 + a),
            RadiusSchedule::Sparse { eps } => n.powf(-eps),
        }
    }
}

impl fmt::Display for RadiusSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.name(), self.param())
    }
}

impl FromStr for RadiusSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, value) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::Usage(format!("regime must look like 'conn:2', got '{s}'")))?;
        let v: f64 = value
            .parse()
            .map_err(|_| Error::Usage(format!("bad regime parameter '{value}'")))?;
        let schedule = match kind {
            "sub" => RadiusSchedule::Sub { b: v },
            "conn" => RadiusSchedule::Conn { t: v },
            "super" => RadiusSchedule::Super { a: v },
            "sparse" | "trivial-sparse" => RadiusSchedule::Sparse { eps: v },
            _ => return Err(Error::Usage(format!("unknown regime '{kind}'"))),
        };
        schedule.new_checked()
    }
}

/// The radius `r` with `n r^d` equal to the schedule's target.
pub fn radius_for(schedule: RadiusSchedule, n: usize, d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::Usage("dimension must be at least 1".into()));
    }
    if n < 3 {
        return Err(Error::Domain(format!("radius schedules need n >= 3, got n = {n}")));
    }
    let target = schedule.target(n);
    if let RadiusSchedule::Sub { .. } = schedule {
        if (n as f64).ln() / target <= 1.0 {
            return Err(Error::Domain(format!(
                "n = {n} too small for {schedule}: ln n / (n r^d) must exceed 1"
            )));
        }
    }
    Ok((target / n as f64).powf(1.0 / d as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn distance_examples() {
        let (a, b) = ([0.0, 0.0], [3.0, 4.0]);
        assert_eq!(lp_distance(&a, &b, Norm::P(2.0)).unwrap(), 5.0);
        assert_eq!(lp_distance(&a, &b, Norm::Inf).unwrap(), 4.0);
        assert_eq!(lp_distance(&a, &b, Norm::P(1.0)).unwrap(), 7.0);
        assert!(matches!(lp_distance(&a, &[1.0], Norm::Inf), Err(Error::Usage(_))));
    }

    #[test]
    fn norm_parsing() {
        assert_eq!("inf".parse::<Norm>().unwrap(), Norm::Inf);
        assert_eq!("1.5".parse::<Norm>().unwrap(), Norm::P(1.5));
        assert!("0.5".parse::<Norm>().is_err());
        assert!("x".parse::<Norm>().is_err());
    }

    #[test]
    fn unit_ball_volumes() {
        assert!((Norm::P(2.0).unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-12);
        assert!((Norm::P(1.0).unit_ball_volume(2) - 2.0).abs() < 1e-12);
        assert!((Norm::P(2.0).unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(Norm::Inf.unit_ball_volume(3), 8.0);
    }

    #[test]
    fn density_constants() {
        assert_eq!(Density::UniformCube.f_max(3), 1.0);
        assert_eq!(Density::UniformCube.f_0(3), 1.0);
        let g = Density::Gaussian;
        assert!((g.f_max(2) - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-15);
        assert_eq!(g.f_0(2), 0.0);
        let s: Density = "step-cube:0.5,1.5".parse().unwrap();
        assert_eq!((s.f_max(2), s.f_0(2)), (1.5, 0.5));
        assert!("step-cube:0.5,0.5".parse::<Density>().is_err());
        assert!("cauchy".parse::<Density>().is_err());
    }

    #[test]
    fn uniform_sample_mean() {
        let pts = sample_points(1000, Density::UniformCube, 2, 17).unwrap();
        assert!(pts.iter().flatten().all(|&c| (0.0..=1.0).contains(&c)));
        for axis in 0..2 {
            let mean = pts.iter().map(|p| p[axis]).sum::<f64>() / 1000.0;
            assert!((mean - 0.5).abs() < 0.05, "axis {axis} mean {mean}");
        }
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        for density in [Density::UniformCube, Density::Gaussian, Density::step_cube(0.5, 1.5).unwrap()] {
            let a = sample_points(5, density, 2, 99).unwrap();
            let b = sample_points(5, density, 2, 99).unwrap();
            assert_eq!(a, b);
            assert_ne!(a, sample_points(5, density, 2, 100).unwrap());
        }
    }

    #[test]
    fn step_cube_low_half_mass() {
        let s = Density::step_cube(0.5, 1.5).unwrap();
        let pts = sample_points(10_000, s, 2, 5).unwrap();
        let low = pts.iter().filter(|p| p[0] < 0.5).count() as f64 / 10_000.0;
        assert!((low - 0.25).abs() < 0.02, "low-half fraction {low}");
    }

    fn ks_statistic(mut xs: Vec<f64>) -> f64 {
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| f64::max(x - i as f64 / n, (i + 1) as f64 / n - x))
            .fold(0.0, f64::max)
    }

    #[test]
    fn uniform_marginals_pass_ks() {
        // 1% critical value of the one-sample KS statistic: 1.628 / sqrt(n).
        let crit = 1.628 / (10_000f64).sqrt();
        let mut passes = 0;
        for seed in 0..5 {
            let pts = sample_points(10_000, Density::UniformCube, 2, seed).unwrap();
            let ok = (0..2).all(|axis| ks_statistic(pts.iter().map(|p| p[axis]).collect()) < crit);
            passes += ok as usize;
        }
        assert!(passes >= 3, "only {passes}/5 seeds passed");
    }

    #[test]
    fn radius_examples() {
        let n = 1000;
        let r = radius_for(RadiusSchedule::Conn { t: 2.0 }, n, 3).unwrap();
        let nrd = n as f64 * r.powi(3);
        assert!((nrd - 2.0 * (n as f64).ln()).abs() < 1e-12);

        let r = radius_for(RadiusSchedule::Sub { b: 0.5 }, 55, 2).unwrap();
        assert!((55.0 * r * r - 2.0018).abs() < 1e-3);

        let r = radius_for(RadiusSchedule::Sparse { eps: 0.5 }, 10_000, 2).unwrap();
        assert!((10_000.0 * r * r - 0.01).abs() < 1e-15);

        assert!(matches!(radius_for(RadiusSchedule::Sub { b: 0.5 }, 2, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn sub_schedule_stays_below_ln_n() {
        for n in [3usize, 10, 1000, 1_000_000] {
            let r = radius_for(RadiusSchedule::Sub { b: 0.5 }, n, 2).unwrap();
            assert!((n as f64).ln() / (n as f64 * r * r) > 1.0);
        }
    }

    #[test]
    fn radius_decreases_with_n() {
        let schedules = [
            RadiusSchedule::Sub { b: 0.5 },
            RadiusSchedule::Conn { t: 2.0 },
            RadiusSchedule::Super { a: 0.5 },
            RadiusSchedule::Sparse { eps: 0.5 },
        ];
        for s in schedules {
            for d in 1..=3 {
                let radii: Vec<f64> = (3..2000).step_by(7).map(|n| radius_for(s, n, d).unwrap()).collect();
                assert!(radii.windows(2).all(|w| w[1] < w[0]), "{s} d={d}");
            }
        }
    }

    #[test]
    fn schedule_parsing() {
        assert_eq!("conn:2".parse::<RadiusSchedule>().unwrap(), RadiusSchedule::Conn { t: 2.0 });
        assert_eq!("sparse:0.5".parse::<RadiusSchedule>().unwrap(), RadiusSchedule::Sparse { eps: 0.5 });
        assert!("sub:1.5".parse::<RadiusSchedule>().is_err());
        assert!("conn".parse::<RadiusSchedule>().is_err());
    }

    fn norm_strategy() -> impl Strategy<Value = Norm> {
        prop_oneof![Just(Norm::P(1.0)), Just(Norm::P(2.0)), Just(Norm::Inf), (1.0f64..6.0).prop_map(Norm::P)]
    }

    proptest! {
        #[test]
        fn lp_distance_is_a_metric(
            norm in norm_strategy(),
            pts in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 3), 3),
        ) {
            let (x, y, z) = (&pts[0], &pts[1], &pts[2]);
            let dxy = norm.distance(x, y);
            prop_assert!(dxy >= 0.0);
            prop_assert_eq!(dxy, norm.distance(y, x));
            prop_assert_eq!(norm.distance(x, x), 0.0);
            prop_assert!(dxy <= norm.distance(x, z) + norm.distance(z, y) + 1e-9);
            if x != y {
                prop_assert!(dxy > 0.0);
            }
        }

        #[test]
        fn closed_forms_agree(x in prop::collection::vec(-5.0f64..5.0, 4), y in prop::collection::vec(-5.0f64..5.0, 4)) {
            let euclid = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let cheb = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            prop_assert!((Norm::P(2.0).distance(&x, &y) - euclid).abs() <= 1e-15 * euclid.max(1.0));
            prop_assert_eq!(Norm::Inf.distance(&x, &y), cheb);
        }
    }
}
