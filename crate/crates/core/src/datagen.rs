//! Seeded synthetic plane-clustering benchmarks.
//!
//! Every family is a fixed list of bounded flat patches (segments in 2D,
//! rectangles in 3D). A sample is a uniform point on its patch plus noise
//! along the patch normal. Each cluster draws from its own ChaCha stream
//! (`stream = cluster index + 1`, outliers use stream 0), so changing one
//! cluster's count leaves the others' points untouched.
//!
//! Noise draws beyond [`NOISE_BOUND`] are redrawn. Geometry, all inside the
//! unit box:
//!
//! | family | clusters | layout |
//! |--------|----------|--------|
//! | `S1`   | 3 x 50   | three segments with distinct directions, well apart; each line runs through another segment |
//! | `S2`   | 3 x 50   | two collinear segments separated by a gap along their common line, plus a steep segment above the first |
//! | `S3`   | 4 x 50   | the `S1` segments plus a central segment whose line crosses another cluster |
//! | `Toy`  | 3 x 50   | one long segment plus two shorter ones with similar orientations |
//! | `Scene3d` | 667 + 667 + 666 | floor and two walls of a room corner, D = 3 |

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::canonical_sign;
use crate::matrix::{dot, Matrix};
use crate::types::{Dataset, PlaneModel, OUTLIER};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    S1,
    S2,
    S3,
    Toy,
    Scene3d,
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "s1" => Ok(Family::S1),
            "s2" => Ok(Family::S2),
            "s3" => Ok(Family::S3),
            "toy" => Ok(Family::Toy),
            "scene3d" => Ok(Family::Scene3d),
            other => Err(Error::invalid(format!("unknown family {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Noise {
    Clean,
    Gaussian,
    Laplace,
    StudentT1,
    UniformOutliers,
}

impl Noise {
    pub const ALL: [Noise; 5] = [
        Noise::Clean,
        Noise::Gaussian,
        Noise::Laplace,
        Noise::StudentT1,
        Noise::UniformOutliers,
    ];

    /// Suffix used in dataset names (`S1-N`, `S2-UN`, ...).
    pub fn suffix(self) -> &'static str {
        match self {
            Noise::Clean => "",
            Noise::Gaussian => "-N",
            Noise::Laplace => "-L",
            Noise::StudentT1 => "-T",
            Noise::UniformOutliers => "-UN",
        }
    }
}

impl std::str::FromStr for Noise {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "clean" | "none" => Ok(Noise::Clean),
            "gaussian" | "normal" | "n" => Ok(Noise::Gaussian),
            "laplace" | "l" => Ok(Noise::Laplace),
            "student_t1" | "t" | "t1" => Ok(Noise::StudentT1),
            "uniform_outliers" | "un" | "outliers" => Ok(Noise::UniformOutliers),
            other => Err(Error::invalid(format!("unknown noise kind {other:?}"))),
        }
    }
}

/// Default perpendicular noise scale (standard deviation for Gaussian, scale
/// parameter for Laplace and Student-t).
pub const DEFAULT_NOISE_SCALE: f64 = 0.01;
pub const DEFAULT_OUTLIER_FRACTION: f64 = 0.40;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub family: Family,
    pub noise: Noise,
    pub n_per_cluster: Vec<usize>,
    pub noise_scale: f64,
    pub outlier_fraction: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Family defaults: 50 points per cluster (2000 in total for `Scene3d`), noise
    /// scale 0.01, 40% outliers when `noise` is `UniformOutliers`.
    pub fn new(family: Family, noise: Noise, seed: u64) -> Self {
        let n_per_cluster = match family {
            Family::Scene3d => vec![667, 667, 666],
            _ => vec![50; patches(family).len()],
        };
        SyntheticSpec {
            family,
            noise,
            n_per_cluster,
            noise_scale: if noise == Noise::Clean {
                0.0
            } else {
                DEFAULT_NOISE_SCALE
            },
            outlier_fraction: if noise == Noise::UniformOutliers {
                DEFAULT_OUTLIER_FRACTION
            } else {
                0.0
            },
            seed,
        }
    }

    pub fn name(&self) -> String {
        format!("{:?}{}", self.family, self.noise.suffix())
    }

    pub fn k(&self) -> usize {
        patches(self.family).len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        if self.n_per_cluster.len() != k {
            return Err(Error::invalid(format!(
                "{:?} has {k} clusters, got {} counts",
                self.family,
                self.n_per_cluster.len()
            )));
        }
        if self.n_per_cluster.iter().any(|&c| c < 2) {
            return Err(Error::invalid("every cluster needs at least 2 points"));
        }
        if !(0.0..=NOISE_BOUND).contains(&self.noise_scale) {
            return Err(Error::invalid(format!(
                "noise scale must lie in [0, {NOISE_BOUND}]"
            )));
        }
        if !(0.0..1.0).contains(&self.outlier_fraction) {
            return Err(Error::invalid("outlier fraction must lie in [0, 1)"));
        }
        if self.noise != Noise::UniformOutliers && self.outlier_fraction != 0.0 {
            return Err(Error::invalid(
                "outlier fraction only applies to uniform_outliers",
            ));
        }
        if self.noise == Noise::Clean && self.noise_scale != 0.0 {
            return Err(Error::invalid("clean data takes no noise scale"));
        }
        Ok(())
    }
}

/// Bounded flat piece: center, in-plane unit axes with half extents, unit
/// normal.
#[derive(Clone, Debug)]
struct Patch {
    center: Vec<f64>,
    axes: Vec<Vec<f64>>,
    half: Vec<f64>,
    normal: Vec<f64>,
}

fn segment(cx: f64, cy: f64, angle_deg: f64, half: f64) -> Patch {
    let a = angle_deg * PI / 180.0;
    let dir = vec![a.cos(), a.sin()];
    let mut normal = vec![-a.sin(), a.cos()];
    canonical_sign(&mut normal);
    Patch {
        center: vec![cx, cy],
        axes: vec![dir],
        half: vec![half],
        normal,
    }
}

fn rectangle(center: [f64; 3], u: [f64; 3], v: [f64; 3], hu: f64, hv: f64) -> Patch {
    let mut normal = vec![
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    canonical_sign(&mut normal);
    Patch {
        center: center.to_vec(),
        axes: vec![u.to_vec(), v.to_vec()],
        half: vec![hu, hv],
        normal,
    }
}

fn patches(family: Family) -> Vec<Patch> {
    match family {
        Family::S1 => vec![
            segment(0.20, 0.25, 0.0, 0.15),
            segment(0.80, 0.30, 80.0, 0.20),
            segment(0.55, 0.75, 55.0, 0.15),
        ],
        Family::S2 => vec![
            segment(0.35, 0.62, 80.0, 0.25),
            // collinear pair on the line through (0.3, 0.2) at 3 degrees
            segment(0.45, 0.20 + 0.15 * (3.0 * PI / 180.0).tan(), 3.0, 0.15),
            segment(0.85, 0.20 + 0.55 * (3.0 * PI / 180.0).tan(), 3.0, 0.15),
        ],
        Family::S3 => {
            let mut p = patches(Family::S1);
            p.push(segment(0.45, 0.45, -40.0, 0.20));
            p
        }
        Family::Toy => vec![
            segment(0.50, 0.80, -15.0, 0.30),
            segment(0.30, 0.30, 35.0, 0.18),
            segment(0.72, 0.58, 40.0, 0.16),
        ],
        Family::Scene3d => vec![
            // floor z = 0
            rectangle(
                [0.55, 0.55, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                0.45,
                0.45,
            ),
            // wall x = 0
            rectangle(
                [0.0, 0.55, 0.35],
                [0.0, 1.0, 0.0],
                [0.0, 0.0, 1.0],
                0.45,
                0.3,
            ),
            // wall y = 0
            rectangle(
                [0.55, 0.0, 0.35],
                [1.0, 0.0, 0.0],
                [0.0, 0.0, 1.0],
                0.45,
                0.3,
            ),
        ],
    }
}

fn laplace(rng: &mut ChaCha8Rng, scale: f64) -> f64 {
    // inverse CDF on u in (-1/2, 1/2)
    let u: f64 = rng.gen::<f64>() - 0.5;
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln()
}

/// Noise draws with a larger magnitude are redrawn, which keeps every point
/// within a quarter box width of its patch.
pub const NOISE_BOUND: f64 = 0.25;

fn perpendicular_noise(rng: &mut ChaCha8Rng, noise: Noise, scale: f64) -> f64 {
    if scale == 0.0 {
        return 0.0;
    }
    loop {
        let e = raw_noise(rng, noise, scale);
        if e.abs() <= NOISE_BOUND {
            return e;
        }
    }
}

fn raw_noise(rng: &mut ChaCha8Rng, noise: Noise, scale: f64) -> f64 {
    match noise {
        Noise::Clean | Noise::UniformOutliers => 0.0,
        Noise::Gaussian => Normal::new(0.0, scale).expect("scale checked").sample(rng),
        Noise::Laplace => laplace(rng, scale),
        Noise::StudentT1 => {
            scale
                * StudentT::new(1.0)
                    .expect("one degree of freedom")
                    .sample(rng)
        }
    }
}

/// Draws the dataset. Ground-truth labels are the patch index; outliers get
/// label `-1` and are appended after all cluster points.
pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let ps = patches(spec.family);
    let d = ps[0].center.len();
    let total: usize = spec.n_per_cluster.iter().sum();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for (c, (patch, &count)) in ps.iter().zip(&spec.n_per_cluster).enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(c as u64 + 1);
        for _ in 0..count {
            let mut x = patch.center.clone();
            for (axis, &h) in patch.axes.iter().zip(&patch.half) {
                let t = rng.gen_range(-h..=h);
                x.iter_mut().zip(axis).for_each(|(xj, aj)| *xj += t * aj);
            }
            let e = perpendicular_noise(&mut rng, spec.noise, spec.noise_scale);
            x.iter_mut()
                .zip(&patch.normal)
                .for_each(|(xj, nj)| *xj += e * nj);
            rows.push(x);
            labels.push(c as i64);
        }
    }

    if spec.noise == Noise::UniformOutliers {
        let extra = (spec.outlier_fraction * total as f64).round() as usize;
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for r in &rows {
            for j in 0..d {
                lo[j] = lo[j].min(r[j]);
                hi[j] = hi[j].max(r[j]);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(0);
        for _ in 0..extra {
            rows.push((0..d).map(|j| rng.gen_range(lo[j]..=hi[j])).collect());
            labels.push(OUTLIER);
        }
    }

    let points = Matrix::from_rows(&rows)?;
    let names = (0..d).map(|j| format!("x{j}")).collect();
    Dataset::new(points, Some(labels))?.with_feature_names(names)
}

/// The patch planes used by [`generate`]: normals and patch centers.
pub fn true_planes(spec: &SyntheticSpec) -> Result<PlaneModel> {
    spec.validate()?;
    let ps = patches(spec.family);
    let normals: Vec<Vec<f64>> = ps.iter().map(|p| p.normal.clone()).collect();
    let centers: Vec<Vec<f64>> = ps.iter().map(|p| p.center.clone()).collect();
    PlaneModel::new(Matrix::from_rows(&normals)?, Matrix::from_rows(&centers)?)
}

/// Signed distance of `x` to plane `k` of `model`.
pub fn signed_distance(model: &PlaneModel, k: usize, x: &[f64]) -> f64 {
    dot(model.normal(k), x) + model.offset(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let spec = SyntheticSpec::new(Family::S1, Noise::Clean, 7);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
    }

    #[test]
    fn clean_points_on_their_lines() {
        for family in [
            Family::S1,
            Family::S2,
            Family::S3,
            Family::Toy,
            Family::Scene3d,
        ] {
            let spec = SyntheticSpec::new(family, Noise::Clean, 1);
            let data = generate(&spec).unwrap();
            let planes = true_planes(&spec).unwrap();
            let labels = data.labels().unwrap();
            for i in 0..data.len() {
                let r = signed_distance(&planes, labels[i] as usize, data.point(i));
                assert!(r.abs() < 1e-12, "{family:?} point {i}: {r}");
            }
        }
    }

    #[test]
    fn default_sizes() {
        let n = |f| {
            generate(&SyntheticSpec::new(f, Noise::Clean, 0))
                .unwrap()
                .len()
        };
        assert_eq!(n(Family::S1), 150);
        assert_eq!(n(Family::S2), 150);
        assert_eq!(n(Family::S3), 200);
        assert_eq!(n(Family::Scene3d), 2000);
    }

    #[test]
    fn outlier_count_exact() {
        let spec = SyntheticSpec::new(Family::S2, Noise::UniformOutliers, 3);
        let data = generate(&spec).unwrap();
        let outliers = data
            .labels()
            .unwrap()
            .iter()
            .filter(|&&l| l == OUTLIER)
            .count();
        assert_eq!(outliers, 60);
        assert_eq!(data.len(), 210);
        let mut odd = spec.clone();
        odd.n_per_cluster = vec![3, 3, 1 + 2];
        odd.outlier_fraction = 0.25;
        let data = generate(&odd).unwrap();
        assert_eq!(
            data.labels()
                .unwrap()
                .iter()
                .filter(|&&l| l == OUTLIER)
                .count(),
            2
        );
    }

    #[test]
    fn per_cluster_streams_independent() {
        let a = SyntheticSpec::new(Family::S1, Noise::Gaussian, 9);
        let mut b = a.clone();
        b.n_per_cluster[0] = 80;
        let da = generate(&a).unwrap();
        let db = generate(&b).unwrap();
        // cluster 1 starts after cluster 0 in each dataset
        for i in 0..50 {
            assert_eq!(da.point(50 + i), db.point(80 + i));
        }
    }

    #[test]
    fn gaussian_residual_matches_scale() {
        let sigma = 0.02;
        let mut spec = SyntheticSpec::new(Family::S1, Noise::Gaussian, 5);
        spec.noise_scale = sigma;
        spec.n_per_cluster = vec![10_000; 3];
        let data = generate(&spec).unwrap();
        let planes = true_planes(&spec).unwrap();
        let labels = data.labels().unwrap();
        let msr: f64 = (0..data.len())
            .map(|i| signed_distance(&planes, labels[i] as usize, data.point(i)).powi(2))
            .sum::<f64>()
            / data.len() as f64;
        assert!((msr / (sigma * sigma) - 1.0).abs() < 0.1, "{msr}");
    }

    #[test]
    fn student_t_tails_heavier_than_gaussian() {
        let q99 = |noise| {
            let mut spec = SyntheticSpec::new(Family::S1, noise, 2);
            spec.n_per_cluster = vec![33_334; 3];
            let data = generate(&spec).unwrap();
            let planes = true_planes(&spec).unwrap();
            let labels = data.labels().unwrap();
            let mut r: Vec<f64> = (0..data.len())
                .map(|i| signed_distance(&planes, labels[i] as usize, data.point(i)).abs())
                .collect();
            r.sort_by(f64::total_cmp);
            r[(0.99 * r.len() as f64) as usize]
        };
        assert!(q99(Noise::StudentT1) > q99(Noise::Gaussian));
    }

    #[test]
    fn horizontal_segment_planes() {
        let p = segment(0.5, 0.25, 0.0, 0.2);
        assert!((p.normal[0]).abs() < 1e-16 && (p.normal[1] - 1.0).abs() < 1e-16);
        assert_eq!(p.center, vec![0.5, 0.25]);
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut spec = SyntheticSpec::new(Family::S1, Noise::Gaussian, 0);
        spec.outlier_fraction = 0.2;
        assert!(generate(&spec).is_err());
        let mut spec = SyntheticSpec::new(Family::S1, Noise::Clean, 0);
        spec.n_per_cluster = vec![50, 50];
        assert!(generate(&spec).is_err());
        spec.n_per_cluster = vec![50, 1, 50];
        assert!(generate(&spec).is_err());
        let mut spec = SyntheticSpec::new(Family::S2, Noise::Clean, 0);
        spec.noise_scale = 0.1;
        assert!(generate(&spec).is_err());
    }
}
