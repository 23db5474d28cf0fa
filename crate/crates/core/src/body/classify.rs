//! Ellipsoid / rotational / other classification of a body.

use rand::Rng;
use serde::Serialize;

use super::chord::sample_boundary;
use super::mvee::{mvee, FittedEllipsoid};
use super::scan::{
    direction_scan, orthogonal_reflection_scan, Continuum, DirectionScanConfig, DirectionScanReport,
    OrthoScanConfig, OrthoScanReport,
};
use super::{BodyOracle, DEFAULT_THRESHOLD};
use crate::linalg::{Matrix, Vector};
use crate::rng::{derive_seed, indexed_rng, point_in_ball};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Ellipsoid,
    Rotational,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassifyConfig {
    pub threshold: f64,
    pub thick_min: f64,
    pub direction: DirectionScanConfig,
    pub ortho: OrthoScanConfig,
    /// Boundary samples per dimension for the enclosing-ellipsoid check.
    pub boundary_per_dim: usize,
    pub mvee_eps: f64,
    /// Axis levels (or axis points) tested for centered discs.
    pub disk_levels: usize,
    pub disk_rays: usize,
    pub seed: u64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            threshold: DEFAULT_THRESHOLD,
            thick_min: 0.9,
            direction: DirectionScanConfig {
                samples: 200,
                ..Default::default()
            },
            ortho: OrthoScanConfig::default(),
            boundary_per_dim: 1000,
            mvee_eps: 1e-6,
            disk_levels: 16,
            disk_rays: 64,
            seed: 0,
        }
    }
}

impl ClassifyConfig {
    /// Copies `threshold` and `seed` into the nested scan configurations.
    pub fn resolved(mut self) -> Self {
        self.direction.reflection.threshold = self.threshold;
        self.direction.seed = self.seed;
        self.direction.reflection.seed = self.seed;
        self.ortho.reflection.threshold = self.threshold;
        self.ortho.angle_threshold = self.threshold;
        self.ortho.seed = self.seed;
        self.ortho.reflection.seed = self.seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RotationalEvidence {
    /// A point of the axis flat.
    pub axis_point: Vec<f64>,
    /// Orthonormal basis of the axis flat's direction space.
    pub axis_basis: Vec<Vec<f64>>,
    /// Largest radius spread of the tested orthogonal sections, over `R`.
    pub disk_error: f64,
    pub levels_tested: usize,
    /// Tested sections that missed the body.
    pub levels_empty: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evidence {
    pub direction_scan: DirectionScanReport,
    /// Largest `|level − 1|` of boundary samples against the fitted
    /// enclosing ellipsoid; present when the direction scan was thick.
    pub mvee_surface_error: Option<f64>,
    pub mvee: Option<FittedEllipsoid>,
    pub ortho_scan: Option<OrthoScanReport>,
    pub rotational: Option<RotationalEvidence>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifyReport {
    pub verdict: Verdict,
    /// Ratio between the threshold and the deciding statistic, oriented so
    /// that larger is more convincing.
    pub margin: f64,
    pub threshold: f64,
    pub label: String,
    pub evidence: Evidence,
}

fn axis_flat(c: &Continuum, interior: &Vector) -> (Vector, Vec<Vector>) {
    let n = interior.len();
    let nu = [&c.mirrors[0].normal, &c.mirrors[1].normal];
    // Closest point to the interior point on {ν₁·x = o₁, ν₂·x = o₂}.
    let nmat = Matrix::from_columns(&[nu[0].clone(), nu[1].clone()]);
    let g = nmat.transpose() * &nmat;
    let rhs = Vector::from_vec(vec![
        c.mirrors[0].offset - nu[0].dot(interior),
        c.mirrors[1].offset - nu[1].dot(interior),
    ]);
    let coef = g.lu().solve(&rhs).unwrap_or_else(|| Vector::zeros(2));
    let point = interior + &nmat * coef;
    // Orthonormal complement of span(ν₁, ν₂).
    let p1 = nu[0].clone();
    let p2 = {
        let w = nu[1] - &p1 * p1.dot(nu[1]);
        let nrm = w.norm();
        w / nrm
    };
    let mut basis: Vec<Vector> = Vec::new();
    for i in 0..n {
        let mut e = Vector::zeros(n);
        e[i] = 1.0;
        let mut w = &e - &p1 * p1.dot(&e) - &p2 * p2.dot(&e);
        for b in &basis {
            w -= b * b.dot(&w);
        }
        let nrm = w.norm();
        if nrm > 1e-6 {
            basis.push(w / nrm);
        }
        if basis.len() == n - 2 {
            break;
        }
    }
    (point, vec![p1, p2].into_iter().chain(basis).collect())
}

fn rotational_evidence(k: &BodyOracle, c: &Continuum, config: &ClassifyConfig) -> RotationalEvidence {
    let r = k.bounding_radius();
    let tol = config.direction.reflection.tol;
    let (x0, frame) = axis_flat(c, k.interior_point());
    let (p1, p2) = (&frame[0], &frame[1]);
    let axis: Vec<Vector> = frame[2..].to_vec();
    let seed = derive_seed(config.seed, 0xA715);

    let levels: Vec<Vector> = if axis.len() == 1 {
        (0..config.disk_levels)
            .map(|j| &x0 + &axis[0] * (r * (-1.0 + 2.0 * (j as f64 + 0.5) / config.disk_levels as f64)))
            .collect()
    } else {
        (0..config.disk_levels)
            .map(|j| {
                let mut rng = indexed_rng(seed, j as u64);
                let y = point_in_ball(&mut rng, &Vector::zeros(axis.len()), r);
                axis.iter().zip(y.iter()).fold(x0.clone(), |acc, (a, t)| acc + a * *t)
            })
            .collect()
    };

    let mut disk_error: f64 = 0.0;
    let mut empty = 0;
    for y in &levels {
        let dir = |t: f64| p1 * t.cos() + p2 * t.sin();
        if k.contains(y) {
            let radii: Vec<f64> = (0..config.disk_rays)
                .map(|j| {
                    let t = std::f64::consts::TAU * j as f64 / config.disk_rays as f64;
                    let u = dir(t);
                    let hi = 1.001 * 2.0 * r;
                    let (mut a, mut b) = (0.0, hi);
                    while b - a > tol * r {
                        let m = 0.5 * (a + b);
                        if k.contains(&(y + &u * m)) {
                            a = m;
                        } else {
                            b = m;
                        }
                    }
                    0.5 * (a + b)
                })
                .collect();
            let lo = radii.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = radii.iter().copied().fold(0.0, f64::max);
            disk_error = disk_error.max((hi - lo) / r);
        } else {
            empty += 1;
            // The orthogonal section through an axis point outside K must be
            // empty; any contained probe is a violation of its own size.
            let mut rng = indexed_rng(seed ^ 0x55, empty as u64);
            for _ in 0..128 {
                let t = rng.random::<f64>() * std::f64::consts::TAU;
                let rho = 2.0 * r * rng.random::<f64>().sqrt();
                if k.contains(&(y + dir(t) * rho)) {
                    disk_error = disk_error.max(rho / r);
                }
            }
        }
    }
    RotationalEvidence {
        axis_point: x0.iter().copied().collect(),
        axis_basis: axis.iter().map(|a| a.iter().copied().collect()).collect(),
        disk_error,
        levels_tested: levels.len(),
        levels_empty: empty,
    }
}

/// Decides between an ellipsoid, an `𝕊¹`-rotational body and neither.
///
/// Ellipsoid: the direction scan is thick (`thick_estimate >= thick_min`) and
/// boundary samples sit on the enclosing ellipsoid within `threshold`.
/// Rotational: the orthogonal scan finds a continuum of reflection
/// directions, whose mirrors meet in an axis flat, and sections orthogonal to
/// that flat are discs centered on it within `threshold`.
pub fn classify_body(k: &BodyOracle, config: &ClassifyConfig) -> ClassifyReport {
    let config = config.resolved();
    let t = config.threshold;
    let dscan = direction_scan(k, &config.direction);
    let mut evidence = Evidence {
        direction_scan: dscan,
        mvee_surface_error: None,
        mvee: None,
        ortho_scan: None,
        rotational: None,
    };

    if evidence.direction_scan.thick_estimate >= config.thick_min {
        let pts = sample_boundary(
            k,
            config.boundary_per_dim * k.dim(),
            config.seed,
            config.direction.reflection.tol,
        );
        if let Ok(fit) = mvee(&pts, config.mvee_eps) {
            let err = pts
                .iter()
                .map(|p| (fit.ellipsoid.level(p) - 1.0).abs())
                .fold(0.0, f64::max);
            evidence.mvee_surface_error = Some(err);
            evidence.mvee = Some(fit);
            let worst = evidence.direction_scan.worst_accepted_score.unwrap_or(0.0);
            let stat = err.max(worst);
            if stat <= t {
                return ClassifyReport {
                    verdict: Verdict::Ellipsoid,
                    margin: t / stat.max(f64::MIN_POSITIVE),
                    threshold: t,
                    label: k.label().to_string(),
                    evidence,
                };
            }
        }
    }

    let oscan = orthogonal_reflection_scan(k, &config.ortho);
    if let Some(c) = &oscan.continuum {
        let rot = rotational_evidence(k, c, &config);
        let err = rot.disk_error;
        evidence.rotational = Some(rot);
        if err <= t {
            evidence.ortho_scan = Some(oscan);
            return ClassifyReport {
                verdict: Verdict::Rotational,
                margin: t / err.max(f64::MIN_POSITIVE),
                threshold: t,
                label: k.label().to_string(),
                evidence,
            };
        }
    }

    // "Other": both tests failed; the margin is the weaker of the two
    // failures, each as a ratio above its acceptance level.
    let ds = &evidence.direction_scan;
    let not_ellipsoid = if ds.thick_estimate < config.thick_min {
        config.thick_min / ds.thick_estimate.max(f64::MIN_POSITIVE)
    } else {
        evidence.mvee_surface_error.map_or(f64::INFINITY, |e| e / t)
    };
    let not_rotational = match &evidence.rotational {
        Some(r) => r.disk_error / t,
        None if oscan.lines.is_empty() => oscan.best_rejected_score().map_or(f64::INFINITY, |s| s / t),
        None => f64::INFINITY,
    };
    evidence.ortho_scan = Some(oscan);
    ClassifyReport {
        verdict: Verdict::Other,
        margin: not_ellipsoid.min(not_rotational),
        threshold: t,
        label: k.label().to_string(),
        evidence,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::catalog;
    use crate::quadric::Ellipsoid;

    fn check(k: &BodyOracle, want: Verdict) {
        let r = classify_body(k, &ClassifyConfig::default());
        eprintln!("{} -> {:?} margin {}", k.label(), r.verdict, r.margin);
        assert_eq!(r.verdict, want);
        assert!(r.margin >= 10.0);
    }

    #[test]
    fn ellipsoid_is_ellipsoid() {
        let e = Ellipsoid::diagonal(&[1.0, 0.25, 1.0 / 9.0])
            .unwrap()
            .translated(&Vector::from_vec(vec![0.5, -0.2, 1.0]))
            .unwrap();
        check(&BodyOracle::from_ellipsoid(&e), Verdict::Ellipsoid);
    }

    #[test]
    fn revolution_is_rotational() {
        check(
            &catalog::superellipse_revolution(4.0, 1.0, 1.0, 400).build().unwrap(),
            Verdict::Rotational,
        );
        check(&catalog::spindle_revolution(400).build().unwrap(), Verdict::Rotational);
    }

    #[test]
    fn perturbed_is_other() {
        check(
            &catalog::perturbed_ellipsoid(&[1.0, 1.5, 2.0]).build().unwrap(),
            Verdict::Other,
        );
    }
}
