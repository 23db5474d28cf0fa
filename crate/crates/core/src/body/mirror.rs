//! Mirror fitting from chord midpoints and the induced affine reflection.

use serde::Serialize;

use super::chord::{boundary_point, chord, sample_boundary};
use super::{BodyOracle, DEFAULT_THRESHOLD, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::linalg::{hyperplane_basis, serialize_vector, sym_eigen, unit_canonical, Matrix, SymMatrix, Vector};
use crate::quadric::ProjLine;

/// The affine hyperplane `{x : normal·x = offset}` with a unit normal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffineHyperplane {
    #[serde(serialize_with = "serialize_vector")]
    pub normal: Vector,
    pub offset: f64,
}

impl AffineHyperplane {
    pub fn new(normal: &Vector, point: &Vector) -> Result<Self> {
        let normal = unit_canonical(normal)?;
        let offset = normal.dot(point);
        Ok(AffineHyperplane { normal, offset })
    }

    pub fn signed_distance(&self, x: &Vector) -> f64 {
        self.normal.dot(x) - self.offset
    }

    /// Point of the hyperplane closest to `x`.
    pub fn project(&self, x: &Vector) -> Vector {
        x - &self.normal * self.signed_distance(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MirrorFit {
    pub direction: ProjLine,
    pub hyperplane: AffineHyperplane,
    /// RMS distance of the midpoints to the fitted hyperplane, over `R`.
    pub residual_rms: f64,
    pub chords_used: usize,
}

impl MirrorFit {
    /// The affine reflection with this direction and mirror.
    pub fn reflect(&self, x: &Vector) -> Vector {
        let d = self.direction.dir();
        let s = self.hyperplane.signed_distance(x) / self.hyperplane.normal.dot(d);
        x - d * (2.0 * s)
    }

    /// Angle between the direction and the mirror normal; zero for an
    /// orthogonal reflection.
    pub fn orthogonality_angle(&self) -> f64 {
        crate::linalg::line_angle(self.direction.dir(), &self.hyperplane.normal)
    }
}

/// Midpoint hyperplane of the chords of `K` parallel to `l`.
///
/// Lines run through a `(2·grid+1)^(n−1)` lattice on `l⊥` spanning the
/// bounding box; empty chords are skipped.
pub fn fit_mirror(k: &BodyOracle, l: &ProjLine, grid: usize, tol: f64) -> Result<MirrorFit> {
    let n = k.dim();
    if l.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: l.dim(),
        });
    }
    let grid = grid.max(1);
    let d = l.dir();
    let basis = hyperplane_basis(d)?;
    let r = k.bounding_radius();
    let c = k.interior_point();
    let side = 2 * grid + 1;
    let total = side.pow((n - 1) as u32);

    let mut mids = Vec::new();
    let mut idx = vec![0usize; n - 1];
    for _ in 0..total {
        let mut base = c.clone();
        for (b, &i) in basis.iter().zip(&idx) {
            base += b * (r * (i as f64 - grid as f64) / grid as f64);
        }
        if let Some(ch) = chord(k, &base, l, tol) {
            mids.push(ch.midpoint());
        }
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < side {
                break;
            }
            *slot = 0;
        }
    }
    if mids.len() < n + 1 {
        return Err(Error::TooFewChords {
            found: mids.len(),
            needed: n + 1,
        });
    }

    let m = mids.len() as f64;
    let mean = mids.iter().fold(Vector::zeros(n), |acc, p| acc + p) / m;
    let mut cov = Matrix::zeros(n, n);
    for p in &mids {
        let q = p - &mean;
        cov += &q * q.transpose();
    }
    let eig = sym_eigen(&SymMatrix::new(cov / m)?);
    let hyperplane = AffineHyperplane::new(&eig.vectors[0], &mean)?;
    if hyperplane.normal.dot(d).abs() < 1e-6 {
        return Err(Error::NonTransverseMirror);
    }
    let ss: f64 = mids
        .iter()
        .map(|p| hyperplane.signed_distance(p).powi(2))
        .sum();
    Ok(MirrorFit {
        direction: l.clone(),
        hyperplane,
        residual_rms: (ss / m).sqrt() / r,
        chords_used: mids.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReflectionConfig {
    pub grid: usize,
    pub tol: f64,
    pub threshold: f64,
    pub boundary_points: usize,
    pub seed: u64,
}

impl Default for ReflectionConfig {
    fn default() -> Self {
        ReflectionConfig {
            grid: 4,
            tol: DEFAULT_TOL,
            threshold: DEFAULT_THRESHOLD,
            boundary_points: 500,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReflectionTest {
    pub accepted: bool,
    pub fit: MirrorFit,
    /// Largest radial distance (over `R`) from a reflected boundary sample
    /// back to the boundary.
    pub invariance_error: f64,
}

impl ReflectionTest {
    /// `max(residual, invariance)`: the quantity compared to the threshold.
    pub fn score(&self) -> f64 {
        self.fit.residual_rms.max(self.invariance_error)
    }
}

/// Reflection tester with the boundary sample drawn once per body.
#[derive(Debug, Clone)]
pub struct ReflectionTester<'a> {
    body: &'a BodyOracle,
    config: ReflectionConfig,
    boundary: Vec<Vector>,
}

impl<'a> ReflectionTester<'a> {
    pub fn new(body: &'a BodyOracle, config: ReflectionConfig) -> Self {
        let boundary = sample_boundary(body, config.boundary_points, config.seed, config.tol);
        ReflectionTester {
            body,
            config,
            boundary,
        }
    }

    pub fn config(&self) -> &ReflectionConfig {
        &self.config
    }

    pub fn body(&self) -> &BodyOracle {
        self.body
    }

    pub fn fit(&self, l: &ProjLine) -> Result<MirrorFit> {
        fit_mirror(self.body, l, self.config.grid, self.config.tol)
    }

    /// Largest radial mismatch of `r(∂K)` against `∂K`, over `R`.
    pub fn invariance_error(&self, fit: &MirrorFit) -> f64 {
        let c = self.body.interior_point();
        let r = self.body.bounding_radius();
        let mut worst: f64 = 0.0;
        for p in &self.boundary {
            let q = fit.reflect(p);
            let v = &q - c;
            let rho = v.norm();
            let err = match boundary_point(self.body, &v, self.config.tol) {
                Some(b) => (rho - (b - c).norm()).abs(),
                None => rho,
            };
            worst = worst.max(err / r);
        }
        worst
    }

    pub fn test(&self, l: &ProjLine) -> Result<ReflectionTest> {
        let fit = self.fit(l)?;
        let invariance_error = self.invariance_error(&fit);
        let t = self.config.threshold;
        Ok(ReflectionTest {
            accepted: fit.residual_rms <= t && invariance_error <= t,
            fit,
            invariance_error,
        })
    }
}

/// Tests whether `l` is the direction of a reflection of `K`.
pub fn has_reflection(k: &BodyOracle, l: &ProjLine, config: &ReflectionConfig) -> Result<ReflectionTest> {
    ReflectionTester::new(k, *config).test(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadric::{mirror, Ellipsoid};
    use crate::rng::{indexed_rng, unit_vector};

    fn triaxial() -> Ellipsoid {
        Ellipsoid::diagonal(&[1.0, 0.25, 1.0 / 9.0]).unwrap()
    }

    #[test]
    fn ellipsoid_mirror_matches_analytic() {
        let t = Vector::from_vec(vec![0.3, -1.0, 2.0]);
        let e = triaxial().translated(&t).unwrap();
        let k = BodyOracle::from_ellipsoid(&e);
        for i in 0..10 {
            let l = ProjLine::new(&unit_vector(&mut indexed_rng(5, i), 3)).unwrap();
            let fit = fit_mirror(&k, &l, 4, 1e-10).unwrap();
            let m = mirror(&e, &l).unwrap();
            assert!(fit.residual_rms < 1e-6);
            assert!(crate::linalg::line_angle(&fit.hyperplane.normal, m.normal()) < 1e-6);
            assert!(fit.hyperplane.signed_distance(&t).abs() < 1e-6);
        }
    }

    #[test]
    fn unit_ball_mirror_is_orthogonal() {
        let k = BodyOracle::new(Vector::zeros(3), 1.0, "ball", |x| x.norm() <= 1.0).unwrap();
        let l = ProjLine::from_slice(&[1.0, 2.0, -0.5]).unwrap();
        let fit = fit_mirror(&k, &l, 4, 1e-10).unwrap();
        assert!(fit.orthogonality_angle() < 1e-8);
        assert!(fit.hyperplane.offset.abs() < 1e-8);
    }

    #[test]
    fn ellipsoid_reflections_are_accepted() {
        let k = BodyOracle::from_ellipsoid(&triaxial());
        let tester = ReflectionTester::new(&k, ReflectionConfig::default());
        for i in 0..5 {
            let l = ProjLine::new(&unit_vector(&mut indexed_rng(9, i), 3)).unwrap();
            let r = tester.test(&l).unwrap();
            assert!(r.accepted);
            assert!(r.invariance_error < 1e-6, "{}", r.invariance_error);
        }
    }

    #[test]
    fn thin_body_has_too_few_chords() {
        // A needle: almost every lattice line misses it.
        let k = BodyOracle::new(Vector::zeros(3), 1.0, "needle", |x| {
            x[0].abs() <= 1.0 && x[1].hypot(x[2]) <= 1e-3
        })
        .unwrap();
        let r = fit_mirror(&k, &ProjLine::axis(3, 0), 2, 1e-9);
        assert!(matches!(r, Err(Error::TooFewChords { found: 1, needed: 4 })));
    }
}
