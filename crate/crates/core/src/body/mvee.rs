//! Minimum-volume enclosing ellipsoid of a point cloud.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, SymMatrix, Vector};
use crate::quadric::Ellipsoid;

const MAX_ITERATIONS: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct FittedEllipsoid {
    pub ellipsoid: Ellipsoid,
    /// Upper bound on `vol(fit)/vol(optimum) − 1`.
    pub relative_volume_gap: f64,
    pub iterations: usize,
}

impl Serialize for FittedEllipsoid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("FittedEllipsoid", 4)?;
        st.serialize_field("center", self.ellipsoid.center().as_slice())?;
        st.serialize_field("form", &self.ellipsoid.form().to_rows())?;
        st.serialize_field("relative_volume_gap", &self.relative_volume_gap)?;
        st.serialize_field("iterations", &self.iterations)?;
        st.end()
    }
}

fn lifted_gram(points: &[Vector], u: &[f64], d: usize) -> Matrix {
    let mut x = Matrix::zeros(d, d);
    for (p, &w) in points.iter().zip(u) {
        if w == 0.0 {
            continue;
        }
        for i in 0..d {
            let qi = if i + 1 == d { 1.0 } else { p[i] };
            for j in 0..d {
                let qj = if j + 1 == d { 1.0 } else { p[j] };
                x[(i, j)] += w * qi * qj;
            }
        }
    }
    x
}

/// Khachiyan's barycentric ascent with Todd–Yıldırım away steps.
///
/// Iterates on weights `u` over the lifted points `(p, 1)` until
/// `max (p−c)ᵀS⁻¹(p−c) <= (1+eps)·n`, where `c = Σuᵢpᵢ` and `S` is the
/// weighted covariance. The returned form `S⁻¹/n` is rescaled so every input
/// point lies inside.
pub fn mvee(points: &[Vector], eps: f64) -> Result<FittedEllipsoid> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let m = points.len();
    let n = points.first().map(|p| p.len()).ok_or(Error::DegeneratePointSet)?;
    if n < 2 || n > crate::linalg::MAX_DIM {
        return Err(Error::UnsupportedDimension(n));
    }
    if let Some(bad) = points.iter().find(|p| p.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: bad.len(),
        });
    }
    if points.iter().any(|p| p.iter().any(|x| !x.is_finite())) {
        return Err(Error::InvalidArgument("points must be finite".into()));
    }
    if m < n + 1 {
        return Err(Error::DegeneratePointSet);
    }
    let d = n + 1;
    let df = d as f64;
    let mut u = vec![1.0 / m as f64; m];
    let mut iterations = 0;
    let mut kappa = vec![0.0; m];
    loop {
        let x = lifted_gram(points, &u, d);
        let chol = x.cholesky().ok_or(Error::DegeneratePointSet)?;
        let xinv = chol.inverse();
        for (k, p) in kappa.iter_mut().zip(points) {
            let mut q = Vector::zeros(d);
            q.rows_mut(0, n).copy_from(p);
            q[n] = 1.0;
            *k = q.dot(&(&xinv * &q));
        }
        if kappa.iter().any(|k| !k.is_finite()) {
            return Err(Error::DegeneratePointSet);
        }
        let (jp, kp) = kappa
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (j, &k)| if k > b.1 { (j, k) } else { b });
        let (jm, km) = kappa
            .iter()
            .enumerate()
            .filter(|(j, _)| u[*j] > 0.0)
            .fold((0, f64::INFINITY), |b, (j, &k)| if k < b.1 { (j, k) } else { b });
        // (p−c)ᵀS⁻¹(p−c) = κ − 1 for the lifted form.
        if kp - 1.0 <= (1.0 + eps) * n as f64 || iterations >= MAX_ITERATIONS {
            break;
        }
        iterations += 1;
        let plus = kp / df - 1.0;
        let minus = 1.0 - km / df;
        if plus >= minus {
            let tau = (kp - df) / (df * (kp - 1.0));
            for w in u.iter_mut() {
                *w *= 1.0 - tau;
            }
            u[jp] += tau;
        } else {
            let uj = u[jm];
            let tau = ((km - df) / (df * (km - 1.0))).max(-uj / (1.0 - uj));
            for w in u.iter_mut() {
                *w *= 1.0 - tau;
            }
            u[jm] += tau;
            if u[jm] < 1e-300 {
                u[jm] = 0.0;
            }
        }
    }

    let c = points
        .iter()
        .zip(&u)
        .fold(Vector::zeros(n), |acc, (p, &w)| acc + p * w);
    let mut s = Matrix::zeros(n, n);
    for (p, &w) in points.iter().zip(&u) {
        let q = p - &c;
        s += &q * q.transpose() * w;
    }
    let sinv = s.cholesky().ok_or(Error::DegeneratePointSet)?.inverse() / n as f64;
    let max_level = points
        .iter()
        .map(|p| {
            let q = p - &c;
            q.dot(&(&sinv * &q))
        })
        .fold(0.0, f64::max);
    // The unscaled ellipsoid has volume at most the optimum; scaling by
    // `max_level` costs a factor `max_level^{n/2}` in volume.
    let relative_volume_gap = (max_level.max(1.0)).powf(n as f64 / 2.0) - 1.0;
    let form = SymMatrix::new(sinv / max_level)?;
    Ok(FittedEllipsoid {
        ellipsoid: Ellipsoid::new(c, form)?,
        relative_volume_gap,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::{sample_boundary, BodyOracle};

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    #[test]
    fn square_vertices_give_circle() {
        let pts = vec![v(&[1.0, 1.0]), v(&[-1.0, 1.0]), v(&[1.0, -1.0]), v(&[-1.0, -1.0])];
        let f = mvee(&pts, 1e-4).unwrap();
        let a = f.ellipsoid.form().as_matrix();
        assert!((a - Matrix::identity(2, 2) * 0.5).amax() < 1e-6);
        assert!(f.ellipsoid.center().norm() < 1e-12);
    }

    /// Grid search for the largest-determinant centered form `[[a,b],[b,c]]`
    /// with all centered triangle vertices on or inside the ellipse.
    fn steiner_by_grid(verts: &[Vector]) -> (f64, f64, f64) {
        let best_in = |lo: [f64; 3], hi: [f64; 3], steps: usize| {
            let mut best = (f64::NEG_INFINITY, 0.0, 0.0, 0.0);
            for i in 0..=steps {
                let a = lo[0] + (hi[0] - lo[0]) * i as f64 / steps as f64;
                for j in 0..=steps {
                    let b = lo[1] + (hi[1] - lo[1]) * j as f64 / steps as f64;
                    for k in 0..=steps {
                        let c = lo[2] + (hi[2] - lo[2]) * k as f64 / steps as f64;
                        let det = a * c - b * b;
                        if a <= 0.0 || det <= best.0 {
                            continue;
                        }
                        let ok = verts
                            .iter()
                            .all(|p| a * p[0] * p[0] + 2.0 * b * p[0] * p[1] + c * p[1] * p[1] <= 1.0);
                        if ok {
                            best = (det, a, b, c);
                        }
                    }
                }
            }
            (best.1, best.2, best.3)
        };
        let (mut a, mut b, mut c) = best_in([0.1, -10.0, 0.1], [10.0, 10.0, 10.0], 100);
        let mut w = 0.2;
        for _ in 0..8 {
            let r = best_in([a - w, b - w, c - w], [a + w, b + w, c + w], 40);
            a = r.0;
            b = r.1;
            c = r.2;
            w *= 0.25;
        }
        (a, b, c)
    }

    #[test]
    fn simplex_gives_steiner_ellipse() {
        let pts = vec![v(&[0.0, 0.0]), v(&[1.0, 0.0]), v(&[0.0, 1.0])];
        let f = mvee(&pts, 1e-7).unwrap();
        let centroid = v(&[1.0 / 3.0, 1.0 / 3.0]);
        assert!((f.ellipsoid.center() - &centroid).norm() < 1e-6);
        let centered: Vec<Vector> = pts.iter().map(|p| p - &centroid).collect();
        let (a, b, c) = steiner_by_grid(&centered);
        let m = f.ellipsoid.form().as_matrix();
        let oracle = Matrix::from_row_slice(2, 2, &[a, b, b, c]);
        assert!((m - &oracle).amax() < 1e-4 * oracle.amax(), "{m} vs {oracle}");
    }

    #[test]
    fn recovers_sampled_ellipsoid() {
        let e = Ellipsoid::diagonal(&[1.0, 0.25, 1.0 / 9.0]).unwrap();
        let pts = sample_boundary(&BodyOracle::from_ellipsoid(&e), 1000, 0, 1e-12);
        let f = mvee(&pts, 1e-4).unwrap();
        let err = (f.ellipsoid.form().as_matrix() - e.form().as_matrix()).norm() / e.form().frobenius_norm();
        assert!(err < 1e-3, "relative error {err}");
        assert!(f.relative_volume_gap >= 0.0);
    }

    #[test]
    fn degenerate_inputs() {
        let collinear = vec![v(&[0.0, 0.0]), v(&[1.0, 1.0]), v(&[2.0, 2.0]), v(&[3.0, 3.0])];
        assert_eq!(mvee(&collinear, 1e-4).unwrap_err(), Error::DegeneratePointSet);
        assert_eq!(mvee(&[v(&[0.0, 0.0])], 1e-4).unwrap_err(), Error::DegeneratePointSet);
    }
}
