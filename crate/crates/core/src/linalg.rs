//! Dense symmetric linear algebra used by every other module.
//!
//! The eigensolver is a cyclic Jacobi iteration: slow for large matrices but
//! unconditionally stable on symmetric input and fully deterministic, which is
//! what the projective machinery downstream needs (bit-identical outputs for
//! identical inputs, one canonical representative per line).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

pub(crate) fn serialize_vector<S: serde::Serializer>(
    v: &Vector,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter())
}

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 16;

const SYMMETRY_TOL: f64 = 1e-14;
const JACOBI_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 100;

/// A real symmetric matrix of dimension `1..=16`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    /// Validates symmetry (`|S_ij - S_ji| <= 1e-14 * max|S|`) and stores the
    /// exactly symmetrized matrix.
    pub fn new(m: Matrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        let n = m.nrows();
        if n == 0 || n > MAX_DIM {
            return Err(Error::UnsupportedDimension(n));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
        }
        let scale = m.amax();
        let mut asym = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                asym = asym.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        Ok(Self::symmetrized(m))
    }

    fn symmetrized(m: Matrix) -> Self {
        let t = m.transpose();
        SymMatrix((m + t) * 0.5)
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(Matrix::from_diagonal(&Vector::from_column_slice(diag)))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: bad.len(),
            });
        }
        Self::new(Matrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(Matrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_inner(self) -> Matrix {
        self.0
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// `Bᵀ S B` for a (not necessarily square) basis matrix `B`.
    pub fn congruence(&self, b: &Matrix) -> Result<SymMatrix> {
        if b.nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: b.nrows(),
            });
        }
        let m = b.transpose() * &self.0 * b;
        if m.nrows() == 0 || m.nrows() > MAX_DIM {
            return Err(Error::UnsupportedDimension(m.nrows()));
        }
        Ok(Self::symmetrized(m))
    }

    /// Quadratic form `vᵀ S w`.
    pub fn bilinear(&self, v: &Vector, w: &Vector) -> f64 {
        v.dot(&(&self.0 * w))
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        &self.0 * v
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| self.0.row(i).iter().copied().collect())
            .collect()
    }
}

/// Eigenpairs sorted by ascending eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, `vectors[i]` belonging to `values[i]`.
    pub vectors: Vec<Vector>,
}

impl EigenDecomposition {
    /// Columns of the eigenvector matrix `Q`.
    pub fn matrix(&self) -> Matrix {
        Matrix::from_columns(&self.vectors)
    }

    /// `Q diag(values) Qᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let q = self.matrix();
        let d = Matrix::from_diagonal(&Vector::from_column_slice(&self.values));
        &q * d * q.transpose()
    }
}

/// Cyclic Jacobi eigendecomposition.
///
/// Sweeps rows in fixed order until the off-diagonal Frobenius norm drops
/// below `1e-14 * ‖S‖`. Values are sorted ascending (stable, so equal values
/// keep their column order) and every eigenvector is sign-canonicalized.
pub fn sym_eigen(s: &SymMatrix) -> EigenDecomposition {
    let n = s.dim();
    let mut a = s.as_matrix().clone();
    let mut v = Matrix::identity(n, n);
    let norm = a.norm();

    if norm > 0.0 {
        for _ in 0..MAX_SWEEPS {
            if off_diagonal_norm(&a) <= JACOBI_TOL * norm {
                break;
            }
            let mut rotated = false;
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq == 0.0 {
                        continue;
                    }
                    rotated = true;
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let sn = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - sn * akq;
                        a[(k, q)] = sn * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - sn * aqk;
                        a[(q, k)] = sn * apk + c * aqk;
                    }
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - sn * vkq;
                        v[(k, q)] = sn * vkp + c * vkq;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = order
        .iter()
        .map(|&i| canonical_sign(v.column(i).into_owned()))
        .collect();
    EigenDecomposition { values, vectors }
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[(i, j)] * a[(i, j)];
            }
        }
    }
    acc.sqrt()
}

/// Flips `v` so its largest-magnitude component is positive (ties go to the
/// lowest index).
pub fn canonical_sign(mut v: Vector) -> Vector {
    let mut idx = 0;
    let mut best = -1.0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > best {
            best = x.abs();
            idx = i;
        }
    }
    if v.len() > 0 && v[idx] < 0.0 {
        v.neg_mut();
    }
    v
}

/// Normalizes and sign-canonicalizes a direction.
pub fn unit_canonical(v: &Vector) -> Result<Vector> {
    let n = v.norm();
    if !(n.is_finite() && n > 1e-300) {
        return Err(Error::ZeroVector);
    }
    Ok(canonical_sign(v / n))
}

/// Orthonormal basis of the hyperplane `normal⊥` by Householder completion.
///
/// The reflector that maps `e_j` (j = largest component of `normal`) onto
/// `∓normal` has its remaining columns spanning `normal⊥`; those columns are
/// returned in index order, each sign-canonicalized.
pub fn hyperplane_basis(normal: &Vector) -> Result<Vec<Vector>> {
    let nrm = normal.norm();
    if !(nrm.is_finite() && nrm > 1e-300) {
        return Err(Error::ZeroVector);
    }
    let u = normal / nrm;
    let n = u.len();
    let j = u.iamax();
    let s = if u[j] >= 0.0 { 1.0 } else { -1.0 };
    let mut w = u.clone();
    w[j] += s;
    let ww = w.dot(&w);
    let mut basis = Vec::with_capacity(n - 1);
    for i in (0..n).filter(|&i| i != j) {
        let mut col = -&w * (2.0 * w[i] / ww);
        col[i] += 1.0;
        basis.push(canonical_sign(col));
    }
    Ok(basis)
}

/// Component of `v` orthogonal to the unit vector `u`.
pub fn project_off(v: &Vector, u: &Vector) -> Vector {
    v - u * v.dot(u)
}

/// Orthogonal projector onto the span of an orthonormal family.
pub fn projector(basis: &[Vector], n: usize) -> Matrix {
    let mut p = Matrix::zeros(n, n);
    for b in basis {
        p += b * b.transpose();
    }
    p
}

/// Angle in `[0, π/2]` between the lines spanned by two nonzero vectors.
pub fn line_angle(a: &Vector, b: &Vector) -> f64 {
    let a = a / a.norm();
    let b = b / b.norm();
    let perp = project_off(&a, &b).norm();
    perp.atan2(a.dot(&b).abs())
}

/// Projective distance `sin∠(a, b)` between two lines (unit vectors).
pub fn projective_distance(a: &Vector, b: &Vector) -> f64 {
    line_angle(a, b).sin()
}
