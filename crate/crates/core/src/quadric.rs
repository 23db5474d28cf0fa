//! Reflection algebra of an ellipsoid `{x : (x-c)ᵀA(x-c) <= 1}`.
//!
//! Every line `ℓ` through the center is the direction of exactly one
//! reflection of the ellipsoid. Its mirror is the conjugate hyperplane
//! `(Aℓ)⊥`; the reflection is orthogonal exactly when `ℓ` is an eigenvector
//! of `A` (a binormal). For the remaining (diagonal) lines the reflection has
//! a unique ground hyperplane, the hyperplane through `ℓ` on which it acts as
//! an orthogonal reflection.
//!
//! The operations here act on lines and hyperplanes through the center; they
//! read only the form matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, line_angle, serialize_vector, project_off, sym_eigen, unit_canonical, EigenDecomposition, Matrix,
    SymMatrix, Vector,
};

/// Binormal angle tolerance for exact inputs.
pub const DEFAULT_BINORMAL_TOL: f64 = 1e-9;
/// Coarser binormal tolerance used by scan drivers.
pub const SCAN_BINORMAL_TOL: f64 = 1e-6;
/// Relative tolerance for grouping eigenvalues into binormal classes.
pub const DEFAULT_GROUPING_TOL: f64 = 1e-8;
/// Relative tolerance for the conjugacy test `l2ᵀ A l1 = 0`.
pub const DEFAULT_POLAR_TOL: f64 = 1e-10;

/// A line through the origin, stored as a sign-canonical unit vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProjLine {
    #[serde(serialize_with = "serialize_vector")]
    dir: Vector,
}

impl ProjLine {
    pub fn new(v: &Vector) -> Result<Self> {
        Ok(ProjLine {
            dir: unit_canonical(v)?,
        })
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        Self::new(&Vector::from_column_slice(v))
    }

    /// Coordinate axis `e_i` in ℝⁿ.
    pub fn axis(n: usize, i: usize) -> Self {
        let mut v = Vector::zeros(n);
        v[i] = 1.0;
        ProjLine { dir: v }
    }

    pub fn dir(&self) -> &Vector {
        &self.dir
    }

    pub fn dim(&self) -> usize {
        self.dir.len()
    }

    /// Angle in `[0, π/2]` to another line.
    pub fn angle(&self, other: &ProjLine) -> f64 {
        line_angle(&self.dir, &other.dir)
    }

    /// Projective distance (sine of the angle).
    pub fn distance(&self, other: &ProjLine) -> f64 {
        self.angle(other).sin()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.dir.iter().copied().collect()
    }
}

/// A hyperplane through the origin, stored by its sign-canonical unit normal.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProjHyperplane {
    #[serde(serialize_with = "serialize_vector")]
    normal: Vector,
}

impl ProjHyperplane {
    pub fn from_normal(v: &Vector) -> Result<Self> {
        Ok(ProjHyperplane {
            normal: unit_canonical(v)?,
        })
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        Self::from_normal(&Vector::from_column_slice(v))
    }

    pub fn normal(&self) -> &Vector {
        &self.normal
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    /// Deterministic orthonormal basis of the hyperplane.
    pub fn basis(&self) -> Vec<Vector> {
        linalg::hyperplane_basis(&self.normal).expect("normal is a unit vector")
    }

    /// Projective distance between the hyperplanes (via their normals).
    pub fn distance(&self, other: &ProjHyperplane) -> f64 {
        linalg::projective_distance(&self.normal, &other.normal)
    }

    /// Sine of the angle between `l` and the hyperplane's normal complement;
    /// zero when `l` lies in the hyperplane.
    pub fn line_offset(&self, l: &ProjLine) -> f64 {
        self.normal.dot(l.dir()).abs()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.normal.iter().copied().collect()
    }
}

/// The solid ellipsoid `{x : (x-c)ᵀA(x-c) <= 1}` with `A` positive definite.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    center: Vector,
    form: SymMatrix,
    eigen: EigenDecomposition,
}

impl PartialEq for Ellipsoid {
    fn eq(&self, other: &Self) -> bool {
        self.center == other.center && self.form == other.form
    }
}

impl Ellipsoid {
    pub fn new(center: Vector, form: SymMatrix) -> Result<Self> {
        let n = form.dim();
        if n < 2 {
            return Err(Error::UnsupportedDimension(n));
        }
        if center.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: center.len(),
            });
        }
        let eigen = sym_eigen(&form);
        if eigen.values[0] <= 0.0 {
            return Err(Error::NotPositiveDefinite(eigen.values[0]));
        }
        Ok(Ellipsoid {
            center,
            form,
            eigen,
        })
    }

    pub fn centered(form: SymMatrix) -> Result<Self> {
        let n = form.dim();
        Self::new(Vector::zeros(n), form)
    }

    /// Centered ellipsoid with diagonal form `diag(d)`.
    pub fn diagonal(d: &[f64]) -> Result<Self> {
        Self::centered(SymMatrix::from_diagonal(d)?)
    }

    /// Ellipsoid with the given semi-axis lengths along the columns of an
    /// orthogonal `rotation` (identity when `None`).
    pub fn from_semi_axes(
        semi_axes: &[f64],
        rotation: Option<&Matrix>,
        center: Option<Vector>,
    ) -> Result<Self> {
        let n = semi_axes.len();
        if semi_axes.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(Error::NotPositiveDefinite(
                semi_axes.iter().copied().fold(f64::INFINITY, f64::min),
            ));
        }
        let r = match rotation {
            Some(r) => {
                if r.nrows() != n || r.ncols() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: r.nrows(),
                    });
                }
                let dev = (r.transpose() * r - Matrix::identity(n, n)).amax();
                if dev > 1e-10 {
                    return Err(Error::NotOrthogonal(dev));
                }
                r.clone()
            }
            None => Matrix::identity(n, n),
        };
        let d = Matrix::from_diagonal(&Vector::from_iterator(
            n,
            semi_axes.iter().map(|a| 1.0 / (a * a)),
        ));
        let form = SymMatrix::new(&r * d * r.transpose())?;
        Self::new(center.unwrap_or_else(|| Vector::zeros(n)), form)
    }

    pub fn dim(&self) -> usize {
        self.form.dim()
    }

    pub fn center(&self) -> &Vector {
        &self.center
    }

    pub fn form(&self) -> &SymMatrix {
        &self.form
    }

    pub fn eigen(&self) -> &EigenDecomposition {
        &self.eigen
    }

    /// Largest eigenvalue of the form (its spectral norm).
    pub fn form_norm(&self) -> f64 {
        *self.eigen.values.last().unwrap()
    }

    /// `(x-c)ᵀA(x-c)`; the body is the sublevel set `<= 1`.
    pub fn level(&self, x: &Vector) -> f64 {
        let d = x - &self.center;
        self.form.bilinear(&d, &d)
    }

    pub fn contains(&self, x: &Vector) -> bool {
        self.level(x) <= 1.0
    }

    pub fn translated(&self, t: &Vector) -> Result<Self> {
        Self::new(&self.center + t, self.form.clone())
    }

    /// Radius of the smallest centered ball containing the ellipsoid.
    pub fn circumradius(&self) -> f64 {
        1.0 / self.eigen.values[0].sqrt()
    }

    /// True when all eigenvalues agree within `grouping_tol`.
    pub fn is_sphere(&self, grouping_tol: f64) -> bool {
        let lo = self.eigen.values[0];
        let hi = self.form_norm();
        (hi - lo) / hi <= grouping_tol
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: n,
            });
        }
        Ok(())
    }
}

/// On-disk ellipsoid description: either a form matrix or semi-axes plus an
/// orthogonal rotation whose columns are the axis directions.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged, deny_unknown_fields)]
pub enum EllipsoidSpec {
    Form {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
        form: Vec<Vec<f64>>,
    },
    Axes {
        semi_axes: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rotation: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
}

impl EllipsoidSpec {
    pub fn build(&self) -> Result<Ellipsoid> {
        match self {
            EllipsoidSpec::Form { n, center, form } => {
                let form = SymMatrix::from_rows(form)?;
                if let Some(n) = n {
                    if *n != form.dim() {
                        return Err(Error::DimensionMismatch {
                            expected: *n,
                            got: form.dim(),
                        });
                    }
                }
                let dim = form.dim();
                let center = center
                    .as_ref()
                    .map(|c| Vector::from_column_slice(c))
                    .unwrap_or_else(|| Vector::zeros(dim));
                Ellipsoid::new(center, form)
            }
            EllipsoidSpec::Axes {
                semi_axes,
                rotation,
                center,
            } => {
                let n = semi_axes.len();
                let rot = match rotation {
                    Some(rows) => {
                        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                            return Err(Error::DimensionMismatch {
                                expected: n,
                                got: rows.len(),
                            });
                        }
                        Some(Matrix::from_fn(n, n, |i, j| rows[i][j]))
                    }
                    None => None,
                };
                let center = center.as_ref().map(|c| Vector::from_column_slice(c));
                if let Some(c) = &center {
                    if c.len() != n {
                        return Err(Error::DimensionMismatch {
                            expected: n,
                            got: c.len(),
                        });
                    }
                }
                Ellipsoid::from_semi_axes(semi_axes, rot.as_ref(), center)
            }
        }
    }

    pub fn from_ellipsoid(e: &Ellipsoid) -> Self {
        EllipsoidSpec::Form {
            n: Some(e.dim()),
            center: Some(e.center().iter().copied().collect()),
            form: e.form().to_rows(),
        }
    }
}

/// An affine reflection `x ↦ c + R(x - c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reflection {
    pub linear: Matrix,
    pub direction: ProjLine,
    pub mirror: ProjHyperplane,
    pub center: Vector,
}

impl Reflection {
    pub fn apply(&self, x: &Vector) -> Vector {
        &self.center + &self.linear * (x - &self.center)
    }

    pub fn is_orthogonal(&self, tol: f64) -> bool {
        line_angle(self.direction.dir(), self.mirror.normal()) <= tol
    }
}

/// One class of binormals: eigenvalue `α`, binormal length `2/√α` and an
/// orthonormal basis of the eigenspace.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenGroup {
    pub eigenvalue: f64,
    pub binormal_length: f64,
    pub basis: Vec<Vector>,
}

impl EigenGroup {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Norm of the orthogonal projection of `v` onto this eigenspace.
    pub fn projection_norm(&self, v: &Vector) -> f64 {
        self.basis
            .iter()
            .map(|b| b.dot(v).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Eigenspace decomposition `ℝⁿ = V_1 ⊕ … ⊕ V_k`, groups ordered by
/// decreasing binormal length.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumPartition {
    pub groups: Vec<EigenGroup>,
    pub k: usize,
    pub grouping_tol: f64,
}

impl SpectrumPartition {
    pub fn lengths(&self) -> Vec<f64> {
        self.groups.iter().map(|g| g.binormal_length).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.dim()).collect()
    }
}

/// Hyperplane through the midpoints of all chords parallel to `l`; its
/// normal is `A·l`.
pub fn mirror(e: &Ellipsoid, l: &ProjLine) -> Result<ProjHyperplane> {
    e.check_dim(l.dim())?;
    ProjHyperplane::from_normal(&e.form().apply(l.dir()))
}

/// Length `2/√(lᵀAl)` of the central chord along `l`.
pub fn chord_length(e: &Ellipsoid, l: &ProjLine) -> f64 {
    2.0 / e.form().bilinear(l.dir(), l.dir()).sqrt()
}

/// Angle between `l` and `A·l`; zero exactly for eigenvector directions.
pub fn binormal_angle(e: &Ellipsoid, l: &ProjLine) -> f64 {
    line_angle(&e.form().apply(l.dir()), l.dir())
}

pub fn is_binormal(e: &Ellipsoid, l: &ProjLine, tol: f64) -> bool {
    binormal_angle(e, l) <= tol
}

/// The unique reflection of the centered ellipsoid with direction `l`:
/// `R = I - 2 l aᵀ / (aᵀ l)` with `a = A l`.
pub fn reflection_in_direction(e: &Ellipsoid, l: &ProjLine) -> Result<Reflection> {
    e.check_dim(l.dim())?;
    let n = e.dim();
    let d = l.dir();
    let a = e.form().apply(d);
    let ad = a.dot(d);
    let linear = Matrix::identity(n, n) - d * a.transpose() * (2.0 / ad);
    Ok(Reflection {
        linear,
        direction: l.clone(),
        mirror: ProjHyperplane::from_normal(&a)?,
        center: Vector::zeros(n),
    })
}

/// Conjugacy `l2ᵀ A l1 = 0`, i.e. `l2 ⊂ M(l1)`; symmetric in its arguments.
pub fn polar_pair_check(e: &Ellipsoid, l1: &ProjLine, l2: &ProjLine, tol: f64) -> bool {
    polar_value(e, l1, l2).abs() <= tol
}

/// `l2ᵀ A l1 / ‖A‖₂`.
pub fn polar_value(e: &Ellipsoid, l1: &ProjLine, l2: &ProjLine) -> f64 {
    e.form().bilinear(l2.dir(), l1.dir()) / e.form_norm()
}

/// Ground hyperplane `(M(l) ∩ l⊥) ⊕ l` of the reflection with direction `l`.
///
/// Its normal is the component of `A·l` orthogonal to `l`. Binormal lines
/// are rejected: every hyperplane through them is a ground hyperplane.
pub fn ground(e: &Ellipsoid, l: &ProjLine, tol: f64) -> Result<ProjHyperplane> {
    e.check_dim(l.dim())?;
    if is_binormal(e, l, tol) {
        return Err(Error::BinormalDirection);
    }
    let a = e.form().apply(l.dir());
    ProjHyperplane::from_normal(&project_off(&a, l.dir()))
}

/// Groups eigenvalues whose consecutive relative gaps are within
/// `grouping_tol` and orders the groups by decreasing binormal length.
pub fn spectrum_partition(e: &Ellipsoid, grouping_tol: f64) -> Result<SpectrumPartition> {
    let eig = e.eigen();
    let mut groups: Vec<(Vec<f64>, Vec<Vector>)> = Vec::new();
    for (i, &alpha) in eig.values.iter().enumerate() {
        let vec = eig.vectors[i].clone();
        match groups.last_mut() {
            Some((vals, vecs)) if (alpha - vals.last().unwrap()) / alpha <= grouping_tol => {
                vals.push(alpha);
                vecs.push(vec);
            }
            _ => groups.push((vec![alpha], vec![vec])),
        }
    }
    let mut out = Vec::with_capacity(groups.len());
    for (vals, basis) in groups {
        let lo = vals[0];
        let hi = *vals.last().unwrap();
        let span = (hi - lo) / hi;
        if span > grouping_tol {
            return Err(Error::AmbiguousGrouping {
                span,
                tol: grouping_tol,
            });
        }
        let alpha = vals.iter().sum::<f64>() / vals.len() as f64;
        out.push(EigenGroup {
            eigenvalue: alpha,
            binormal_length: 2.0 / alpha.sqrt(),
            basis,
        });
    }
    let k = out.len();
    Ok(SpectrumPartition {
        groups: out,
        k,
        grouping_tol,
    })
}
