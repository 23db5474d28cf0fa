//! JSON descriptions of the built-in bodies.

use serde::{Deserialize, Serialize};

use super::BodyOracle;
use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, Matrix, Vector};
use crate::quadric::EllipsoidSpec;

/// One convex bump `w·max(0, d·u − t)²` added to the ellipsoid level in
/// normalized coordinates `u = A^{1/2}(x − c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub direction: Vec<f64>,
    pub offset: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BodySpec {
    Ellipsoid {
        #[serde(flatten)]
        ellipsoid: EllipsoidSpec,
    },
    /// Body of revolution in ℝ³: `{dist(x, axis) <= r(z)}` with `r` the
    /// piecewise-linear interpolation of `(z, r)` pairs.
    Revolution {
        profile: Vec<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        axis: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    /// `Σ |xᵢ/aᵢ|^p <= 1` with `p >= 1`.
    Superellipsoid {
        semi_axes: Vec<f64>,
        exponent: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    /// Rectangular box with the given half side lengths.
    Box {
        half_extents: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    /// Ellipsoid with convex bumps that flatten caps of its boundary.
    Perturbed {
        #[serde(flatten)]
        ellipsoid: EllipsoidSpec,
        bumps: Vec<Bump>,
    },
}

fn center_or_origin(center: &Option<Vec<f64>>, n: usize) -> Result<Vector> {
    match center {
        Some(c) if c.len() != n => Err(Error::DimensionMismatch {
            expected: n,
            got: c.len(),
        }),
        Some(c) => {
            if c.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidSpec("center has non-finite entries".into()));
            }
            Ok(Vector::from_column_slice(c))
        }
        None => Ok(Vector::zeros(n)),
    }
}

fn positive(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() || values.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
        return Err(Error::InvalidSpec(format!("{what} must be positive and finite")));
    }
    Ok(())
}

impl BodySpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))
    }

    pub fn build(&self) -> Result<BodyOracle> {
        match self {
            BodySpec::Ellipsoid { ellipsoid } => Ok(BodyOracle::from_ellipsoid(&ellipsoid.build()?)),
            BodySpec::Revolution {
                profile,
                axis,
                center,
            } => build_revolution(profile, axis.as_deref(), center),
            BodySpec::Superellipsoid {
                semi_axes,
                exponent,
                center,
            } => {
                positive(semi_axes, "semi_axes")?;
                if !(*exponent >= 1.0 && exponent.is_finite()) {
                    return Err(Error::InvalidSpec(format!(
                        "superellipsoid exponent must be >= 1, got {exponent}"
                    )));
                }
                let c = center_or_origin(center, semi_axes.len())?;
                let a = semi_axes.clone();
                let p = *exponent;
                let c2 = c.clone();
                let radius = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                BodyOracle::new(c, radius, "superellipsoid", move |x| {
                    a.iter()
                        .enumerate()
                        .map(|(i, ai)| ((x[i] - c2[i]) / ai).abs().powf(p))
                        .sum::<f64>()
                        <= 1.0
                })
            }
            BodySpec::Box {
                half_extents,
                center,
            } => {
                positive(half_extents, "half_extents")?;
                let c = center_or_origin(center, half_extents.len())?;
                let h = half_extents.clone();
                let c2 = c.clone();
                let radius = h.iter().map(|x| x * x).sum::<f64>().sqrt();
                BodyOracle::new(c, radius, "box", move |x| {
                    h.iter().enumerate().all(|(i, hi)| (x[i] - c2[i]).abs() <= *hi)
                })
            }
            BodySpec::Perturbed { ellipsoid, bumps } => {
                let e = ellipsoid.build()?;
                let n = e.dim();
                let eig = sym_eigen(e.form());
                let sqrt_d = Matrix::from_diagonal(&Vector::from_iterator(
                    n,
                    eig.values.iter().map(|v| v.sqrt()),
                ));
                let q = eig.matrix();
                let root = &q * sqrt_d * q.transpose();
                let mut parsed = Vec::with_capacity(bumps.len());
                for b in bumps {
                    if b.direction.len() != n {
                        return Err(Error::DimensionMismatch {
                            expected: n,
                            got: b.direction.len(),
                        });
                    }
                    let d = Vector::from_column_slice(&b.direction);
                    let nrm = d.norm();
                    if !(nrm > 0.0 && nrm.is_finite()) {
                        return Err(Error::InvalidSpec("bump direction must be nonzero".into()));
                    }
                    if !(b.weight >= 0.0 && b.weight.is_finite() && b.offset.is_finite()) {
                        return Err(Error::InvalidSpec("bump weight must be >= 0".into()));
                    }
                    if b.offset <= -1.0 {
                        return Err(Error::InvalidSpec("bump offset must be > -1".into()));
                    }
                    parsed.push((d / nrm, b.offset, b.weight));
                }
                let center = e.center().clone();
                let c2 = center.clone();
                let radius = e.circumradius();
                let level = move |x: &Vector| {
                    let u = &root * (x - &c2);
                    let mut f = u.norm_squared();
                    for (d, t, w) in &parsed {
                        let s = (d.dot(&u) - t).max(0.0);
                        f += w * s * s;
                    }
                    f <= 1.0
                };
                BodyOracle::new(center, radius, "perturbed", level)
            }
        }
    }
}

fn build_revolution(
    profile: &[[f64; 2]],
    axis: Option<&[f64]>,
    center: &Option<Vec<f64>>,
) -> Result<BodyOracle> {
    if profile.len() < 2 {
        return Err(Error::InvalidSpec("revolution profile needs at least 2 points".into()));
    }
    if profile.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidSpec("revolution profile has non-finite entries".into()));
    }
    for w in profile.windows(2) {
        if w[1][0] <= w[0][0] {
            return Err(Error::InvalidSpec("profile z values must increase strictly".into()));
        }
    }
    if profile.iter().any(|p| p[1] < 0.0) {
        return Err(Error::InvalidSpec("profile radii must be non-negative".into()));
    }
    for (i, w) in profile.windows(3).enumerate() {
        let (a, b, c) = (w[0], w[1], w[2]);
        let t = (b[0] - a[0]) / (c[0] - a[0]);
        let chord = a[1] + t * (c[1] - a[1]);
        let scale = a[1].abs().max(b[1].abs()).max(c[1].abs()).max(1e-300);
        if b[1] < chord - 1e-12 * scale {
            return Err(Error::InvalidSpec(format!(
                "profile is not concave at point {}",
                i + 1
            )));
        }
    }
    if profile.iter().all(|p| p[1] <= 0.0) {
        return Err(Error::InvalidSpec("profile has zero width".into()));
    }

    let axis = match axis {
        Some(a) if a.len() != 3 => {
            return Err(Error::DimensionMismatch {
                expected: 3,
                got: a.len(),
            })
        }
        Some(a) => crate::linalg::unit_canonical(&Vector::from_column_slice(a))
            .map_err(|_| Error::InvalidSpec("revolution axis must be nonzero".into()))?,
        None => Vector::from_vec(vec![0.0, 0.0, 1.0]),
    };
    let origin = center_or_origin(center, 3)?;
    // A concave profile that is positive somewhere is positive at the middle
    // of its z range.
    let z_mid = 0.5 * (profile[0][0] + profile[profile.len() - 1][0]);
    let interior = &origin + &axis * z_mid;
    let radius = profile
        .iter()
        .map(|p| (p[0] - z_mid).hypot(p[1]))
        .fold(0.0, f64::max);

    let prof: Vec<[f64; 2]> = profile.to_vec();
    let ax = axis.clone();
    let member = move |x: &Vector| {
        let v = x - &origin;
        let z = v.dot(&ax);
        let rho = (v - &ax * z).norm();
        profile_radius(&prof, z).is_some_and(|r| rho <= r)
    };
    BodyOracle::new(interior, radius, "revolution", member)
}

fn profile_radius(p: &[[f64; 2]], z: f64) -> Option<f64> {
    if z < p[0][0] || z > p[p.len() - 1][0] {
        return None;
    }
    let i = p.partition_point(|q| q[0] <= z);
    if i == 0 {
        return Some(p[0][1]);
    }
    if i >= p.len() {
        return Some(p[p.len() - 1][1]);
    }
    let (a, b) = (p[i - 1], p[i]);
    let t = (z - a[0]) / (b[0] - a[0]);
    Some(a[1] + t * (b[1] - a[1]))
}
