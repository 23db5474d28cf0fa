//! Bezdek and strong-Bezdek planes of bodies in ℝ³.
//!
//! A plane is Bezdek when its section has a mirror line, and strong-Bezdek
//! when, in addition, the in-plane reflection extends to a reflection of the
//! whole body (the plane is a ground plane of that reflection).
//!
//! Sections are described by their radial function about the area centroid,
//! sampled at `m` equally spaced angles. The symmetry residual of a mirror
//! line through the centroid compares the trigonometric interpolant of the
//! radial function with its reflection, which keeps the residual free of the
//! polygonal sampling error.

use rayon::prelude::*;
use serde::Serialize;

use crate::body::{AffineHyperplane, BodyOracle, MirrorFit, ReflectionConfig, ReflectionTester, DEFAULT_THRESHOLD};
use crate::error::{Error, Result};
use crate::linalg::{hyperplane_basis, Vector};
use crate::quadric::ProjLine;
use crate::rng::{derive_seed, indexed_rng, point_in_ball, unit_vector};

use std::f64::consts::{PI, TAU};

const GRID_ANGLES: usize = 360;
const GOLDEN_TOL: f64 = 1e-8;
const CENTERING_PASSES: usize = 4;

/// The section `K ∩ plane` sampled along rays from its centroid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanarSection {
    pub plane: AffineHyperplane,
    /// Orthonormal in-plane basis defining the intrinsic coordinates.
    pub basis: [Vec<f64>; 2],
    /// Boundary points in intrinsic coordinates relative to the plane's foot
    /// point `offset·normal`.
    pub boundary: Vec<[f64; 2]>,
    /// Area centroid in intrinsic coordinates.
    pub centroid: [f64; 2],
    /// Distances from the centroid to the boundary at angles `2πj/m`.
    pub radii: Vec<f64>,
    /// Length scale (the body's bounding radius) used to normalize residuals.
    pub scale: f64,
}

impl PlanarSection {
    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// Linearly interpolated radius at angle `theta`.
    fn radius_at(&self, theta: f64) -> f64 {
        let m = self.radii.len();
        let x = theta.rem_euclid(TAU) / TAU * m as f64;
        let i = (x.floor() as usize).min(m - 1);
        let f = x - i as f64;
        self.radii[i] * (1.0 - f) + self.radii[(i + 1) % m] * f
    }

    /// Chord length through the centroid along angle `theta`.
    pub fn diameter_at(&self, theta: f64) -> f64 {
        self.radius_at(theta) + self.radius_at(theta + PI)
    }

    fn foot(&self) -> Vector {
        &self.plane.normal * self.plane.offset
    }

    fn basis_vectors(&self) -> [Vector; 2] {
        [
            Vector::from_column_slice(&self.basis[0]),
            Vector::from_column_slice(&self.basis[1]),
        ]
    }

    /// Lifts intrinsic coordinates to ℝ³.
    pub fn lift(&self, y: [f64; 2]) -> Vector {
        let [b1, b2] = self.basis_vectors();
        self.foot() + b1 * y[0] + b2 * y[1]
    }

    /// In-plane direction at angle `theta` lifted to ℝ³.
    pub fn lift_direction(&self, theta: f64) -> Vector {
        let [b1, b2] = self.basis_vectors();
        b1 * theta.cos() + b2 * theta.sin()
    }

    /// Fourier coefficients `(a_k, b_k)` of the radial function,
    /// `k = 0..m/2`.
    fn fourier(&self) -> Vec<(f64, f64)> {
        let m = self.radii.len();
        let kmax = m / 2;
        (0..=kmax)
            .map(|k| {
                let (mut a, mut b) = (0.0, 0.0);
                for (j, r) in self.radii.iter().enumerate() {
                    let phi = TAU * (k * j % m) as f64 / m as f64;
                    a += r * phi.cos();
                    b += r * phi.sin();
                }
                let w = if k == 0 || 2 * k == m { 1.0 } else { 2.0 };
                (w * a / m as f64, w * b / m as f64)
            })
            .collect()
    }
}

fn plane_frame(plane: &AffineHyperplane) -> Result<(Vector, Vector, Vector)> {
    let basis = hyperplane_basis(&plane.normal)?;
    Ok((&plane.normal * plane.offset, basis[0].clone(), basis[1].clone()))
}

fn bisect_ray(k: &BodyOracle, from: &Vector, u: &Vector, hi: f64, eps: f64) -> f64 {
    let (mut a, mut b) = (0.0, hi);
    while b - a > eps {
        let m = 0.5 * (a + b);
        if k.contains(&(from + u * m)) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Samples the section of `K` by `plane` with `m >= 8` rays.
///
/// `None` when no probe of the plane (a polar grid of radius `2R` around the
/// foot of the interior point) lies in `K`, or when the section is
/// numerically a point.
pub fn section_boundary(k: &BodyOracle, plane: &AffineHyperplane, m: usize, tol: f64) -> Result<Option<PlanarSection>> {
    if k.dim() != 3 {
        return Err(Error::UnsupportedDimension(k.dim()));
    }
    if plane.normal.len() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: plane.normal.len(),
        });
    }
    let m = m.max(8);
    let r = k.bounding_radius();
    let (foot, b1, b2) = plane_frame(plane)?;
    let eps = tol * r;
    let hi = 2.0 * 1.001 * r;
    let dir = |t: f64| &b1 * t.cos() + &b2 * t.sin();

    let y0 = plane.project(k.interior_point());
    let mut p = if k.contains(&y0) {
        Some(y0.clone())
    } else {
        let mut found = None;
        'probe: for i in 1..=32 {
            let rho = 2.0 * r * i as f64 / 32.0;
            for j in 0..64 {
                let q = &y0 + dir(TAU * j as f64 / 64.0) * rho;
                if k.contains(&q) {
                    found = Some(q);
                    break 'probe;
                }
            }
        }
        found
    };
    let Some(mut center) = p.take() else {
        return Ok(None);
    };
    // Rough centering by alternating chord midpoints.
    for _ in 0..2 {
        for u in [&b1, &b2] {
            let fwd = bisect_ray(k, &center, u, hi, eps);
            let back = bisect_ray(k, &center, &-u, hi, eps);
            center += u * (0.5 * (fwd - back));
        }
    }

    let shoot = |c: &Vector| -> Vec<f64> {
        (0..m)
            .map(|j| bisect_ray(k, c, &dir(TAU * j as f64 / m as f64), hi, eps))
            .collect()
    };
    let mut radii = shoot(&center);
    for _ in 0..CENTERING_PASSES {
        let (mut sx, mut sy, mut s2) = (0.0, 0.0, 0.0);
        for (j, rr) in radii.iter().enumerate() {
            let t = TAU * j as f64 / m as f64;
            sx += rr.powi(3) * t.cos();
            sy += rr.powi(3) * t.sin();
            s2 += rr * rr;
        }
        if s2 <= 0.0 {
            break;
        }
        let shift = (2.0 / 3.0) * sx / s2;
        let shift_y = (2.0 / 3.0) * sy / s2;
        let next = &center + &b1 * shift + &b2 * shift_y;
        if !k.contains(&next) {
            break;
        }
        center = next;
        radii = shoot(&center);
        if shift.hypot(shift_y) <= eps {
            break;
        }
    }
    let max_r = radii.iter().copied().fold(0.0, f64::max);
    if max_r <= 1e3 * eps {
        return Ok(None);
    }

    let cy = [(&center - &foot).dot(&b1), (&center - &foot).dot(&b2)];
    let boundary = radii
        .iter()
        .enumerate()
        .map(|(j, rr)| {
            let t = TAU * j as f64 / m as f64;
            [cy[0] + rr * t.cos(), cy[1] + rr * t.sin()]
        })
        .collect();
    Ok(Some(PlanarSection {
        plane: plane.clone(),
        basis: [b1.iter().copied().collect(), b2.iter().copied().collect()],
        boundary,
        centroid: cy,
        radii,
        scale: r,
    }))
}

/// A mirror line of a section: through the centroid at angle `angle` in the
/// intrinsic basis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryAxis {
    pub angle: f64,
    pub direction: ProjLine,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectionSymmetry {
    pub axes: Vec<SymmetryAxis>,
    /// Every grid angle passed: the section is numerically a disc.
    pub circle: bool,
    /// Smallest residual over all local minima, accepted or not.
    pub best_residual: f64,
}

fn residual_fn(coeffs: &[(f64, f64)], scale: f64) -> impl Fn(f64) -> f64 + '_ {
    move |theta: f64| {
        let mut acc = 0.0;
        for (k, &(a, b)) in coeffs.iter().enumerate().skip(1) {
            let (s, c) = (2.0 * k as f64 * theta).sin_cos();
            let a2 = a * c + b * s;
            let b2 = a * s - b * c;
            acc += (a - a2).powi(2) + (b - b2).powi(2);
        }
        (0.5 * acc).sqrt() / scale
    }
}

fn golden_min(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

/// Mirror lines of a section through its centroid with residual at most
/// `threshold`.
///
/// The residual is the RMS difference between the radial function and its
/// reflection across the line, over the body's bounding radius.
pub fn section_symmetry_axes(s: &PlanarSection, threshold: f64) -> SectionSymmetry {
    let coeffs = s.fourier();
    let f = residual_fn(&coeffs, s.scale);
    let grid: Vec<f64> = (0..GRID_ANGLES)
        .map(|i| f(PI * i as f64 / GRID_ANGLES as f64))
        .collect();
    let circle = grid.iter().all(|&v| v <= threshold);
    let h = PI / GRID_ANGLES as f64;
    let mut minima: Vec<(f64, f64)> = Vec::new();
    for i in 0..GRID_ANGLES {
        let prev = grid[(i + GRID_ANGLES - 1) % GRID_ANGLES];
        let next = grid[(i + 1) % GRID_ANGLES];
        if grid[i] <= prev && grid[i] < next || (grid[i] < prev && grid[i] <= next) {
            let t0 = PI * i as f64 / GRID_ANGLES as f64;
            let t = golden_min(&f, t0 - h, t0 + h, GOLDEN_TOL).rem_euclid(PI);
            minima.push((t, f(t)));
        }
    }
    let best_residual = minima.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
    minima.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut axes: Vec<SymmetryAxis> = Vec::new();
    for (t, res) in minima {
        if res > threshold {
            continue;
        }
        let close = axes.iter().any(|a| {
            let d = (a.angle - t).rem_euclid(PI);
            d.min(PI - d) < 1e-4
        });
        if !close {
            axes.push(SymmetryAxis {
                angle: t,
                direction: ProjLine::from_slice(&[t.cos(), t.sin()]).expect("unit"),
                residual: res,
            });
        }
    }
    SectionSymmetry {
        axes,
        circle,
        best_residual,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BezdekConfig {
    /// Threshold on section symmetry residuals.
    pub threshold: f64,
    /// Tolerance on the angle (and normalized offset) between the body
    /// mirror's trace in the plane and the section's mirror line.
    pub angle_threshold: f64,
    pub rays: usize,
    pub reflection: ReflectionConfig,
    pub samples: usize,
    pub seed: u64,
    /// Count empty sections in the fractions' denominators.
    pub include_empty: bool,
}

impl Default for BezdekConfig {
    fn default() -> Self {
        BezdekConfig {
            threshold: DEFAULT_THRESHOLD,
            angle_threshold: DEFAULT_THRESHOLD,
            rays: 128,
            reflection: ReflectionConfig::default(),
            samples: 200,
            seed: 0,
            include_empty: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    /// Direction of the reflection of `K` (in-plane normal of the mirror line).
    pub line: ProjLine,
    pub fit: MirrorFit,
    pub invariance_error: f64,
    /// Angle between the body mirror's trace in the plane and the section's
    /// mirror line.
    pub trace_angle: f64,
    /// Distance from the section centroid to the body mirror, over `R`.
    pub trace_offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BezdekReport {
    pub plane: AffineHyperplane,
    pub empty: bool,
    pub circle: bool,
    pub section_axes: Vec<SymmetryAxis>,
    pub best_residual: Option<f64>,
    pub bezdek: bool,
    pub strong_bezdek: bool,
    pub witness: Option<Witness>,
}

fn strong_witness(
    tester: &ReflectionTester<'_>,
    section: &PlanarSection,
    angles: &[f64],
    config: &BezdekConfig,
) -> Option<Witness> {
    let g = section.lift(section.centroid);
    let n = &section.plane.normal;
    let r = section.scale;
    for &theta in angles {
        let t = section.lift_direction(theta);
        let l = ProjLine::new(&section.lift_direction(theta + PI / 2.0)).ok()?;
        let Ok(test) = tester.test(&l) else {
            continue;
        };
        if !test.accepted {
            continue;
        }
        let nu = &test.fit.hyperplane.normal;
        let trace = nu.cross(n);
        let trace_angle = if trace.norm() < 1e-12 {
            PI / 2.0
        } else {
            crate::linalg::line_angle(&trace, &t)
        };
        let trace_offset = test.fit.hyperplane.signed_distance(&g).abs() / r;
        if trace_angle <= config.angle_threshold && trace_offset <= config.angle_threshold {
            return Some(Witness {
                line: l,
                fit: test.fit,
                invariance_error: test.invariance_error,
                trace_angle,
                trace_offset,
            });
        }
    }
    None
}

fn classify_with(
    tester: &ReflectionTester<'_>,
    plane: &AffineHyperplane,
    config: &BezdekConfig,
) -> Result<BezdekReport> {
    let k = tester.body();
    let Some(section) = section_boundary(k, plane, config.rays, config.reflection.tol)? else {
        return Ok(BezdekReport {
            plane: plane.clone(),
            empty: true,
            circle: false,
            section_axes: Vec::new(),
            best_residual: None,
            bezdek: true,
            strong_bezdek: false,
            witness: None,
        });
    };
    let sym = section_symmetry_axes(&section, config.threshold);
    let bezdek = sym.circle || !sym.axes.is_empty();
    let witness = if !bezdek {
        None
    } else if sym.circle {
        let angles: Vec<f64> = (0..8).map(|i| PI * i as f64 / 8.0).collect();
        strong_witness(tester, &section, &angles, config)
    } else {
        // Longest axis first, so homothetic sections pick the same witness.
        let mut angles: Vec<f64> = sym.axes.iter().map(|a| a.angle).collect();
        angles.sort_by(|a, b| section.diameter_at(*b).total_cmp(&section.diameter_at(*a)));
        strong_witness(tester, &section, &angles, config)
    };
    Ok(BezdekReport {
        plane: plane.clone(),
        empty: false,
        circle: sym.circle,
        best_residual: Some(sym.best_residual),
        section_axes: sym.axes,
        bezdek,
        strong_bezdek: witness.is_some(),
        witness,
    })
}

/// Bezdek / strong-Bezdek verdict for one plane of a body in ℝ³.
pub fn classify_plane(k: &BodyOracle, plane: &AffineHyperplane, config: &BezdekConfig) -> Result<BezdekReport> {
    if k.dim() != 3 {
        return Err(Error::UnsupportedDimension(k.dim()));
    }
    let tester = ReflectionTester::new(k, config.reflection);
    classify_with(&tester, plane, config)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BezdekRow {
    pub index: usize,
    pub normal: Vec<f64>,
    pub offset: f64,
    pub empty: bool,
    pub bezdek: bool,
    pub strong_bezdek: bool,
    pub best_residual: Option<f64>,
    pub witness: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BezdekScanReport {
    pub samples: usize,
    /// Planes entering the fractions.
    pub counted: usize,
    pub empty: usize,
    pub fraction_bezdek: f64,
    pub fraction_strong: f64,
    pub threshold: f64,
    pub seed: u64,
    pub rows: Vec<BezdekRow>,
}

/// Random planes (uniform normal, through a uniform point of the bounding
/// ball) classified one by one.
pub fn bezdek_scan(k: &BodyOracle, config: &BezdekConfig) -> Result<BezdekScanReport> {
    if k.dim() != 3 {
        return Err(Error::UnsupportedDimension(k.dim()));
    }
    let tester = ReflectionTester::new(k, config.reflection);
    let seed = derive_seed(config.seed, 0xBE2D);
    let rows: Vec<BezdekRow> = (0..config.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = indexed_rng(seed, i as u64);
            let normal = unit_vector(&mut rng, 3);
            let p = point_in_ball(&mut rng, k.interior_point(), k.bounding_radius());
            let plane = AffineHyperplane::new(&normal, &p)?;
            let rep = classify_with(&tester, &plane, config)?;
            Ok(BezdekRow {
                index: i,
                normal: plane.normal.iter().copied().collect(),
                offset: plane.offset,
                empty: rep.empty,
                bezdek: rep.bezdek,
                strong_bezdek: rep.strong_bezdek,
                best_residual: rep.best_residual,
                witness: rep.witness.map(|w| w.line.to_vec()),
            })
        })
        .collect::<Result<_>>()?;
    let empty = rows.iter().filter(|r| r.empty).count();
    let counted_rows: Vec<&BezdekRow> = rows.iter().filter(|r| config.include_empty || !r.empty).collect();
    let counted = counted_rows.len();
    let frac = |f: &dyn Fn(&BezdekRow) -> bool| {
        if counted == 0 {
            0.0
        } else {
            counted_rows.iter().filter(|r| f(r)).count() as f64 / counted as f64
        }
    };
    Ok(BezdekScanReport {
        samples: config.samples,
        counted,
        empty,
        fraction_bezdek: frac(&|r| r.bezdek),
        fraction_strong: frac(&|r| r.strong_bezdek),
        threshold: config.threshold,
        seed: config.seed,
        rows,
    })
}
