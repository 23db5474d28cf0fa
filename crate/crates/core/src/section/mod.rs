//! Central hyperplane sections of an ellipsoid and the fibers of the ground
//! map.
//!
//! The fiber over a hyperplane `Γ` is the set of diagonal lines whose ground
//! hyperplane is `Γ`; these are exactly the axes of the section `Γ ∩ E` that
//! are not axes of `E`. Over generic hyperplanes the fiber has `k - 1`
//! points of pairwise distinct lengths, `k` being the number of distinct
//! binormal lengths of `E`.

mod monodromy;
mod scan;

pub use monodromy::{chart_loop, geodesic_path, track_fiber, MonodromyResult, TrackConfig};
pub use scan::{cover_scan, CoverScanConfig, CoverScanReport, CoverScanRow};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, Matrix, SymMatrix, Vector};
use crate::quadric::{
    binormal_angle, chord_length, spectrum_partition, Ellipsoid, ProjHyperplane, ProjLine,
    SpectrumPartition, DEFAULT_BINORMAL_TOL, DEFAULT_GROUPING_TOL, SCAN_BINORMAL_TOL,
};

/// The ellipsoid `Γ ∩ E` in coordinates of the deterministic basis of `Γ`.
#[derive(Debug, Clone)]
pub struct SectionEllipsoid {
    pub carrier: ProjHyperplane,
    pub basis: Vec<Vector>,
    /// `Bᵀ A B`.
    pub form: SymMatrix,
}

impl SectionEllipsoid {
    pub fn basis_matrix(&self) -> Matrix {
        Matrix::from_columns(&self.basis)
    }

    /// Maps section coordinates back into ℝⁿ.
    pub fn lift(&self, y: &Vector) -> Vector {
        self.basis_matrix() * y
    }
}

pub fn section_form(e: &Ellipsoid, g: &ProjHyperplane) -> Result<SectionEllipsoid> {
    if g.dim() != e.dim() {
        return Err(Error::DimensionMismatch {
            expected: e.dim(),
            got: g.dim(),
        });
    }
    let basis = g.basis();
    let form = e.form().congruence(&Matrix::from_columns(&basis))?;
    Ok(SectionEllipsoid {
        carrier: g.clone(),
        basis,
        form,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectionAxis {
    pub line: ProjLine,
    pub length: f64,
    /// Eigenvalue of the section form along this axis.
    #[serde(skip)]
    pub eigenvalue: f64,
}

/// Axes of a section, sorted by decreasing length.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionAxes {
    pub axes: Vec<SectionAxis>,
    /// Index groups of axes sharing one length (only groups of size > 1).
    pub degenerate_groups: Vec<Vec<usize>>,
}

impl SectionAxes {
    /// Every direction of the section is an axis (spherical section).
    pub fn totally_degenerate(&self) -> bool {
        self.degenerate_groups
            .iter()
            .any(|g| g.len() == self.axes.len())
    }
}

/// Axes of `Γ ∩ E` from the eigenproblem of the section form.
pub fn section_axes(e: &Ellipsoid, g: &ProjHyperplane) -> Result<SectionAxes> {
    section_axes_with(e, g, DEFAULT_GROUPING_TOL)
}

pub fn section_axes_with(
    e: &Ellipsoid,
    g: &ProjHyperplane,
    grouping_tol: f64,
) -> Result<SectionAxes> {
    let sec = section_form(e, g)?;
    let eig = sym_eigen(&sec.form);
    let b = sec.basis_matrix();
    let mut axes = Vec::with_capacity(eig.values.len());
    for (mu, y) in eig.values.iter().zip(&eig.vectors) {
        axes.push(SectionAxis {
            line: ProjLine::new(&(&b * y))?,
            length: 2.0 / mu.sqrt(),
            eigenvalue: *mu,
        });
    }
    let mut degenerate_groups = Vec::new();
    let mut start = 0;
    for i in 1..=axes.len() {
        let split = i == axes.len()
            || (axes[i].eigenvalue - axes[i - 1].eigenvalue) / axes[i].eigenvalue > grouping_tol;
        if split {
            if i - start > 1 {
                degenerate_groups.push((start..i).collect());
            }
            start = i;
        }
    }
    Ok(SectionAxes {
        axes,
        degenerate_groups,
    })
}

/// Tolerances for fiber computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiberTolerances {
    /// Angle below which a section axis counts as an axis of `E`.
    pub binormal: f64,
    /// Relative eigenvalue grouping tolerance.
    pub grouping: f64,
    /// Genericity threshold for projections and length gaps.
    pub generic: f64,
}

impl Default for FiberTolerances {
    fn default() -> Self {
        FiberTolerances {
            binormal: DEFAULT_BINORMAL_TOL,
            grouping: DEFAULT_GROUPING_TOL,
            generic: 1e-6,
        }
    }
}

impl FiberTolerances {
    /// Coarser binormal tolerance used by scans.
    pub fn scan() -> Self {
        FiberTolerances {
            binormal: SCAN_BINORMAL_TOL,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberLine {
    pub line: ProjLine,
    pub length: f64,
}

/// `γ⁻¹(Γ)`: diagonal lines whose ground hyperplane is `Γ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberResult {
    pub hyperplane: ProjHyperplane,
    /// Sorted by decreasing chord length.
    pub lines: Vec<FiberLine>,
    pub generic: bool,
}

impl FiberResult {
    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }
}

pub fn fiber(e: &Ellipsoid, g: &ProjHyperplane, tol: &FiberTolerances) -> Result<FiberResult> {
    let p = spectrum_partition(e, tol.grouping)?;
    fiber_with_partition(e, g, &p, tol).map(|(f, _)| f)
}

/// Fiber plus the binormal angle of every section axis, so callers can judge
/// how safely each axis was classified.
pub(crate) fn fiber_with_partition(
    e: &Ellipsoid,
    g: &ProjHyperplane,
    p: &SpectrumPartition,
    tol: &FiberTolerances,
) -> Result<(FiberResult, Vec<f64>)> {
    if p.k < 2 {
        return Err(Error::Sphere);
    }
    let sa = section_axes_with(e, g, tol.grouping)?;
    let angles: Vec<f64> = sa.axes.iter().map(|a| binormal_angle(e, &a.line)).collect();
    for group in &sa.degenerate_groups {
        if group.iter().any(|&i| angles[i] > tol.binormal) {
            return Err(Error::DegenerateSection);
        }
    }
    let lines = sa
        .axes
        .into_iter()
        .zip(&angles)
        .filter(|(_, &ang)| ang > tol.binormal)
        .map(|(a, _)| FiberLine {
            line: a.line,
            length: a.length,
        })
        .collect();
    Ok((
        FiberResult {
            hyperplane: g.clone(),
            lines,
            generic: is_generic_hyperplane(e, g, p, tol.generic),
        },
        angles,
    ))
}

/// Smallest of the quantities that must stay away from zero for `l` to be a
/// generic diagonal: projections of `l` onto each eigenspace and relative
/// gaps between `λ(l)` and each binormal length.
pub fn line_genericity_margin(e: &Ellipsoid, l: &ProjLine, p: &SpectrumPartition) -> f64 {
    let len = chord_length(e, l);
    p.groups
        .iter()
        .map(|g| {
            let proj = g.projection_norm(l.dir());
            let gap = (len - g.binormal_length).abs() / g.binormal_length;
            proj.min(gap)
        })
        .fold(f64::INFINITY, f64::min)
}

/// `l ⊄ V_i⊥` and `λ(l) ≠ λ_i` for every class `i`, with threshold `tol`.
pub fn is_generic_line(e: &Ellipsoid, l: &ProjLine, p: &SpectrumPartition, tol: f64) -> bool {
    if p.k < 2 || l.dim() != e.dim() {
        return false;
    }
    let len = chord_length(e, l);
    p.groups.iter().all(|g| {
        g.projection_norm(l.dir()) > tol
            && (len - g.binormal_length).abs() > tol * g.binormal_length
    })
}

/// Smallest projection of the normal of `Γ` onto an eigenspace; zero exactly
/// when some `V_i ⊂ Γ`.
pub fn hyperplane_genericity_margin(g: &ProjHyperplane, p: &SpectrumPartition) -> f64 {
    p.groups
        .iter()
        .map(|grp| grp.projection_norm(g.normal()))
        .fold(f64::INFINITY, f64::min)
}

/// `V_i ⊄ Γ` for every class `i`.
pub fn is_generic_hyperplane(
    e: &Ellipsoid,
    g: &ProjHyperplane,
    p: &SpectrumPartition,
    tol: f64,
) -> bool {
    p.k >= 2 && g.dim() == e.dim() && hyperplane_genericity_margin(g, p) > tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hyperplane_basis, line_angle, projector};
    use crate::quadric::{ground, mirror};
    use crate::rng::{indexed_rng, unit_vector};

    fn triaxial() -> Ellipsoid {
        Ellipsoid::diagonal(&[1.0, 0.25, 1.0 / 9.0]).unwrap()
    }

    fn plane(v: &[f64]) -> ProjHyperplane {
        ProjHyperplane::from_slice(v).unwrap()
    }

    fn random_ellipsoid(seed: u64, n: usize) -> Ellipsoid {
        let mut rng = indexed_rng(seed, 0);
        let q = {
            let m = Matrix::from_fn(n, n, |_, _| rand::Rng::random::<f64>(&mut rng) - 0.5);
            m.qr().q()
        };
        let d: Vec<f64> = (0..n).map(|i| 0.3 + 0.4 * i as f64).collect();
        let form = &q * Matrix::from_diagonal(&Vector::from_vec(d)) * q.transpose();
        Ellipsoid::centered(SymMatrix::new(form).unwrap()).unwrap()
    }

    #[test]
    fn section_form_examples() {
        let s = section_form(&triaxial(), &plane(&[0.0, 0.0, 1.0])).unwrap();
        assert_eq!(s.form.as_matrix(), &Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.25]));

        let sphere = Ellipsoid::diagonal(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        let s = section_form(&sphere, &plane(&[0.3, 0.1, -0.5, 0.2])).unwrap();
        assert!((s.form.as_matrix() - Matrix::identity(3, 3)).amax() < 1e-15);
    }

    #[test]
    fn section_points_land_on_boundary() {
        let e = random_ellipsoid(3, 5);
        let mut rng = indexed_rng(3, 1);
        let g = ProjHyperplane::from_normal(&unit_vector(&mut rng, 5)).unwrap();
        let s = section_form(&e, &g).unwrap();
        for _ in 0..100 {
            let y = unit_vector(&mut rng, 4);
            let x = s.lift(&y) / s.form.bilinear(&y, &y).sqrt();
            assert!((e.level(&x) - 1.0).abs() < 1e-10);
            assert!(g.normal().dot(&x).abs() < 1e-14);
        }
    }

    #[test]
    fn section_axes_examples() {
        let sa = section_axes(&triaxial(), &plane(&[0.0, 0.0, 1.0])).unwrap();
        assert_eq!(sa.axes.len(), 2);
        assert_eq!(sa.axes[0].line.to_vec(), vec![0.0, 1.0, 0.0]);
        assert!((sa.axes[0].length - 4.0).abs() < 1e-15);
        assert_eq!(sa.axes[1].line.to_vec(), vec![1.0, 0.0, 0.0]);
        assert!((sa.axes[1].length - 2.0).abs() < 1e-15);
        assert!(sa.degenerate_groups.is_empty());

        let sphere = Ellipsoid::diagonal(&[1.0, 1.0, 1.0]).unwrap();
        let sa = section_axes(&sphere, &plane(&[1.0, 2.0, 2.0])).unwrap();
        assert!(sa.totally_degenerate());
    }

    #[test]
    fn oblique_section_axes_are_in_section_binormals() {
        let e = triaxial();
        let g = plane(&[1.0, 1.0, 1.0]);
        let sa = section_axes(&e, &g).unwrap();
        assert_eq!(sa.axes.len(), 2);
        assert!(sa.axes[0].line.angle(&sa.axes[1].line) > std::f64::consts::FRAC_PI_2 - 1e-12);
        for ax in &sa.axes {
            // M(l) ∩ Γ must be orthogonal to l inside Γ: the in-plane part of
            // A·l is parallel to l.
            let m = mirror(&e, &ax.line).unwrap();
            let in_plane = crate::linalg::project_off(m.normal(), g.normal());
            assert!(line_angle(&in_plane, ax.line.dir()) < 1e-8);
        }
    }

    #[test]
    fn fiber_examples() {
        let e = triaxial();
        let f = fiber(&e, &plane(&[1.0, 1.0, 1.0]), &FiberTolerances::default()).unwrap();
        assert_eq!(f.len(), 2);
        assert!(f.generic);
        assert!(f.lines[0].length > f.lines[1].length);

        let f = fiber(&e, &plane(&[0.0, 0.0, 1.0]), &FiberTolerances::default()).unwrap();
        assert!(f.is_empty());
        assert!(!f.generic);

        let sphere = Ellipsoid::diagonal(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(
            fiber(&sphere, &plane(&[1.0, 0.0, 0.0]), &FiberTolerances::default()),
            Err(Error::Sphere)
        );
    }

    #[test]
    fn degenerate_section_of_spheroid_is_reported() {
        // Circular sections of a triaxial ellipsoid contain the middle axis;
        // their in-plane directions other than e2 are diagonal lines.
        let e = triaxial();
        // normal (nx, 0, nz) with nx² : nz² = (1 - 1/4) : (1/4 - 1/9)
        let x = (0.25f64 - 1.0 / 9.0).sqrt();
        let z = (1.0f64 - 0.25).sqrt();
        let g = plane(&[z, 0.0, x]);
        assert_eq!(
            fiber(&e, &g, &FiberTolerances::default()),
            Err(Error::DegenerateSection)
        );
    }

    #[test]
    fn repeated_binormal_group_in_section_is_not_degenerate() {
        // dim V_1 = 3: every hyperplane meets V_1 in a plane of equal axes,
        // all of them axes of E, so the fiber is still well defined.
        let e = Ellipsoid::diagonal(&[1.0, 1.0, 1.0, 0.25, 0.25, 1.0 / 9.0]).unwrap();
        let g = plane(&[0.3, -0.4, 0.5, 0.2, 0.6, 0.35]);
        let f = fiber(&e, &g, &FiberTolerances::default()).unwrap();
        assert_eq!(f.len(), 2);
    }

    #[test]
    fn generic_line_examples() {
        let e = triaxial();
        let p = spectrum_partition(&e, DEFAULT_GROUPING_TOL).unwrap();
        let l = ProjLine::from_slice(&[1.0, 1.0, 0.0]).unwrap();
        assert!(!is_generic_line(&e, &l, &p, 1e-9));

        let l = ProjLine::from_slice(&[1.0, 1.0, 1.0]).unwrap();
        let len = chord_length(&e, &l);
        assert!((len - 12.0 * 3f64.sqrt() / 7.0).abs() < 1e-14);
        assert!((len - 2.0 * (3.0 / (1.0 + 0.25 + 1.0 / 9.0f64)).sqrt()).abs() < 1e-14);
        assert!(is_generic_line(&e, &l, &p, 1e-9));

        for i in 0..3 {
            assert!(!is_generic_line(&e, &ProjLine::axis(3, i), &p, 1e-9));
        }
    }

    #[test]
    fn generic_hyperplane_examples() {
        let e = triaxial();
        let p = spectrum_partition(&e, DEFAULT_GROUPING_TOL).unwrap();
        assert!(is_generic_hyperplane(&e, &plane(&[1.0, 1.0, 1.0]), &p, 1e-9));
        assert!(!is_generic_hyperplane(&e, &plane(&[0.0, 0.0, 1.0]), &p, 1e-9));

        let e5 = Ellipsoid::diagonal(&[1.0, 1.0, 0.25, 0.25, 1.0 / 9.0]).unwrap();
        let p5 = spectrum_partition(&e5, DEFAULT_GROUPING_TOL).unwrap();
        let g = plane(&[1.0, 0.0, 1.0, 0.0, 1.0]);
        // Oracle: projection norms onto the coordinate eigenspaces.
        let u = g.normal();
        let norms = [u[4].abs(), u[2].hypot(u[3]), u[0].hypot(u[1])];
        assert!(norms.iter().all(|&x| (x - 1.0 / 3f64.sqrt()).abs() < 1e-15));
        assert!(is_generic_hyperplane(&e5, &g, &p5, 1e-9));
    }

    /// Spans `span(e_1..e_k) ∩ Γ` from the construction with one line `e_i`
    /// per eigenspace: `V_i` itself when it is a line, otherwise the line of
    /// `V_i` orthogonal to `Γ ∩ V_i`.
    fn reduced_space(p: &SpectrumPartition, g: &ProjHyperplane) -> Vec<Vector> {
        p.groups
            .iter()
            .map(|grp| {
                if grp.dim() == 1 {
                    grp.basis[0].clone()
                } else {
                    let proj = grp
                        .basis
                        .iter()
                        .fold(Vector::zeros(g.dim()), |acc, b| acc + b * b.dot(g.normal()));
                    &proj / proj.norm()
                }
            })
            .collect()
    }

    #[test]
    fn fiber_lies_in_reduced_coordinate_space() {
        let cases = [
            vec![1.0, 1.0, 0.25, 0.25, 1.0 / 9.0],
            vec![1.0, 1.0, 1.0, 0.3, 0.3, 0.1],
            vec![2.0, 1.0, 0.5, 0.25],
        ];
        for (ci, d) in cases.iter().enumerate() {
            let e = Ellipsoid::diagonal(d).unwrap();
            let n = d.len();
            let p = spectrum_partition(&e, DEFAULT_GROUPING_TOL).unwrap();
            let mut rng = indexed_rng(40 + ci as u64, 0);
            for _ in 0..50 {
                let g = ProjHyperplane::from_normal(&unit_vector(&mut rng, n)).unwrap();
                let es = reduced_space(&p, &g);
                let pr = projector(&es, n);
                let f = fiber(&e, &g, &FiberTolerances::default()).unwrap();
                assert_eq!(f.len(), p.k - 1);
                for fl in &f.lines {
                    let v = fl.line.dir();
                    assert!((&pr * v - v).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn fiber_lines_ground_back_to_hyperplane() {
        let e = random_ellipsoid(9, 4);
        let p = spectrum_partition(&e, DEFAULT_GROUPING_TOL).unwrap();
        let mut rng = indexed_rng(9, 2);
        for _ in 0..50 {
            let g = ProjHyperplane::from_normal(&unit_vector(&mut rng, 4)).unwrap();
            let f = fiber(&e, &g, &FiberTolerances::default()).unwrap();
            assert_eq!(f.len(), 3);
            for fl in &f.lines {
                assert!(is_generic_line(&e, &fl.line, &p, 1e-9));
                let back = ground(&e, &fl.line, DEFAULT_BINORMAL_TOL).unwrap();
                assert!(back.distance(&g) < 1e-8);
            }
        }
    }

    #[test]
    fn hyperplane_basis_spans_rotated_hyperplane() {
        let mut rng = indexed_rng(5, 5);
        for n in 2..7 {
            let u = unit_vector(&mut rng, n);
            let basis = hyperplane_basis(&u).unwrap();
            let p = projector(&basis, n);
            let expect = Matrix::identity(n, n) - &u * u.transpose();
            assert!((p - expect).amax() < 1e-10);
        }
    }
}
