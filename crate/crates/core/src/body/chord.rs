use rayon::prelude::*;
use serde::Serialize;

use super::BodyOracle;
use crate::linalg::{serialize_vector, Vector};
use crate::quadric::ProjLine;
use crate::rng::{derive_seed, indexed_rng, unit_vector};

const PROBES: usize = 64;
/// Parameters at this multiple of the bounding radius are outside `K`.
const OUTSIDE: f64 = 1.001;

/// The segment `K ∩ (base + ℝ·dir)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Chord {
    #[serde(serialize_with = "serialize_vector")]
    pub start: Vector,
    #[serde(serialize_with = "serialize_vector")]
    pub end: Vector,
}

impl Chord {
    pub fn midpoint(&self) -> Vector {
        (&self.start + &self.end) * 0.5
    }

    pub fn length(&self) -> f64 {
        (&self.end - &self.start).norm()
    }
}

/// Shrinks `[inside, outside]` until it is shorter than `eps`; returns the
/// midpoint of the final bracket.
fn bisect(mut inside: f64, mut outside: f64, eps: f64, member: impl Fn(f64) -> bool) -> f64 {
    while (outside - inside).abs() > eps {
        let mid = 0.5 * (inside + outside);
        if member(mid) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    0.5 * (inside + outside)
}

/// Chord of `K` along the line through `base` with direction `l`.
///
/// The line is probed at `t₀` (closest approach to the interior point) and on
/// a grid of 64 parameters across `t₀ ± R`; `None` when no probe is inside.
/// Endpoints are then bisected to `tol·R`.
pub fn chord(k: &BodyOracle, base: &Vector, l: &ProjLine, tol: f64) -> Option<Chord> {
    let d = l.dir();
    let r = k.bounding_radius();
    let t0 = (k.interior_point() - base).dot(d);
    let at = |t: f64| base + d * t;
    let member = |t: f64| k.contains(&at(t));
    let t_in = std::iter::once(t0)
        .chain((0..PROBES).map(|j| t0 + r * (-1.0 + 2.0 * (j as f64 + 0.5) / PROBES as f64)))
        .find(|&t| member(t))?;
    let eps = tol * r;
    let lo = bisect(t_in, t0 - OUTSIDE * r, eps, member);
    let hi = bisect(t_in, t0 + OUTSIDE * r, eps, member);
    Some(Chord {
        start: at(lo),
        end: at(hi),
    })
}

/// Boundary point on the ray from the interior point in direction `dir`
/// (not necessarily unit), bisected to `tol·R`.
pub fn boundary_point(k: &BodyOracle, dir: &Vector, tol: f64) -> Option<Vector> {
    let nrm = dir.norm();
    if !(nrm > 0.0 && nrm.is_finite()) {
        return None;
    }
    let u = dir / nrm;
    let c = k.interior_point();
    let r = k.bounding_radius();
    let t = bisect(0.0, OUTSIDE * r, tol * r, |t| k.contains(&(c + &u * t)));
    Some(c + u * t)
}

/// `count` boundary points along uniformly random rays from the interior
/// point, seeded per index.
pub fn sample_boundary(k: &BodyOracle, count: usize, seed: u64, tol: f64) -> Vec<Vector> {
    let seed = derive_seed(seed, 0xB0_DA_27);
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = indexed_rng(seed, i as u64);
            let d = unit_vector(&mut rng, k.dim());
            boundary_point(k, &d, tol).expect("unit direction")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadric::Ellipsoid;

    fn ball(n: usize) -> BodyOracle {
        BodyOracle::new(Vector::zeros(n), 1.0, "ball", |x| x.norm() <= 1.0).unwrap()
    }

    #[test]
    fn unit_ball_diameter() {
        let c = chord(&ball(3), &Vector::zeros(3), &ProjLine::axis(3, 0), 1e-9).unwrap();
        assert!((c.start[0] + 1.0).abs() < 1e-9);
        assert!((c.end[0] - 1.0).abs() < 1e-9);
        assert!(c.start[1].abs() < 1e-15 && c.end[2].abs() < 1e-15);
    }

    #[test]
    fn missing_line_is_empty() {
        let base = Vector::from_vec(vec![0.0, 2.0, 0.0]);
        assert!(chord(&ball(3), &base, &ProjLine::axis(3, 0), 1e-9).is_none());
    }

    #[test]
    fn ellipse_chord_matches_closed_form() {
        let e = Ellipsoid::diagonal(&[1.0, 0.25]).unwrap();
        let k = BodyOracle::from_ellipsoid(&e);
        let base = Vector::from_vec(vec![0.0, 0.5]);
        let c = chord(&k, &base, &ProjLine::axis(2, 0), 1e-9).unwrap();
        // x² + y²/4 = 1 at y = 1/2.
        let x = (1.0 - 0.25 / 4.0f64).sqrt();
        assert!((c.start[0] + x).abs() < 2e-9, "{}", c.start[0]);
        assert!((c.end[0] - x).abs() < 2e-9);
        assert_eq!(c.end[1], 0.5);
    }

    #[test]
    fn short_off_center_chord_is_found() {
        // The line grazes the disc far from the closest-approach parameter's
        // neighbourhood of the interior point.
        let k = ball(2);
        let base = Vector::from_vec(vec![5.0, 0.999]);
        let c = chord(&k, &base, &ProjLine::axis(2, 0), 1e-10).unwrap();
        let half = (1.0 - 0.999f64 * 0.999).sqrt();
        assert!((c.length() - 2.0 * half).abs() < 1e-9);
    }

    #[test]
    fn boundary_samples_lie_on_boundary() {
        let e = Ellipsoid::diagonal(&[1.0, 0.25, 1.0 / 9.0]).unwrap();
        let k = BodyOracle::from_ellipsoid(&e);
        for p in sample_boundary(&k, 200, 3, 1e-10) {
            assert!((e.level(&p) - 1.0).abs() < 1e-8);
        }
    }
}
