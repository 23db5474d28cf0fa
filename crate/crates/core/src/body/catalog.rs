//! Reference bodies used by tests, examples and the CLI documentation.

use super::spec::{BodySpec, Bump};
use crate::quadric::EllipsoidSpec;

/// Body of revolution about the z axis whose meridian is the superellipse
/// `|z/h|^p + |r/w|^p = 1`, sampled at `points` parameter values.
pub fn superellipse_revolution(p: f64, width: f64, height: f64, points: usize) -> BodySpec {
    let points = points.max(3);
    let mut profile: Vec<[f64; 2]> = (0..points)
        .map(|i| {
            // t from π to 0 so z increases.
            let t = std::f64::consts::PI * (1.0 - i as f64 / (points - 1) as f64);
            let (s, c) = t.sin_cos();
            let z = height * c.signum() * c.abs().powf(2.0 / p);
            let r = width * s.abs().powf(2.0 / p);
            [z, r]
        })
        .collect();
    profile[0] = [-height, 0.0];
    profile[points - 1] = [height, 0.0];
    profile.dedup_by(|a, b| a[0] <= b[0]);
    BodySpec::Revolution {
        profile,
        axis: None,
        center: None,
    }
}

/// Double cone capped by a spherical-ish rounding: a revolution profile with
/// a kink, far from any ellipsoid.
pub fn spindle_revolution(points: usize) -> BodySpec {
    let points = points.max(3);
    let profile = (0..points)
        .map(|i| {
            let z = -1.0 + 2.0 * i as f64 / (points - 1) as f64;
            [z, 0.2 + 0.8 * (1.0 - z.abs()).sqrt()]
        })
        .collect();
    BodySpec::Revolution {
        profile,
        axis: None,
        center: None,
    }
}

/// Triaxial ellipsoid with four asymmetric flattening bumps.
pub fn perturbed_ellipsoid(semi_axes: &[f64; 3]) -> BodySpec {
    let bump = |d: [f64; 3], offset: f64, weight: f64| Bump {
        direction: d.to_vec(),
        offset,
        weight,
    };
    BodySpec::Perturbed {
        ellipsoid: EllipsoidSpec::Axes {
            semi_axes: semi_axes.to_vec(),
            rotation: None,
            center: None,
        },
        bumps: vec![
            bump([1.0, 0.3, 0.2], 0.15, 4.0),
            bump([-0.2, 1.0, 0.5], 0.3, 3.0),
            bump([0.1, -0.4, 1.0], 0.2, 5.0),
            bump([-0.7, -0.6, -0.3], 0.35, 2.5),
        ],
    }
}
