//! Convex bodies given by membership oracles.
//!
//! Everything here touches the body only through `contains`, so any convex
//! set with a cheap predicate can be analysed. Lengths reported by the
//! analyses are divided by the bounding radius.

pub mod catalog;
mod chord;
mod classify;
mod mirror;
mod mvee;
mod scan;
mod spec;

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::quadric::Ellipsoid;
use crate::rng::{derive_seed, indexed_rng, point_in_ball, unit_vector};

pub use chord::{boundary_point, chord, sample_boundary, Chord};
pub use classify::{classify_body, ClassifyConfig, ClassifyReport, Evidence, RotationalEvidence, Verdict};
pub use mirror::{
    fit_mirror, has_reflection, AffineHyperplane, MirrorFit, ReflectionConfig, ReflectionTest,
    ReflectionTester,
};
pub use mvee::{mvee, FittedEllipsoid};
pub use scan::{
    direction_scan, orthogonal_reflection_scan, AcceptedLine, Continuum, DirectionScanConfig,
    DirectionScanReport, DirectionScanRow, OrthoCandidate, OrthoScanConfig, OrthoScanReport,
};
pub use spec::{BodySpec, Bump};

/// Default bisection tolerance, relative to the bounding radius.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default acceptance threshold for residuals.
pub const DEFAULT_THRESHOLD: f64 = 1e-3;

type Membership = dyn Fn(&Vector) -> bool + Send + Sync;

/// A convex body `K ⊂ ℝⁿ` known through its membership predicate.
///
/// Contract: `K` is convex, contains `interior_point` in its interior and
/// lies inside the closed ball of radius `bounding_radius` around it.
#[derive(Clone)]
pub struct BodyOracle {
    n: usize,
    contains: Arc<Membership>,
    interior_point: Vector,
    bounding_radius: f64,
    label: String,
}

impl fmt::Debug for BodyOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BodyOracle")
            .field("n", &self.n)
            .field("interior_point", &self.interior_point.as_slice())
            .field("bounding_radius", &self.bounding_radius)
            .field("label", &self.label)
            .finish()
    }
}

impl BodyOracle {
    pub fn new<F>(
        interior_point: Vector,
        bounding_radius: f64,
        label: impl Into<String>,
        contains: F,
    ) -> Result<Self>
    where
        F: Fn(&Vector) -> bool + Send + Sync + 'static,
    {
        let n = interior_point.len();
        if n < 2 || n > crate::linalg::MAX_DIM {
            return Err(Error::UnsupportedDimension(n));
        }
        if !(bounding_radius > 0.0 && bounding_radius.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "bounding radius must be positive, got {bounding_radius}"
            )));
        }
        if !contains(&interior_point) {
            return Err(Error::InvalidSpec("interior point is not inside the body".into()));
        }
        Ok(BodyOracle {
            n,
            contains: Arc::new(contains),
            interior_point,
            bounding_radius,
            label: label.into(),
        })
    }

    /// The solid ellipsoid as an oracle.
    pub fn from_ellipsoid(e: &Ellipsoid) -> Self {
        let e2 = e.clone();
        BodyOracle::new(e.center().clone(), e.circumradius(), "ellipsoid", move |x| {
            e2.contains(x)
        })
        .expect("ellipsoid center is interior")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn contains(&self, x: &Vector) -> bool {
        (self.contains)(x)
    }

    pub fn interior_point(&self) -> &Vector {
        &self.interior_point
    }

    pub fn bounding_radius(&self) -> f64 {
        self.bounding_radius
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityCheck {
    pub pairs_tested: usize,
    pub failures: usize,
}

impl ConvexityCheck {
    pub fn passed(&self) -> bool {
        self.pairs_tested > 0 && self.failures == 0
    }
}

/// Midpoint-closure spot check on `pairs` random pairs of contained points.
pub fn convexity_check(k: &BodyOracle, pairs: usize, seed: u64) -> ConvexityCheck {
    let seed = derive_seed(seed, 0xC0_4E_C5);
    let c = k.interior_point();
    let r = k.bounding_radius();
    let results: Vec<Option<bool>> = (0..pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = indexed_rng(seed, i as u64);
            let mut draw = || {
                // Points in the ball around the interior point, biased towards
                // the body by mixing in short rays.
                for _ in 0..200 {
                    let p = if rng.random::<bool>() {
                        point_in_ball(&mut rng, c, r)
                    } else {
                        let d = unit_vector(&mut rng, c.len());
                        let t = boundary_point(k, &d, 1e-6).map(|b| (b - c).norm()).unwrap_or(0.0);
                        c + d * (t * rng.random::<f64>())
                    };
                    if k.contains(&p) {
                        return Some(p);
                    }
                }
                None
            };
            let a = draw()?;
            let b = draw()?;
            Some(k.contains(&((a + b) * 0.5)))
        })
        .collect();
    let tested: Vec<bool> = results.into_iter().flatten().collect();
    ConvexityCheck {
        pairs_tested: tested.len(),
        failures: tested.iter().filter(|ok| !**ok).count(),
    }
}
