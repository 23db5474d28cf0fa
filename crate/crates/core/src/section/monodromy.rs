//! Continuation of fiber points along paths of hyperplanes.
//!
//! Each sheet is followed by nearest-neighbour matching between consecutive
//! fibers. A match is ambiguous when the runner-up candidate is within
//! `ambiguity_factor` of the nearest one; ambiguous or overlong jumps trigger
//! bisection of the offending segment.

use serde::Serialize;

use super::{fiber_with_partition, hyperplane_genericity_margin, FiberLine, FiberTolerances};
use crate::error::{Error, Result};
use crate::linalg::{hyperplane_basis, Vector};
use crate::quadric::{spectrum_partition, Ellipsoid, ProjHyperplane, ProjLine, SpectrumPartition};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrackConfig {
    pub tol: FiberTolerances,
    /// Largest projective distance allowed between consecutive waypoints.
    pub max_step: f64,
    pub ambiguity_factor: f64,
    pub max_halvings: u32,
    /// Largest projective distance a sheet may move in one matched step.
    pub continuity_threshold: f64,
    /// Waypoints must clear the non-generic set by `margin_factor × tol.generic`.
    pub margin_factor: f64,
}

impl Default for TrackConfig {
    fn default() -> Self {
        TrackConfig {
            tol: FiberTolerances::scan(),
            max_step: 0.05,
            ambiguity_factor: 2.0,
            max_halvings: 8,
            continuity_threshold: 0.25,
            margin_factor: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonodromyResult {
    #[serde(rename = "loop")]
    pub waypoints: Vec<ProjHyperplane>,
    /// `permutation[i] = j`: the sheet of rank `i + 1` at the start (ranked
    /// by decreasing length) arrives as the sheet of rank `j` at the end.
    pub permutation: Vec<usize>,
    pub max_step_jump: f64,
    pub closed: bool,
    /// Fiber lines at the first waypoint, by decreasing length.
    pub start_lines: Vec<ProjLine>,
    /// Tracked position of each starting sheet at the last waypoint.
    pub end_lines: Vec<ProjLine>,
    /// Number of segment bisections performed.
    pub refinements: usize,
}

impl MonodromyResult {
    pub fn is_identity(&self) -> bool {
        self.permutation.iter().enumerate().all(|(i, &j)| j == i + 1)
    }
}

struct Tracker<'a> {
    e: &'a Ellipsoid,
    p: SpectrumPartition,
    config: &'a TrackConfig,
    sheets: usize,
    max_jump: f64,
    refinements: usize,
}

impl Tracker<'_> {
    fn fiber_at(&self, g: &ProjHyperplane) -> Result<Vec<FiberLine>> {
        let margin = hyperplane_genericity_margin(g, &self.p);
        if margin <= self.config.margin_factor * self.config.tol.generic {
            return Err(Error::NonGeneric { margin });
        }
        let (f, _) = fiber_with_partition(self.e, g, &self.p, &self.config.tol)?;
        if f.len() != self.sheets {
            return Err(Error::NonGeneric { margin });
        }
        Ok(f.lines)
    }

    /// Matches `current` (one line per sheet) onto `next`; `None` when any
    /// assignment is ambiguous, not injective, or jumps too far.
    fn try_match(&self, current: &[ProjLine], next: &[FiberLine]) -> Option<(Vec<ProjLine>, f64)> {
        let mut used = vec![false; next.len()];
        let mut out = Vec::with_capacity(current.len());
        let mut jump: f64 = 0.0;
        for c in current {
            let mut d: Vec<(f64, usize)> = next
                .iter()
                .enumerate()
                .map(|(j, fl)| (c.distance(&fl.line), j))
                .collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (best, j) = d[0];
            if d.len() > 1 && d[1].0 < self.config.ambiguity_factor * best {
                return None;
            }
            if best > self.config.continuity_threshold || used[j] {
                return None;
            }
            used[j] = true;
            jump = jump.max(best);
            out.push(next[j].line.clone());
        }
        Some((out, jump))
    }

    fn advance(
        &mut self,
        current: Vec<ProjLine>,
        a: &ProjHyperplane,
        b: &ProjHyperplane,
        depth: u32,
        step: usize,
    ) -> Result<Vec<ProjLine>> {
        let next = self.fiber_at(b)?;
        if let Some((lines, jump)) = self.try_match(&current, &next) {
            self.max_jump = self.max_jump.max(jump);
            return Ok(lines);
        }
        if depth >= self.config.max_halvings {
            return Err(Error::SheetCollision { step });
        }
        self.refinements += 1;
        let mid = midpoint(a, b);
        let half = self.advance(current, a, &mid, depth + 1, step)?;
        self.advance(half, &mid, b, depth + 1, step)
    }
}

fn midpoint(a: &ProjHyperplane, b: &ProjHyperplane) -> ProjHyperplane {
    let s = if a.normal().dot(b.normal()) >= 0.0 { 1.0 } else { -1.0 };
    ProjHyperplane::from_normal(&(a.normal() + b.normal() * s)).expect("distinct lines are not antipodal")
}

/// Follows the `k - 1` fiber points along `path` and reports the induced
/// permutation of sheets ranked by length.
pub fn track_fiber(
    e: &Ellipsoid,
    path: &[ProjHyperplane],
    config: &TrackConfig,
) -> Result<MonodromyResult> {
    if path.is_empty() {
        return Err(Error::InvalidArgument("empty path".into()));
    }
    let p = spectrum_partition(e, config.tol.grouping)?;
    if p.k < 2 {
        return Err(Error::Sphere);
    }
    for (i, w) in path.windows(2).enumerate() {
        let distance = w[0].distance(&w[1]);
        if distance > config.max_step {
            return Err(Error::StepTooLarge {
                step: i,
                distance,
                bound: config.max_step,
            });
        }
    }
    let mut tracker = Tracker {
        e,
        sheets: p.k - 1,
        p,
        config,
        max_jump: 0.0,
        refinements: 0,
    };
    let start = tracker.fiber_at(&path[0])?;
    let mut current: Vec<ProjLine> = start.iter().map(|fl| fl.line.clone()).collect();
    for (i, w) in path.windows(2).enumerate() {
        current = tracker.advance(current, &w[0], &w[1], 0, i)?;
    }
    let end = tracker.fiber_at(path.last().unwrap())?;
    let permutation = current
        .iter()
        .map(|c| {
            end.iter()
                .enumerate()
                .min_by(|x, y| c.distance(&x.1.line).total_cmp(&c.distance(&y.1.line)))
                .map(|(j, _)| j + 1)
                .unwrap()
        })
        .collect();
    Ok(MonodromyResult {
        closed: path[0].distance(path.last().unwrap()) <= 1e-12,
        waypoints: path.to_vec(),
        permutation,
        start_lines: start.into_iter().map(|fl| fl.line).collect(),
        end_lines: current,
        max_step_jump: tracker.max_jump,
        refinements: tracker.refinements,
    })
}

/// Closed loop `normalize(n₀ + r(cos t·u₁ + sin t·u₂))` in the affine chart
/// around `center`, with `steps` segments; the last waypoint repeats the first.
pub fn chart_loop(
    center: &ProjHyperplane,
    radius: f64,
    steps: usize,
    plane: Option<(usize, usize)>,
) -> Result<Vec<ProjHyperplane>> {
    let n0 = center.normal();
    if n0.len() < 3 {
        return Err(Error::InvalidArgument("chart loops need dimension ≥ 3".into()));
    }
    let basis = hyperplane_basis(n0)?;
    let (i, j) = plane.unwrap_or((0, 1));
    if i == j || i >= basis.len() || j >= basis.len() {
        return Err(Error::InvalidArgument("chart plane indices out of range".into()));
    }
    let steps = steps.max(3);
    let mut out = Vec::with_capacity(steps + 1);
    for s in 0..steps {
        let t = std::f64::consts::TAU * s as f64 / steps as f64;
        let v: Vector = n0 + (&basis[i] * t.cos() + &basis[j] * t.sin()) * radius;
        out.push(ProjHyperplane::from_normal(&v)?);
    }
    out.push(out[0].clone());
    Ok(out)
}

/// Great-circle path between two hyperplanes (normals aligned first), split
/// so consecutive waypoints are at most `max_step` apart.
pub fn geodesic_path(
    a: &ProjHyperplane,
    b: &ProjHyperplane,
    max_step: f64,
) -> Result<Vec<ProjHyperplane>> {
    let u = a.normal();
    let s = if u.dot(b.normal()) >= 0.0 { 1.0 } else { -1.0 };
    let w = b.normal() * s;
    let angle = crate::linalg::line_angle(u, &w);
    let steps = ((angle / (0.9 * max_step)).ceil() as usize).max(1);
    let perp = crate::linalg::project_off(&w, u);
    let pn = perp.norm();
    let mut out = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = angle * k as f64 / steps as f64;
        let v = if pn > 0.0 {
            u * t.cos() + &perp * (t.sin() / pn)
        } else {
            u.clone()
        };
        out.push(ProjHyperplane::from_normal(&v)?);
    }
    Ok(out)
}
