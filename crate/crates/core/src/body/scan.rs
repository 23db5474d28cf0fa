//! Scans over reflection directions.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::mirror::{AffineHyperplane, MirrorFit, ReflectionConfig, ReflectionTest, ReflectionTester};
use super::BodyOracle;
use crate::linalg::{hyperplane_basis, Vector};
use crate::quadric::ProjLine;
use crate::rng::{derive_seed, indexed_rng, unit_vector};

const TAG_LINES: u64 = 0xD1;
const TAG_BALLS: u64 = 0xD2;
const TAG_ORTHO: u64 = 0x0E;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectionScanConfig {
    pub samples: usize,
    pub seed: u64,
    pub reflection: ReflectionConfig,
    /// Angular radius of the probe balls.
    pub ball_radius: f64,
    pub ball_probes: usize,
    pub max_balls: usize,
}

impl Default for DirectionScanConfig {
    fn default() -> Self {
        DirectionScanConfig {
            samples: 500,
            seed: 0,
            reflection: ReflectionConfig::default(),
            ball_radius: 0.1,
            ball_probes: 50,
            max_balls: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcceptedLine {
    pub line: ProjLine,
    pub residual_rms: f64,
    pub invariance_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionScanRow {
    pub index: usize,
    pub line: ProjLine,
    /// `NaN` when the fit failed.
    pub residual_rms: f64,
    pub invariance_error: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionScanReport {
    pub samples: usize,
    pub accepted: Vec<AcceptedLine>,
    pub threshold: f64,
    /// Largest fraction of accepted probes in an angular ball around an
    /// accepted line; a sampled stand-in for "contains an open set".
    pub thick_estimate: f64,
    pub thick_estimate_kind: &'static str,
    pub ball_radius: f64,
    pub ball_probes: usize,
    /// Largest `max(residual, invariance)` among accepted lines.
    pub worst_accepted_score: Option<f64>,
    /// Smallest `max(residual, invariance)` among rejected lines.
    pub best_rejected_score: Option<f64>,
    pub seed: u64,
    #[serde(skip)]
    pub rows: Vec<DirectionScanRow>,
}

impl DirectionScanReport {
    pub fn accepted_fraction(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.accepted.len() as f64 / self.samples as f64
        }
    }
}

fn try_test(tester: &ReflectionTester<'_>, l: &ProjLine) -> Option<ReflectionTest> {
    tester.test(l).ok()
}

/// Line at angle `≤ radius` from `center`, uniform in the tangent disc.
fn line_near<R: Rng>(rng: &mut R, center: &ProjLine, radius: f64) -> ProjLine {
    let c = center.dir();
    let n = c.len();
    let w = loop {
        let t = crate::linalg::project_off(&unit_vector(rng, n), c);
        let nrm = t.norm();
        if nrm > 1e-6 {
            break t / nrm;
        }
    };
    let a = radius * rng.random::<f64>().powf(1.0 / (n - 1) as f64);
    ProjLine::new(&(c * a.cos() + w * a.sin())).expect("unit combination")
}

/// Uniform sample of lines, each tested for a reflection of `K`.
pub fn direction_scan(k: &BodyOracle, config: &DirectionScanConfig) -> DirectionScanReport {
    let tester = ReflectionTester::new(k, config.reflection);
    let n = k.dim();
    let seed = derive_seed(config.seed, TAG_LINES);
    let rows: Vec<DirectionScanRow> = (0..config.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = indexed_rng(seed, i as u64);
            let line = ProjLine::new(&unit_vector(&mut rng, n)).expect("unit vector");
            match try_test(&tester, &line) {
                Some(t) => DirectionScanRow {
                    index: i,
                    line,
                    residual_rms: t.fit.residual_rms,
                    invariance_error: t.invariance_error,
                    accepted: t.accepted,
                },
                None => DirectionScanRow {
                    index: i,
                    line,
                    residual_rms: f64::NAN,
                    invariance_error: f64::NAN,
                    accepted: false,
                },
            }
        })
        .collect();

    let accepted: Vec<AcceptedLine> = rows
        .iter()
        .filter(|r| r.accepted)
        .map(|r| AcceptedLine {
            line: r.line.clone(),
            residual_rms: r.residual_rms,
            invariance_error: r.invariance_error,
        })
        .collect();

    // Ball centres: greedy farthest-point selection among accepted lines.
    let mut centres: Vec<&ProjLine> = Vec::new();
    if let Some(first) = accepted.first() {
        centres.push(&first.line);
        while centres.len() < config.max_balls.min(accepted.len()) {
            let next = accepted
                .iter()
                .map(|a| {
                    let d = centres.iter().map(|c| c.angle(&a.line)).fold(f64::INFINITY, f64::min);
                    (d, &a.line)
                })
                .max_by(|x, y| x.0.total_cmp(&y.0))
                .unwrap();
            if next.0 <= 0.0 {
                break;
            }
            centres.push(next.1);
        }
    }
    let ball_seed = derive_seed(config.seed, TAG_BALLS);
    let thick_estimate = centres
        .iter()
        .enumerate()
        .map(|(b, c)| {
            let hits: usize = (0..config.ball_probes)
                .into_par_iter()
                .map(|j| {
                    let mut rng = indexed_rng(ball_seed, (b * config.ball_probes + j) as u64);
                    let l = line_near(&mut rng, c, config.ball_radius);
                    usize::from(try_test(&tester, &l).is_some_and(|t| t.accepted))
                })
                .sum();
            hits as f64 / config.ball_probes.max(1) as f64
        })
        .fold(0.0, f64::max);

    let score = |r: &DirectionScanRow| r.residual_rms.max(r.invariance_error);
    let worst_accepted_score = rows
        .iter()
        .filter(|r| r.accepted)
        .map(score)
        .fold(None, |m: Option<f64>, s| Some(m.map_or(s, |m| m.max(s))));
    let best_rejected_score = rows
        .iter()
        .filter(|r| !r.accepted && r.residual_rms.is_finite())
        .map(score)
        .fold(None, |m: Option<f64>, s| Some(m.map_or(s, |m| m.min(s))));

    DirectionScanReport {
        samples: config.samples,
        accepted,
        threshold: config.reflection.threshold,
        thick_estimate,
        thick_estimate_kind: "sampled ball fraction (approximation)",
        ball_radius: config.ball_radius,
        ball_probes: config.ball_probes,
        worst_accepted_score,
        best_rejected_score,
        seed: config.seed,
        rows,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrthoScanConfig {
    pub samples: usize,
    pub seed: u64,
    pub reflection: ReflectionConfig,
    /// Orthogonality tolerance on the angle between direction and mirror
    /// normal.
    pub angle_threshold: f64,
    pub max_seeds: usize,
    /// Minimum angular separation between refinement seeds.
    pub seed_separation: f64,
    pub merge_radius: f64,
    /// Probe offset for the isolation test of accepted lines.
    pub isolation_offset: f64,
}

impl Default for OrthoScanConfig {
    fn default() -> Self {
        OrthoScanConfig {
            samples: 300,
            seed: 0,
            reflection: ReflectionConfig::default(),
            angle_threshold: 1e-3,
            max_seeds: 12,
            seed_separation: 0.3,
            merge_radius: 0.05,
            isolation_offset: 0.05,
        }
    }
}

/// A refined local minimum of the orthogonality objective.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrthoCandidate {
    pub line: ProjLine,
    pub residual_rms: f64,
    pub invariance_error: f64,
    pub orthogonality_angle: f64,
    pub accepted: bool,
}

impl OrthoCandidate {
    pub fn score(&self) -> f64 {
        self.residual_rms.max(self.invariance_error).max(self.orthogonality_angle)
    }
}

/// Two nearby accepted directions that span a plane of orthogonal reflection
/// directions, with their mirrors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Continuum {
    pub lines: [ProjLine; 2],
    pub mirrors: [AffineHyperplane; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrthoScanReport {
    pub samples: usize,
    /// Accepted directions after merging.
    pub lines: Vec<ProjLine>,
    /// Some accepted direction has accepted neighbours that do not collapse
    /// onto it: the set of orthogonal reflections looks infinite.
    pub non_finite: bool,
    pub continuum: Option<Continuum>,
    pub candidates: Vec<OrthoCandidate>,
    pub threshold: f64,
    pub angle_threshold: f64,
    /// The finiteness statement being probed is classically 3-dimensional.
    pub outside_three_dimensions: bool,
    pub seed: u64,
}

impl OrthoScanReport {
    /// Smallest score among rejected candidates.
    pub fn best_rejected_score(&self) -> Option<f64> {
        self.candidates
            .iter()
            .filter(|c| !c.accepted)
            .map(OrthoCandidate::score)
            .fold(None, |m: Option<f64>, s| Some(m.map_or(s, |m| m.min(s))))
    }
}

fn objective(tester: &ReflectionTester<'_>, l: &ProjLine) -> f64 {
    match tester.fit(l) {
        Ok(f) => f.orthogonality_angle() + f.residual_rms,
        Err(_) => f64::INFINITY,
    }
}

/// Compass search in tangent coordinates around the current line.
fn refine(tester: &ReflectionTester<'_>, start: &ProjLine, step: f64) -> (ProjLine, f64) {
    let mut l = start.clone();
    let mut best = objective(tester, &l);
    let mut h = step;
    let mut iters = 0;
    while h > 1e-8 && iters < 2000 {
        iters += 1;
        let basis = hyperplane_basis(l.dir()).expect("unit line");
        let mut moved = false;
        for b in &basis {
            for s in [1.0, -1.0] {
                let cand = ProjLine::new(&(l.dir() + b * (s * h))).expect("nonzero");
                let v = objective(tester, &cand);
                if v < best {
                    best = v;
                    l = cand;
                    moved = true;
                    break;
                }
            }
            if moved {
                break;
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    (l, best)
}

/// Fixed-point iteration `ℓ ← mirror normal`; orthogonal directions are its
/// fixed points. Escapes flat regions where compass search stalls.
fn normal_iteration(tester: &ReflectionTester<'_>, start: &ProjLine) -> Option<ProjLine> {
    let mut l = start.clone();
    for _ in 0..50 {
        let next = ProjLine::new(&tester.fit(&l).ok()?.hyperplane.normal).ok()?;
        let moved = next.angle(&l);
        l = next;
        if moved < 1e-12 {
            break;
        }
    }
    Some(l)
}

fn evaluate(tester: &ReflectionTester<'_>, l: &ProjLine, angle_threshold: f64) -> Option<(OrthoCandidate, MirrorFit)> {
    let t = tester.test(l).ok()?;
    let angle = t.fit.orthogonality_angle();
    Some((
        OrthoCandidate {
            line: l.clone(),
            residual_rms: t.fit.residual_rms,
            invariance_error: t.invariance_error,
            orthogonality_angle: angle,
            accepted: t.accepted && angle <= angle_threshold,
        },
        t.fit,
    ))
}

/// Directions of orthogonal reflections of `K`.
///
/// Random lines are ranked by `angle(ℓ, mirror normal) + residual`; the best
/// well-separated ones are refined by compass search (and, separately, by
/// mirror-normal iteration from the compass result) and accepted when the
/// full reflection test passes with an orthogonal mirror. Each accepted
/// direction is probed for accepted neighbours at `isolation_offset`: if a
/// neighbour refines to a different accepted line the result is flagged
/// `non_finite`.
pub fn orthogonal_reflection_scan(k: &BodyOracle, config: &OrthoScanConfig) -> OrthoScanReport {
    let tester = ReflectionTester::new(k, config.reflection);
    let n = k.dim();
    let seed = derive_seed(config.seed, TAG_ORTHO);
    let mut sampled: Vec<(f64, ProjLine)> = (0..config.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = indexed_rng(seed, i as u64);
            let l = ProjLine::new(&unit_vector(&mut rng, n)).expect("unit vector");
            (objective(&tester, &l), l)
        })
        .collect();
    sampled.retain(|s| s.0.is_finite());
    sampled.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut seeds: Vec<ProjLine> = Vec::new();
    for (_, l) in &sampled {
        if seeds.len() >= config.max_seeds {
            break;
        }
        if seeds.iter().all(|s| s.angle(l) >= config.seed_separation) {
            seeds.push(l.clone());
        }
    }

    let refined: Vec<(OrthoCandidate, MirrorFit)> = seeds
        .par_iter()
        .flat_map_iter(|s| {
            let (l, _) = refine(&tester, s, 0.05);
            let alt = normal_iteration(&tester, &l)
                .filter(|m| m.angle(&l) > config.merge_radius)
                .map(|m| refine(&tester, &m, 0.01).0);
            std::iter::once(l)
                .chain(alt)
                .filter_map(|l| evaluate(&tester, &l, config.angle_threshold))
                .collect::<Vec<_>>()
        })
        .collect();

    // Merge accepted candidates, keeping the best representative per cluster.
    let mut order: Vec<usize> = (0..refined.len()).filter(|&i| refined[i].0.accepted).collect();
    order.sort_by(|&a, &b| refined[a].0.score().total_cmp(&refined[b].0.score()));
    let mut reps: Vec<usize> = Vec::new();
    for i in order {
        if reps
            .iter()
            .all(|&r| refined[r].0.line.angle(&refined[i].0.line) > config.merge_radius)
        {
            reps.push(i);
        }
    }

    let mut continuum = None;
    for &r in &reps {
        let (cand, fit) = &refined[r];
        let basis = hyperplane_basis(cand.line.dir()).expect("unit line");
        let probes: Vec<Vector> = basis
            .iter()
            .flat_map(|b| [b.clone(), -b])
            .collect();
        let found = probes.par_iter().find_map_first(|b| {
            let start = ProjLine::new(&(cand.line.dir() + b * config.isolation_offset)).ok()?;
            let (l, _) = refine(&tester, &start, 0.01);
            let (c2, fit2) = evaluate(&tester, &l, config.angle_threshold)?;
            (c2.accepted && l.angle(&cand.line) > 0.4 * config.isolation_offset).then_some((c2, fit2))
        });
        if let Some((c2, fit2)) = found {
            continuum = Some(Continuum {
                lines: [cand.line.clone(), c2.line],
                mirrors: [fit.hyperplane.clone(), fit2.hyperplane],
            });
            break;
        }
    }

    OrthoScanReport {
        samples: config.samples,
        lines: reps.iter().map(|&r| refined[r].0.line.clone()).collect(),
        non_finite: continuum.is_some(),
        continuum,
        candidates: refined.into_iter().map(|(c, _)| c).collect(),
        threshold: config.reflection.threshold,
        angle_threshold: config.angle_threshold,
        outside_three_dimensions: n != 3,
        seed: config.seed,
    }
}
