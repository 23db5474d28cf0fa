use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::{fiber_with_partition, hyperplane_genericity_margin, line_genericity_margin, FiberTolerances};
use crate::error::{Error, Result};
use crate::quadric::{spectrum_partition, Ellipsoid, ProjHyperplane};
use crate::rng::{indexed_rng, unit_vector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverScanConfig {
    pub samples: usize,
    pub seed: u64,
    pub tol: FiberTolerances,
    /// Samples whose margins fall below `margin_factor × tol` are rejected.
    pub margin_factor: f64,
}

impl Default for CoverScanConfig {
    fn default() -> Self {
        CoverScanConfig {
            samples: 1000,
            seed: 0,
            tol: FiberTolerances::scan(),
            margin_factor: 10.0,
        }
    }
}

/// One sampled hyperplane.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverScanRow {
    pub index: usize,
    pub normal: Vec<f64>,
    /// `None` for rejected samples.
    pub fiber_size: Option<usize>,
    /// Smallest genericity margin of the hyperplane and its fiber lines.
    pub min_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverScanReport {
    pub samples: usize,
    /// Fiber size → number of accepted samples with that size.
    pub histogram: BTreeMap<usize, usize>,
    pub rejected_nongeneric: usize,
    pub k: usize,
    pub seed: u64,
    #[serde(skip)]
    pub rows: Vec<CoverScanRow>,
}

impl CoverScanReport {
    pub fn accepted(&self) -> usize {
        self.samples - self.rejected_nongeneric
    }
}

/// Histogram of fiber sizes over uniformly random hyperplanes.
///
/// A sample is rejected when its hyperplane is within `margin_factor × tol`
/// of the non-generic set, when some section axis sits in the ambiguous band
/// `[binormal/f, binormal·f]` of binormal angles, or when the section has a
/// repeated diagonal axis.
pub fn cover_scan(e: &Ellipsoid, config: &CoverScanConfig) -> Result<CoverScanReport> {
    let tol = &config.tol;
    let p = spectrum_partition(e, tol.grouping)?;
    if p.k < 2 {
        return Err(Error::Sphere);
    }
    let f = config.margin_factor;
    let n = e.dim();
    let rows: Vec<CoverScanRow> = (0..config.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = indexed_rng(config.seed, i as u64);
            let g = ProjHyperplane::from_normal(&unit_vector(&mut rng, n))
                .expect("unit vector is nonzero");
            let h_margin = hyperplane_genericity_margin(&g, &p);
            let mut row = CoverScanRow {
                index: i,
                normal: g.to_vec(),
                fiber_size: None,
                min_margin: h_margin,
            };
            if h_margin <= f * tol.generic {
                return row;
            }
            let Ok((fib, angles)) = fiber_with_partition(e, &g, &p, tol) else {
                return row;
            };
            let ambiguous = angles
                .iter()
                .any(|&a| a >= tol.binormal / f && a <= tol.binormal * f);
            let line_margin = fib
                .lines
                .iter()
                .map(|fl| line_genericity_margin(e, &fl.line, &p))
                .fold(f64::INFINITY, f64::min);
            row.min_margin = h_margin.min(line_margin);
            if !ambiguous {
                row.fiber_size = Some(fib.len());
            }
            row
        })
        .collect();

    let mut histogram = BTreeMap::new();
    let mut rejected = 0;
    for r in &rows {
        match r.fiber_size {
            Some(s) => *histogram.entry(s).or_insert(0) += 1,
            None => rejected += 1,
        }
    }
    Ok(CoverScanReport {
        samples: config.samples,
        histogram,
        rejected_nongeneric: rejected,
        k: p.k,
        seed: config.seed,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triaxial_scan_has_two_sheets() {
        let e = Ellipsoid::diagonal(&[1.0, 0.25, 1.0 / 9.0]).unwrap();
        let cfg = CoverScanConfig {
            samples: 10_000,
            ..Default::default()
        };
        let r = cover_scan(&e, &cfg).unwrap();
        assert_eq!(r.k, 3);
        assert_eq!(r.histogram.len(), 1);
        assert_eq!(r.histogram[&2], r.accepted());
        let total: usize = r.histogram.values().sum();
        assert_eq!(total, r.samples - r.rejected_nongeneric);
    }

    #[test]
    fn spheroid_scan_has_one_sheet() {
        let e = Ellipsoid::diagonal(&[1.0, 1.0, 0.25]).unwrap();
        let r = cover_scan(&e, &CoverScanConfig::default()).unwrap();
        assert_eq!(r.k, 2);
        assert_eq!(r.histogram.keys().copied().collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn sphere_scan_refuses() {
        let e = Ellipsoid::diagonal(&[2.0, 2.0, 2.0]).unwrap();
        assert_eq!(cover_scan(&e, &CoverScanConfig::default()), Err(Error::Sphere));
    }

    #[test]
    fn scan_is_deterministic() {
        let e = Ellipsoid::diagonal(&[1.0, 0.5, 0.25, 0.1]).unwrap();
        let cfg = CoverScanConfig {
            samples: 300,
            seed: 42,
            ..Default::default()
        };
        assert_eq!(cover_scan(&e, &cfg).unwrap(), cover_scan(&e, &cfg).unwrap());
    }
}
