//! Error metrics against ground truth, row profiles and jump detection.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lightfield::DisparityMap;
use crate::region::{Region, RegionMap};

pub const BADPIX_THRESHOLDS: [f64; 4] = [0.01, 0.03, 0.07, 0.1];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BadPix {
    pub threshold: f64,
    pub fraction: f64,
}

/// Metrics over one set of pixels. Estimated pixels that are invalid count as
/// bad at every threshold and are left out of the MSE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// `None` when no pixel has both values valid.
    pub mse_x100: Option<f64>,
    pub badpix: Vec<BadPix>,
    /// Pixels with valid ground truth inside the mask.
    pub evaluated: usize,
    pub invalid_estimates: usize,
}

impl Metrics {
    pub fn badpix_at(&self, threshold: f64) -> Option<f64> {
        self.badpix
            .iter()
            .find(|b| (b.threshold - threshold).abs() < 1e-12)
            .map(|b| b.fraction)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(flatten)]
    pub overall: Metrics,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub per_region: BTreeMap<String, Metrics>,
}

fn metrics_over(est: &DisparityMap, gt: &DisparityMap, select: impl Fn(usize) -> bool) -> Metrics {
    let mut evaluated = 0usize;
    let mut invalid = 0usize;
    let mut sq = 0.0;
    let mut both = 0usize;
    let mut bad = [0usize; BADPIX_THRESHOLDS.len()];
    for i in 0..gt.len() {
        if !select(i) || !gt.valid_mask()[i] {
            continue;
        }
        evaluated += 1;
        if !est.valid_mask()[i] {
            invalid += 1;
            bad.iter_mut().for_each(|b| *b += 1);
            continue;
        }
        let err = (est.values()[i] as f64 - gt.values()[i] as f64).abs();
        sq += err * err;
        both += 1;
        for (b, &t) in bad.iter_mut().zip(&BADPIX_THRESHOLDS) {
            if err > t {
                *b += 1;
            }
        }
    }
    Metrics {
        mse_x100: (both > 0).then(|| 100.0 * sq / both as f64),
        badpix: BADPIX_THRESHOLDS
            .iter()
            .zip(bad)
            .map(|(&threshold, b)| BadPix {
                threshold,
                fraction: if evaluated > 0 { b as f64 / evaluated as f64 } else { 0.0 },
            })
            .collect(),
        evaluated,
        invalid_estimates: invalid,
    }
}

pub fn compute_metrics(
    est: &DisparityMap,
    gt: &DisparityMap,
    regions: Option<&RegionMap>,
    mask: Option<&[bool]>,
) -> Result<MetricsReport> {
    let shape = (gt.width(), gt.height());
    if (est.width(), est.height()) != shape
        || regions.is_some_and(|r| (r.width(), r.height()) != shape)
        || mask.is_some_and(|m| m.len() != gt.len())
    {
        return Err(Error::ShapeMismatch("estimate, ground truth, regions or mask differ".into()));
    }
    let in_mask = |i: usize| mask.is_none_or(|m| m[i]);
    let overall = metrics_over(est, gt, in_mask);
    if overall.evaluated == 0 {
        return Err(Error::EmptyMask);
    }
    let mut per_region = BTreeMap::new();
    if let Some(regions) = regions {
        for region in Region::ALL {
            let m = metrics_over(est, gt, |i| in_mask(i) && regions.labels()[i] == region);
            if m.evaluated > 0 {
                per_region.insert(region.name().to_string(), m);
            }
        }
    }
    Ok(MetricsReport { overall, per_region })
}

/// Values along one row as `(x, value)`, `None` where invalid.
pub fn extract_profile(map: &DisparityMap, row: usize) -> Result<Vec<(usize, Option<f32>)>> {
    if row >= map.height() {
        return Err(Error::RowOutOfBounds {
            row,
            height: map.height(),
        });
    }
    Ok((0..map.width()).map(|x| (x, map.get(x, row))).collect())
}

/// A discontinuity between two valid samples of a profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    /// Column of the first sample after the largest step of the run.
    pub x: usize,
    /// Total change across the run of steps.
    pub size: f64,
}

/// Runs of consecutive steps larger than `threshold` in magnitude and of the
/// same sign, each reported once at its largest step. Invalid samples are
/// skipped over.
pub fn find_jumps(profile: &[(usize, Option<f32>)], threshold: f64) -> Vec<Jump> {
    let valid: Vec<(usize, f64)> = profile
        .iter()
        .filter_map(|&(x, v)| v.map(|v| (x, v as f64)))
        .collect();
    let mut jumps = Vec::new();
    let mut run: Option<(Jump, f64)> = None;
    for pair in valid.windows(2) {
        let step = pair[1].1 - pair[0].1;
        let continues = run.is_some_and(|(j, _)| j.size.signum() == step.signum());
        if step.abs() > threshold {
            match &mut run {
                Some((jump, largest)) if continues => {
                    jump.size += step;
                    if step.abs() > *largest {
                        *largest = step.abs();
                        jump.x = pair[1].0;
                    }
                }
                _ => {
                    if let Some((j, _)) = run.take() {
                        jumps.push(j);
                    }
                    run = Some((Jump { x: pair[1].0, size: step }, step.abs()));
                }
            }
        } else if let Some((j, _)) = run.take() {
            jumps.push(j);
        }
    }
    if let Some((j, _)) = run {
        jumps.push(j);
    }
    jumps
}
