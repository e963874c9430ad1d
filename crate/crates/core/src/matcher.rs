//! Matching cost, cost curves over a disparity grid, and the per-pixel
//! estimator that ties region identification, window selection and the
//! line search together.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SceneConfig;
use crate::entropy::EntropyParams;
use crate::error::{Error, Result};
use crate::geometry::{reproject, sample_bilinear, Calibration};
use crate::lightfield::{central_view, DisparityMap, LightField};
use crate::region::{identify_regions, IndicatorViewpoints, RegionAnalysis, RegionMap, RegionParams};
use crate::tv::{tv_refine, TvParams};
use crate::volume::{aggregate, min_filter, CostNorm, Integral, Target};
use crate::window::{view_is_visible, Rect, WindowChoice, WindowSelector, WindowShape, WindowSpec, SHAPES};

/// Uniformly spaced disparity samples covering `[min, max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityGrid {
    min: f64,
    step: f64,
    samples: Vec<f64>,
}

impl DisparityGrid {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(min <= max) || !min.is_finite() || !max.is_finite() {
            return Err(Error::BadConfig(format!(
                "bad disparity grid [{min}, {max}] step {step}"
            )));
        }
        let n = ((max - min) / step - 1e-9).ceil().max(0.0) as usize;
        let samples = (0..=n).map(|k| min + k as f64 * step).collect();
        Ok(DisparityGrid { min, step, samples })
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Cost per grid sample; samples with no in-bounds comparisons hold `NaN`
/// and a zero valid fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct CostCurve {
    pub costs: Vec<f64>,
    pub valid_fraction: Vec<f64>,
}

impl CostCurve {
    fn is_valid(&self, k: usize) -> bool {
        self.valid_fraction[k] > 0.0 && self.costs[k].is_finite()
    }

    /// Index of the smallest valid cost (first on ties).
    pub fn argmin(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for k in 0..self.costs.len() {
            if self.is_valid(k) && best.is_none_or(|b| self.costs[k] < self.costs[b]) {
                best = Some(k);
            }
        }
        best
    }

    /// Spread between the largest and smallest valid cost.
    pub fn range(&self) -> Option<f64> {
        let valid = (0..self.costs.len()).filter(|&k| self.is_valid(k)).map(|k| self.costs[k]);
        let (lo, hi) = valid.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
            (lo.min(c), hi.max(c))
        });
        (lo <= hi).then_some(hi - lo)
    }

    pub fn is_flat(&self, threshold: f64) -> bool {
        self.range().is_none_or(|r| r < threshold)
    }

    /// Argmin when the minimum is well defined: no sample more than one step
    /// away comes within `threshold` of it. Flat curves have no such minimum.
    pub fn distinct_minimum(&self, threshold: f64) -> Option<usize> {
        distinct_minimum(self.costs.len(), |k| self.is_valid(k).then(|| self.costs[k]), threshold)
    }
}

fn distinct_minimum(len: usize, cost: impl Fn(usize) -> Option<f64>, threshold: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for k in 0..len {
        if let Some(c) = cost(k) {
            if best.is_none_or(|(_, b)| c < b) {
                best = Some((k, c));
            }
        }
    }
    let (k, min) = best?;
    let rival = (0..len)
        .filter(|j| j.abs_diff(k) > 1)
        .any(|j| cost(j).is_some_and(|c| c - min < threshold));
    (!rival).then_some(k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchOptions {
    pub norm: CostNorm,
    /// Average over viewpoints instead of summing, so that costs with
    /// reduced viewpoint sets stay comparable.
    pub normalize_by_views: bool,
}

impl Default for MatchOptions {
    fn default() -> Self {
        MatchOptions {
            norm: CostNorm::L1,
            normalize_by_views: true,
        }
    }
}

/// Direct evaluation of the windowed matching cost at one disparity.
///
/// Returns `(cost, valid_fraction)`. Out-of-bounds view samples are dropped
/// and the remaining sum rescaled; mask pixels outside the central view are
/// not part of the window.
pub fn matching_cost(
    lf: &LightField,
    anchor: (usize, usize),
    disp: f64,
    choice: &WindowChoice,
    cal: &Calibration,
    options: &MatchOptions,
) -> Result<(f64, f64)> {
    let center = central_view(lf);
    let (width, height) = lf.spatial();
    let (u0, v0) = lf.center();
    let views: Vec<(usize, usize)> = choice
        .viewpoints
        .views()
        .iter()
        .copied()
        .filter(|&v| v != (u0, v0))
        .collect();
    if views.is_empty() {
        return Ok((0.0, 1.0));
    }
    let mut sum = 0.0;
    let mut retained = 0usize;
    let mut total = 0usize;
    for (m, n) in choice.window.offsets() {
        let (cx, cy) = (anchor.0 as i64 + m as i64, anchor.1 as i64 + n as i64);
        if cx < 0 || cy < 0 || cx >= width as i64 || cy >= height as i64 {
            continue;
        }
        let reference = center.get(cx as usize, cy as usize);
        for &(u, v) in &views {
            total += 1;
            let (px, py) = reproject(anchor.0 as f64, anchor.1 as f64, disp, u as f64, v as f64, cal);
            if let Some(s) = sample_bilinear(lf.view(u, v), px + m as f64, py + n as f64) {
                sum += options.norm.apply(reference - s);
                retained += 1;
            }
        }
    }
    if retained == 0 {
        return Err(Error::NoValidSamples);
    }
    let mean = sum / retained as f64;
    let cost = if options.normalize_by_views {
        mean
    } else {
        mean * views.len() as f64
    };
    Ok((cost, retained as f64 / total as f64))
}

pub fn cost_curve(
    lf: &LightField,
    anchor: (usize, usize),
    choice: &WindowChoice,
    grid: &DisparityGrid,
    cal: &Calibration,
    options: &MatchOptions,
) -> CostCurve {
    let (costs, valid_fraction) = grid
        .samples()
        .iter()
        .map(|&d| matching_cost(lf, anchor, d, choice, cal, options).unwrap_or((f64::NAN, 0.0)))
        .unzip();
    CostCurve {
        costs,
        valid_fraction,
    }
}

/// Vertex of the parabola through the discrete minimum and its neighbors,
/// clamped to one step either side. Falls back to the discrete minimum when a
/// neighbor is missing or the three costs are not convex.
pub fn subpixel_refine(curve: &CostCurve, grid: &DisparityGrid) -> Option<f64> {
    let k = curve.argmin()?;
    let d = grid.samples()[k];
    if k == 0 || k + 1 >= curve.costs.len() || !curve.is_valid(k - 1) || !curve.is_valid(k + 1) {
        return Some(d);
    }
    let (left, mid, right) = (curve.costs[k - 1], curve.costs[k], curve.costs[k + 1]);
    let curvature = left - 2.0 * mid + right;
    if !(curvature > 0.0) {
        return Some(d);
    }
    let offset = (0.5 * (left - right) / curvature).clamp(-1.0, 1.0);
    Some(d + offset * grid.step())
}

/// Per-pixel argmin for a reference view matched against `targets` with
/// `(2r+1)²` square windows.
///
/// With `shiftable`, each pixel takes the best of all window placements that
/// contain it and of the full and four half target sets, which keeps layer
/// boundaries from spreading into their occluded neighbors.
#[allow(clippy::too_many_arguments)]
pub(crate) fn match_reference(
    lf: &LightField,
    reference: (usize, usize),
    targets: &[(usize, usize)],
    grid: &DisparityGrid,
    radius: usize,
    shiftable: bool,
    norm: CostNorm,
    flat_threshold: f64,
) -> DisparityMap {
    let (width, height) = lf.spatial();
    let ref_img = lf.view(reference.0, reference.1);
    let subsets: &[WindowShape] = if shiftable {
        &[
            WindowShape::Square,
            WindowShape::W1,
            WindowShape::W2,
            WindowShape::W3,
            WindowShape::W4,
        ]
    } else {
        &[WindowShape::Square]
    };
    let mut subset_views = vec![0usize; subsets.len()];
    let target_list: Vec<Target<'_>> = targets
        .iter()
        .filter(|&&t| t != reference)
        .map(|&(u, v)| {
            let (du, dv) = (u as i32 - reference.0 as i32, v as i32 - reference.1 as i32);
            let mut mask = 0u32;
            for (s, &shape) in subsets.iter().enumerate() {
                if view_is_visible(shape, du, dv) {
                    mask |= 1 << s;
                    subset_views[s] += 1;
                }
            }
            Target {
                image: lf.view(u, v),
                du: du as f64,
                dv: dv as f64,
                subsets: mask,
            }
        })
        .collect();
    if target_list.is_empty() {
        return DisparityMap::invalid(width, height);
    }

    let n = width * height;
    let samples = grid.len();
    let mut curves = vec![f32::INFINITY; n * samples];
    for (k, &d) in grid.samples().iter().enumerate() {
        let planes = aggregate(ref_img, &target_list, d, subsets.len(), norm);
        let per_subset: Vec<Vec<f64>> = planes
            .par_iter()
            .enumerate()
            .filter(|(s, _)| subset_views[*s] > 0)
            .map(|(s, plane)| {
                let costs = box_costs(plane, width, height, radius, subset_views[s]);
                if shiftable {
                    min_filter(&costs, width, height, radius)
                } else {
                    costs
                }
            })
            .collect();
        curves.par_chunks_mut(samples).enumerate().for_each(|(i, curve)| {
            curve[k] = per_subset.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min) as f32;
        });
    }
    let values = curves
        .par_chunks(samples)
        .map(|curve| {
            let cost = |k: usize| curve[k].is_finite().then(|| curve[k] as f64);
            distinct_minimum(samples, cost, flat_threshold).map_or(f32::NAN, |k| grid.samples()[k] as f32)
        })
        .collect();
    DisparityMap::from_values(width, height, values).expect("shape matches light field")
}

/// Mean difference over the centered window, `INFINITY` when fewer than half
/// of its comparisons are in bounds.
fn box_costs(plane: &Integral, width: usize, height: usize, radius: usize, views: usize) -> Vec<f64> {
    let mut out = vec![f64::INFINITY; width * height];
    out.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
        let (y0, y1) = (y.saturating_sub(radius), (y + radius).min(height - 1));
        for (x, c) in row.iter_mut().enumerate() {
            let (x0, x1) = (x.saturating_sub(radius), (x + radius).min(width - 1));
            let (sum, count) = plane.query(x0, y0, x1, y1);
            let total = (x1 - x0 + 1) * (y1 - y0 + 1) * views;
            if count > 0 && 2 * count as usize >= total {
                *c = sum / count as f64;
            }
        }
    });
    out
}

/// Coarse initial disparity: 7×7 square windows over the nine indicator
/// viewpoints; pixels without a distinct minimum are invalid.
pub fn initial_disparity(lf: &LightField, _cal: &Calibration, grid: &DisparityGrid) -> DisparityMap {
    let viewpoints = IndicatorViewpoints::for_grid(lf.angular());
    match_reference(
        lf,
        lf.center(),
        viewpoints.views(),
        grid,
        3,
        false,
        CostNorm::L1,
        DEFAULT_FLAT_THRESHOLD,
    )
}

pub const DEFAULT_FLAT_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WindowStrategy {
    /// Entropy-selected window and viewpoint set per pixel.
    Adaptive,
    /// The same square window and the full viewpoint grid everywhere.
    Fixed { side: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub disparity_min: f64,
    pub disparity_max: f64,
    pub fine_step: f64,
    pub coarse_step: f64,
    pub alpha1: f64,
    /// Anti-occlusion weight for occlusion regions; texture and smooth
    /// regions always use zero.
    pub alpha2: f64,
    /// Weight of the entropy term in the objective. Window selection
    /// maximizes entropy alone and the line search then minimizes cost with
    /// the window fixed, so this value does not change results.
    pub lambda: f64,
    pub gray_bins: usize,
    pub matching: MatchOptions,
    pub flat_threshold: f64,
    pub strategy: WindowStrategy,
    pub regions: RegionParams,
    pub tv: TvParams,
}

impl EstimatorConfig {
    pub fn new(disparity_min: f64, disparity_max: f64) -> Self {
        EstimatorConfig {
            disparity_min,
            disparity_max,
            fine_step: 0.05,
            coarse_step: 0.1,
            alpha1: 1.0,
            alpha2: 1.0,
            lambda: 1.0,
            gray_bins: 32,
            matching: MatchOptions::default(),
            flat_threshold: DEFAULT_FLAT_THRESHOLD,
            strategy: WindowStrategy::Adaptive,
            regions: RegionParams::default(),
            tv: TvParams::default(),
        }
    }

    pub fn from_scene(scene: &SceneConfig) -> Self {
        Self::new(scene.disparity_min, scene.disparity_max)
    }

    pub fn entropy_params(&self) -> EntropyParams {
        EntropyParams {
            alpha1: self.alpha1,
            alpha2: self.alpha2,
            gray_bins: self.gray_bins,
            disparity_bin_width: self.coarse_step,
        }
    }

    pub fn fine_grid(&self) -> Result<DisparityGrid> {
        DisparityGrid::new(self.disparity_min, self.disparity_max, self.fine_step)
    }

    pub fn coarse_grid(&self) -> Result<DisparityGrid> {
        DisparityGrid::new(self.disparity_min, self.disparity_max, self.coarse_step)
    }
}

/// Everything the estimator produces before refinement.
#[derive(Debug, Clone)]
pub struct Estimate {
    /// Subpixel disparity; pixels without a distinct cost minimum are invalid.
    pub disparity: DisparityMap,
    /// Discrete argmin on the fine grid, valid where `disparity` is.
    pub argmin: DisparityMap,
    pub initial: DisparityMap,
    pub regions: RegionMap,
    pub analysis: RegionAnalysis,
    /// Selected window and viewpoint subset per pixel.
    pub windows: Vec<(WindowSpec, usize)>,
}

impl Estimate {
    /// TV-refined map: holes and noise inside smooth regions are smoothed,
    /// everything else is left as estimated.
    pub fn refined(&self, params: &TvParams) -> DisparityMap {
        tv_refine(&self.disparity, &self.regions.smooth_mask(), params)
    }
}

/// Costs on the fine grid for every pixel's chosen window, flattened as
/// `[pixel][sample]`.
pub(crate) struct CurveSet {
    pub samples: usize,
    pub costs: Vec<f32>,
    pub valid_fraction: Vec<f32>,
}

impl CurveSet {
    pub fn curve(&self, pixel: usize) -> CostCurve {
        let r = pixel * self.samples..(pixel + 1) * self.samples;
        CostCurve {
            costs: self.costs[r.clone()].iter().map(|&c| c as f64).collect(),
            valid_fraction: self.valid_fraction[r].iter().map(|&f| f as f64).collect(),
        }
    }
}

pub(crate) fn window_curves(
    lf: &LightField,
    cal: &Calibration,
    windows: &[(WindowSpec, usize)],
    grid: &DisparityGrid,
    options: &MatchOptions,
) -> CurveSet {
    let (width, height) = lf.spatial();
    let (u0, v0) = lf.center();
    let (nu, nv) = lf.angular();
    let subsets = windows.iter().map(|w| w.1).max().map_or(1, |m| m + 1);
    let mut subset_views = vec![0usize; subsets];
    let mut targets = Vec::new();
    for v in 0..nv {
        for u in 0..nu {
            if (u, v) == (u0, v0) {
                continue;
            }
            let (du, dv) = (u as i32 - u0 as i32, v as i32 - v0 as i32);
            let mut mask = 0u32;
            for (s, count) in subset_views.iter_mut().enumerate() {
                if view_is_visible(SHAPES[s].0, du, dv) {
                    mask |= 1 << s;
                    *count += 1;
                }
            }
            targets.push(Target {
                image: lf.view(u, v),
                du: u as f64 - cal.center.0,
                dv: v as f64 - cal.center.1,
                subsets: mask,
            });
        }
    }
    let rects: Vec<Rect> = windows
        .iter()
        .enumerate()
        .map(|(i, (spec, _))| spec.clipped((i % width, i / width), width, height))
        .collect();

    let samples = grid.len();
    let mut costs = vec![f32::NAN; width * height * samples];
    let mut fractions = vec![0.0f32; width * height * samples];
    let center = central_view(lf);
    for (k, &d) in grid.samples().iter().enumerate() {
        if targets.is_empty() {
            break;
        }
        let planes = aggregate(center, &targets, d, subsets, options.norm);
        costs
            .par_chunks_mut(samples)
            .zip(fractions.par_chunks_mut(samples))
            .enumerate()
            .for_each(|(i, (c, f))| {
                let s = windows[i].1;
                let r = rects[i];
                let (sum, count) = planes[s].query(r.x0, r.y0, r.x1, r.y1);
                let views = subset_views[s];
                if count > 0 {
                    let mean = sum / count as f64;
                    c[k] = if options.normalize_by_views { mean } else { mean * views as f64 } as f32;
                    f[k] = (count as f64 / (r.area() * views) as f64) as f32;
                }
            });
    }
    if targets.is_empty() {
        costs.iter_mut().for_each(|c| *c = 0.0);
        fractions.iter_mut().for_each(|f| *f = 1.0);
    }
    CurveSet {
        samples,
        costs,
        valid_fraction: fractions,
    }
}

/// Initial disparity, regions, per-pixel windows, fine line search and
/// subpixel refinement. TV refinement is left to [`Estimate::refined`].
pub fn estimate_disparity(
    lf: &LightField,
    cal: &Calibration,
    config: &EstimatorConfig,
) -> Result<Estimate> {
    let (width, height) = lf.spatial();
    let coarse = config.coarse_grid()?;
    let fine = config.fine_grid()?;
    let initial = initial_disparity(lf, cal, &coarse);
    let analysis = identify_regions(lf, &initial, &coarse, &config.regions)?;
    let regions = analysis.regions.clone();

    let windows: Vec<(WindowSpec, usize)> = match config.strategy {
        WindowStrategy::Fixed { side } => {
            let spec = WindowSpec::new(WindowShape::Square, side)?;
            vec![(spec, 0); width * height]
        }
        WindowStrategy::Adaptive => {
            let selector = WindowSelector::new(
                central_view(lf),
                &initial,
                &regions,
                config.entropy_params(),
                lf.angular(),
            )?;
            selector
                .select_all()
                .into_iter()
                .enumerate()
                .map(|(i, (spec, _))| {
                    let label = regions.labels()[i];
                    let subset = match label {
                        crate::region::Region::Occluded => spec.shape.index(),
                        _ => 0,
                    };
                    (spec, subset)
                })
                .collect()
        }
    };

    let curves = window_curves(lf, cal, &windows, &fine, &config.matching);
    let mut refined = vec![f32::NAN; width * height];
    let mut discrete = vec![f32::NAN; width * height];
    refined
        .par_iter_mut()
        .zip(discrete.par_iter_mut())
        .enumerate()
        .for_each(|(i, (r, a))| {
            let curve = curves.curve(i);
            if curve.distinct_minimum(config.flat_threshold).is_none() {
                return;
            }
            if let (Some(k), Some(d)) = (curve.argmin(), subpixel_refine(&curve, &fine)) {
                *a = fine.samples()[k] as f32;
                *r = d as f32;
            }
        });
    Ok(Estimate {
        disparity: DisparityMap::from_values(width, height, refined)?,
        argmin: DisparityMap::from_values(width, height, discrete)?,
        initial,
        regions,
        analysis,
        windows,
    })
}
