//! Region identification: occluding, occluded, textured and smooth pixels
//! of the central view.
//!
//! Each indicator view is segmented into disparity layers. Comparing the
//! central segmentation against the other views, warped into the central
//! frame, reveals where layers appear or disappear between views. Pixels
//! without occlusion are split into textured and smooth by counting how many
//! neighbors differ in intensity.

use std::collections::VecDeque;
use std::io::Write;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder, Rgb, RgbImage};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::disparity_bin;
use crate::error::{Error, Result};
use crate::lightfield::{central_view, DisparityMap, Image, LightField};
use crate::matcher::{match_reference, DisparityGrid, DEFAULT_FLAT_THRESHOLD};
use crate::volume::CostNorm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Occluding = 0,
    Occluded = 1,
    Texture = 2,
    Smooth = 3,
}

impl Region {
    pub const ALL: [Region; 4] = [Region::Occluding, Region::Occluded, Region::Texture, Region::Smooth];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Region::Occluding => "occluding",
            Region::Occluded => "occluded",
            Region::Texture => "texture",
            Region::Smooth => "smooth",
        }
    }

    /// Display color: red, blue, yellow, green.
    pub fn color(self) -> [u8; 3] {
        match self {
            Region::Occluding => [255, 0, 0],
            Region::Occluded => [0, 0, 255],
            Region::Texture => [255, 255, 0],
            Region::Smooth => [0, 255, 0],
        }
    }

    pub fn is_occlusion(self) -> bool {
        matches!(self, Region::Occluding | Region::Occluded)
    }
}

/// One label per central-view pixel, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMap {
    width: usize,
    height: usize,
    labels: Vec<Region>,
}

impl RegionMap {
    pub fn filled(width: usize, height: usize, label: Region) -> Self {
        RegionMap {
            width,
            height,
            labels: vec![label; width * height],
        }
    }

    pub fn from_labels(width: usize, height: usize, labels: Vec<Region>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for a {width}x{height} map",
                labels.len()
            )));
        }
        Ok(RegionMap {
            width,
            height,
            labels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> Region {
        self.labels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, label: Region) {
        self.labels[y * self.width + x] = label;
    }

    pub fn labels(&self) -> &[Region] {
        &self.labels
    }

    pub fn counts(&self) -> [usize; 4] {
        let mut c = [0; 4];
        for l in &self.labels {
            c[l.index()] += 1;
        }
        c
    }

    pub fn mask(&self, region: Region) -> Vec<bool> {
        self.labels.iter().map(|&l| l == region).collect()
    }

    pub fn smooth_mask(&self) -> Vec<bool> {
        self.mask(Region::Smooth)
    }

    pub fn to_color_image(&self) -> RgbImage {
        RgbImage::from_fn(self.width as u32, self.height as u32, |x, y| {
            Rgb(self.get(x as usize, y as usize).color())
        })
    }

    pub fn write_color_png(&self, path: &Path) -> Result<()> {
        self.to_color_image()
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|source| Error::Image {
                path: path.to_path_buf(),
                source,
            })
    }

    /// Binary PGM holding the label indices 0..=3.
    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let bytes: Vec<u8> = self.labels.iter().map(|&l| l as u8).collect();
        let mut out = Vec::new();
        PnmEncoder::new(&mut out)
            .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
            .write_image(&bytes, self.width as u32, self.height as u32, ExtendedColorType::L8)
            .map_err(|source| Error::Image {
                path: path.to_path_buf(),
                source,
            })?;
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(&out))
            .map_err(|e| Error::io(path, e))
    }

    pub fn read_pgm(path: &Path) -> Result<Self> {
        let img = image::open(path)
            .map_err(|source| Error::Image {
                path: path.to_path_buf(),
                source,
            })?
            .to_luma8();
        let labels = img
            .pixels()
            .map(|p| {
                Region::from_index(p.0[0] as usize)
                    .ok_or_else(|| Error::BadHeader(format!("label {} in {}", p.0[0], path.display())))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_labels(img.width() as usize, img.height() as usize, labels)
    }
}

/// Layer index per pixel; a larger index means a nearer surface.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegMap {
    width: usize,
    height: usize,
    layers: Vec<u8>,
}

impl SegMap {
    pub fn new(width: usize, height: usize, layers: Vec<u8>) -> Result<Self> {
        if layers.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{} layers for a {width}x{height} map",
                layers.len()
            )));
        }
        Ok(SegMap {
            width,
            height,
            layers,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.layers[y * self.width + x]
    }

    pub fn layers(&self) -> &[u8] {
        &self.layers
    }
}

/// The corner, edge-midpoint and central views, deduplicated for small grids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndicatorViewpoints {
    center: (usize, usize),
    views: Vec<(usize, usize)>,
}

impl IndicatorViewpoints {
    pub fn for_grid(angular: (usize, usize)) -> Self {
        let axis = |n: usize| {
            let mut a = vec![0, (n - 1) / 2, n - 1];
            a.dedup();
            a
        };
        let (us, vs) = (axis(angular.0), axis(angular.1));
        let views = vs.iter().flat_map(|&v| us.iter().map(move |&u| (u, v))).collect();
        IndicatorViewpoints {
            center: ((angular.0 - 1) / 2, (angular.1 - 1) / 2),
            views,
        }
    }

    pub fn views(&self) -> &[(usize, usize)] {
        &self.views
    }

    pub fn center(&self) -> (usize, usize) {
        self.center
    }

    /// Angular offset of a view from the center.
    pub fn offset(&self, view: (usize, usize)) -> (i32, i32) {
        (
            view.0 as i32 - self.center.0 as i32,
            view.1 as i32 - self.center.1 as i32,
        )
    }
}

/// Disparity used to carry a central pixel into another view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WarpMode {
    /// The pixel's own initial disparity.
    PerPixel,
    /// Unit disparity, i.e. a shift by the viewpoint offset.
    Literal,
    /// The smallest initial disparity within the largest possible parallax,
    /// so that a pixel is compared against the surface behind it.
    #[default]
    RearLayer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentationParams {
    pub layers: usize,
    /// Side of the square matching window.
    pub window: usize,
    /// Adjacent layers whose mean disparities differ by less are merged.
    pub min_layer_gap: f64,
    pub warp: WarpMode,
    /// Best placement among windows covering the pixel, and best half set of
    /// views, instead of a single centered window over all views.
    pub shiftable: bool,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        SegmentationParams {
            layers: 4,
            window: 7,
            min_layer_gap: 0.3,
            warp: WarpMode::RearLayer,
            shiftable: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionParams {
    pub segmentation: SegmentationParams,
    pub psi_radius: usize,
    pub intensity_tol: f64,
    /// Occlusion detection is skipped below this fraction of valid initial
    /// disparities.
    pub min_valid_fraction: f64,
}

impl Default for RegionParams {
    fn default() -> Self {
        RegionParams {
            segmentation: SegmentationParams::default(),
            psi_radius: 2,
            intensity_tol: 0.02,
            min_valid_fraction: 0.5,
        }
    }
}

/// Layer thresholds from multi-level Otsu over binned valid disparities.
///
/// Classes closer than `min_gap` in mean are merged. Each threshold sits
/// midway between the last occupied bin below it and the first above, so the
/// layer of `d` is the number of thresholds below `d`.
pub fn layer_thresholds(
    init_disp: &DisparityMap,
    bin_width: f64,
    layers: usize,
    min_gap: f64,
) -> Result<Vec<f64>> {
    let mut bins: Vec<(i64, f64, f64)> = Vec::new();
    {
        let mut hist = std::collections::BTreeMap::<i64, (f64, f64)>::new();
        for (&v, &ok) in init_disp.values().iter().zip(init_disp.valid_mask()) {
            if ok {
                let e = hist.entry(disparity_bin(v, bin_width)).or_default();
                e.0 += 1.0;
                e.1 += v as f64;
            }
        }
        bins.extend(hist.into_iter().map(|(b, (w, s))| (b, w, s)));
    }
    if bins.is_empty() {
        return Err(Error::EmptyHistogram);
    }
    let n = bins.len();
    let classes = layers.max(1).min(n);

    // Prefix sums over occupied bins.
    let mut pw = vec![0.0; n + 1];
    let mut ps = vec![0.0; n + 1];
    for (i, &(_, w, s)) in bins.iter().enumerate() {
        pw[i + 1] = pw[i] + w;
        ps[i + 1] = ps[i] + s;
    }
    let score = |a: usize, b: usize| {
        let w = pw[b] - pw[a];
        let s = ps[b] - ps[a];
        s * s / w
    };
    // best[k][j]: first j bins split into k+1 classes.
    let mut best = vec![vec![f64::NEG_INFINITY; n + 1]; classes];
    let mut cut = vec![vec![0usize; n + 1]; classes];
    for j in 1..=n {
        best[0][j] = score(0, j);
    }
    for k in 1..classes {
        for j in (k + 1)..=n {
            for i in k..j {
                let v = best[k - 1][i] + score(i, j);
                if v > best[k][j] + 1e-9 * v.abs().max(1.0) {
                    best[k][j] = v;
                    cut[k][j] = i;
                }
            }
        }
    }
    let mut bounds = Vec::new();
    let mut j = n;
    for k in (1..classes).rev() {
        j = cut[k][j];
        bounds.push(j);
    }
    bounds.reverse();

    // Merge classes whose means are too close, smallest gap first.
    loop {
        let mut edges = vec![0];
        edges.extend(&bounds);
        edges.push(n);
        let means: Vec<f64> = edges
            .windows(2)
            .map(|e| (ps[e[1]] - ps[e[0]]) / (pw[e[1]] - pw[e[0]]))
            .collect();
        let closest = means
            .windows(2)
            .enumerate()
            .map(|(i, m)| (i, m[1] - m[0]))
            .filter(|&(_, gap)| gap < min_gap)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match closest {
            Some((i, _)) => {
                bounds.remove(i);
            }
            None => break,
        }
    }
    Ok(bounds
        .iter()
        .map(|&b| 0.5 * (bins[b - 1].0 + bins[b].0) as f64 * bin_width)
        .collect())
}

fn layer_of(d: f32, thresholds: &[f64]) -> u8 {
    thresholds.iter().filter(|&&t| (d as f64) > t).count() as u8
}

/// Assigns layers to valid pixels and spreads them into invalid ones from the
/// nearest labeled pixel.
fn layers_from_disparity(disp: &DisparityMap, thresholds: &[f64]) -> SegMap {
    let (w, h) = (disp.width(), disp.height());
    let mut layers = vec![u8::MAX; w * h];
    let mut queue = VecDeque::new();
    for i in 0..w * h {
        if disp.valid_mask()[i] {
            layers[i] = layer_of(disp.values()[i], thresholds);
            queue.push_back(i);
        }
    }
    if queue.is_empty() {
        layers.fill(0);
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = (i % w, i / w);
        let mut visit = |j: usize| {
            if layers[j] == u8::MAX {
                layers[j] = layers[i];
                queue.push_back(j);
            }
        };
        if x > 0 {
            visit(i - 1);
        }
        if x + 1 < w {
            visit(i + 1);
        }
        if y > 0 {
            visit(i - w);
        }
        if y + 1 < h {
            visit(i + w);
        }
    }
    SegMap {
        width: w,
        height: h,
        layers,
    }
}

/// Segmentation of one indicator view.
#[derive(Debug, Clone)]
pub struct ViewSegmentation {
    pub view: (usize, usize),
    /// Offset from the central view.
    pub offset: (i32, i32),
    pub disparity: DisparityMap,
    pub layers: SegMap,
}

/// Layer segmentation of every indicator view, with thresholds shared from
/// the central initial disparity.
pub fn segment_views(
    lf: &LightField,
    init_disp: &DisparityMap,
    grid: &DisparityGrid,
    params: &SegmentationParams,
) -> Result<(Vec<f64>, Vec<ViewSegmentation>)> {
    let (w, h) = lf.spatial();
    if (init_disp.width(), init_disp.height()) != (w, h) {
        return Err(Error::ShapeMismatch("initial disparity differs from views".into()));
    }
    let valid = init_disp.valid_count();
    if 2 * valid < w * h {
        return Err(Error::InsufficientInitialDisparity { valid, total: w * h });
    }
    let thresholds = layer_thresholds(init_disp, grid.step(), params.layers, params.min_layer_gap)?;
    let indicators = IndicatorViewpoints::for_grid(lf.angular());
    let segs = indicators
        .views()
        .iter()
        .map(|&view| {
            let disparity = match_reference(
                lf,
                view,
                indicators.views(),
                grid,
                params.window / 2,
                params.shiftable,
                CostNorm::L1,
                DEFAULT_FLAT_THRESHOLD,
            );
            let layers = layers_from_disparity(&disparity, &thresholds);
            ViewSegmentation {
                view,
                offset: indicators.offset(view),
                disparity,
                layers,
            }
        })
        .collect();
    Ok((thresholds, segs))
}

/// Per-pixel disparity used by [`segmentation_diff`] for the warp.
fn warp_disparity(init_disp: &DisparityMap, mode: WarpMode, max_offset: i32) -> Vec<Option<f32>> {
    let (w, h) = (init_disp.width(), init_disp.height());
    match mode {
        WarpMode::PerPixel => (0..w * h).map(|i| init_disp.get(i % w, i / w)).collect(),
        WarpMode::Literal => vec![Some(1.0); w * h],
        WarpMode::RearLayer => {
            let valid = init_disp
                .values()
                .iter()
                .zip(init_disp.valid_mask())
                .filter(|(_, &ok)| ok)
                .map(|(&v, _)| v);
            let (lo, hi) = valid.fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
            if lo > hi {
                return vec![None; w * h];
            }
            let radius = ((hi - lo) as f64 * max_offset as f64).ceil() as usize + 1;
            let values: Vec<f64> = (0..w * h)
                .map(|i| init_disp.get(i % w, i / w).map_or(f64::INFINITY, |v| v as f64))
                .collect();
            crate::volume::min_filter(&values, w, h, radius)
                .into_iter()
                .map(|v| v.is_finite().then_some(v as f32))
                .collect()
        }
    }
}

/// Sum over views of the central layer minus the view's layer at the warped
/// position. Positive where a nearer layer is lost in some view, negative
/// where one appears.
pub fn segmentation_diff(
    segs: &[ViewSegmentation],
    center: &SegMap,
    init_disp: &DisparityMap,
    warp: WarpMode,
) -> Result<Vec<i32>> {
    let (w, h) = (center.width(), center.height());
    if (init_disp.width(), init_disp.height()) != (w, h)
        || segs.iter().any(|s| (s.layers.width(), s.layers.height()) != (w, h))
    {
        return Err(Error::ShapeMismatch("segmentations differ in size".into()));
    }
    let max_offset = segs
        .iter()
        .map(|s| s.offset.0.abs().max(s.offset.1.abs()))
        .max()
        .unwrap_or(0);
    let shift = warp_disparity(init_disp, warp, max_offset);
    let mut diff = vec![0i32; w * h];
    diff.par_iter_mut().enumerate().for_each(|(i, out)| {
        let Some(d) = shift[i] else { return };
        let (x, y) = (i % w, i / w);
        let own = center.get(x, y) as i32;
        for s in segs {
            let sx = (x as f64 + s.offset.0 as f64 * d as f64).round();
            let sy = (y as f64 + s.offset.1 as f64 * d as f64).round();
            if sx >= 0.0 && sy >= 0.0 && sx < w as f64 && sy < h as f64 {
                *out += own - s.layers.get(sx as usize, sy as usize) as i32;
            }
        }
    });
    Ok(diff)
}

/// Number of neighbors within `radius` whose intensity differs by more than
/// `tol`, and the number of in-bounds neighbors.
pub fn intensity_variation(center: &Image, x: usize, y: usize, radius: usize, tol: f64) -> (usize, usize) {
    let (w, h) = (center.width(), center.height());
    let g = center.get(x, y);
    let mut varied = 0;
    let mut total = 0;
    for ny in y.saturating_sub(radius)..=(y + radius).min(h - 1) {
        for nx in x.saturating_sub(radius)..=(x + radius).min(w - 1) {
            if (nx, ny) == (x, y) {
                continue;
            }
            total += 1;
            if ((center.get(nx, ny) - g).abs() as f64) > tol {
                varied += 1;
            }
        }
    }
    (varied, total)
}

/// Labels from the segmentation difference and local intensity variation.
/// Smooth pixels have fewer than half of their neighbors varying.
pub fn classify_regions(diff: &[i32], center: &Image, radius: usize, tol: f64) -> Result<RegionMap> {
    let (w, h) = (center.width(), center.height());
    if diff.len() != w * h {
        return Err(Error::ShapeMismatch("difference image differs from central view".into()));
    }
    let labels = (0..w * h)
        .into_par_iter()
        .map(|i| {
            if diff[i] < 0 {
                Region::Occluded
            } else if diff[i] > 0 {
                Region::Occluding
            } else {
                let (varied, total) = intensity_variation(center, i % w, i / w, radius, tol);
                if 2 * varied < total {
                    Region::Smooth
                } else {
                    Region::Texture
                }
            }
        })
        .collect();
    RegionMap::from_labels(w, h, labels)
}

/// Intermediate and final results of region identification.
#[derive(Debug, Clone)]
pub struct RegionAnalysis {
    pub thresholds: Vec<f64>,
    pub segmentations: Vec<ViewSegmentation>,
    pub diff: Vec<i32>,
    pub regions: RegionMap,
    /// Set when too few initial disparities were valid to look for occlusion.
    pub occlusion_skipped: bool,
}

impl RegionAnalysis {
    pub fn central_segmentation(&self) -> Option<&SegMap> {
        self.segmentations
            .iter()
            .find(|s| s.offset == (0, 0))
            .map(|s| &s.layers)
    }
}

pub fn identify_regions(
    lf: &LightField,
    init_disp: &DisparityMap,
    grid: &DisparityGrid,
    params: &RegionParams,
) -> Result<RegionAnalysis> {
    let (w, h) = lf.spatial();
    let center = central_view(lf);
    let enough = init_disp.valid_count() as f64 >= params.min_valid_fraction * (w * h) as f64;
    let (thresholds, segmentations, diff) = if enough {
        let (thresholds, segs) = segment_views(lf, init_disp, grid, &params.segmentation)?;
        let central = segs
            .iter()
            .find(|s| s.offset == (0, 0))
            .map(|s| s.layers.clone())
            .expect("indicator views include the center");
        let diff = segmentation_diff(&segs, &central, init_disp, params.segmentation.warp)?;
        (thresholds, segs, diff)
    } else {
        (Vec::new(), Vec::new(), vec![0; w * h])
    };
    let regions = classify_regions(&diff, center, params.psi_radius, params.intensity_tol)?;
    Ok(RegionAnalysis {
        thresholds,
        segmentations,
        diff,
        regions,
        occlusion_skipped: !enough,
    })
}
