//! Preset matching windows, their visible viewpoint sets, and per-pixel
//! window selection by maximum matching entropy.
//!
//! Every preset is a rectangle around the anchor: the full square, four
//! half windows and four quadrant windows. Half and quadrant windows always
//! keep the anchor's row and column. The dictionary is the `SHAPES` table.

use rayon::prelude::*;
use serde::Serialize;

use crate::entropy::{disparity_bin, entropy_of_counts, gray_bin, EntropyParams, WindowPixel};
use crate::error::{Error, Result};
use crate::lightfield::{central_view, DisparityMap, Image, LightField};
use crate::region::{Region, RegionMap};

/// Which side of the anchor a window covers along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Reach {
    Both,
    /// Offsets `≤ 0` only (left, or up).
    Negative,
    /// Offsets `≥ 0` only (right, or down).
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum WindowShape {
    Square,
    W1,
    W2,
    W3,
    W4,
    W5,
    W6,
    W7,
    W8,
}

/// `(shape, horizontal reach, vertical reach)`.
pub const SHAPES: [(WindowShape, Reach, Reach); 9] = [
    (WindowShape::Square, Reach::Both, Reach::Both),
    (WindowShape::W1, Reach::Negative, Reach::Both),
    (WindowShape::W2, Reach::Positive, Reach::Both),
    (WindowShape::W3, Reach::Both, Reach::Negative),
    (WindowShape::W4, Reach::Both, Reach::Positive),
    (WindowShape::W5, Reach::Negative, Reach::Negative),
    (WindowShape::W6, Reach::Positive, Reach::Negative),
    (WindowShape::W7, Reach::Negative, Reach::Positive),
    (WindowShape::W8, Reach::Positive, Reach::Positive),
];

pub const MIN_SIDE: usize = 3;
pub const MAX_SIDE: usize = 15;

impl WindowShape {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        SHAPES.get(i).map(|s| s.0)
    }

    pub fn reach(self) -> (Reach, Reach) {
        let (_, h, v) = SHAPES[self.index()];
        (h, v)
    }

    pub fn name(self) -> &'static str {
        ["square", "W1", "W2", "W3", "W4", "W5", "W6", "W7", "W8"][self.index()]
    }
}

fn axis_extent(reach: Reach, radius: i32) -> (i32, i32) {
    match reach {
        Reach::Both => (-radius, radius),
        Reach::Negative => (-radius, 0),
        Reach::Positive => (0, radius),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WindowSpec {
    pub shape: WindowShape,
    pub side: usize,
}

/// Inclusive pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Rect {
    pub fn area(&self) -> usize {
        (self.x1 - self.x0 + 1) * (self.y1 - self.y0 + 1)
    }
}

impl WindowSpec {
    pub fn new(shape: WindowShape, side: usize) -> Result<Self> {
        if side.is_multiple_of(2) || !(MIN_SIDE..=MAX_SIDE).contains(&side) {
            return Err(Error::BadSide(side));
        }
        Ok(WindowSpec { shape, side })
    }

    pub fn radius(&self) -> i32 {
        (self.side as i32 - 1) / 2
    }

    /// Offset bounds `(m_min, m_max, n_min, n_max)`.
    pub fn extent(&self) -> (i32, i32, i32, i32) {
        let (h, v) = self.shape.reach();
        let (m0, m1) = axis_extent(h, self.radius());
        let (n0, n1) = axis_extent(v, self.radius());
        (m0, m1, n0, n1)
    }

    /// Anchor-relative offsets `(m, n)` of the mask, row-major.
    pub fn offsets(&self) -> Vec<(i32, i32)> {
        let (m0, m1, n0, n1) = self.extent();
        (n0..=n1)
            .flat_map(|n| (m0..=m1).map(move |m| (m, n)))
            .collect()
    }

    /// The mask placed at `anchor` and clipped to a `width×height` image.
    pub fn clipped(&self, anchor: (usize, usize), width: usize, height: usize) -> Rect {
        let (m0, m1, n0, n1) = self.extent();
        let (ax, ay) = (anchor.0 as i32, anchor.1 as i32);
        Rect {
            x0: (ax + m0).max(0) as usize,
            x1: (ax + m1).min(width as i32 - 1) as usize,
            y0: (ay + n0).max(0) as usize,
            y1: (ay + n1).min(height as i32 - 1) as usize,
        }
    }
}

/// Square plus W1..W8 at one side length.
pub fn shape_dictionary(side: usize) -> Result<Vec<WindowSpec>> {
    SHAPES
        .iter()
        .map(|&(shape, _, _)| WindowSpec::new(shape, side))
        .collect()
}

/// Whether a view at angular offset `(du, dv)` from the center sees every
/// pixel of a window with this shape when the window excludes a nearer
/// occluder.
///
/// A window reaching only left has its occluder on the right. Nearer
/// surfaces have larger disparity and so move right in views with `du > 0`,
/// uncovering the window; those views are the visible ones.
#[inline]
pub fn view_is_visible(shape: WindowShape, du: i32, dv: i32) -> bool {
    let ok = |reach: Reach, d: i32| match reach {
        Reach::Both => true,
        Reach::Negative => d >= 0,
        Reach::Positive => d <= 0,
    };
    let (h, v) = shape.reach();
    ok(h, du) && ok(v, dv)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ViewpointSet {
    views: Vec<(usize, usize)>,
}

impl ViewpointSet {
    pub fn full(angular: (usize, usize)) -> Self {
        visible_viewpoints(WindowShape::Square, angular)
    }

    pub fn center_only(angular: (usize, usize)) -> Self {
        ViewpointSet {
            views: vec![((angular.0 - 1) / 2, (angular.1 - 1) / 2)],
        }
    }

    pub fn from_views(mut views: Vec<(usize, usize)>) -> Self {
        views.sort_unstable_by_key(|&(u, v)| (v, u));
        views.dedup();
        ViewpointSet { views }
    }

    pub fn views(&self) -> &[(usize, usize)] {
        &self.views
    }

    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn is_empty(&self) -> bool {
        self.views.is_empty()
    }

    pub fn contains(&self, view: (usize, usize)) -> bool {
        self.views.contains(&view)
    }
}

pub fn visible_viewpoints(shape: WindowShape, angular: (usize, usize)) -> ViewpointSet {
    let (u0, v0) = ((angular.0 as i32 - 1) / 2, (angular.1 as i32 - 1) / 2);
    let mut views = Vec::new();
    for v in 0..angular.1 {
        for u in 0..angular.0 {
            if view_is_visible(shape, u as i32 - u0, v as i32 - v0) {
                views.push((u, v));
            }
        }
    }
    ViewpointSet { views }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowChoice {
    pub window: WindowSpec,
    pub viewpoints: ViewpointSet,
    pub entropy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Candidate {
    pub window: WindowSpec,
    /// `None` when clipping leaves fewer than three pixels.
    pub entropy: Option<f64>,
}

/// Per-pixel selection over precomputed gray and disparity bins.
pub struct WindowSelector<'a> {
    width: usize,
    height: usize,
    gray: Vec<u16>,
    disparity: Vec<Option<u32>>,
    disparity_bins: usize,
    regions: &'a RegionMap,
    central: &'a Image,
    init_disp: &'a DisparityMap,
    params: EntropyParams,
    angular: (usize, usize),
}

impl<'a> WindowSelector<'a> {
    pub fn new(
        central: &'a Image,
        init_disp: &'a DisparityMap,
        regions: &'a RegionMap,
        params: EntropyParams,
        angular: (usize, usize),
    ) -> Result<Self> {
        let (width, height) = (central.width(), central.height());
        if (init_disp.width(), init_disp.height()) != (width, height)
            || (regions.width(), regions.height()) != (width, height)
        {
            return Err(Error::ShapeMismatch(
                "central view, initial disparity and regions differ in size".into(),
            ));
        }
        let gray = central
            .as_slice()
            .iter()
            .map(|&g| gray_bin(g, params.gray_bins) as u16)
            .collect();
        let raw: Vec<Option<i64>> = (0..width * height)
            .map(|i| {
                init_disp.valid_mask()[i]
                    .then(|| disparity_bin(init_disp.values()[i], params.disparity_bin_width))
            })
            .collect();
        let lo = raw.iter().flatten().copied().min().unwrap_or(0);
        let hi = raw.iter().flatten().copied().max().unwrap_or(0);
        let disparity = raw.iter().map(|b| b.map(|b| (b - lo) as u32)).collect();
        Ok(WindowSelector {
            width,
            height,
            gray,
            disparity,
            disparity_bins: (hi - lo + 1) as usize,
            regions,
            central,
            init_disp,
            params,
            angular,
        })
    }

    fn search_space(&self, label: Region) -> (&'static [(WindowShape, Reach, Reach)], Option<Region>) {
        match label {
            Region::Texture | Region::Smooth => (&SHAPES[..1], None),
            Region::Occluding => (&SHAPES[..], Some(Region::Occluded)),
            Region::Occluded => (&SHAPES[..], Some(Region::Occluding)),
        }
    }

    fn entropy_of(
        &self,
        rect: Rect,
        mismatch: Option<Region>,
        scratch: &mut Scratch,
    ) -> f64 {
        scratch.reset(self.params.gray_bins, self.disparity_bins);
        let mut total = 0u32;
        let mut disparity_total = 0u32;
        let mut mismatched_total = 0u32;
        for y in rect.y0..=rect.y1 {
            for x in rect.x0..=rect.x1 {
                let i = y * self.width + x;
                let g = self.gray[i] as usize;
                scratch.gray[g] += 1;
                total += 1;
                if let Some(d) = self.disparity[i] {
                    scratch.disparity[d as usize] += 1;
                    disparity_total += 1;
                }
                if mismatch == Some(self.regions.labels()[i]) {
                    scratch.mismatched[g] += 1;
                    mismatched_total += 1;
                }
            }
        }
        let alpha2 = if mismatch.is_some() { self.params.alpha2 } else { 0.0 };
        let mut e = entropy_of_counts(scratch.gray.iter().copied(), total);
        if self.params.alpha1 > 0.0 {
            e -= self.params.alpha1
                * entropy_of_counts(scratch.disparity.iter().copied(), disparity_total);
        }
        if alpha2 > 0.0 {
            e -= alpha2 * entropy_of_counts(scratch.mismatched.iter().copied(), mismatched_total);
        }
        e
    }

    /// Entropy of every searched candidate, in search order (side, then shape).
    pub fn candidates(&self, anchor: (usize, usize)) -> Vec<Candidate> {
        let label = self.regions.get(anchor.0, anchor.1);
        let (shapes, mismatch) = self.search_space(label);
        let mut scratch = Scratch::default();
        let mut out = Vec::new();
        for side in (MIN_SIDE..=MAX_SIDE).step_by(2) {
            for &(shape, _, _) in shapes {
                let window = WindowSpec { shape, side };
                let rect = window.clipped(anchor, self.width, self.height);
                let entropy = (rect.area() >= 3).then(|| self.entropy_of(rect, mismatch, &mut scratch));
                out.push(Candidate { window, entropy });
            }
        }
        out
    }

    /// Best window: maximum entropy, ties to the smaller side then the lower
    /// shape index.
    pub fn select_spec(&self, anchor: (usize, usize)) -> (WindowSpec, f64) {
        let mut best: Option<(WindowSpec, f64)> = None;
        for c in self.candidates(anchor) {
            if let Some(e) = c.entropy {
                if best.is_none_or(|(_, b)| e > b + 1e-12) {
                    best = Some((c.window, e));
                }
            }
        }
        best.unwrap_or((
            WindowSpec {
                shape: WindowShape::Square,
                side: MAX_SIDE,
            },
            f64::NEG_INFINITY,
        ))
    }

    /// Viewpoints used with `window` for an anchor of class `label`.
    pub fn viewpoints_for(&self, label: Region, window: &WindowSpec) -> ViewpointSet {
        match label {
            Region::Occluded => visible_viewpoints(window.shape, self.angular),
            _ => ViewpointSet::full(self.angular),
        }
    }

    pub fn select(&self, anchor: (usize, usize)) -> WindowChoice {
        let (window, entropy) = self.select_spec(anchor);
        let label = self.regions.get(anchor.0, anchor.1);
        WindowChoice {
            viewpoints: self.viewpoints_for(label, &window),
            window,
            entropy,
        }
    }

    /// Selected windows for every pixel, row-major.
    pub fn select_all(&self) -> Vec<(WindowSpec, f64)> {
        (0..self.width * self.height)
            .into_par_iter()
            .map(|i| self.select_spec((i % self.width, i / self.width)))
            .collect()
    }

    /// Window pixels as entropy inputs, for checking against `matching_entropy`.
    pub fn window_pixels(&self, anchor: (usize, usize), window: &WindowSpec) -> Vec<WindowPixel> {
        let label = self.regions.get(anchor.0, anchor.1);
        let (_, mismatch) = self.search_space(label);
        let rect = window.clipped(anchor, self.width, self.height);
        let mut out = Vec::with_capacity(rect.area());
        for y in rect.y0..=rect.y1 {
            for x in rect.x0..=rect.x1 {
                out.push(WindowPixel {
                    gray: self.central.get(x, y),
                    disparity: self.init_disp.get(x, y),
                    mismatched: mismatch == Some(self.regions.get(x, y)),
                });
            }
        }
        out
    }

    /// Entropy parameters effective for an anchor of class `label`.
    pub fn params_for(&self, label: Region) -> EntropyParams {
        let (_, mismatch) = self.search_space(label);
        EntropyParams {
            alpha2: if mismatch.is_some() { self.params.alpha2 } else { 0.0 },
            ..self.params
        }
    }
}

#[derive(Default)]
struct Scratch {
    gray: Vec<u32>,
    disparity: Vec<u32>,
    mismatched: Vec<u32>,
}

impl Scratch {
    fn reset(&mut self, gray_bins: usize, disparity_bins: usize) {
        for (buf, n) in [
            (&mut self.gray, gray_bins),
            (&mut self.disparity, disparity_bins),
            (&mut self.mismatched, gray_bins),
        ] {
            buf.clear();
            buf.resize(n, 0);
        }
    }
}

/// Selects the window for one anchor. Builds a selector per call; use
/// [`WindowSelector`] for whole images.
pub fn select_window(
    anchor: (usize, usize),
    lf: &LightField,
    init_disp: &DisparityMap,
    regions: &RegionMap,
    params: &EntropyParams,
) -> Result<WindowChoice> {
    let selector = WindowSelector::new(central_view(lf), init_disp, regions, *params, lf.angular())?;
    Ok(selector.select(anchor))
}
