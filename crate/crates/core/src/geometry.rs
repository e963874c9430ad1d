//! Two-plane light field geometry: depth, disparity and cross-view
//! reprojection. Disparity is measured per unit angular index step.

use crate::error::{Error, Result};
use crate::lightfield::Image;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    /// Distance `F` between the viewpoint and image planes.
    pub focus_distance: f64,
    /// Central viewpoint `(u0, v0)` in angular index units.
    pub center: (f64, f64),
    /// Physical viewpoint spacing per angular index.
    pub baseline_step: f64,
}

impl Calibration {
    pub fn new(focus_distance: f64, center: (f64, f64), baseline_step: f64) -> Result<Self> {
        if !(focus_distance > 0.0) || !(baseline_step > 0.0) {
            return Err(Error::BadConfig(
                "focus distance and baseline step must be positive".into(),
            ));
        }
        Ok(Calibration {
            focus_distance,
            center,
            baseline_step,
        })
    }

    /// Calibration centered on the middle of a `U×V` angular grid.
    pub fn for_grid(angular: (usize, usize), focus_distance: f64, baseline_step: f64) -> Result<Self> {
        let center = ((angular.0 as f64 - 1.0) / 2.0, (angular.1 as f64 - 1.0) / 2.0);
        Self::new(focus_distance, center, baseline_step)
    }

    /// Physical baseline of an angular index offset.
    pub fn baseline(&self, index_offset: f64) -> f64 {
        index_offset * self.baseline_step
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenePoint {
    pub position: [f64; 3],
}

impl ScenePoint {
    pub fn depth(&self) -> f64 {
        self.position[2]
    }
}

pub fn point_from_depth(x: f64, y: f64, depth: f64, cal: &Calibration) -> Result<ScenePoint> {
    if !(depth > 0.0) {
        return Err(Error::NonPositiveDepth(depth));
    }
    let f = cal.focus_distance;
    Ok(ScenePoint {
        position: [-f * x / depth + cal.center.0, -f * y / depth + cal.center.1, depth],
    })
}

pub fn point_from_disparity(x: f64, y: f64, disp: f64, cal: &Calibration) -> Result<ScenePoint> {
    let shift = disp - 1.0;
    if shift == 0.0 {
        return Err(Error::UnitDisparity);
    }
    Ok(ScenePoint {
        position: [
            -x * shift + cal.center.0,
            -y * shift + cal.center.1,
            cal.focus_distance / shift,
        ],
    })
}

/// Position in view `(u, v)` of the central-view pixel `(x, y)` at disparity `disp`.
#[inline]
pub fn reproject(x: f64, y: f64, disp: f64, u: f64, v: f64, cal: &Calibration) -> (f64, f64) {
    (x + (u - cal.center.0) * disp, y + (v - cal.center.1) * disp)
}

/// Bilinear sample; `None` outside `[0, W-1]×[0, H-1]`.
#[inline]
pub fn sample_bilinear(image: &Image, x: f64, y: f64) -> Option<f32> {
    let (w, h) = (image.width(), image.height());
    if !(x >= 0.0 && y >= 0.0 && x <= (w - 1) as f64 && y <= (h - 1) as f64) {
        return None;
    }
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (fx, fy) = ((x - x0 as f64) as f32, (y - y0 as f64) as f32);
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let top = image.get(x0, y0) * (1.0 - fx) + image.get(x1, y0) * fx;
    let bottom = image.get(x0, y1) * (1.0 - fx) + image.get(x1, y1) * fx;
    Some(top * (1.0 - fy) + bottom * fy)
}
