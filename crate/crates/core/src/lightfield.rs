//! Light field containers and the on-disk view directory layout.
//!
//! A light field is stored as `U·V` grayscale PNG views. The view at
//! angular index `(u, v)` lives in the file whose trailing number is
//! `v·U + u`, so `u` runs left to right and `v` top to bottom. Files named
//! `input_CamNNN.png` (the HCI benchmark layout) take precedence over any
//! other numbered PNGs in the directory. Color views are reduced to
//! luminance with Rec. 601 weights; 8- and 16-bit samples are normalized to
//! `[0, 1]`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, Luma};
use rayon::prelude::*;

use crate::config::SceneConfig;
use crate::error::{Error, Result};

/// Single-channel image with samples stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(width: usize, height: usize, fill: f32) -> Self {
        Image {
            width,
            height,
            data: vec![fill; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{} samples for a {width}x{height} image",
                data.len()
            )));
        }
        Ok(Image {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Image {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f32) {
        self.data[y * self.width + x] = value;
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }
}

/// 4D light field `L(u, v, x, y)` as a `U×V` grid of grayscale views.
#[derive(Debug, Clone)]
pub struct LightField {
    angular: (usize, usize),
    width: usize,
    height: usize,
    views: Vec<Image>,
}

impl LightField {
    /// Builds a light field from views in row-major angular order (`v·U + u`).
    pub fn new(angular: (usize, usize), views: Vec<Image>) -> Result<Self> {
        let (nu, nv) = angular;
        if nu == 0 || nv == 0 || nu % 2 == 0 || nv % 2 == 0 {
            return Err(Error::BadConfig(format!(
                "angular resolution {nu}x{nv} must be odd in both directions"
            )));
        }
        if views.len() != nu * nv {
            return Err(Error::ShapeMismatch(format!(
                "{} views for a {nu}x{nv} angular grid",
                views.len()
            )));
        }
        let (width, height) = (views[0].width(), views[0].height());
        if width == 0 || height == 0 {
            return Err(Error::ShapeMismatch("views have zero area".into()));
        }
        for (i, view) in views.iter().enumerate() {
            if view.width() != width || view.height() != height {
                return Err(Error::ShapeMismatch(format!(
                    "view {i} is {}x{}, view 0 is {width}x{height}",
                    view.width(),
                    view.height()
                )));
            }
            if view.as_slice().iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::ShapeMismatch(format!(
                    "view {i} has radiance outside [0, 1]"
                )));
            }
        }
        Ok(LightField {
            angular,
            width,
            height,
            views,
        })
    }

    pub fn angular(&self) -> (usize, usize) {
        self.angular
    }

    /// Spatial resolution as `(width, height)`.
    pub fn spatial(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn view_index(&self, u: usize, v: usize) -> usize {
        v * self.angular.0 + u
    }

    pub fn view(&self, u: usize, v: usize) -> &Image {
        &self.views[self.view_index(u, v)]
    }

    pub fn views(&self) -> &[Image] {
        &self.views
    }

    pub fn views_mut(&mut self) -> &mut [Image] {
        &mut self.views
    }

    /// Angular index of the central viewpoint.
    pub fn center(&self) -> (usize, usize) {
        ((self.angular.0 - 1) / 2, (self.angular.1 - 1) / 2)
    }
}

/// The sub-aperture image at the central viewpoint.
pub fn central_view(lf: &LightField) -> &Image {
    let (u0, v0) = lf.center();
    lf.view(u0, v0)
}

/// Per-pixel disparity with a validity mask.
///
/// Invalid pixels hold `NaN`, which is also how they are written to PFM.
/// Two maps are equal when they agree on shape, validity and valid values.
#[derive(Debug, Clone)]
pub struct DisparityMap {
    width: usize,
    height: usize,
    values: Vec<f32>,
    valid: Vec<bool>,
}

impl PartialEq for DisparityMap {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.valid == other.valid
            && self
                .values
                .iter()
                .zip(&other.values)
                .zip(&self.valid)
                .all(|((a, b), &ok)| !ok || a == b)
    }
}

impl DisparityMap {
    pub fn invalid(width: usize, height: usize) -> Self {
        DisparityMap {
            width,
            height,
            values: vec![f32::NAN; width * height],
            valid: vec![false; width * height],
        }
    }

    pub fn constant(width: usize, height: usize, value: f32) -> Self {
        Self::from_values(width, height, vec![value; width * height])
            .expect("constant map has consistent shape")
    }

    /// Wraps raw values; non-finite entries become invalid.
    pub fn from_values(width: usize, height: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {width}x{height} disparity map",
                values.len()
            )));
        }
        let valid = values.iter().map(|v| v.is_finite()).collect();
        Ok(DisparityMap {
            width,
            height,
            values,
            valid,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<f32> {
        let i = y * self.width + x;
        self.valid[i].then_some(self.values[i])
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: Option<f32>) {
        let i = y * self.width + x;
        match value {
            Some(v) if v.is_finite() => {
                self.values[i] = v;
                self.valid[i] = true;
            }
            _ => {
                self.values[i] = f32::NAN;
                self.valid[i] = false;
            }
        }
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }
}

fn trailing_index(path: &Path) -> Option<usize> {
    let stem = path.file_stem()?.to_str()?;
    let digits: String = stem
        .chars()
        .rev()
        .take_while(|c| c.is_ascii_digit())
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    digits.parse().ok()
}

fn scan_views(directory: &Path) -> Result<BTreeMap<usize, PathBuf>> {
    let entries = fs::read_dir(directory).map_err(|e| Error::io(directory, e))?;
    let mut hci = BTreeMap::new();
    let mut other = BTreeMap::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(directory, e))?.path();
        let is_png = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if !is_png {
            continue;
        }
        let Some(index) = trailing_index(&path) else {
            continue;
        };
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.starts_with("input_Cam") {
            hci.insert(index, path);
        } else {
            other.insert(index, path);
        }
    }
    Ok(if hci.is_empty() { other } else { hci })
}

/// Decodes a PNG into luminance in `[0, 1]`.
pub fn read_gray_png(path: &Path) -> Result<Image> {
    let decoded = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let data = match decoded {
        DynamicImage::ImageLuma8(img) => img.into_raw().into_iter().map(|v| v as f32 / 255.0).collect(),
        DynamicImage::ImageLuma16(img) => img
            .into_raw()
            .into_iter()
            .map(|v| v as f32 / 65535.0)
            .collect(),
        other => other
            .to_rgb32f()
            .pixels()
            .map(|p| (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]).clamp(0.0, 1.0))
            .collect(),
    };
    Image::from_vec(w, h, data)
}

/// Writes an image as a 16-bit grayscale PNG, clamping to `[0, 1]`.
pub fn write_gray16_png(image: &Image, path: &Path) -> Result<()> {
    let raw: Vec<u16> = image
        .as_slice()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 65535.0).round() as u16)
        .collect();
    let buffer: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(image.width() as u32, image.height() as u32, raw)
            .expect("buffer size matches image");
    buffer.save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads a view directory. The angular grid comes from the config, or is
/// inferred as square from the number of views when the config omits it.
pub fn load_lightfield(directory: &Path, config: &SceneConfig) -> Result<LightField> {
    config.validate()?;
    let files = scan_views(directory)?;
    let (nu, nv) = match config.angular {
        Some(a) => a,
        None => {
            let n = files.keys().next_back().map_or(0, |k| k + 1);
            let side = (n as f64).sqrt().round() as usize;
            if side * side != n || n == 0 {
                return Err(Error::BadConfig(format!(
                    "cannot infer a square angular grid from {n} views; set angular_u/angular_v"
                )));
            }
            (side, side)
        }
    };
    if nu % 2 == 0 || nv % 2 == 0 {
        return Err(Error::BadConfig(format!(
            "angular resolution {nu}x{nv} must be odd in both directions"
        )));
    }
    let paths = (0..nu * nv)
        .map(|i| files.get(&i).cloned().ok_or(Error::MissingView(i)))
        .collect::<Result<Vec<_>>>()?;
    let views = paths
        .par_iter()
        .map(|p| read_gray_png(p))
        .collect::<Result<Vec<_>>>()?;
    LightField::new((nu, nv), views)
}

/// Writes the views of a light field as `input_CamNNN.png` files.
pub fn save_lightfield(lf: &LightField, directory: &Path) -> Result<()> {
    fs::create_dir_all(directory).map_err(|e| Error::io(directory, e))?;
    lf.views()
        .par_iter()
        .enumerate()
        .try_for_each(|(i, view)| write_gray16_png(view, &directory.join(format!("input_Cam{i:03}.png"))))
}
