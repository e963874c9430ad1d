//! Synthetic light fields of fronto-parallel textured layers with exact
//! ground truth.
//!
//! A layer point at `s` appears at `s + (Δu·d, Δv·d)` in the view at angular
//! offset `(Δu, Δv)`. Views are rendered backwards: each pixel looks up the
//! nearest layer whose support contains the pixel pulled back by that shift,
//! and evaluates the layer's continuous texture there.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SceneConfig;
use crate::error::{Error, Result};
use crate::lightfield::{save_lightfield, DisparityMap, Image, LightField};
use crate::pfm::write_pfm;
use crate::region::{Region, RegionMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Texture {
    /// Smooth random texture: a cubic B-spline over Gaussian coefficients
    /// spaced `scale` pixels apart, around mean 0.5.
    Noise {
        seed: u64,
        sigma: f64,
        #[serde(default = "default_scale")]
        scale: f64,
    },
    /// Squares of 0.2 and 0.8 with side `period`.
    Checkerboard { period: f64 },
    Constant { value: f64 },
}

fn default_scale() -> f64 {
    2.0
}

/// Half-open rectangle `[x0, x1) × [y0, y1)` in layer coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Support {
    fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    fn intersects(&self, other: &Support) -> bool {
        self.x0 < other.x1 && other.x0 < self.x1 && self.y0 < other.y1 && other.y0 < self.y1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub texture: Texture,
    pub disparity: f64,
    /// `None` covers the whole plane.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<Support>,
}

/// Scene description; later layers are nearer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    #[serde(default = "default_name")]
    pub name: String,
    pub angular: (usize, usize),
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub noise_seed: u64,
    pub disparity_min: f64,
    pub disparity_max: f64,
    #[serde(default = "default_one")]
    pub focus_distance: f64,
    #[serde(default = "default_one")]
    pub baseline_step: f64,
    #[serde(rename = "layer")]
    pub layers: Vec<Layer>,
}

fn default_name() -> String {
    "scene".into()
}

fn default_one() -> f64 {
    1.0
}

impl SceneSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: SceneSpec = toml::from_str(text).map_err(|e| Error::BadSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scene spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::BadSpec(m));
        let (nu, nv) = self.angular;
        if nu == 0 || nv == 0 || nu % 2 == 0 || nv % 2 == 0 {
            return bad(format!("angular resolution {nu}x{nv} must be odd"));
        }
        if self.width == 0 || self.height == 0 {
            return bad("empty spatial resolution".into());
        }
        if !(self.noise_sigma >= 0.0) {
            return bad(format!("noise sigma {} is negative", self.noise_sigma));
        }
        if !(self.disparity_min < self.disparity_max) {
            return bad("disparity range is empty".into());
        }
        if self.layers.is_empty() {
            return bad("no layers".into());
        }
        for (i, layer) in self.layers.iter().enumerate() {
            if !layer.disparity.is_finite() {
                return bad(format!("layer {i} has a non-finite disparity"));
            }
            match layer.texture {
                Texture::Noise { sigma, scale, .. } if !(sigma >= 0.0) || !(scale > 0.0) => {
                    return bad(format!("layer {i} noise needs sigma >= 0 and scale > 0"))
                }
                Texture::Checkerboard { period } if !(period > 0.0) => {
                    return bad(format!("layer {i} checkerboard period must be positive"))
                }
                Texture::Constant { value } if !(0.0..=1.0).contains(&value) => {
                    return bad(format!("layer {i} constant {value} outside [0, 1]"))
                }
                _ => {}
            }
            if let Some(s) = layer.support {
                if !(s.x0 < s.x1 && s.y0 < s.y1) {
                    return bad(format!("layer {i} has an empty support"));
                }
            }
            for (j, behind) in self.layers[..i].iter().enumerate() {
                let overlap = match (layer.support, behind.support) {
                    (Some(a), Some(b)) => a.intersects(&b),
                    _ => true,
                };
                if overlap && !(layer.disparity > behind.disparity) {
                    return bad(format!(
                        "layer {i} overlaps layer {j} and must have the larger disparity"
                    ));
                }
            }
        }
        Ok(())
    }

    /// Calibration and disparity range as written to `parameters.cfg`.
    pub fn scene_config(&self) -> SceneConfig {
        let mut config = SceneConfig::new(self.disparity_min, self.disparity_max);
        config.focus_distance = self.focus_distance;
        config.baseline_step = self.baseline_step;
        config.angular = Some(self.angular);
        config
    }

    /// One full-frame noise layer at disparity 0.6 seen by 9×9 views of
    /// 96×96 pixels.
    pub fn plane() -> Self {
        SceneSpec {
            name: "plane".into(),
            angular: (9, 9),
            width: 96,
            height: 96,
            noise_sigma: 0.0,
            noise_seed: 0,
            disparity_min: -1.0,
            disparity_max: 3.0,
            focus_distance: 1.0,
            baseline_step: 1.0,
            layers: vec![Layer {
                texture: Texture::Noise {
                    seed: 1,
                    sigma: 0.2,
                    scale: 2.0,
                },
                disparity: 0.6,
                support: None,
            }],
        }
    }

    /// A 40×40 noise square at disparity 2 over a noise background at 0.
    pub fn two_layer() -> Self {
        SceneSpec {
            name: "two-layer".into(),
            layers: vec![
                Layer {
                    texture: Texture::Noise {
                        seed: 1,
                        sigma: 0.2,
                        scale: 2.0,
                    },
                    disparity: 0.0,
                    support: None,
                },
                Layer {
                    texture: Texture::Noise {
                        seed: 2,
                        sigma: 0.2,
                        scale: 2.0,
                    },
                    disparity: 2.0,
                    support: Some(Support {
                        x0: 28.0,
                        y0: 28.0,
                        x1: 68.0,
                        y1: 68.0,
                    }),
                },
            ],
            ..Self::plane()
        }
    }

    fn offsets(&self) -> (f64, f64) {
        ((self.angular.0 - 1) as f64 / 2.0, (self.angular.1 - 1) as f64 / 2.0)
    }
}

/// Texture with its coefficient lattice precomputed over the region any view
/// can reach.
enum Field {
    Spline {
        origin: (f64, f64),
        scale: f64,
        cols: usize,
        coefficients: Vec<f64>,
    },
    Checkerboard(f64),
    Constant(f64),
}

fn bspline_weights(t: f64) -> [f64; 4] {
    let s = 1.0 - t;
    [
        s * s * s / 6.0,
        (3.0 * t * t * t - 6.0 * t * t + 4.0) / 6.0,
        (-3.0 * t * t * t + 3.0 * t * t + 3.0 * t + 1.0) / 6.0,
        t * t * t / 6.0,
    ]
}

impl Field {
    fn new(texture: &Texture, lo: (f64, f64), hi: (f64, f64)) -> Self {
        match *texture {
            Texture::Constant { value } => Field::Constant(value),
            Texture::Checkerboard { period } => Field::Checkerboard(period),
            Texture::Noise { seed, sigma, scale } => {
                let origin = (lo.0 - 2.0 * scale, lo.1 - 2.0 * scale);
                let cols = ((hi.0 - origin.0) / scale).ceil() as usize + 4;
                let rows = ((hi.1 - origin.1) / scale).ceil() as usize + 4;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let normal = Normal::new(0.0, 2.0 * sigma).expect("sigma is non-negative");
                let coefficients = (0..cols * rows).map(|_| normal.sample(&mut rng)).collect();
                Field::Spline {
                    origin,
                    scale,
                    cols,
                    coefficients,
                }
            }
        }
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Field::Constant(v) => *v,
            Field::Checkerboard(p) => {
                if ((x / p).floor() + (y / p).floor()).rem_euclid(2.0) == 0.0 {
                    0.2
                } else {
                    0.8
                }
            }
            Field::Spline {
                origin,
                scale,
                cols,
                coefficients,
            } => {
                let tx = (x - origin.0) / scale;
                let ty = (y - origin.1) / scale;
                let (ix, iy) = (tx.floor() as usize, ty.floor() as usize);
                let wx = bspline_weights(tx - ix as f64);
                let wy = bspline_weights(ty - iy as f64);
                let mut v = 0.0;
                for (b, wyb) in wy.iter().enumerate() {
                    let row = (iy + b - 1) * cols;
                    for (a, wxa) in wx.iter().enumerate() {
                        v += wyb * wxa * coefficients[row + ix + a - 1];
                    }
                }
                (0.5 + v).clamp(0.0, 1.0)
            }
        }
    }
}

/// A rendered scene with its ground truth.
#[derive(Debug, Clone)]
pub struct RenderedScene {
    pub lightfield: LightField,
    pub disparity: DisparityMap,
    pub regions: RegionMap,
    /// Central pixels hidden in at least one corner view.
    pub occluded: Vec<bool>,
    /// Central pixels that hide a centrally visible point in some corner view.
    pub occluding: Vec<bool>,
}

struct Renderer<'a> {
    spec: &'a SceneSpec,
    fields: Vec<Field>,
}

impl<'a> Renderer<'a> {
    fn new(spec: &'a SceneSpec) -> Self {
        let (cu, cv) = spec.offsets();
        let fields = spec
            .layers
            .iter()
            .map(|l| {
                let (mx, my) = (cu * l.disparity.abs() + 1.0, cv * l.disparity.abs() + 1.0);
                Field::new(
                    &l.texture,
                    (-mx, -my),
                    (spec.width as f64 + mx, spec.height as f64 + my),
                )
            })
            .collect();
        Renderer { spec, fields }
    }

    /// Index of the nearest layer seen at `(x, y)` from offset `(du, dv)`.
    fn visible_layer(&self, x: f64, y: f64, du: f64, dv: f64) -> Option<usize> {
        self.spec.layers.iter().enumerate().rev().find_map(|(i, l)| {
            let (sx, sy) = (x - du * l.disparity, y - dv * l.disparity);
            l.support.is_none_or(|s| s.contains(sx, sy)).then_some(i)
        })
    }

    fn render_view(&self, du: f64, dv: f64) -> Image {
        let (w, h) = (self.spec.width, self.spec.height);
        let mut data = vec![0.0f32; w * h];
        data.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
            for (x, out) in row.iter_mut().enumerate() {
                if let Some(i) = self.visible_layer(x as f64, y as f64, du, dv) {
                    let d = self.spec.layers[i].disparity;
                    *out = self.fields[i].eval(x as f64 - du * d, y as f64 - dv * d) as f32;
                }
            }
        });
        Image::from_vec(w, h, data).expect("sized to the scene")
    }

    fn corners(&self) -> Vec<(f64, f64)> {
        let (cu, cv) = self.spec.offsets();
        let mut c = vec![(-cu, -cv), (cu, -cv), (-cu, cv), (cu, cv)];
        c.dedup();
        c
    }

    fn occluded_at(&self, x: f64, y: f64, layer: usize, corners: &[(f64, f64)]) -> bool {
        let d = self.spec.layers[layer].disparity;
        corners.iter().any(|&(du, dv)| {
            self.visible_layer(x + du * d, y + dv * d, du, dv)
                .is_some_and(|seen| seen != layer)
        })
    }

    fn occluding_at(&self, x: f64, y: f64, layer: usize, corners: &[(f64, f64)]) -> bool {
        let (w, h) = (self.spec.width as f64, self.spec.height as f64);
        let d = self.spec.layers[layer].disparity;
        self.spec.layers[..layer].iter().enumerate().any(|(b, behind)| {
            corners.iter().any(|&(du, dv)| {
                let qx = x + du * (d - behind.disparity);
                let qy = y + dv * (d - behind.disparity);
                qx >= 0.0
                    && qy >= 0.0
                    && qx <= w - 1.0
                    && qy <= h - 1.0
                    && behind.support.is_none_or(|s| s.contains(qx, qy))
                    && self.visible_layer(qx, qy, 0.0, 0.0) == Some(b)
            })
        })
    }
}

/// Renders every view and the central-view ground truth.
pub fn render(spec: &SceneSpec) -> Result<RenderedScene> {
    spec.validate()?;
    let renderer = Renderer::new(spec);
    let (nu, nv) = spec.angular;
    let (cu, cv) = spec.offsets();
    let views = (0..nu * nv)
        .into_par_iter()
        .map(|i| renderer.render_view((i % nu) as f64 - cu, (i / nu) as f64 - cv))
        .collect();
    let mut lightfield = LightField::new(spec.angular, views)?;
    if spec.noise_sigma > 0.0 {
        lightfield = add_noise(&lightfield, spec.noise_sigma, spec.noise_seed);
    }

    let (w, h) = (spec.width, spec.height);
    let corners = renderer.corners();
    let truth: Vec<(Option<usize>, bool, bool)> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            match renderer.visible_layer(x, y, 0.0, 0.0) {
                None => (None, false, false),
                Some(l) => {
                    let occluded = renderer.occluded_at(x, y, l, &corners);
                    let occluding = !occluded && renderer.occluding_at(x, y, l, &corners);
                    (Some(l), occluded, occluding)
                }
            }
        })
        .collect();
    let disparity = DisparityMap::from_values(
        w,
        h,
        truth
            .iter()
            .map(|t| t.0.map_or(f32::NAN, |l| spec.layers[l].disparity as f32))
            .collect(),
    )?;
    let labels = truth
        .iter()
        .map(|&(layer, occluded, occluding)| {
            if occluded {
                Region::Occluded
            } else if occluding {
                Region::Occluding
            } else {
                match layer.map(|l| &spec.layers[l].texture) {
                    Some(Texture::Constant { .. }) | None => Region::Smooth,
                    _ => Region::Texture,
                }
            }
        })
        .collect();
    Ok(RenderedScene {
        lightfield,
        disparity,
        regions: RegionMap::from_labels(w, h, labels)?,
        occluded: truth.iter().map(|t| t.1).collect(),
        occluding: truth.iter().map(|t| t.2).collect(),
    })
}

/// Adds i.i.d. Gaussian noise and clamps to `[0, 1]`. Each view draws from
/// its own stream of the seeded generator.
pub fn add_noise(lf: &LightField, sigma: f64, seed: u64) -> LightField {
    let mut out = lf.clone();
    if sigma <= 0.0 {
        return out;
    }
    let normal = Normal::new(0.0, sigma).expect("sigma is positive");
    out.views_mut().par_iter_mut().enumerate().for_each(|(i, view)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        for p in view.as_mut_slice() {
            *p = (*p as f64 + normal.sample(&mut rng)).clamp(0.0, 1.0) as f32;
        }
    });
    out
}

pub const GT_DISPARITY_FILE: &str = "gt_disp_lowres.pfm";
pub const GT_REGIONS_PNG: &str = "gt_regions.png";
pub const GT_REGIONS_PGM: &str = "gt_regions.pgm";

/// Writes views, `parameters.cfg`, ground-truth disparity and region maps,
/// and the scene description itself as `scene.toml`.
pub fn write_scene(scene: &RenderedScene, spec: &SceneSpec, directory: &Path) -> Result<()> {
    std::fs::create_dir_all(directory).map_err(|e| Error::io(directory, e))?;
    save_lightfield(&scene.lightfield, directory)?;
    let mut config = spec.scene_config();
    config.ground_truth = Some(GT_DISPARITY_FILE.into());
    let cfg = directory.join("parameters.cfg");
    std::fs::write(&cfg, config.to_text()).map_err(|e| Error::io(&cfg, e))?;
    write_pfm(&scene.disparity, &directory.join(GT_DISPARITY_FILE))?;
    scene.regions.write_color_png(&directory.join(GT_REGIONS_PNG))?;
    scene.regions.write_pgm(&directory.join(GT_REGIONS_PGM))?;
    let toml_path = directory.join("scene.toml");
    std::fs::write(&toml_path, spec.to_toml()).map_err(|e| Error::io(&toml_path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(layers: Vec<Layer>, angular: (usize, usize)) -> SceneSpec {
        SceneSpec {
            angular,
            width: 32,
            height: 24,
            layers,
            ..SceneSpec::plane()
        }
    }

    fn noise_layer(seed: u64, disparity: f64, support: Option<Support>) -> Layer {
        Layer {
            texture: Texture::Noise {
                seed,
                sigma: 0.2,
                scale: 2.0,
            },
            disparity,
            support,
        }
    }

    #[test]
    fn zero_disparity_views_are_identical() {
        let scene = render(&small(vec![noise_layer(3, 0.0, None)], (3, 3))).unwrap();
        let center = scene.lightfield.view(1, 1).clone();
        assert!(scene.lightfield.views().iter().all(|v| *v == center));
        assert!(scene.disparity.values().iter().all(|&d| d == 0.0));
    }

    #[test]
    fn unit_disparity_is_a_pixel_shift() {
        let scene = render(&small(vec![noise_layer(4, 1.0, None)], (3, 3))).unwrap();
        let (c, r) = (scene.lightfield.view(1, 1), scene.lightfield.view(2, 1));
        for y in 0..24 {
            for x in 1..32 {
                assert_eq!(r.get(x, y), c.get(x - 1, y));
            }
        }
    }

    #[test]
    fn occluded_band_width() {
        let spec = SceneSpec::two_layer();
        let scene = render(&spec).unwrap();
        // Row through the middle of the square: background band of 8 px on
        // each side.
        let y = 48;
        let band: Vec<usize> = (0..96).filter(|&x| scene.occluded[y * 96 + x]).collect();
        assert_eq!(band, (20..28).chain(68..76).collect::<Vec<_>>());
        let occluding: Vec<usize> = (0..96).filter(|&x| scene.occluding[y * 96 + x]).collect();
        assert_eq!(occluding, (28..36).chain(60..68).collect::<Vec<_>>());
        assert_eq!(scene.disparity.get(30, 48), Some(2.0));
        assert_eq!(scene.disparity.get(10, 48), Some(0.0));
    }

    #[test]
    fn bands_match_brute_force_visibility() {
        let spec = SceneSpec {
            angular: (5, 5),
            width: 40,
            height: 40,
            layers: vec![
                noise_layer(1, -0.5, None),
                noise_layer(2, 1.0, Some(Support { x0: 8.0, y0: 10.0, x1: 24.0, y1: 30.0 })),
                noise_layer(3, 1.6, Some(Support { x0: 20.0, y0: 2.0, x1: 34.0, y1: 16.0 })),
            ],
            ..SceneSpec::plane()
        };
        let scene = render(&spec).unwrap();
        let layers = &spec.layers;
        let top = |x: f64, y: f64, du: f64, dv: f64| {
            (0..layers.len())
                .filter(|&i| {
                    let (sx, sy) = (x - du * layers[i].disparity, y - dv * layers[i].disparity);
                    layers[i].support.is_none_or(|s| s.contains(sx, sy))
                })
                .max_by(|&a, &b| layers[a].disparity.total_cmp(&layers[b].disparity))
        };
        for y in 0..40 {
            for x in 0..40 {
                let (fx, fy) = (x as f64, y as f64);
                let l = top(fx, fy, 0.0, 0.0).unwrap();
                assert_eq!(scene.disparity.get(x, y), Some(layers[l].disparity as f32));
                let d = layers[l].disparity;
                let hidden = [(-2.0, -2.0), (2.0, -2.0), (-2.0, 2.0), (2.0, 2.0)]
                    .iter()
                    .any(|&(du, dv)| top(fx + du * d, fy + dv * d, du, dv) != Some(l));
                assert_eq!(scene.occluded[y * 40 + x], hidden, "({x}, {y})");
            }
        }
    }

    #[test]
    fn regions_follow_texture_kind() {
        let spec = small(
            vec![Layer {
                texture: Texture::Constant { value: 0.4 },
                disparity: 0.0,
                support: None,
            }],
            (3, 3),
        );
        let scene = render(&spec).unwrap();
        assert_eq!(scene.regions.counts(), [0, 0, 0, 32 * 24]);
        let scene = render(&small(vec![noise_layer(1, 0.3, None)], (3, 3))).unwrap();
        assert_eq!(scene.regions.counts(), [0, 0, 32 * 24, 0]);
    }

    #[test]
    fn noise_is_reproducible() {
        let lf = render(&SceneSpec::plane()).unwrap().lightfield;
        assert_eq!(add_noise(&lf, 0.0, 9).views(), lf.views());
        let a = add_noise(&lf, 0.05, 9);
        assert_eq!(a.views(), add_noise(&lf, 0.05, 9).views());
        assert_ne!(a.views(), add_noise(&lf, 0.05, 10).views());
    }

    #[test]
    fn noise_level_matches_sigma() {
        let lf = LightField::new((1, 1), vec![Image::new(512, 512, 0.5)]).unwrap();
        let noisy = add_noise(&lf, 0.05, 1);
        let values = noisy.views()[0].as_slice();
        let n = values.len() as f64;
        let mean = values.iter().map(|&v| v as f64).sum::<f64>() / n;
        let var = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var.sqrt() - 0.05).abs() < 0.05 * 0.05);
    }

    #[test]
    fn spec_round_trips_through_toml() {
        let spec = SceneSpec::two_layer();
        assert_eq!(SceneSpec::from_toml(&spec.to_toml()).unwrap(), spec);
        let text = r#"
            angular = [3, 3]
            width = 16
            height = 16
            disparity_min = -1.0
            disparity_max = 1.0

            [[layer]]
            disparity = 0.0
            texture = { kind = "checkerboard", period = 4.0 }

            [[layer]]
            disparity = 0.5
            texture = { kind = "constant", value = 0.9 }
            support = { x0 = 4.0, y0 = 4.0, x1 = 12.0, y1 = 12.0 }
        "#;
        let spec = SceneSpec::from_toml(text).unwrap();
        assert_eq!(spec.layers.len(), 2);
        assert_eq!(spec.name, "scene");
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = SceneSpec::two_layer();
        spec.layers.swap(0, 1);
        assert!(matches!(render(&spec), Err(Error::BadSpec(_))));
        let mut spec = SceneSpec::plane();
        spec.angular = (4, 3);
        assert!(spec.validate().is_err());
        assert!(SceneSpec::from_toml("width = 3").is_err());
    }
}
