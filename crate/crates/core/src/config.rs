//! Plain-text `key = value` scene configuration.
//!
//! Section headers (`[meta]`) and `#`/`;` comments are ignored, and unknown
//! keys are skipped, so HCI `parameters.cfg` files load directly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub disparity_min: f64,
    pub disparity_max: f64,
    /// Plane separation `F`.
    pub focus_distance: f64,
    pub baseline_step: f64,
    pub ground_truth: Option<PathBuf>,
    /// `(U, V)`; inferred from the view count when absent.
    pub angular: Option<(usize, usize)>,
}

impl SceneConfig {
    pub fn new(disparity_min: f64, disparity_max: f64) -> Self {
        SceneConfig {
            disparity_min,
            disparity_max,
            focus_distance: 1.0,
            baseline_step: 1.0,
            ground_truth: None,
            angular: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.disparity_min.is_finite() && self.disparity_max.is_finite())
            || self.disparity_min >= self.disparity_max
        {
            return Err(Error::BadConfig(format!(
                "disparity range [{}, {}] is empty",
                self.disparity_min, self.disparity_max
            )));
        }
        if !(self.focus_distance > 0.0) {
            return Err(Error::BadConfig("focus_distance must be positive".into()));
        }
        if !(self.baseline_step > 0.0) {
            return Err(Error::BadConfig("baseline must be positive".into()));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut disparity_min = None;
        let mut disparity_max = None;
        let mut config = SceneConfig::new(0.0, 1.0);
        let mut angular_u = None;
        let mut angular_v = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() || line.starts_with('[') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::BadConfig(format!(
                    "line {}: expected key = value",
                    lineno + 1
                )));
            };
            let (key, value) = (key.trim(), value.trim());
            let real = || -> Result<f64> {
                value
                    .parse::<f64>()
                    .map_err(|_| Error::BadConfig(format!("{key}: not a number: {value:?}")))
            };
            let count = || -> Result<usize> {
                value
                    .parse::<usize>()
                    .map_err(|_| Error::BadConfig(format!("{key}: not a count: {value:?}")))
            };
            match key {
                "disp_min" | "disparity_min" => disparity_min = Some(real()?),
                "disp_max" | "disparity_max" => disparity_max = Some(real()?),
                "focus_distance" | "focus_distance_m" => config.focus_distance = real()?,
                "baseline" | "baseline_step" | "baseline_mm" => config.baseline_step = real()?,
                "ground_truth" | "gt" => config.ground_truth = Some(PathBuf::from(value)),
                "angular_u" | "num_cams_x" => angular_u = Some(count()?),
                "angular_v" | "num_cams_y" => angular_v = Some(count()?),
                _ => {}
            }
        }
        config.disparity_min =
            disparity_min.ok_or_else(|| Error::BadConfig("missing disp_min".into()))?;
        config.disparity_max =
            disparity_max.ok_or_else(|| Error::BadConfig("missing disp_max".into()))?;
        config.angular = match (angular_u, angular_v) {
            (Some(u), Some(v)) => Some((u, v)),
            (Some(n), None) | (None, Some(n)) => Some((n, n)),
            (None, None) => None,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::parse(&text)?;
        // Relative ground-truth paths are resolved against the config's directory.
        if let (Some(gt), Some(dir)) = (&config.ground_truth, path.parent()) {
            if gt.is_relative() {
                config.ground_truth = Some(dir.join(gt));
            }
        }
        Ok(config)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "disp_min = {}", self.disparity_min);
        let _ = writeln!(out, "disp_max = {}", self.disparity_max);
        let _ = writeln!(out, "focus_distance = {}", self.focus_distance);
        let _ = writeln!(out, "baseline = {}", self.baseline_step);
        if let Some((u, v)) = self.angular {
            let _ = writeln!(out, "angular_u = {u}");
            let _ = writeln!(out, "angular_v = {v}");
        }
        if let Some(gt) = &self.ground_truth {
            let _ = writeln!(out, "ground_truth = {}", gt.display());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_hci_style_file() {
        let text = "[intrinsics]\nfocal_length_mm = 100\n[extrinsics]\nnum_cams_x = 9\nnum_cams_y = 9\nbaseline_mm = 50\nfocus_distance_m = 3.5\n[meta]\ndisp_min = -1.5 ; lower bound\ndisp_max = 1.5\n";
        let c = SceneConfig::parse(text).unwrap();
        assert_eq!(c.disparity_min, -1.5);
        assert_eq!(c.disparity_max, 1.5);
        assert_eq!(c.angular, Some((9, 9)));
        assert_eq!(c.focus_distance, 3.5);
        assert_eq!(c.baseline_step, 50.0);
    }

    #[test]
    fn round_trips_through_text() {
        let mut c = SceneConfig::new(-1.0, 3.0);
        c.angular = Some((9, 9));
        c.ground_truth = Some("gt.pfm".into());
        assert_eq!(SceneConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn rejects_bad_ranges() {
        assert!(matches!(
            SceneConfig::parse("disp_min = 2\ndisp_max = 1\n"),
            Err(Error::BadConfig(_))
        ));
        assert!(SceneConfig::parse("disp_max = 1\n").is_err());
        assert!(SceneConfig::parse("disp_min = 0\ndisp_max = 1\nfocus_distance = 0\n").is_err());
        assert!(SceneConfig::parse("disp_min 0\n").is_err());
    }
}
