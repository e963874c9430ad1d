//! Matching entropy of a candidate window.
//!
//! The score rewards gray-level variety (texture richness) and penalizes
//! variety in the initial disparities (inconsistency) and in the gray levels
//! of pixels flagged as belonging to the opposite occlusion class. All
//! entropies are in bits.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    counts: Vec<u64>,
    total: u64,
}

impl Histogram {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        Histogram { counts, total }
    }

    pub fn bin_count(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn probabilities(&self) -> impl Iterator<Item = f64> + '_ {
        let total = self.total as f64;
        self.counts.iter().map(move |&c| c as f64 / total)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyParams {
    /// Weight of the disparity-consistency term.
    pub alpha1: f64,
    /// Weight of the anti-occlusion term.
    pub alpha2: f64,
    pub gray_bins: usize,
    /// Width of a disparity histogram bin, normally the search step.
    pub disparity_bin_width: f64,
}

impl Default for EntropyParams {
    fn default() -> Self {
        EntropyParams {
            alpha1: 1.0,
            alpha2: 1.0,
            gray_bins: 32,
            disparity_bin_width: 0.1,
        }
    }
}

/// Entropy in bits of raw bin counts; empty bins contribute nothing.
#[inline]
pub(crate) fn entropy_of_counts<I: IntoIterator<Item = u32>>(counts: I, total: u32) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    let mut h = 0.0;
    for c in counts {
        if c > 0 {
            let p = c as f64 / total;
            h -= p * p.log2();
        }
    }
    h
}

pub fn shannon_entropy(hist: &Histogram) -> Result<f64> {
    if hist.total == 0 {
        return Err(Error::EmptyHistogram);
    }
    let total = hist.total as f64;
    Ok(hist
        .counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum())
}

#[inline]
pub(crate) fn gray_bin(value: f32, bins: usize) -> usize {
    ((value.max(0.0) as f64 * bins as f64) as usize).min(bins - 1)
}

#[inline]
pub(crate) fn disparity_bin(value: f32, width: f64) -> i64 {
    (value as f64 / width).round() as i64
}

/// Uniform bins over `[0, 1]`, the last bin closed on the right.
pub fn gray_histogram(values: &[f32], bins: usize) -> Result<Histogram> {
    if values.is_empty() || bins == 0 {
        return Err(Error::EmptyInput);
    }
    let mut counts = vec![0u64; bins];
    for &v in values {
        counts[gray_bin(v, bins)] += 1;
    }
    Ok(Histogram::from_counts(counts))
}

/// Bins of fixed width centered on multiples of `width`.
pub fn disparity_histogram(values: &[f32], width: f64) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut bins: BTreeMap<i64, u64> = BTreeMap::new();
    for &v in values {
        *bins.entry(disparity_bin(v, width)).or_default() += 1;
    }
    Ok(Histogram::from_counts(bins.into_values().collect()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowPixel {
    pub gray: f32,
    /// Initial disparity, `None` where the initial estimate is invalid.
    pub disparity: Option<f32>,
    pub mismatched: bool,
}

pub fn matching_entropy(pixels: &[WindowPixel], params: &EntropyParams) -> Result<f64> {
    if pixels.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let grays: Vec<f32> = pixels.iter().map(|p| p.gray).collect();
    let mut score = shannon_entropy(&gray_histogram(&grays, params.gray_bins)?)?;

    let disparities: Vec<f32> = pixels.iter().filter_map(|p| p.disparity).collect();
    if params.alpha1 > 0.0 && !disparities.is_empty() {
        let h = shannon_entropy(&disparity_histogram(&disparities, params.disparity_bin_width)?)?;
        score -= params.alpha1 * h;
    }

    let mismatched: Vec<f32> = pixels.iter().filter(|p| p.mismatched).map(|p| p.gray).collect();
    if params.alpha2 > 0.0 && !mismatched.is_empty() {
        let h = shannon_entropy(&gray_histogram(&mismatched, params.gray_bins)?)?;
        score -= params.alpha2 * h;
    }
    Ok(score)
}
