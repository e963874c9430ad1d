//! Aggregated absolute-difference planes.
//!
//! For one disparity sample the per-pixel differences between a reference
//! view and every shifted target view are summed into one plane per
//! viewpoint subset, together with the number of in-bounds samples, and
//! turned into integral images. Any rectangular window cost over any subset
//! is then four lookups.

use rayon::prelude::*;

use crate::lightfield::Image;

/// Pointwise difference norm of the matching cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostNorm {
    #[default]
    L1,
    L2,
}

impl CostNorm {
    #[inline]
    pub fn apply(self, diff: f32) -> f64 {
        match self {
            CostNorm::L1 => diff.abs() as f64,
            CostNorm::L2 => (diff as f64) * (diff as f64),
        }
    }
}

/// A target view shifted by `(du·d, dv·d)` relative to the reference.
pub(crate) struct Target<'a> {
    pub image: &'a Image,
    pub du: f64,
    pub dv: f64,
    /// Bit `s` set when the view belongs to subset `s`.
    pub subsets: u32,
}

/// Summed-area table over `(sum, count)` planes.
pub(crate) struct Integral {
    width: usize,
    sum: Vec<f64>,
    count: Vec<u32>,
}

impl Integral {
    fn build(width: usize, height: usize, sum: &[f64], count: &[u16]) -> Self {
        let stride = width + 1;
        let mut isum = vec![0.0f64; stride * (height + 1)];
        let mut icount = vec![0u32; stride * (height + 1)];
        for y in 0..height {
            let mut row_sum = 0.0;
            let mut row_count = 0u32;
            for x in 0..width {
                row_sum += sum[y * width + x];
                row_count += count[y * width + x] as u32;
                let i = (y + 1) * stride + x + 1;
                isum[i] = isum[i - stride] + row_sum;
                icount[i] = icount[i - stride] + row_count;
            }
        }
        Integral {
            width,
            sum: isum,
            count: icount,
        }
    }

    /// `(sum, count)` over the inclusive rectangle.
    #[inline]
    pub fn query(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> (f64, u32) {
        let s = self.width + 1;
        let (a, b, c, d) = (y0 * s + x0, y0 * s + x1 + 1, (y1 + 1) * s + x0, (y1 + 1) * s + x1 + 1);
        (
            self.sum[d] - self.sum[b] - self.sum[c] + self.sum[a],
            self.count[d] + self.count[a] - self.count[b] - self.count[c],
        )
    }
}

/// Builds one integral image per subset for disparity `disp`.
pub(crate) fn aggregate(
    reference: &Image,
    targets: &[Target<'_>],
    disp: f64,
    subset_count: usize,
    norm: CostNorm,
) -> Vec<Integral> {
    let (w, h) = (reference.width(), reference.height());
    let block = subset_count * w;
    let mut sums = vec![0.0f64; block * h];
    let mut counts = vec![0u16; block * h];
    sums.par_chunks_mut(block)
        .zip(counts.par_chunks_mut(block))
        .enumerate()
        .for_each(|(y, (sum_row, count_row))| {
            let mut diffs = vec![0.0f64; w];
            let mut valid = vec![false; w];
            for t in targets {
                let sy = y as f64 + t.dv * disp;
                if !(sy >= 0.0 && sy <= (h - 1) as f64) {
                    continue;
                }
                let y0 = sy.floor() as usize;
                let fy = (sy - y0 as f64) as f32;
                let y1 = (y0 + 1).min(h - 1);
                let shift = t.du * disp;
                for x in 0..w {
                    let sx = x as f64 + shift;
                    if !(sx >= 0.0 && sx <= (w - 1) as f64) {
                        valid[x] = false;
                        continue;
                    }
                    let x0 = sx.floor() as usize;
                    let fx = (sx - x0 as f64) as f32;
                    let x1 = (x0 + 1).min(w - 1);
                    let img = t.image;
                    let top = img.get(x0, y0) * (1.0 - fx) + img.get(x1, y0) * fx;
                    let bottom = img.get(x0, y1) * (1.0 - fx) + img.get(x1, y1) * fx;
                    let sample = top * (1.0 - fy) + bottom * fy;
                    diffs[x] = norm.apply(reference.get(x, y) - sample);
                    valid[x] = true;
                }
                for s in 0..subset_count {
                    if t.subsets & (1 << s) == 0 {
                        continue;
                    }
                    let sum = &mut sum_row[s * w..(s + 1) * w];
                    let count = &mut count_row[s * w..(s + 1) * w];
                    for x in 0..w {
                        if valid[x] {
                            sum[x] += diffs[x];
                            count[x] += 1;
                        }
                    }
                }
            }
        });

    (0..subset_count)
        .into_par_iter()
        .map(|s| {
            let mut sum = Vec::with_capacity(w * h);
            let mut count = Vec::with_capacity(w * h);
            for y in 0..h {
                let base = y * block + s * w;
                sum.extend_from_slice(&sums[base..base + w]);
                count.extend_from_slice(&counts[base..base + w]);
            }
            Integral::build(w, h, &sum, &count)
        })
        .collect()
}

/// Sliding minimum over a `(2r+1)²` neighborhood, clipped at the borders.
pub(crate) fn min_filter(values: &[f64], width: usize, height: usize, radius: usize) -> Vec<f64> {
    let mut horizontal = vec![f64::INFINITY; values.len()];
    for y in 0..height {
        let row = &values[y * width..(y + 1) * width];
        for x in 0..width {
            let lo = x.saturating_sub(radius);
            let hi = (x + radius).min(width - 1);
            horizontal[y * width + x] = row[lo..=hi].iter().copied().fold(f64::INFINITY, f64::min);
        }
    }
    let mut out = vec![f64::INFINITY; values.len()];
    for y in 0..height {
        let lo = y.saturating_sub(radius);
        let hi = (y + radius).min(height - 1);
        for x in 0..width {
            out[y * width + x] = (lo..=hi)
                .map(|yy| horizontal[yy * width + x])
                .fold(f64::INFINITY, f64::min);
        }
    }
    out
}
