//! Total-variation refinement restricted to a pixel mask.
//!
//! Energy over the masked pixels:
//! `Σ w·(μ − f)² + γ·Σ_edges sqrt((μ_i − μ_j)² + ε²)` with `w = 0` where the
//! input is invalid. Edges join 4-neighbors where at least one side is
//! masked; an unmasked neighbor with a valid value is a fixed boundary value,
//! anything else (image border, invalid neighbor) contributes no edge.
//!
//! Solved by lagged diffusivity: each outer iteration freezes the edge
//! weights and runs red-black Gauss-Seidel sweeps on the resulting quadratic,
//! which never increases the energy.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lightfield::DisparityMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvParams {
    pub gamma: f64,
    pub epsilon: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
    /// Gauss-Seidel sweeps per outer iteration.
    pub inner_sweeps: usize,
}

impl Default for TvParams {
    fn default() -> Self {
        TvParams {
            gamma: 0.2,
            epsilon: 1e-3,
            max_iters: 200,
            rel_tol: 1e-4,
            inner_sweeps: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TvResult {
    pub disparity: DisparityMap,
    /// Energy of the initial guess followed by the energy after each outer
    /// iteration.
    pub energy: Vec<f64>,
    pub iterations: usize,
}

#[derive(Clone, Copy, PartialEq)]
enum Node {
    Free,
    Fixed,
    Absent,
}

struct Problem {
    width: usize,
    height: usize,
    nodes: Vec<Node>,
    data: Vec<f64>,
    weight: Vec<f64>,
}

impl Problem {
    fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let (w, h) = (self.width, self.height);
        let (x, y) = (i % w, i / w);
        [
            (x > 0).then(|| i - 1),
            (x + 1 < w).then(|| i + 1),
            (y > 0).then(|| i - w),
            (y + 1 < h).then(|| i + w),
        ]
        .into_iter()
        .flatten()
        .filter(|&j| self.nodes[j] != Node::Absent)
    }

    fn energy(&self, mu: &[f64], params: &TvParams) -> f64 {
        let (w, h) = (self.width, self.height);
        let eps2 = params.epsilon * params.epsilon;
        let mut e = 0.0;
        for i in 0..w * h {
            if self.nodes[i] != Node::Free {
                continue;
            }
            e += self.weight[i] * (mu[i] - self.data[i]).powi(2);
            let (x, y) = (i % w, i / w);
            // Each edge once: right and down from free nodes, left and up
            // only towards fixed nodes.
            let mut edge = |j: usize, counted_elsewhere: bool| {
                if self.nodes[j] == Node::Fixed || (self.nodes[j] == Node::Free && !counted_elsewhere) {
                    e += params.gamma * ((mu[i] - mu[j]).powi(2) + eps2).sqrt();
                }
            };
            if x + 1 < w {
                edge(i + 1, false);
            }
            if y + 1 < h {
                edge(i + w, false);
            }
            if x > 0 {
                edge(i - 1, true);
            }
            if y > 0 {
                edge(i - w, true);
            }
        }
        e
    }
}

/// Fills invalid free pixels layer by layer from the mean of known neighbors.
fn initial_guess(p: &Problem, valid_mean: f64) -> Vec<f64> {
    let n = p.width * p.height;
    let mut mu = p.data.clone();
    let mut known: Vec<bool> = (0..n)
        .map(|i| p.nodes[i] == Node::Fixed || (p.nodes[i] == Node::Free && p.weight[i] > 0.0))
        .collect();
    let mut pending: Vec<usize> = (0..n).filter(|&i| p.nodes[i] == Node::Free && !known[i]).collect();
    while !pending.is_empty() {
        let updates: Vec<(usize, f64)> = pending
            .iter()
            .filter_map(|&i| {
                let (sum, count) = p
                    .neighbors(i)
                    .filter(|&j| known[j])
                    .fold((0.0, 0usize), |(s, c), j| (s + mu[j], c + 1));
                (count > 0).then(|| (i, sum / count as f64))
            })
            .collect();
        if updates.is_empty() {
            for &i in &pending {
                mu[i] = valid_mean;
            }
            break;
        }
        for &(i, v) in &updates {
            mu[i] = v;
            known[i] = true;
        }
        pending.retain(|&i| !known[i]);
    }
    mu
}

pub fn tv_refine(disp: &DisparityMap, smooth_mask: &[bool], params: &TvParams) -> DisparityMap {
    tv_refine_traced(disp, smooth_mask, params).disparity
}

/// # Panics
/// When the mask length differs from the map size.
pub fn tv_refine_traced(disp: &DisparityMap, smooth_mask: &[bool], params: &TvParams) -> TvResult {
    let (width, height) = (disp.width(), disp.height());
    let n = width * height;
    assert_eq!(smooth_mask.len(), n, "mask size differs from disparity map");
    let valid = disp.valid_mask();
    let nodes: Vec<Node> = (0..n)
        .map(|i| match (smooth_mask[i], valid[i]) {
            (true, _) => Node::Free,
            (false, true) => Node::Fixed,
            (false, false) => Node::Absent,
        })
        .collect();
    let data: Vec<f64> = (0..n)
        .map(|i| if valid[i] { disp.values()[i] as f64 } else { 0.0 })
        .collect();
    let weight: Vec<f64> = (0..n)
        .map(|i| if smooth_mask[i] && valid[i] { 1.0 } else { 0.0 })
        .collect();
    let (vs, vc) = (0..n)
        .filter(|&i| valid[i])
        .fold((0.0, 0usize), |(s, c), i| (s + data[i], c + 1));
    let valid_mean = if vc > 0 { vs / vc as f64 } else { 0.0 };
    let problem = Problem {
        width,
        height,
        nodes,
        data,
        weight,
    };

    let mut mu = initial_guess(&problem, valid_mean);
    let mut energy = vec![problem.energy(&mu, params)];
    let free: Vec<usize> = (0..n).filter(|&i| problem.nodes[i] == Node::Free).collect();
    let colors: [Vec<usize>; 2] = [0, 1].map(|c| {
        free.iter()
            .copied()
            .filter(|&i| (i % width + i / width) % 2 == c)
            .collect()
    });
    let eps2 = params.epsilon * params.epsilon;
    let mut iterations = 0;
    if params.gamma > 0.0 && !free.is_empty() {
        for _ in 0..params.max_iters {
            iterations += 1;
            let previous = mu.clone();
            let diffusivity = |i: usize, j: usize| 1.0 / ((previous[i] - previous[j]).powi(2) + eps2).sqrt();
            for _ in 0..params.inner_sweeps {
                for color in &colors {
                    let updates: Vec<(usize, f64)> = color
                        .par_iter()
                        .map(|&i| {
                            let mut num = 2.0 * problem.weight[i] * problem.data[i];
                            let mut den = 2.0 * problem.weight[i];
                            for j in problem.neighbors(i) {
                                let c = params.gamma * diffusivity(i, j);
                                num += c * mu[j];
                                den += c;
                            }
                            (i, if den > 0.0 { num / den } else { mu[i] })
                        })
                        .collect();
                    for (i, v) in updates {
                        mu[i] = v;
                    }
                }
            }
            energy.push(problem.energy(&mu, params));
            let (change, norm) = free.iter().fold((0.0, 0.0), |(c, s), &i| {
                (c + (mu[i] - previous[i]).powi(2), s + mu[i] * mu[i])
            });
            if change.sqrt() <= params.rel_tol * norm.sqrt().max(1e-12) {
                break;
            }
        }
    }

    let mut out = disp.clone();
    for &i in &free {
        out.set(i % width, i / width, Some(mu[i] as f32));
    }
    // Data-only case keeps valid inputs bit-exact.
    if params.gamma == 0.0 {
        for &i in &free {
            if valid[i] {
                out.set(i % width, i / width, Some(disp.values()[i]));
            }
        }
    }
    TvResult {
        disparity: out,
        energy,
        iterations,
    }
}
