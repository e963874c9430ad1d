//! Scores a few hand-made windows with the matching entropy.

use lf_entropy::entropy::{gray_histogram, matching_entropy, shannon_entropy, EntropyParams, WindowPixel};

fn window(grays: &[f32], disparities: &[f32], mismatched: &[bool]) -> Vec<WindowPixel> {
    grays
        .iter()
        .zip(disparities)
        .zip(mismatched)
        .map(|((&gray, &d), &m)| WindowPixel {
            gray,
            disparity: Some(d),
            mismatched: m,
        })
        .collect()
}

fn main() -> lf_entropy::Result<()> {
    let params = EntropyParams::default();
    let grays: Vec<f32> = (0..16).map(|i| i as f32 / 15.0).collect();
    println!("gray entropy of a 16-level ramp: {:.3} bits", shannon_entropy(&gray_histogram(&grays, 32)?)?);

    let textured = window(&grays, &[1.0; 16], &[false; 16]);
    let mixed_depth: Vec<f32> = (0..16).map(|i| if i < 8 { 0.0 } else { 2.0 }).collect();
    let straddling = window(&grays, &mixed_depth, &[false; 16]);
    let mismatch: Vec<bool> = (0..16).map(|i| i >= 12).collect();
    let contaminated = window(&grays, &mixed_depth, &mismatch);
    let flat = window(&[0.5; 16], &[1.0; 16], &[false; 16]);

    for (name, w) in [
        ("textured, one depth", &textured),
        ("textured, two depths", &straddling),
        ("two depths, mismatched pixels", &contaminated),
        ("flat", &flat),
    ] {
        println!("{name:>30}: {:+.3}", matching_entropy(w, &params)?);
    }
    Ok(())
}
