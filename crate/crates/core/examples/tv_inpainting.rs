//! Fills holes in a noisy disparity ramp with TV refinement.

use lf_entropy::tv::{tv_refine_traced, TvParams};
use lf_entropy::DisparityMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> lf_entropy::Result<()> {
    let (w, h) = (64, 48);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let values = (0..w * h)
        .map(|i| {
            let (x, y) = (i % w, i / w);
            if (20..30).contains(&x) && (15..25).contains(&y) || rng.random::<f32>() < 0.05 {
                f32::NAN
            } else {
                x as f32 / 63.0 + rng.random_range(-0.02..0.02)
            }
        })
        .collect();
    let disp = DisparityMap::from_values(w, h, values)?;
    let result = tv_refine_traced(&disp, &vec![true; w * h], &TvParams::default());
    println!(
        "{} holes filled in {} iterations, energy {:.3} -> {:.3}",
        disp.len() - disp.valid_count(),
        result.iterations,
        result.energy[0],
        result.energy.last().unwrap()
    );
    for x in (16..34).step_by(2) {
        println!("x={x:2} truth {:.3} filled {:.3}", x as f32 / 63.0, result.disparity.get(x, 20).unwrap());
    }
    Ok(())
}
