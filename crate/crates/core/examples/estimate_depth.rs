//! Estimates disparity on a synthetic scene and scores it per region.
//!
//! Usage: `cargo run --release --example estimate_depth [plane|two-layer] [fixed]`

use std::time::Instant;

use lf_entropy::eval::compute_metrics;
use lf_entropy::synth::{render, SceneSpec};
use lf_entropy::{estimate_disparity, Calibration, EstimatorConfig, WindowStrategy};

fn main() -> lf_entropy::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let spec = match args.first().map(String::as_str) {
        Some("plane") => SceneSpec::plane(),
        _ => SceneSpec::two_layer(),
    };
    let scene = render(&spec)?;
    let lf = &scene.lightfield;
    let cal = Calibration::for_grid(lf.angular(), spec.focus_distance, spec.baseline_step)?;
    let mut config = EstimatorConfig::new(spec.disparity_min, spec.disparity_max);
    if args.iter().any(|a| a == "fixed") {
        config.strategy = WindowStrategy::Fixed { side: 9 };
    }

    let start = Instant::now();
    let estimate = estimate_disparity(lf, &cal, &config)?;
    let refined = estimate.refined(&config.tv);
    println!("scene {} estimated in {:.2}s", spec.name, start.elapsed().as_secs_f64());

    let counts = estimate.regions.counts();
    println!("regions occluding/occluded/texture/smooth: {counts:?}");
    for (name, map) in [("raw", &estimate.disparity), ("argmin", &estimate.argmin), ("refined", &refined)] {
        let report = compute_metrics(map, &scene.disparity, Some(&scene.regions), None)?;
        let m = &report.overall;
        println!(
            "{name:>8}: mse_x100 {:?} badpix(0.07) {:.4} invalid {}",
            m.mse_x100,
            m.badpix_at(0.07).unwrap_or(f64::NAN),
            m.invalid_estimates
        );
        for (region, m) in &report.per_region {
            println!(
                "{:>8}  {region:>10}: mse_x100 {:?} badpix(0.1) {:.4} n {}",
                "",
                m.mse_x100,
                m.badpix_at(0.1).unwrap_or(f64::NAN),
                m.evaluated
            );
        }
    }
    Ok(())
}
