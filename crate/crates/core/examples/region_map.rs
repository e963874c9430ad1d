//! Identifies regions on the two-layer test scene and compares them with the
//! analytic occlusion bands.
//!
//! Usage: `cargo run --release --example region_map [out.png]`

use lf_entropy::matcher::{initial_disparity, DisparityGrid};
use lf_entropy::region::{identify_regions, RegionParams};
use lf_entropy::synth::{render, SceneSpec};
use lf_entropy::{Calibration, Region};

fn main() -> lf_entropy::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "regions.png".into());
    let spec = SceneSpec::two_layer();
    let scene = render(&spec)?;
    let lf = &scene.lightfield;
    let cal = Calibration::for_grid(lf.angular(), 1.0, 1.0)?;
    let grid = DisparityGrid::new(spec.disparity_min, spec.disparity_max, 0.1)?;
    let init = initial_disparity(lf, &cal, &grid);
    let analysis = identify_regions(lf, &init, &grid, &RegionParams::default())?;
    println!("layer thresholds: {:?}", analysis.thresholds);

    for (region, truth) in [(Region::Occluded, &scene.occluded), (Region::Occluding, &scene.occluding)] {
        let found = analysis.regions.mask(region);
        let both = found.iter().zip(truth).filter(|(a, b)| **a && **b).count();
        let either = found.iter().zip(truth).filter(|(a, b)| **a || **b).count();
        println!(
            "{:>10}: {} labeled, {} analytic, overlap {:.3}",
            region.name(),
            found.iter().filter(|&&f| f).count(),
            truth.iter().filter(|&&t| t).count(),
            both as f64 / either.max(1) as f64
        );
    }
    analysis.regions.write_color_png(std::path::Path::new(&out))?;
    println!("wrote {out}");
    Ok(())
}
