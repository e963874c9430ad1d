//! Shows the window search for pixels on either side of an occlusion edge.

use lf_entropy::lightfield::central_view;
use lf_entropy::matcher::{initial_disparity, DisparityGrid};
use lf_entropy::region::{identify_regions, RegionParams};
use lf_entropy::synth::{render, SceneSpec};
use lf_entropy::window::WindowSelector;
use lf_entropy::{Calibration, EstimatorConfig};

fn main() -> lf_entropy::Result<()> {
    let spec = SceneSpec::two_layer();
    let scene = render(&spec)?;
    let lf = &scene.lightfield;
    let cal = Calibration::for_grid(lf.angular(), 1.0, 1.0)?;
    let config = EstimatorConfig::new(spec.disparity_min, spec.disparity_max);
    let grid = DisparityGrid::new(spec.disparity_min, spec.disparity_max, config.coarse_step)?;
    let init = initial_disparity(lf, &cal, &grid);
    let regions = identify_regions(lf, &init, &grid, &RegionParams::default())?.regions;
    let selector = WindowSelector::new(central_view(lf), &init, &regions, config.entropy_params(), lf.angular())?;

    for anchor in [(10, 48), (24, 48), (30, 48), (48, 48), (72, 20)] {
        let choice = selector.select(anchor);
        println!(
            "{anchor:?} {:>9}: {} side {} entropy {:+.3}, {} viewpoints",
            regions.get(anchor.0, anchor.1).name(),
            choice.window.shape.name(),
            choice.window.side,
            choice.entropy,
            choice.viewpoints.len()
        );
    }
    Ok(())
}
