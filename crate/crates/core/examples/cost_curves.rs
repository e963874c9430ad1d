//! Prints the cost curve of an occluded pixel for a fixed square window over
//! all views and for its selected window and visible views.

use lf_entropy::lightfield::central_view;
use lf_entropy::matcher::{cost_curve, initial_disparity, subpixel_refine, DisparityGrid, MatchOptions};
use lf_entropy::region::{identify_regions, RegionParams};
use lf_entropy::synth::{render, SceneSpec};
use lf_entropy::window::{ViewpointSet, WindowChoice, WindowSelector, WindowShape, WindowSpec};
use lf_entropy::{Calibration, EstimatorConfig};

fn main() -> lf_entropy::Result<()> {
    let spec = SceneSpec::two_layer();
    let scene = render(&spec)?;
    let lf = &scene.lightfield;
    let cal = Calibration::for_grid(lf.angular(), 1.0, 1.0)?;
    let config = EstimatorConfig::new(spec.disparity_min, spec.disparity_max);
    let coarse = config.coarse_grid()?;
    let fine = DisparityGrid::new(spec.disparity_min, spec.disparity_max, config.fine_step)?;
    let init = initial_disparity(lf, &cal, &coarse);
    let regions = identify_regions(lf, &init, &coarse, &RegionParams::default())?.regions;
    let selector = WindowSelector::new(central_view(lf), &init, &regions, config.entropy_params(), lf.angular())?;

    let anchor = (24, 48);
    let options = MatchOptions::default();
    let fixed = WindowChoice {
        window: WindowSpec::new(WindowShape::Square, 9)?,
        viewpoints: ViewpointSet::full(lf.angular()),
        entropy: 0.0,
    };
    let adaptive = selector.select(anchor);
    let truth = scene.disparity.get(anchor.0, anchor.1).unwrap_or(f32::NAN);
    println!("pixel {anchor:?}, true disparity {truth}");
    for (name, choice) in [("fixed 9x9", &fixed), ("selected", &adaptive)] {
        let curve = cost_curve(lf, anchor, choice, &fine, &cal, &options);
        let best = subpixel_refine(&curve, &fine).unwrap_or(f64::NAN);
        println!("{name}: {} side {}, minimum at {best:.3}", choice.window.shape.name(), choice.window.side);
        for (d, c) in fine.samples().iter().zip(&curve.costs).step_by(4) {
            println!("  {d:+.2} {c:.4} {}", "#".repeat((c * 200.0).min(60.0) as usize));
        }
    }
    Ok(())
}
