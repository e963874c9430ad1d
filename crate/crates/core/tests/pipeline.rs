use lf_entropy::matcher::{initial_disparity, DisparityGrid};
use lf_entropy::region::{identify_regions, RegionAnalysis, RegionParams};
use lf_entropy::synth::{render, Layer, SceneSpec, Support, Texture};
use lf_entropy::{estimate_disparity, Calibration, EstimatorConfig, LightField, Region};

/// A 24×24 noise square at `base + 1.5` over noise at `base`, 5×5 views.
fn small_scene(base: f64) -> SceneSpec {
    let noise = |seed| Texture::Noise {
        seed,
        sigma: 0.2,
        scale: 2.0,
    };
    SceneSpec {
        name: "small".into(),
        angular: (5, 5),
        width: 64,
        height: 64,
        disparity_min: base - 1.0,
        disparity_max: base + 2.5,
        layers: vec![
            Layer {
                texture: noise(3),
                disparity: base,
                support: None,
            },
            Layer {
                texture: noise(4),
                disparity: base + 1.5,
                support: Some(Support {
                    x0: 20.0,
                    y0: 20.0,
                    x1: 44.0,
                    y1: 44.0,
                }),
            },
        ],
        ..SceneSpec::plane()
    }
}

fn analyse(spec: &SceneSpec) -> (LightField, RegionAnalysis) {
    let lf = render(spec).unwrap().lightfield;
    let cal = Calibration::for_grid(spec.angular, spec.focus_distance, spec.baseline_step).unwrap();
    let grid = DisparityGrid::new(spec.disparity_min, spec.disparity_max, 0.1).unwrap();
    let init = initial_disparity(&lf, &cal, &grid);
    let analysis = identify_regions(&lf, &init, &grid, &RegionParams::default()).unwrap();
    (lf, analysis)
}

#[test]
fn regions_partition_the_image() {
    let (lf, analysis) = analyse(&small_scene(0.0));
    let counts = analysis.regions.counts();
    assert_eq!(counts.iter().sum::<usize>(), lf.width() * lf.height());
    assert!(!analysis.occlusion_skipped);
    assert!(counts[Region::Occluded.index()] > 0);
    assert!(counts[Region::Occluding.index()] > 0);
}

#[test]
fn occlusion_labels_hug_segmentation_edges() {
    let spec = small_scene(0.0);
    let (lf, analysis) = analyse(&spec);
    let seg = analysis.central_segmentation().unwrap();
    let (w, h) = lf.spatial();
    let max_offset = (spec.angular.0 - 1) / 2;
    let max_disp = spec.disparity_min.abs().max(spec.disparity_max.abs());
    let window_radius = RegionParams::default().segmentation.window / 2;
    let reach = (window_radius as f64 + max_offset as f64 * max_disp).ceil() as usize + 1;

    let edges: Vec<(usize, usize)> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .filter(|&(x, y)| {
            (x + 1 < w && seg.get(x, y) != seg.get(x + 1, y)) || (y + 1 < h && seg.get(x, y) != seg.get(x, y + 1))
        })
        .collect();
    for y in 0..h {
        for x in 0..w {
            if analysis.regions.get(x, y).is_occlusion() {
                let near = edges.iter().any(|&(ex, ey)| ex.abs_diff(x).max(ey.abs_diff(y)) <= reach);
                assert!(near, "occlusion label at ({x}, {y}) far from any layer edge");
            }
        }
    }
}

#[test]
fn estimation_is_deterministic() {
    let spec = small_scene(0.0);
    let lf = render(&spec).unwrap().lightfield;
    let cal = Calibration::for_grid(spec.angular, spec.focus_distance, spec.baseline_step).unwrap();
    let config = EstimatorConfig::new(spec.disparity_min, spec.disparity_max);
    let a = estimate_disparity(&lf, &cal, &config).unwrap();
    let b = estimate_disparity(&lf, &cal, &config).unwrap();
    assert_eq!(a.disparity, b.disparity);
    assert_eq!(a.regions, b.regions);
    let (ra, rb) = (a.refined(&config.tv), b.refined(&config.tv));
    assert_eq!(ra, rb);
}

#[test]
fn regions_ignore_a_constant_disparity_offset() {
    let (lf, base) = analyse(&small_scene(0.0));
    let (_, shifted) = analyse(&small_scene(1.0));
    // Views move by whole pixels, so only content entering at the border differs.
    let margin = 2 * 2 + 8;
    let (w, h) = lf.spatial();
    let mut differing = Vec::new();
    for y in margin..h - margin {
        for x in margin..w - margin {
            if base.regions.get(x, y) != shifted.regions.get(x, y) {
                differing.push((x, y));
            }
        }
    }
    assert!(differing.is_empty(), "labels differ at {differing:?}");
}
