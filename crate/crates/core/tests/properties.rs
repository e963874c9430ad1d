use lf_entropy::eval::{compute_metrics, BADPIX_THRESHOLDS};
use lf_entropy::matcher::{matching_cost, MatchOptions};
use lf_entropy::region::classify_regions;
use lf_entropy::tv::{tv_refine_traced, TvParams};
use lf_entropy::window::{ViewpointSet, WindowChoice, WindowShape, WindowSpec};
use lf_entropy::{Calibration, CostNorm, DisparityMap, Image, LightField};
use proptest::prelude::*;

fn map(w: usize, values: Vec<f32>) -> DisparityMap {
    DisparityMap::from_values(w, values.len() / w, values).unwrap()
}

fn lightfield(side: usize, pixels: Vec<f32>) -> LightField {
    let views = pixels
        .chunks(side * side)
        .map(|c| Image::from_vec(side, side, c.to_vec()).unwrap())
        .collect();
    LightField::new((3, 3), views).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matching_cost_is_non_negative(
        pixels in proptest::collection::vec(0.0f32..1.0, 9 * 8 * 8),
        disp in -1.5f64..1.5,
        x in 0usize..8,
        y in 0usize..8,
        shape in 0usize..9,
        l2 in any::<bool>(),
    ) {
        let lf = lightfield(8, pixels);
        let cal = Calibration::for_grid((3, 3), 1.0, 1.0).unwrap();
        let choice = WindowChoice {
            window: WindowSpec::new(WindowShape::from_index(shape).unwrap(), 5).unwrap(),
            viewpoints: ViewpointSet::full((3, 3)),
            entropy: 0.0,
        };
        let norm = if l2 { CostNorm::L2 } else { CostNorm::L1 };
        let options = MatchOptions { norm, normalize_by_views: true };
        let (cost, fraction) = matching_cost(&lf, (x, y), disp, &choice, &cal, &options).unwrap();
        prop_assert!(cost.is_finite() && cost >= 0.0);
        prop_assert!((0.0..=1.0).contains(&fraction));
    }

    #[test]
    fn metrics_are_symmetric(
        (w, a, b) in (1usize..6, 1usize..6).prop_flat_map(|(w, h)| (
            Just(w),
            proptest::collection::vec(-2.0f32..2.0, w * h),
            proptest::collection::vec(-2.0f32..2.0, w * h),
        ))
    ) {
        let (a, b) = (map(w, a), map(w, b));
        let ab = compute_metrics(&a, &b, None, None).unwrap().overall;
        let ba = compute_metrics(&b, &a, None, None).unwrap().overall;
        prop_assert_eq!(ab.mse_x100, ba.mse_x100);
        prop_assert_eq!(ab.badpix, ba.badpix);
    }

    #[test]
    fn badpix_shrinks_with_threshold(
        est in proptest::collection::vec(-1.0f32..1.0, 30),
        gt in proptest::collection::vec(-1.0f32..1.0, 30),
    ) {
        let report = compute_metrics(&map(6, est), &map(6, gt), None, None).unwrap().overall;
        let fractions: Vec<f64> = BADPIX_THRESHOLDS.iter().map(|&t| report.badpix_at(t).unwrap()).collect();
        prop_assert!(fractions.windows(2).all(|p| p[1] <= p[0]));
    }

    #[test]
    fn tv_energy_never_increases(
        values in proptest::collection::vec(-1.0f32..1.0, 64),
        mask in proptest::collection::vec(any::<bool>(), 64),
        gamma in 0.01f64..1.0,
    ) {
        let params = TvParams { gamma, ..TvParams::default() };
        let result = tv_refine_traced(&map(8, values), &mask, &params);
        for pair in result.energy.windows(2) {
            prop_assert!(pair[1] <= pair[0] * (1.0 + 1e-9) + 1e-12, "energy {:?}", result.energy);
        }
    }

    #[test]
    fn classification_ignores_brightness_offset(
        diff in proptest::collection::vec(-2i32..3, 49),
        gray in proptest::collection::vec(0.0f32..0.5, 49),
        offset in 0.0f32..0.5,
    ) {
        let image = Image::from_vec(7, 7, gray.clone()).unwrap();
        let brighter = Image::from_vec(7, 7, gray.iter().map(|g| g + offset).collect()).unwrap();
        let a = classify_regions(&diff, &image, 2, 0.02).unwrap();
        let b = classify_regions(&diff, &brighter, 2, 0.02).unwrap();
        for (i, (&l, &r)) in a.labels().iter().zip(b.labels()).enumerate() {
            // Float rounding can move a difference across the tolerance.
            let near_tol = (0..49).any(|j| {
                let d = (gray[i] - gray[j]).abs();
                (d - 0.02).abs() < 1e-5
            });
            prop_assert!(l == r || near_tol);
            prop_assert_eq!(l.is_occlusion(), diff[i] != 0);
        }
    }
}
