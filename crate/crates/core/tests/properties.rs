use contour_flow::distance::signed_distance;
use contour_flow::fields::{GridShape, ScalarField};
use contour_flow::flow::contour_flow;
use contour_flow::io;
use contour_flow::losses::shape_loss_2d;
use contour_flow::operators::{div_backward, grad_forward};
use contour_flow::refine::{refine, RefineConfig};
use contour_flow::segmetrics::dice_score;
use contour_flow::{BinaryMask, VectorField};
use proptest::prelude::*;

fn mask_strategy(max: usize) -> impl Strategy<Value = BinaryMask> {
    (1..=max, 1..=max)
        .prop_flat_map(|(h, w)| (Just((h, w)), prop::collection::vec(any::<bool>(), h * w)))
        .prop_filter("needs foreground", |(_, v)| v.iter().any(|&b| b))
        .prop_map(|((h, w), v)| BinaryMask::new(GridShape::plane(h, w), v).unwrap())
}

fn field_strategy(h: usize, w: usize, lo: f64, hi: f64) -> impl Strategy<Value = ScalarField> {
    prop::collection::vec(lo..hi, h * w)
        .prop_map(move |v| ScalarField::new(GridShape::plane(h, w), v).unwrap())
}

fn mirrored(mask: &BinaryMask) -> BinaryMask {
    let w = mask.shape().width();
    BinaryMask::from_fn(mask.shape().clone(), |r, c, _| mask.at(r, w - 1 - c))
}

proptest! {
    #[test]
    fn signed_distance_commutes_with_mirroring(mask in mask_strategy(12)) {
        let a = signed_distance(&mask).unwrap().into_phi();
        let b = signed_distance(&mirrored(&mask)).unwrap().into_phi();
        let w = mask.shape().width();
        for r in 0..mask.shape().height() {
            for c in 0..w {
                prop_assert_eq!(a.at(r, c), b.at(r, w - 1 - c));
            }
        }
    }

    #[test]
    fn signed_distance_is_lipschitz_across_faces(mask in mask_strategy(12)) {
        let phi = signed_distance(&mask).unwrap().into_phi();
        let (h, w) = (mask.shape().height(), mask.shape().width());
        for r in 0..h {
            for c in 0..w {
                if c + 1 < w {
                    prop_assert!((phi.at(r, c) - phi.at(r, c + 1)).abs() <= 1.0 + 1e-12);
                }
                if r + 1 < h {
                    prop_assert!((phi.at(r, c) - phi.at(r + 1, c)).abs() <= 1.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_level_is_exactly_the_boundary(mask in mask_strategy(10)) {
        let phi = signed_distance(&mask).unwrap().into_phi();
        let boundary = contour_flow::distance::boundary_pixels(&mask);
        for i in 0..mask.len() {
            prop_assert_eq!(phi.values()[i] == 0.0, boundary.get(i));
            prop_assert_eq!(phi.values()[i] >= 0.0, mask.get(i));
        }
    }

    #[test]
    fn divergence_is_adjoint_of_gradient(
        u in field_strategy(6, 7, -5.0, 5.0),
        v in prop::collection::vec(-5.0f64..5.0, 84),
    ) {
        let v = VectorField::new(GridShape::plane(6, 7), v).unwrap();
        let a = div_backward(&v).dot(&u).unwrap();
        let b = v.dot(&grad_forward(&u)).unwrap();
        prop_assert!((a + b).abs() <= 1e-10 * (a.abs() + b.abs()).max(1.0));
    }

    #[test]
    fn shape_loss_ignores_flips_and_offsets(
        u in field_strategy(14, 14, 0.0, 1.0),
        offset in -3.0f64..3.0,
    ) {
        let mask = BinaryMask::from_fn(GridShape::plane(14, 14), |r, c, _| {
            (r as f64 - 6.5).powi(2) + (c as f64 - 7.0).powi(2) <= 20.0
        });
        let flow = contour_flow(&signed_distance(&mask).unwrap().into_phi()).unwrap();
        let base = shape_loss_2d(&u, &flow).unwrap().total;
        let flipped = shape_loss_2d(&u.map(|x| 1.0 - x).unwrap(), &flow).unwrap().total;
        let shifted = shape_loss_2d(&u.map(|x| x + offset).unwrap(), &flow).unwrap().total;
        prop_assert!((base - flipped).abs() <= 1e-6 * base.max(1.0));
        prop_assert!((base - shifted).abs() <= 1e-6 * base.max(1.0));
    }

    #[test]
    fn dice_is_symmetric(a in mask_strategy(9), seed in any::<u64>()) {
        let b = BinaryMask::from_fn(a.shape().clone(), |r, c, _| {
            (seed >> ((r * 7 + c) % 64)) & 1 == 1
        });
        prop_assert_eq!(dice_score(&a, &b).unwrap(), dice_score(&b, &a).unwrap());
        prop_assert_eq!(dice_score(&a, &a).unwrap(), 100.0);
    }

    #[test]
    fn refined_values_are_probabilities(o in field_strategy(10, 10, -200.0, 200.0), iters in 1usize..30) {
        let mask = BinaryMask::from_fn(GridShape::plane(10, 10), |r, c, _| (2..8).contains(&r) && (3..7).contains(&c));
        let flow = contour_flow(&signed_distance(&mask).unwrap().into_phi()).unwrap();
        let cfg = RefineConfig { iters, ..RefineConfig::default() };
        let out = refine(&o, &flow, &cfg).unwrap();
        prop_assert!(out.u.values().iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn pgm_round_trips_byte_images(h in 1usize..20, w in 1usize..20, seed in any::<u8>()) {
        let img = ScalarField::from_fn(GridShape::plane(h, w), |r, c, _| {
            f64::from(seed.wrapping_mul(31).wrapping_add((r * w + c) as u8))
        });
        prop_assert_eq!(io::decode_pgm(&io::encode_pgm(&img).unwrap()).unwrap(), img);
    }

    #[test]
    fn field_files_round_trip_f32_values(v in prop::collection::vec(-1e6f32..1e6, 24)) {
        let f = ScalarField::new(GridShape::volume(2, 3, 4), v.iter().map(|&x| f64::from(x)).collect()).unwrap();
        let back = io::decode_field(&io::encode_scalar_field(&f).unwrap()).unwrap().into_scalar().unwrap();
        prop_assert_eq!(back, f);
    }
}
