#![allow(clippy::needless_range_loop)]

mod common;

use contour_flow::distance::{distance_to, signed_distance};
use contour_flow::fields::{map_sigmoid, GridShape, ScalarField};
use contour_flow::flow::{central_gradient, contour_flow, flow_l2_loss, flow_metrics, ContourFlow};
use contour_flow::losses::{ce_loss, combined_loss, dice_loss, shape_loss_2d, BaseLoss};
use contour_flow::operators::{div_backward, grad_forward};
use contour_flow::refine::{refine, RefineConfig};
use contour_flow::segmetrics::{boundary_distance, dice_score};
use contour_flow::{BinaryMask, VectorField};
use rand::Rng;

#[test]
fn signed_distance_matches_brute_force_on_small_masks() {
    let mut rng = common::rng(100);
    for _ in 0..100 {
        let mask = common::nonempty_mask(&mut rng, GridShape::plane(8, 8), 0.5);
        let got = signed_distance(&mask).unwrap();
        assert_eq!(got.phi().values(), &common::signed_distance(&mask)[..]);
    }
}

#[test]
fn unsigned_distance_matches_brute_force() {
    let mut rng = common::rng(101);
    for _ in 0..20 {
        let shape = GridShape::plane(rng.random_range(1..20), rng.random_range(1..20));
        let src = common::nonempty_mask(&mut rng, shape.clone(), 0.1);
        let got = distance_to(&src).unwrap();
        let want = common::distance_field(&shape, src.values());
        assert_eq!(got.values(), &want[..]);
    }
}

#[test]
fn gradient_matches_naive_differences() {
    let mut rng = common::rng(102);
    for shape in [GridShape::plane(6, 9), GridShape::volume(4, 5, 3)] {
        let u = common::random_field(&mut rng, shape, -2.0, 2.0);
        let g = grad_forward(&u);
        for (i, want) in common::gradient(&u).iter().enumerate() {
            assert_eq!(g.at(i), &want[..]);
        }
    }
}

/// Builds the forward-difference matrix densely and checks that the
/// divergence is exactly its negative transpose.
#[test]
fn divergence_is_negative_transpose_of_dense_gradient() {
    let shape = GridShape::plane(5, 5);
    let n = shape.len();
    let basis = |k: usize| {
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        ScalarField::new(shape.clone(), v).unwrap()
    };
    // column k of the gradient matrix is grad(e_k)
    let columns: Vec<Vec<f64>> = (0..n)
        .map(|k| common::gradient(&basis(k)).concat())
        .collect();
    let u = ScalarField::from_fn(shape.clone(), |r, c, _| (r * c) as f64);
    let v = grad_forward(&u);
    let div = div_backward(&v);
    for k in 0..n {
        let transpose_product: f64 = columns[k].iter().zip(v.values()).map(|(a, b)| a * b).sum();
        assert!((div.values()[k] + transpose_product).abs() < 1e-12);
    }
}

#[test]
fn cross_entropy_and_dice_match_direct_formulas() {
    let mut rng = common::rng(103);
    let shape = GridShape::plane(12, 10);
    let mut u = common::random_field(&mut rng, shape.clone(), 0.0, 1.0).into_values();
    u[0] = 0.0;
    u[1] = 1.0;
    let u = ScalarField::new(shape.clone(), u).unwrap();
    let g = common::random_mask(&mut rng, shape, 0.4);
    let mut ce = 0.0;
    let (mut inter, mut sum) = (0.0, 0.0);
    for i in 0..u.len() {
        let p = u.values()[i].clamp(1e-7, 1.0 - 1e-7);
        let y = if g.get(i) { 1.0 } else { 0.0 };
        ce -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
        inter += u.values()[i] * y;
        sum += u.values()[i] + y;
    }
    assert!((ce_loss(&u, &g).unwrap().total - ce).abs() < 1e-9);
    assert!((dice_loss(&u, &g).unwrap().total - (1.0 - 2.0 * inter / sum)).abs() < 1e-12);
}

#[test]
fn shape_loss_matches_direct_formula() {
    let mut rng = common::rng(104);
    let mask = common::disk_mask(20, 9.5, 10.0, 6.0);
    let flow = contour_flow(&signed_distance(&mask).unwrap().into_phi()).unwrap();
    let u = common::random_field(&mut rng, GridShape::plane(20, 20), 0.0, 1.0);
    let grad = common::gradient(&u);
    let mut want = 0.0;
    for i in 0..u.len() {
        if flow.defined().get(i) {
            let (a, v) = (&grad[i], flow.field().at(i));
            want += (a[0] * v[0] + a[1] * v[1]).abs() / ((a[0] * a[0] + a[1] * a[1]).sqrt() + 1e-8);
        }
    }
    let got = shape_loss_2d(&u, &flow).unwrap();
    assert!((got.total - want).abs() < 1e-12 * want.max(1.0));
    assert_eq!(got.pixel_count, flow.defined().count());

    let g = mask.clone();
    let both = combined_loss(&u, &g, &flow, 0.5, 2.0, BaseLoss::Dice).unwrap();
    let want = 0.5 * dice_loss(&u, &g).unwrap().total + 2.0 * got.total;
    assert!((both.total - want).abs() < 1e-12 * want);
    assert_eq!(both.per_term.len(), 2);
}

#[test]
fn flow_l2_matches_direct_sum() {
    let mut rng = common::rng(105);
    let shape = GridShape::plane(7, 11);
    let (a, b) = (
        common::random_vector_field(&mut rng, shape.clone()),
        common::random_vector_field(&mut rng, shape),
    );
    let want: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    assert!((flow_l2_loss(&a, &b).unwrap() - want).abs() < 1e-12);
    assert_eq!(flow_l2_loss(&a, &a).unwrap(), 0.0);
}

#[test]
fn flow_metrics_of_rotated_flow() {
    let mask = common::disk_mask(32, 15.5, 16.0, 10.0);
    let flow = contour_flow(&signed_distance(&mask).unwrap().into_phi()).unwrap();
    // rotate every vector by 90 degrees: cosine 0, endpoint error sqrt(2)
    let rotated = VectorField::from_fn(flow.shape().clone(), |r, c, _| {
        let v = flow.field().at(flow.shape().index(r, c, 0));
        vec![-v[1], v[0]]
    });
    let rotated = ContourFlow::new(rotated, flow.defined().clone()).unwrap();
    let m = flow_metrics(&rotated, &flow).unwrap();
    assert!(m.acs.abs() < 1e-12);
    assert!((m.epe - 2f64.sqrt()).abs() < 1e-12);
    assert_eq!(m.pixel_count, flow.defined().count());
}

/// Tangent and gradient of a disk's signed distance are orthogonal away from
/// the boundary, the centre and the grid border.
#[test]
fn disk_gradient_is_orthogonal_to_flow() {
    let size = 96;
    let (cy, cx) = (47.0, 48.0);
    let mask = common::disk_mask(size, cy, cx, 28.0);
    let sd = signed_distance(&mask).unwrap();
    let flow = contour_flow(sd.phi()).unwrap();
    let grad = central_gradient(sd.phi()).unwrap();
    let bd = common::boundary(&mask);
    let to_boundary = common::distance_field(mask.shape(), &bd);
    let (mut sum, mut n) = (0.0, 0usize);
    for i in 0..mask.len() {
        let [r, c, _] = mask.shape().coords(i);
        let from_center = ((r as f64 - cy).powi(2) + (c as f64 - cx).powi(2)).sqrt();
        let from_border = r.min(c).min(size - 1 - r).min(size - 1 - c);
        if to_boundary[i] < 3.0 || from_center < 3.0 || from_border < 3 || !flow.defined().get(i) {
            continue;
        }
        let (g, f) = (grad.at(i), flow.field().at(i));
        sum += (g[0] * f[0] + g[1] * f[1]).abs();
        n += 1;
    }
    assert!(n > 1000);
    assert!(sum / n as f64 <= 0.05, "{}", sum / n as f64);
}

/// Direct transcription of the alternating update with no shared code.
fn naive_refine(o: &ScalarField, flow: &ContourFlow, eps: f64, tau: f64, iters: usize) -> Vec<f64> {
    let shape = o.shape();
    let (h, w) = (shape.height(), shape.width());
    let at = |r: usize, c: usize| r * w + c;
    let f = flow.field().values();
    let mut q = vec![0.0; h * w];
    let mut u = vec![0.0; h * w];
    for _ in 0..iters {
        for r in 0..h {
            for c in 0..w {
                let i = at(r, c);
                let px = |rr: usize, cc: usize| q[at(rr, cc)] * f[2 * at(rr, cc)];
                let py = |rr: usize, cc: usize| q[at(rr, cc)] * f[2 * at(rr, cc) + 1];
                let mut div = 0.0;
                if c + 1 < w {
                    div += px(r, c);
                }
                if c > 0 {
                    div -= px(r, c - 1);
                }
                if r + 1 < h {
                    div += py(r, c);
                }
                if r > 0 {
                    div -= py(r - 1, c);
                }
                u[i] = 1.0 / (1.0 + (-(o.values()[i] - div) / eps).exp());
            }
        }
        for r in 0..h {
            for c in 0..w {
                let i = at(r, c);
                if !flow.defined().get(i) {
                    continue;
                }
                let gx = if c + 1 < w {
                    u[at(r, c + 1)] - u[i]
                } else {
                    0.0
                };
                let gy = if r + 1 < h {
                    u[at(r + 1, c)] - u[i]
                } else {
                    0.0
                };
                q[i] -= tau * (gx * f[2 * i] + gy * f[2 * i + 1]);
            }
        }
    }
    u
}

#[test]
fn refinement_matches_direct_transcription() {
    let mut rng = common::rng(106);
    let mask = common::disk_mask(16, 7.5, 8.0, 5.0);
    let flow = contour_flow(&signed_distance(&mask).unwrap().into_phi()).unwrap();
    let o = common::random_field(&mut rng, GridShape::plane(16, 16), -15.0, 15.0);
    let cfg = RefineConfig {
        eps: 10.0,
        tau: 10.0,
        iters: 25,
        record_trace: false,
    };
    let got = refine(&o, &flow, &cfg).unwrap();
    let want = naive_refine(&o, &flow, 10.0, 10.0, 25);
    for (a, b) in got.u.values().iter().zip(&want) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
    assert_eq!(map_sigmoid(&o, 10.0).unwrap().len(), want.len());
}

#[test]
fn metrics_match_brute_force() {
    let mut rng = common::rng(107);
    for _ in 0..30 {
        let shape = GridShape::plane(rng.random_range(2..40), rng.random_range(2..40));
        let p = common::nonempty_mask(&mut rng, shape.clone(), 0.3);
        let g = common::nonempty_mask(&mut rng, shape, 0.3);
        assert!((dice_score(&p, &g).unwrap() - common::dice_percent(&p, &g)).abs() < 1e-9);
        let (bd, sd) = boundary_distance(&p, &g).unwrap();
        let (obd, osd) = common::boundary_distance(&p, &g);
        assert!((bd - obd).abs() < 1e-9 && (sd - osd).abs() < 1e-9);
    }
}

#[test]
fn concentric_squares_have_constant_boundary_distance() {
    let g = common::square_mask(40, 10, 30);
    let p = common::square_mask(40, 14, 26);
    let (bd, bdsd) = boundary_distance(&p, &g).unwrap();
    assert_eq!((bd, bdsd), (4.0, 0.0));
    let both_empty = BinaryMask::empty(GridShape::plane(4, 4));
    assert_eq!(dice_score(&both_empty, &both_empty).unwrap(), 100.0);
}
