use henon::cantor::{hausdorff, Word};
use henon::funcspace::invert_monotone;
use henon::geometry::{box_scaling, intervals_overlap, log_window};
use henon::maps::{default_box2, family_2d_distorted, toy_model, HenonMap};
use henon::{Field, Interval};
use proptest::prelude::*;

fn poly(coef: &[f64], x: f64, y: f64) -> f64 {
    // Coefficients of x^i y^j for i, j < 4, row-major in i.
    let mut acc = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            acc += coef[4 * i + j] * x.powi(i as i32) * y.powi(j as i32);
        }
    }
    acc
}

fn unit_square() -> Vec<Interval> {
    vec![Interval::new(-1.0, 1.0).unwrap(), Interval::new(-1.0, 1.0).unwrap()]
}

fn sample_maps() -> Vec<HenonMap> {
    vec![family_2d_distorted(1.4, 0.05, 0.3, 0.25).unwrap(), toy_model(1.4, 0.02, 1e-3, 5e-3, 0.25).unwrap()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fit_reproduces_low_degree_polynomials(
        coef in prop::collection::vec(-1.0f64..1.0, 16),
        x in -1.0f64..1.0,
        y in -1.0f64..1.0,
    ) {
        let f = Field::fit(|p| poly(&coef, p[0], p[1]), &[5, 6], &unit_square()).unwrap();
        let direct = poly(&coef, x, y);
        let scale = coef.iter().map(|c| c.abs()).sum::<f64>().max(1e-300);
        prop_assert!((f.value(&[x, y]) - direct).abs() <= 1e-12 * scale);
    }

    #[test]
    fn differentiate_commutes_with_axis_swap(
        coef in prop::collection::vec(-1.0f64..1.0, 16),
        x in -1.0f64..1.0,
        y in -1.0f64..1.0,
    ) {
        let f = Field::fit(|p| poly(&coef, p[0], p[1]), &[6, 6], &unit_square()).unwrap();
        let g = Field::fit(|p| poly(&coef, p[1], p[0]), &[6, 6], &unit_square()).unwrap();
        let dfx = f.differentiate(0).unwrap().value(&[x, y]);
        let dgy = g.differentiate(1).unwrap().value(&[y, x]);
        prop_assert!((dfx - dgy).abs() <= 1e-11 * (1.0 + dfx.abs()));
    }

    #[test]
    fn invert_monotone_recovers_argument(x0 in -1.5f64..1.5, a in 0.1f64..3.0) {
        let g = |x: f64| a * x + x.powi(3) + 0.2 * x.sin();
        let bracket = Interval::new(-1.6, 1.6).unwrap();
        let x = invert_monotone(g, g(x0), bracket, 1e-13).unwrap();
        prop_assert!((x - x0).abs() <= 1e-12);
    }

    #[test]
    fn jacobian_matches_finite_differences(x in -1.2f64..1.2, y in -1.2f64..1.2, z in -0.8f64..0.8) {
        for map in sample_maps() {
            let p = [x, y, z];
            let dims = map.dims();
            let jac = map.jacobian(&p[..dims]).unwrap();
            let h = 1e-6;
            for j in 0..dims {
                let mut lo = p[..dims].to_vec();
                let mut hi = lo.clone();
                lo[j] -= h;
                hi[j] += h;
                let (a, b) = (map.apply(&lo).unwrap(), map.apply(&hi).unwrap());
                for i in 0..dims {
                    let fd = (b[i] - a[i]) / (2.0 * h);
                    prop_assert!((fd - jac[i][j]).abs() <= 1e-6, "entry ({i},{j}): {fd} vs {}", jac[i][j]);
                }
            }
        }
    }

    #[test]
    fn toy_models_keep_block_structure(x in -1.6f64..1.6, y in -1.6f64..1.6, z in -1.0f64..1.0) {
        let map = toy_model(1.4, 0.02, 1e-3, 5e-3, 0.25).unwrap();
        let d = map.derivative([x, y, z]);
        prop_assert_eq!(d[0][2], 0.0);
        prop_assert_eq!(d[1][2], 0.0);
        // (0, 0, 1) is an eigenvector with eigenvalue ∂_zδ.
        prop_assert!((d[2][2] - 1e-3).abs() < 1e-15);
        let det2 = d[0][0] * d[1][1] - d[0][1] * d[1][0];
        prop_assert!(det2 > 0.0);
    }

    #[test]
    fn planar_orientation_follows_eps_slope(x in -1.6f64..1.6, y in -1.6f64..1.6) {
        let map = family_2d_distorted(1.4, 0.05, 0.3, 0.25).unwrap();
        let d = map.derivative([x, y, 0.0]);
        let det2 = d[0][0] * d[1][1] - d[0][1] * d[1][0];
        // ∂_yε = b (1 + k x) > 0 everywhere on the box.
        prop_assert!(det2 > 0.0);
    }

    #[test]
    fn word_index_round_trip(n in 1usize..12, seed in any::<u64>()) {
        let i = (seed as usize) % (1 << n);
        let w = Word::from_index(n, i);
        prop_assert_eq!(w.len(), n);
        prop_assert_eq!(w.index(), i);
    }

    #[test]
    fn window_is_exact_in_log_space(b in 1e-3f64..0.5, k in 0usize..5, extra in 0usize..20) {
        let n = k + extra;
        let direct = b.powf((1u64 << k) as f64) / box_scaling().powi(extra as i32);
        let w = log_window(b.ln(), k, n).exp();
        prop_assert!((w / direct - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn overlap_is_symmetric(a0 in -2.0f64..2.0, a1 in -2.0f64..2.0, b0 in -2.0f64..2.0, b1 in -2.0f64..2.0) {
        let a = (a0.min(a1), a0.max(a1));
        let b = (b0.min(b1), b0.max(b1));
        prop_assert_eq!(intervals_overlap(a, b), intervals_overlap(b, a));
    }

    #[test]
    fn hausdorff_is_a_scaled_metric(
        pts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..20),
        shift in -0.5f64..0.5,
        scale in 0.1f64..10.0,
    ) {
        let a: Vec<[f64; 3]> = pts.iter().map(|&(x, y)| [x, y, 0.0]).collect();
        let b: Vec<[f64; 3]> = a.iter().map(|p| [p[0] + shift, p[1], 0.0]).collect();
        prop_assert_eq!(hausdorff(&a, &a), 0.0);
        let d = hausdorff(&a, &b);
        prop_assert!((d - hausdorff(&b, &a)).abs() < 1e-15);
        prop_assert!(d <= shift.abs() + 1e-15);
        let sa: Vec<[f64; 3]> = a.iter().map(|p| [scale * p[0], scale * p[1], 0.0]).collect();
        let sb: Vec<[f64; 3]> = b.iter().map(|p| [scale * p[0], scale * p[1], 0.0]).collect();
        prop_assert!((hausdorff(&sa, &sb) - scale * d).abs() <= 1e-12 * (1.0 + scale * d));
    }
}

#[test]
fn default_box_is_symmetric() {
    let bx = default_box2();
    assert_eq!(bx[0].lo, -bx[0].hi);
    assert_eq!(bx[1].lo, -bx[1].hi);
}
