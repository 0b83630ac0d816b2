use henon::cantor::{adding_machine_check, cantor_sample, hausdorff, region, Hierarchy, Symbol, Word};
use henon::geometry::{box_metrics, sibling_word};
use henon::maps::{family_2d, family_t, toy_model, HenonMap, MapKind};
use henon::renorm::{build_tower, tune_parameter, RenormTower, Settings};
use henon::stats::linear_fit;
use henon::surfaces::{embed_2d, graph_transform, invariance_defect, projected_cantor};
use henon::universality::doubling::{standard_lambda, FEIGENBAUM_POINT};

fn tuned<F: Fn(f64) -> henon::Result<HenonMap> + Sync>(fam: F, n: usize) -> (f64, RenormTower) {
    let t = tune_parameter(&fam, FEIGENBAUM_POINT + 0.016, n, &Settings::default()).unwrap();
    (t.c, t.tower)
}

fn planar_hierarchy(b: f64, n: usize) -> Hierarchy {
    let (_, tower) = tuned(|c| family_2d(c, b, 0.25), n);
    Hierarchy::from_tower(&tower, &Settings::default()).unwrap()
}

#[test]
fn eps_decays_superexponentially() {
    let (_, tower) = tuned(|c| family_2d(c, 1e-2, 0.25), 6);
    let norms: Vec<f64> = tower.maps.iter().map(|m| m.eps_norm()).collect();
    for w in norms.windows(2) {
        if w[0] <= 1e-2 && w[0] > 1e-60 {
            assert!(w[1] <= w[0].powf(1.5), "{norms:?}");
        }
    }
}

#[test]
fn toy_models_renormalize_to_toy_models() {
    let (_, tower) = tuned(|c| toy_model(c, 1e-2, 1e-4, 1e-3, 0.25), 5);
    for m in &tower.maps {
        assert_eq!(m.kind, MapKind::Toy);
        assert!(m.eps.is_planar());
        let slope = m.eps.slope.as_ref().map_or(0.0, |s| s.sup_norm());
        assert!(slope <= 1e-10);
    }
}

#[test]
fn boxes_nest_and_separate() {
    let h = planar_hierarchy(1e-2, 6);
    for n in 1..=5 {
        let words = Word::all(n);
        let regions: Vec<_> = words.iter().map(|w| region(&h, w).unwrap()).collect();
        for (w, r) in words.iter().zip(&regions) {
            let parent = region(&h, &Word(w.0[..n - 1].to_vec())).unwrap();
            for (a, iv) in r.bbox.iter().enumerate() {
                let outer = parent.bbox[a].inflate(0.01);
                assert!(outer.lo <= iv.lo && iv.hi <= outer.hi, "{w} axis {a} leaves its parent");
            }
        }
        for i in 0..regions.len() {
            for j in i + 1..regions.len() {
                let apart =
                    regions[i].bbox.iter().zip(&regions[j].bbox).any(|(a, b)| a.hi < b.lo || b.hi < a.lo);
                assert!(apart, "level {n}: boxes {i} and {j} overlap");
            }
        }
    }
}

#[test]
fn tip_boxes_shrink_at_the_doubling_rate() {
    let h = planar_hierarchy(1e-2, 6);
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        (1..=6).map(|n| (n as f64, region(&h, &Word::repeat(Symbol::V, n)).unwrap().diameter.ln())).unzip();
    let fit = linear_fit(&xs, &ys).unwrap();
    let target = standard_lambda().abs().ln();
    assert!((fit.slope / target - 1.0).abs() < 0.15, "slope {} vs {target}", fit.slope);
}

#[test]
fn adding_machine_is_one_cycle() {
    let h = planar_hierarchy(1e-2, 5);
    let rep = adding_machine_check(&h, 5).unwrap();
    assert!(rep.single_cycle);
    assert_eq!(rep.cycle_lengths, vec![32]);
}

#[test]
fn surface_is_invariant_and_contracts_at_the_jacobian_ratio() {
    let (b1, b2) = (1e-2, 1e-5);
    let map = toy_model(FEIGENBAUM_POINT + 0.015, b1, b2, 1e-3, 0.25).unwrap();
    let tol = 1e-10;
    let s = graph_transform(&map, None, 40, tol).unwrap();
    assert!(s.defect <= 10.0 * tol, "defect {}", s.defect);
    assert!((invariance_defect(&s, &map).unwrap() - s.defect).abs() <= 1e-15);
    let rho = s.contraction().unwrap();
    let ratio = rho / (b2 / b1);
    assert!((1.0 / 3.0..=3.0).contains(&ratio), "contraction {rho}");
}

#[test]
fn embedded_cantor_set_is_the_projection() {
    let (c, _) = tuned(|c| family_t(&toy_model(c, 1e-2, 1e-5, 1e-3, 0.25)?, 1e-6, 1e-3), 5);
    let map = family_t(&toy_model(c, 1e-2, 1e-5, 1e-3, 0.25).unwrap(), 1e-6, 1e-3).unwrap();
    let st = Settings::default();
    let h3 = Hierarchy::from_tower(&build_tower(&map, 5, &st).tower, &st).unwrap();
    let s = graph_transform(&map, None, 40, 1e-13).unwrap();
    let flat = embed_2d(&map, &s, st.budget).unwrap();
    let rep = build_tower(&flat, 5, &st);
    assert_eq!(rep.tower.depth(), 5, "{:?}", rep.stopped);
    let h2 = Hierarchy::from_tower(&rep.tower, &st).unwrap();
    let n = 5;
    let resolution = region(&h2, &Word::repeat(Symbol::V, n)).unwrap().diameter;
    let gap = hausdorff(&cantor_sample(&h2, n).unwrap().points, &projected_cantor(&h3, n).unwrap());
    assert!(gap <= resolution, "gap {gap} vs box size {resolution}");
}

#[test]
fn sibling_metrics_fit_inside_the_parent_box() {
    let h = planar_hierarchy(1e-2, 6);
    assert_eq!(sibling_word(1, 4).unwrap().to_string(), "vcvv");
    for k in 0..3 {
        for n in k + 1..6 {
            let r = box_metrics(&h, k, n).unwrap();
            // Both siblings lie in the parent box B^n_w.
            let parent = region(&h, &sibling_word(k, n).unwrap()).unwrap();
            assert!(r.dist_min <= parent.diameter, "k={k} n={n}: {r:?}");
            assert!(r.diam <= parent.diameter * (1.0 + 1e-9), "k={k} n={n}: {r:?}");
        }
    }
}
