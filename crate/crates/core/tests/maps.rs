use num_complex::Complex64;
use proptest::prelude::*;

use renormlab::field::{GridSpec, HolExpr, ProbeBox};
use renormlab::maps::{
    fit_line, holomorphy_witness, image_probe, jacobian, rank_degenerate_probe, w_identity_defect, w_map,
    Functional, HarmonicMap, HolomorphyOutcome, RankReport,
};
use renormlab::tube::catalog;

fn poly() -> impl Strategy<Value = HolExpr> {
    prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 2..5)
        .prop_map(|cs| HolExpr::poly(cs.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()))
}

fn det(h: &HarmonicMap, z: [f64; 2]) -> f64 {
    let d = h.differential(&z).unwrap();
    d[0][0] * d[1][1] - d[0][1] * d[1][0]
}

proptest! {
    #[test]
    fn jacobian_matches_differential(f in poly(), g in poly(), x in -2.0..2.0f64, y in -2.0..2.0f64) {
        let h = HarmonicMap::from_holomorphic(f, g);
        let j = jacobian(&h, [x, y]).unwrap();
        let d = det(&h, [x, y]);
        prop_assert!((j - d).abs() <= 1e-9 * (1.0 + d.abs()), "{} vs {}", j, d);
    }

    #[test]
    fn jacobian_is_antisymmetric(f in poly(), g in poly(), x in -2.0..2.0f64, y in -2.0..2.0f64) {
        let a = jacobian(&HarmonicMap::from_holomorphic(f.clone(), g.clone()), [x, y]).unwrap();
        let b = jacobian(&HarmonicMap::from_holomorphic(g, f), [x, y]).unwrap();
        prop_assert!((a + b).abs() <= 1e-9 * (1.0 + a.abs()));
    }

    #[test]
    fn w_identity_holds(x in -5.0..5.0f64, y in -10.0..10.0f64) {
        prop_assert!(w_identity_defect([x, y]).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn line_fit_recovers_collinear_clouds(px in -3.0..3.0f64, py in -3.0..3.0f64, th in 0.0..3.1f64) {
        let dir = [th.cos(), th.sin()];
        let cloud: Vec<[f64; 2]> = (0..9).map(|k| {
            let t = k as f64 - 4.0;
            [px + t * dir[0], py + t * dir[1]]
        }).collect();
        let fit = fit_line(&cloud).unwrap();
        prop_assert!(fit.residual <= 1e-9);
        prop_assert!((fit.dir[0] * dir[1] - fit.dir[1] * dir[0]).abs() <= 1e-9);
    }
}

#[test]
fn shared_parent_is_rank_degenerate() {
    let g = HolExpr::exp(HolExpr::z());
    let f = HolExpr::mul(vec![HolExpr::real(-2.0), g.clone()]);
    let h = HarmonicMap::from_holomorphic(f, g);
    let grid = GridSpec::new(ProbeBox::cube(2, 1.0), 9).unwrap();
    match rank_degenerate_probe(&h, &grid).unwrap() {
        RankReport::DegenerateOnGrid { line, .. } => assert!((line.dir[1] / line.dir[0] + 0.5).abs() < 1e-9),
        other => panic!("{other:?}"),
    }
    let HolomorphyOutcome::Witness(w) = holomorphy_witness(&h, &grid).unwrap() else {
        panic!("expected a witness");
    };
    assert!((w.c - Complex64::new(-2.0, 0.0)).norm() < 1e-12);
    assert!(!w.invertible);
}

#[test]
fn w_map_lands_in_its_domain() {
    let h = w_map();
    let d = catalog::w_standin();
    let samples: Vec<Vec<f64>> = (0..40)
        .flat_map(|i| (0..40).map(move |j| vec![-3.0 + 0.15 * i as f64, -5.95 + 0.3 * j as f64]))
        .collect();
    let rep = image_probe(&h, &samples, &d, Some(Functional::Product)).unwrap();
    assert_eq!(rep.samples, samples.len());
    assert!(rep.violations.is_empty(), "{:?}", &rep.violations[..rep.violations.len().min(3)]);
    let (lo, hi) = rep.functional_range.unwrap();
    assert!(lo >= -1e-12 && hi <= 1.0 + 1e-12);
}
