use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use renormlab::field::{HarmonicExpr, HolExpr};
use renormlab::group::{
    expm, from_rows, lie_renormalize, matrix_df, quotient_distance, to_rows, torus_renormalize, CMat, LieOptions,
    MatrixHoloMap, TorusClass, TorusMap, TorusOptions,
};
use renormlab::maps::HarmonicMap;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn matrix(n: usize) -> impl Strategy<Value = CMat> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n * n)
        .prop_map(move |v| CMat::from_iterator(n, n, v.into_iter().map(|(a, b)| c(a, b))))
}

proptest! {
    #[test]
    fn quotient_distance_is_a_metric_on_the_torus(
        a in prop::collection::vec(-5.0..5.0f64, 2),
        b in prop::collection::vec(-5.0..5.0f64, 2),
        k in prop::collection::vec(-3i32..3, 2),
    ) {
        let shifted: Vec<f64> = b.iter().zip(&k).map(|(x, k)| x + *k as f64).collect();
        let d = quotient_distance(&a, &b);
        prop_assert!((d - quotient_distance(&a, &shifted)).abs() <= 1e-9);
        prop_assert!((d - quotient_distance(&b, &a)).abs() <= 1e-12);
        prop_assert!(d <= (2.0f64).sqrt() / 2.0 + 1e-12);
    }

    #[test]
    fn rows_round_trip(m in matrix(3)) {
        prop_assert_eq!(from_rows(&to_rows(&m)).unwrap(), m);
    }

    #[test]
    fn expm_is_a_one_parameter_group(x in matrix(2), s in -1.0..1.0f64, t in -1.0..1.0f64) {
        let lhs = expm(&x, c(s + t, 0.0));
        let rhs = expm(&x, c(s, 0.0)) * expm(&x, c(t, 0.0));
        prop_assert!((lhs - rhs).norm() <= 1e-10);
    }

    #[test]
    fn log_derivative_of_group_exp_is_generator(x in matrix(2), re in -1.0..1.0f64, im in -1.0..1.0f64) {
        let f = MatrixHoloMap::group_exp(DMatrix::identity(2, 2), x.clone()).unwrap();
        let z = c(re, im);
        let df = matrix_df(&f, z).unwrap();
        prop_assert!((df - &x).norm() <= 1e-9);
    }
}

#[test]
fn nilpotent_family_recovers_generator() {
    let x = from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.0)]]).unwrap();
    let fseq = |k: usize| Ok(MatrixHoloMap::group_exp(DMatrix::identity(2, 2), &x * c(k as f64, 0.0)).unwrap());
    let indices: Vec<usize> = (20..24).collect();
    let (_, rep) = lie_renormalize(fseq, &[0.0, 0.0], &|_| vec![0.0, 0.0], &indices, &LieOptions::default()).unwrap();
    let est = from_rows(&rep.x).unwrap();
    assert!((est - &x).norm() < 1e-9);
    assert!(rep.nonconstant);
}

#[test]
fn linear_torus_family_is_affine() {
    let fseq = |k: usize| {
        let s = (k + 1) as f64;
        let u = HarmonicExpr::affine(0.25, &[s, 0.0])?;
        let v = HarmonicExpr::affine(-0.5, &[0.0, 2.0 * s])?;
        Ok(TorusMap::new(HarmonicMap::new(vec![u, v])?))
    };
    let indices: Vec<usize> = (10..14).collect();
    let (_, rep) = torus_renormalize(fseq, &[0.0, 0.0], &|_| vec![0.0, 0.0], &indices, &TorusOptions::default()).unwrap();
    assert_eq!(rep.class, TorusClass::AffineNonconstant);
    let d = &rep.differential;
    assert!(d[0][1].abs() < 1e-9 && d[1][0].abs() < 1e-9);
    assert!((d[1][1] / d[0][0] - 2.0).abs() < 1e-9);
}

#[test]
fn entrywise_maps_parse() {
    let f = MatrixHoloMap::parse_entries(1, &["(exp z)".to_string()]).unwrap();
    let z = c(0.3, 0.4);
    assert!((f.eval(z)[(0, 0)] - HolExpr::exp(HolExpr::z()).eval(z)).norm() < 1e-14);
    assert!(MatrixHoloMap::parse_entries(2, &["z".to_string()]).is_err());
}
