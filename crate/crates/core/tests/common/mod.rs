#![allow(dead_code)]

use lsborn::lippmann::{assemble, LSOperator};
use lsborn::problem::{make_grid, Incidence, Medium, QuadratureRule, WaveProblem};
use lsborn::Complex64;

pub fn constant_op(k0: f64, q0: f64, n: usize) -> LSOperator {
    let p = WaveProblem::new(k0, 1.0, Incidence::Left, n).unwrap();
    let g = make_grid(&p, QuadratureRule::Midpoint).unwrap();
    assemble(&p, &Medium::constant(q0), &g).unwrap()
}

pub fn rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

/// Greedy matching of two multisets; returns the largest pair distance.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for z in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, w)| (k, (w - z).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}
