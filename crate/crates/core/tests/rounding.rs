mod common;

use common::*;
use mucsp_core::csp::{ConstraintHypergraph, Predicate};
use mucsp_core::harness::stream;
use mucsp_core::probspace::{FunctionTable, MultilinearPoly, TableSpace};
use mucsp_core::pseudodist::{smooth, statistics, vector_solution, VectorSolution};
use mucsp_core::rounding::*;

fn setup(seed: u64) -> (ConstraintHypergraph, VectorSolution, mucsp_core::pseudodist::LocalDistributionFamily) {
    let mut r = rng(seed);
    let n = 5;
    let theta = family_of(&product_mixture(n, 3, &mut r), 4);
    let g = ConstraintHypergraph::uniform(n, (0..n).map(|i| vec![i, (i + 2) % n]).collect(), Predicate::or(2)).unwrap();
    let mu = statistics(&theta, &[0.2; 5]).unwrap().bias;
    let sm = smooth(&theta, 0.05, mu).unwrap();
    (g, vector_solution(&sm).unwrap(), sm)
}

fn dictators(vs: &VectorSolution, r: usize) -> Vec<FunctionTable> {
    vs.mu.iter().map(|&m| FunctionTable::from_fn(TableSpace::cube_uniform(r, m).unwrap(), |x| (x & 1) as f64).unwrap()).collect()
}

#[test]
fn constant_functions_round_to_their_value() {
    let (g, vs, _) = setup(1);
    let fns = vs.mu.iter().map(|&m| FunctionTable::constant(TableSpace::cube_uniform(3, m).unwrap(), 0.3).unwrap()).collect();
    let input = RoundingInput::new(&g, fns, &vs, 0.01, 0.1, 0.1, 0.5).unwrap();
    let p = rounding_probabilities(&input, &mut stream(1, "t", 0));
    assert!(p.iter().all(|&x| (x - 0.3).abs() < 1e-12));
    assert_eq!(input.max_influence, 0.0);
}

#[test]
fn rounding_is_seeded() {
    let (g, vs, _) = setup(2);
    let input = RoundingInput::new(&g, dictators(&vs, 3), &vs, 0.01, 0.1, 0.1, 0.5).unwrap();
    let a = round_once(&input, 77).unwrap();
    let b = round_once(&input, 77).unwrap();
    assert_eq!(a.sigma, b.sigma);
    assert_eq!(a.p, b.p);
    assert!(a.p.iter().all(|p| (0.0..=1.0).contains(p)));
}

#[test]
fn mean_rounding_probability_tracks_bias() {
    let (g, vs, _) = setup(3);
    let input = RoundingInput::new(&g, dictators(&vs, 3), &vs, 0.01, 0.1, 0.1, 0.5).unwrap();
    let trials = 20_000;
    let mut mean = vec![0.0; 5];
    let mut rng = stream(3, "t", 0);
    for _ in 0..trials {
        for (m, p) in mean.iter_mut().zip(rounding_probabilities(&input, &mut rng)) {
            *m += p / trials as f64;
        }
    }
    // clipping of a Gaussian centred at μ biases the mean towards 1/2 by at most its tail mass
    for (m, mu) in mean.iter().zip(&vs.mu) {
        assert!((m - mu).abs() < 0.1, "{m} vs {mu}");
    }
}

#[test]
fn bias_variance_within_correlation_bound() {
    let (g, vs, sm) = setup(4);
    let input = RoundingInput::new(&g, dictators(&vs, 4), &vs, 0.01, 0.1, 0.1, 0.5).unwrap();
    let gamma = statistics(&sm, &[0.2; 5]).unwrap().avg_abs_corr_offdiag;
    let rep = bias_concentration_check(&input, gamma, 3000, 9).unwrap();
    assert!(rep.passed(), "{rep:?}");
}

#[test]
fn clipped_quadratics_respect_the_covariance_bound() {
    let h = MultilinearPoly::new(2, vec![0.2, 0.5, -0.3, 0.4]).unwrap();
    let f = normalized_rounding_fn(&h, 0.4, 0.5);
    for rho in [0.0, 0.3, 1.0] {
        let rep = covariance_bound_check(&f, &f, 2, rho, 200_000, 5).unwrap();
        assert!(rep.passed(), "ρ = {rho}: {rep:?}");
    }
}

#[test]
fn value_check_on_weakly_correlated_distribution() {
    let support: Support = (0..16usize)
        .map(|m| ((0..4).map(|i| (m >> i & 1) as u8).collect(), 0.9 / 16.0 + if m == 0 || m == 15 { 0.05 } else { 0.0 }))
        .collect();
    let theta = family_of(&support, 4);
    let g = ConstraintHypergraph::uniform(4, vec![vec![0, 1], vec![2, 3], vec![1, 2]], Predicate::xor(2)).unwrap();
    let vs = vector_solution(&theta).unwrap();
    let input = RoundingInput::new(&g, dictators(&vs, 4), &vs, 0.01, 0.1, 0.1, 0.5).unwrap();
    let rep = value_check(&input, &theta, 50_000, 3, 0.02, 2).unwrap();
    assert!(rep.passed(), "{rep:?}");
}

#[test]
fn construction_errors() {
    let (g, vs, _) = setup(5);
    let wrong_bias = vs.mu.iter().map(|_| FunctionTable::constant(TableSpace::cube_uniform(3, 0.01).unwrap(), 0.3).unwrap()).collect();
    assert!(RoundingInput::new(&g, wrong_bias, &vs, 0.01, 0.1, 0.1, 0.5).is_err());
    let mut fns = dictators(&vs, 3);
    fns.pop();
    assert!(RoundingInput::new(&g, fns, &vs, 0.01, 0.1, 0.1, 0.5).is_err());
    let omega = vs.mu.iter().map(|&m| FunctionTable::constant(TableSpace::omega_uniform(2, m, 0.5).unwrap(), 0.3).unwrap()).collect();
    assert!(RoundingInput::new(&g, omega, &vs, 0.01, 0.1, 0.1, 0.5).is_err());
}

#[test]
fn fixed_vertices_round_to_their_corner() {
    let support: Support = vec![(vec![1, 0, 0], 0.5), (vec![1, 1, 0], 0.3), (vec![1, 0, 1], 0.2)];
    let theta = family_of(&support, 3);
    let g = ConstraintHypergraph::uniform(3, vec![vec![0, 1], vec![1, 2]], Predicate::and(2)).unwrap();
    let vs = vector_solution(&theta).unwrap();
    // vertex 0 is fixed to 1, so any bias is accepted for its table
    let fns = vs
        .mu
        .iter()
        .map(|&m| {
            let b = if m > 1.0 - 1e-12 { 0.5 } else { m };
            FunctionTable::from_fn(TableSpace::cube_uniform(2, b).unwrap(), |x| (x & 1) as f64).unwrap()
        })
        .collect();
    let input = RoundingInput::new(&g, fns, &vs, 0.01, 0.1, 0.1, 0.5).unwrap();
    let out = round_once(&input, 1).unwrap();
    assert_eq!(out.p[0], 1.0);
    assert_eq!(out.sigma.get(0), 1);
}
