#![allow(dead_code)]

use delreg_core::data::{CovarianceModel, ProportionSet};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Random SPD matrix `G Gᵀ / p + floor I` with unequal scales.
pub fn random_spd(rng: &mut ChaCha8Rng, p: usize, floor: f64) -> DMatrix<f64> {
    let g = DMatrix::from_fn(p, p, |_, _| normal(rng));
    let scale = DVector::from_fn(p, |_, _| rng.random_range(0.5..2.0));
    let base = &g * g.transpose() / p as f64 + DMatrix::identity(p, p) * floor;
    DMatrix::from_fn(p, p, |i, j| base[(i, j)] * scale[i] * scale[j])
}

pub fn random_model(rng: &mut ChaCha8Rng, p: usize) -> CovarianceModel {
    let sx = random_spd(rng, p, 0.2);
    let beta = DVector::from_fn(p, |_, _| normal(rng));
    let resid_var = rng.random_range(0.1..3.0);
    let kappa = rng.random_range(-0.45..2.0);
    CovarianceModel::from_parts(&sx, &beta, resid_var)
        .unwrap()
        .with_kappa(kappa)
        .unwrap()
}

pub fn with_beta(model: &CovarianceModel, beta: &[f64]) -> CovarianceModel {
    CovarianceModel::from_parts(&model.sigma_x(), &DVector::from_column_slice(beta), model.resid_var())
        .unwrap()
        .with_kappa(model.kappa())
        .unwrap()
}

/// Index of the largest value, and whether it sits at either end.
pub fn argmax(values: &[f64]) -> (usize, bool) {
    let (i, _) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    (i, i == 0 || i + 1 == values.len())
}

/// Random distribution over observation patterns with every pair of columns
/// jointly observed with positive probability. The response is dropped in
/// some patterns when `response_missing`.
pub fn random_patterns(rng: &mut ChaCha8Rng, dim: usize, response_missing: bool) -> ProportionSet {
    let full = (1u64 << dim) - 1;
    let y_bit = 1u64 << (dim - 1);
    let mut patterns = vec![(full, rng.random_range(0.4..0.8))];
    for _ in 0..rng.random_range(1..6) {
        let mut mask = rng.random_range(1..=full);
        if !response_missing {
            mask |= y_bit;
        }
        patterns.push((mask, rng.random_range(0.01..0.2)));
    }
    let total: f64 = patterns.iter().map(|p| p.1).sum();
    let normalized: Vec<(u64, f64)> = patterns.into_iter().map(|(m, w)| (m, w / total)).collect();
    ProportionSet::from_pattern_distribution(dim, &normalized).unwrap()
}

pub fn beta_of(sigma: &DMatrix<f64>, p: usize) -> DVector<f64> {
    let sx = sigma.view((0, 0), (p, p)).into_owned();
    let sxy = sigma.view((0, p), (p, 1)).into_owned();
    sx.lu().solve(&sxy).unwrap().column(0).into_owned()
}
