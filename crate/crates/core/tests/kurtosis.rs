use delreg_core::data::Dataset;
use delreg_core::kurtosis::{estimate_kappa, kappa_mardia, kappa_marginal, KappaMethod};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

/// Spherical t with `dof` degrees of freedom in three coordinates, mixed
/// through a fixed non-diagonal map. Elliptical with κ = 2 / (dof - 4).
fn elliptical_t(n: usize, dof: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chi = ChiSquared::new(dof).unwrap();
    let mix = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.5, 1.0, 0.0, 0.2, -0.4, 1.0]);
    let values = DMatrix::from_fn(n, 3, |_, _| 0.0);
    let mut values = values;
    for i in 0..n {
        let w: f64 = chi.sample(&mut rng);
        let z: Vec<f64> = (0..3).map(|_| StandardNormal.sample(&mut rng)).collect();
        for a in 0..3 {
            values[(i, a)] = (0..3).map(|b| mix[(a, b)] * z[b]).sum::<f64>() / (w / dof).sqrt();
        }
    }
    Dataset::complete(&values, 2).unwrap()
}

#[test]
fn both_estimators_recover_t12_kurtosis() {
    // t12 has finite eighth moments, so the estimates settle at 1e6 rows.
    let data = elliptical_t(1_000_000, 12.0, 5);
    let truth = 2.0 / 8.0;
    for k in [kappa_mardia(&data).unwrap().value, kappa_marginal(&data).unwrap().value] {
        assert!((k - truth).abs() < 0.04, "{k} vs {truth}");
    }
}

#[test]
fn method_dispatch() {
    let data = elliptical_t(2000, 12.0, 6);
    assert_eq!(
        estimate_kappa(&data, KappaMethod::Mardia).unwrap().value,
        kappa_mardia(&data).unwrap().value
    );
    let marginal = estimate_kappa(&data, KappaMethod::Marginal).unwrap();
    assert_eq!(marginal.per_column.as_ref().map(Vec::len), Some(3));
    assert_eq!("estimate-mardia".parse::<KappaMethod>().unwrap(), KappaMethod::Mardia);
}
