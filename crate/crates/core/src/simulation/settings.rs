//! The five sampling distributions and their population models.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution as _, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::advisor::PatternSpec;
use crate::data::{CovarianceModel, Dataset};
use crate::error::{Error, Result};
use crate::linalg;

use super::rng_for;

/// Covariance of the two predictors in the reference configuration.
pub const COV_VX: f64 = 0.516;
pub const BETA_V: f64 = 0.310;
pub const BETA_X: f64 = 0.279;

/// Marginal probability of the Bernoulli predictors: `p (1 - p) = 1/6`.
pub fn bernoulli_p() -> f64 {
    (1.0 + (1.0f64 / 3.0).sqrt()) / 2.0
}

const POISSON_VX: [f64; 3] = [0.484, 0.484, 0.516];
/// `λ_V, λ_X, λ_U, λ_VX, λ_VU, λ_XU`.
const POISSON_VXU: [f64; 6] = [0.030, 0.045, 0.37, 0.516, 0.454, 0.439];

/// Reference model: unit predictor variances, covariance 0.516,
/// β = (0.310, 0.279), σ² = 1.
pub fn reference_model() -> CovarianceModel {
    model_vx(1.0, 1.0, COV_VX, BETA_V, BETA_X, 1.0)
}

/// Two-predictor model from its parts.
pub fn model_vx(var_v: f64, var_x: f64, cov_vx: f64, beta_v: f64, beta_x: f64, resid_var: f64) -> CovarianceModel {
    let sx = DMatrix::from_row_slice(2, 2, &[var_v, cov_vx, cov_vx, var_x]);
    CovarianceModel::from_parts(&sx, &DVector::from_vec(vec![beta_v, beta_x]), resid_var)
        .expect("two-predictor reference models are positive definite")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    Normal,
    /// Multivariate t with 5 degrees of freedom, scale (3/5)Σ.
    StudentT5,
    /// Bivariate Bernoulli predictors, normal error.
    Bernoulli,
    /// Common-shock Poisson predictors, normal error.
    PoissonPredictors,
    /// Common-shock Poisson on predictors and response jointly.
    PoissonAll,
}

impl Distribution {
    /// κ of the elliptical law, where there is one.
    pub fn elliptical_kappa(&self) -> Option<f64> {
        match self {
            Distribution::Normal => Some(0.0),
            Distribution::StudentT5 => Some(2.0),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSetting {
    /// 1..=5 for the numbered settings, 0 for a custom normal model.
    pub id: u8,
    pub distribution: Distribution,
    /// Population model (response last). κ is the elliptical value where
    /// defined, 0 otherwise.
    pub model: CovarianceModel,
    pub n: usize,
    pub pattern: PatternSpec,
    pub inner: usize,
    pub outer: usize,
    pub target: usize,
}

impl SimSetting {
    /// One of the five numbered settings on the reference configuration.
    pub fn numbered(id: u8, n: usize, pattern: PatternSpec) -> Result<Self> {
        let (distribution, model) = match id {
            1 => (Distribution::Normal, reference_model()),
            2 => (Distribution::StudentT5, reference_model().with_kappa(2.0)?),
            3 => (
                Distribution::Bernoulli,
                model_vx(1.0 / 6.0, 1.0 / 6.0, COV_VX / 6.0, BETA_V, BETA_X, 1.0),
            ),
            4 => (Distribution::PoissonPredictors, reference_model()),
            5 => {
                let [lv, lx, lu, lvx, lvu, lxu] = POISSON_VXU;
                let sigma = DMatrix::from_row_slice(
                    3,
                    3,
                    &[
                        lv + lvx + lvu,
                        lvx,
                        lvu,
                        lvx,
                        lx + lvx + lxu,
                        lxu,
                        lvu,
                        lxu,
                        lu + lvu + lxu,
                    ],
                );
                (Distribution::PoissonAll, CovarianceModel::partition(&sigma, 2)?)
            }
            other => {
                return Err(Error::InvalidPattern(format!("settings are numbered 1 to 5, got {other}")))
            }
        };
        Self::build(id, distribution, model, n, pattern)
    }

    /// Normal data from an arbitrary model.
    pub fn normal(model: CovarianceModel, n: usize, pattern: PatternSpec) -> Result<Self> {
        let model = model.with_kappa(0.0)?;
        Self::build(0, Distribution::Normal, model, n, pattern)
    }

    fn build(
        id: u8,
        distribution: Distribution,
        model: CovarianceModel,
        n: usize,
        pattern: PatternSpec,
    ) -> Result<Self> {
        pattern.proportions(model.dim())?;
        Ok(Self {
            id,
            distribution,
            model,
            n,
            pattern,
            inner: 10_000,
            outer: 100,
            target: 0,
        })
    }

    pub fn with_replicates(mut self, inner: usize, outer: usize) -> Result<Self> {
        if inner < 2 || outer < 1 {
            return Err(Error::InvalidPattern(format!(
                "need inner >= 2 and outer >= 1, got {inner} and {outer}"
            )));
        }
        self.inner = inner;
        self.outer = outer;
        Ok(self)
    }

    pub fn with_target(mut self, target: usize) -> Result<Self> {
        let p = self.model.p();
        if target >= p {
            return Err(Error::InvalidTarget { index: target, p });
        }
        self.target = target;
        Ok(self)
    }

    pub fn column_names(&self) -> Vec<String> {
        let p = self.model.p();
        if p == 2 {
            return vec!["V".into(), "X".into(), "U".into()];
        }
        (1..=p).map(|j| format!("X{j}")).chain(std::iter::once("Y".into())).collect()
    }

    pub fn sampler(&self) -> Result<Sampler> {
        Sampler::new(self)
    }
}

/// Precomputed state for drawing complete datasets from a setting.
#[derive(Debug, Clone)]
pub struct Sampler {
    distribution: Distribution,
    chol: DMatrix<f64>,
    beta: DVector<f64>,
    n: usize,
    names: Vec<String>,
    p11: f64,
}

impl Sampler {
    fn new(setting: &SimSetting) -> Result<Self> {
        let chol = linalg::cholesky_checked(setting.model.sigma())?;
        let p = bernoulli_p();
        let p11 = p * p + COV_VX / 6.0;
        if setting.distribution == Distribution::Bernoulli {
            let cells = [p11, p - p11, p - p11, 1.0 - 2.0 * p + p11];
            if cells.iter().any(|c| *c < 0.0) {
                return Err(Error::InvalidCovariance("Bernoulli cell probabilities are negative".into()));
            }
        }
        Ok(Self {
            distribution: setting.distribution,
            chol,
            beta: setting.model.beta().clone(),
            n: setting.n,
            names: setting.column_names(),
            p11,
        })
    }

    /// Draw one complete dataset (columns in model order, response last).
    pub fn draw<R: Rng>(&self, rng: &mut R) -> Dataset {
        let d = self.chol.nrows();
        let mut cols = vec![Vec::with_capacity(self.n); d];
        let mut z = DVector::zeros(d);
        let mut row = vec![0.0; d];
        for _ in 0..self.n {
            match self.distribution {
                Distribution::Normal | Distribution::StudentT5 => {
                    for v in z.iter_mut() {
                        *v = StandardNormal.sample(rng);
                    }
                    let x = &self.chol * &z;
                    let scale = if self.distribution == Distribution::StudentT5 {
                        let w: f64 = ChiSquared::new(5.0).expect("valid dof").sample(rng);
                        (3.0f64 / 5.0).sqrt() / (w / 5.0).sqrt()
                    } else {
                        1.0
                    };
                    for j in 0..d {
                        row[j] = x[j] * scale;
                    }
                }
                Distribution::Bernoulli => {
                    let p = bernoulli_p();
                    let u: f64 = rng.random();
                    let (v, x) = if u < self.p11 {
                        (1.0, 1.0)
                    } else if u < p {
                        (1.0, 0.0)
                    } else if u < 2.0 * p - self.p11 {
                        (0.0, 1.0)
                    } else {
                        (0.0, 0.0)
                    };
                    row[0] = v;
                    row[1] = x;
                    self.response(&mut row, rng);
                }
                Distribution::PoissonPredictors => {
                    let [l1, l2, l12] = POISSON_VX;
                    let shared = poisson(l12, rng);
                    row[0] = poisson(l1, rng) + shared;
                    row[1] = poisson(l2, rng) + shared;
                    self.response(&mut row, rng);
                }
                Distribution::PoissonAll => {
                    let [lv, lx, lu, lvx, lvu, lxu] = POISSON_VXU;
                    let (svx, svu, sxu) = (poisson(lvx, rng), poisson(lvu, rng), poisson(lxu, rng));
                    row[0] = poisson(lv, rng) + svx + svu;
                    row[1] = poisson(lx, rng) + svx + sxu;
                    row[2] = poisson(lu, rng) + svu + sxu;
                }
            }
            for j in 0..d {
                cols[j].push(row[j]);
            }
        }
        let observed = vec![vec![true; self.n]; d];
        Dataset::from_columns(self.names.clone(), cols, observed, d - 1).expect("sampler output is well formed")
    }

    fn response<R: Rng>(&self, row: &mut [f64], rng: &mut R) {
        let p = self.beta.len();
        let eps: f64 = StandardNormal.sample(rng);
        row[p] = (0..p).map(|j| self.beta[j] * row[j]).sum::<f64>() + eps;
    }
}

fn poisson<R: Rng>(lambda: f64, rng: &mut R) -> f64 {
    Poisson::new(lambda).expect("positive rate").sample(rng)
}

/// One complete dataset from `setting`.
pub fn sample(setting: &SimSetting, seed: u64) -> Result<Dataset> {
    let sampler = setting.sampler()?;
    Ok(sampler.draw(&mut rng_for(seed, 0, 0, super::Purpose::Sample)))
}
