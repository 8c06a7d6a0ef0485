//! Estimators of the elliptical kurtosis parameter κ (one third of the common
//! marginal excess kurtosis).

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KappaMethod {
    /// Mean squared Mahalanobis distance over complete rows.
    Mardia,
    /// Average of bias-corrected marginal excess kurtoses.
    Marginal,
}

impl fmt::Display for KappaMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KappaMethod::Mardia => "mardia",
            KappaMethod::Marginal => "marginal",
        })
    }
}

impl FromStr for KappaMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mardia" | "estimate-mardia" => Ok(Self::Mardia),
            "marginal" | "estimate-marginal" => Ok(Self::Marginal),
            other => Err(Error::InvalidPattern(format!("unknown kappa estimator {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaEstimate {
    pub value: f64,
    pub method: KappaMethod,
    /// Corrected excess kurtosis of each column (marginal method only), in
    /// model order.
    pub per_column: Option<Vec<f64>>,
}

impl KappaEstimate {
    /// Sample estimates can fall at or below the population bound of -1/2.
    pub fn below_bound(&self) -> bool {
        self.value <= -0.5
    }
}

/// `Σ_i {(z_i - z̄)ᵀ S⁻¹ (z_i - z̄)}² / (n (p+3)(p+1)) - 1` over complete rows.
pub fn kappa_mardia(dataset: &Dataset) -> Result<KappaEstimate> {
    let rows = dataset.complete_rows();
    let order = dataset.model_order();
    let d = order.len();
    let n = rows.len();
    if n <= d {
        return Err(Error::InsufficientRows { needed: d + 1, found: n });
    }
    let nf = n as f64;
    let centered: Vec<Vec<f64>> = order
        .iter()
        .map(|&c| {
            let col = dataset.column(c);
            let mean = rows.iter().map(|&i| col[i]).sum::<f64>() / nf;
            rows.iter().map(|&i| col[i] - mean).collect()
        })
        .collect();
    let s = nalgebra::DMatrix::from_fn(d, d, |j, k| {
        centered[j].iter().zip(&centered[k]).map(|(a, b)| a * b).sum::<f64>() / nf
    });
    let s_inv = linalg::cholesky_checked(&s)
        .and_then(|_| linalg::inverse(&s))
        .map_err(|_| Error::SingularCovariance)?;
    let mut z = DVector::zeros(d);
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..d {
            z[j] = centered[j][i];
        }
        let dist = z.dot(&(&s_inv * &z));
        total += dist * dist;
    }
    // (p+3)(p+1) with p predictors, i.e. d (d+2) for d = p+1 columns.
    let value = total / (nf * (d as f64 + 2.0) * d as f64) - 1.0;
    Ok(KappaEstimate {
        value,
        method: KappaMethod::Mardia,
        per_column: None,
    })
}

/// Bias-corrected sample excess kurtosis of one sample.
pub fn corrected_excess_kurtosis(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 4 {
        return Err(Error::InsufficientRows { needed: 4, found: n });
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let (m2, m4) = values.iter().fold((0.0, 0.0), |(a, b), v| {
        let d2 = (v - mean) * (v - mean);
        (a + d2, b + d2 * d2)
    });
    let (m2, m4) = (m2 / nf, m4 / nf);
    if !(m2 > 0.0) {
        return Err(Error::SingularCovariance);
    }
    let raw = m4 / (m2 * m2);
    Ok((nf - 1.0) / ((nf - 2.0) * (nf - 3.0)) * ((nf + 1.0) * raw - 3.0 * (nf - 1.0)))
}

/// `Σ_j κ̂_j / (3(p+1))`, each column using its own observed cells.
pub fn kappa_marginal(dataset: &Dataset) -> Result<KappaEstimate> {
    let order = dataset.model_order();
    let mut per_column = Vec::with_capacity(order.len());
    for &c in &order {
        let obs: Vec<f64> = dataset
            .column(c)
            .iter()
            .zip(dataset.observed_column(c))
            .filter(|(_, o)| **o)
            .map(|(v, _)| *v)
            .collect();
        per_column.push(corrected_excess_kurtosis(&obs)?);
    }
    let value = per_column.iter().sum::<f64>() / (3.0 * order.len() as f64);
    Ok(KappaEstimate {
        value,
        method: KappaMethod::Marginal,
        per_column: Some(per_column),
    })
}

pub fn estimate_kappa(dataset: &Dataset, method: KappaMethod) -> Result<KappaEstimate> {
    match method {
        KappaMethod::Mardia => kappa_mardia(dataset),
        KappaMethod::Marginal => kappa_marginal(dataset),
    }
}
