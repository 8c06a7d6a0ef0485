//! Complete-case (listwise) and available-case (pairwise) covariance
//! estimates and the regression coefficients built from them.
//!
//! All covariances use the `1/n` divisor. Available-case entries subtract the
//! means of the rows shared by that pair, not the per-column means.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "CC")]
    Cc,
    #[serde(rename = "AC")]
    Ac,
}

impl Method {
    pub const BOTH: [Method; 2] = [Method::Cc, Method::Ac];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Cc => "CC",
            Method::Ac => "AC",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cc" | "complete" | "listwise" => Ok(Method::Cc),
            "ac" | "available" | "pairwise" => Ok(Method::Ac),
            other => Err(Error::InvalidPattern(format!("unknown method {other:?}"))),
        }
    }
}

/// A covariance estimate in model order (predictors, then response).
#[derive(Debug, Clone, PartialEq)]
pub struct CovEstimate {
    pub matrix: DMatrix<f64>,
    pub method: Method,
    /// Whether `matrix` passed the positive-definiteness test.
    pub pd: bool,
    /// Rows used for each entry.
    pub counts: DMatrix<usize>,
}

impl CovEstimate {
    pub fn p(&self) -> usize {
        self.matrix.nrows() - 1
    }

    pub fn s_x(&self) -> DMatrix<f64> {
        let p = self.p();
        self.matrix.view((0, 0), (p, p)).into_owned()
    }

    pub fn s_xy(&self) -> DVector<f64> {
        let p = self.p();
        self.matrix.view((0, p), (p, 1)).column(0).into_owned()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub beta_hat: DVector<f64>,
    pub method: Method,
    /// Complete rows for CC; for AC the smallest pairwise count.
    pub n_effective: usize,
    pub cov_estimate: CovEstimate,
}

impl FitResult {
    /// Per-pair counts (identical for every entry under CC).
    pub fn pair_counts(&self) -> &DMatrix<usize> {
        &self.cov_estimate.counts
    }
}

/// Centered cross-product over `rows` with means taken over the same rows.
fn pair_cov(x: &[f64], y: &[f64], rows: &[usize]) -> f64 {
    let n = rows.len() as f64;
    let mx = rows.iter().map(|&i| x[i]).sum::<f64>() / n;
    let my = rows.iter().map(|&i| y[i]).sum::<f64>() / n;
    rows.iter().map(|&i| (x[i] - mx) * (y[i] - my)).sum::<f64>() / n
}

/// Sample covariance over fully observed rows only.
pub fn cc_covariance(dataset: &Dataset) -> Result<CovEstimate> {
    let rows = dataset.complete_rows();
    if rows.len() < 2 {
        return Err(Error::InsufficientCompleteRows { found: rows.len() });
    }
    let order = dataset.model_order();
    let d = order.len();
    let mut matrix = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let v = pair_cov(dataset.column(order[a]), dataset.column(order[b]), &rows);
            matrix[(a, b)] = v;
            matrix[(b, a)] = v;
        }
    }
    let pd = linalg::is_positive_definite(&matrix);
    Ok(CovEstimate {
        matrix,
        method: Method::Cc,
        pd,
        counts: DMatrix::from_element(d, d, rows.len()),
    })
}

/// Pairwise-deletion covariance: entry `(j, k)` uses every row where both
/// columns are observed, with means recomputed on those rows.
pub fn ac_covariance(dataset: &Dataset) -> Result<CovEstimate> {
    let order = dataset.model_order();
    let d = order.len();
    let n = dataset.n_rows();
    let mut matrix = DMatrix::zeros(d, d);
    let mut counts = DMatrix::zeros(d, d);
    let mut rows = Vec::with_capacity(n);
    for a in 0..d {
        for b in a..d {
            let (oa, ob) = (dataset.observed_column(order[a]), dataset.observed_column(order[b]));
            rows.clear();
            rows.extend((0..n).filter(|&i| oa[i] && ob[i]));
            if rows.len() < 2 {
                return Err(Error::EmptyPair(a, b));
            }
            let v = pair_cov(dataset.column(order[a]), dataset.column(order[b]), &rows);
            matrix[(a, b)] = v;
            matrix[(b, a)] = v;
            counts[(a, b)] = rows.len();
            counts[(b, a)] = rows.len();
        }
    }
    let pd = linalg::is_positive_definite(&matrix);
    Ok(CovEstimate {
        matrix,
        method: Method::Ac,
        pd,
        counts,
    })
}

pub fn covariance(dataset: &Dataset, method: Method) -> Result<CovEstimate> {
    match method {
        Method::Cc => cc_covariance(dataset),
        Method::Ac => ac_covariance(dataset),
    }
}

/// Coefficients `S_x^{-1} S_xy` from a covariance estimate.
pub fn coefficients(estimate: &CovEstimate) -> Result<DVector<f64>> {
    linalg::solve(&estimate.s_x(), &estimate.s_xy())
}

/// Fits the regression with the chosen deletion method. A non positive
/// definite AC estimate is reported through `cov_estimate.pd`; the solve is
/// still attempted. CC needs `p + 1` complete rows to identify `p` slopes
/// and the intercept.
pub fn fit(dataset: &Dataset, method: Method) -> Result<FitResult> {
    if method == Method::Cc {
        let found = dataset.complete_rows().len();
        if found < dataset.p() + 1 {
            return Err(Error::InsufficientCompleteRows { found });
        }
    }
    let cov_estimate = covariance(dataset, method)?;
    let beta_hat = coefficients(&cov_estimate)?;
    let p = cov_estimate.p();
    let n_effective = (0..=p)
        .flat_map(|a| (0..=p).map(move |b| (a, b)))
        .map(|(a, b)| cov_estimate.counts[(a, b)])
        .min()
        .unwrap_or(0);
    Ok(FitResult {
        beta_hat,
        method,
        n_effective,
        cov_estimate,
    })
}
