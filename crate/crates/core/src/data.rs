//! Datasets with observation masks, population covariance models, and
//! observation-proportion bookkeeping.
//!
//! Column order convention: everything downstream of a [`Dataset`] works in
//! *model order*, i.e. the predictors in their original relative order
//! followed by the response as the last column. [`Dataset::model_order`] gives
//! the mapping.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Rectangular numeric table with a per-cell observed mask.
///
/// Masked-out cells keep whatever value was stored, but no statistic in this
/// crate ever reads them.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    observed: Vec<Vec<bool>>,
    response_index: usize,
}

impl Dataset {
    /// Builds a dataset from row-major values and mask (`true` = observed).
    pub fn from_rows(
        values: &[Vec<f64>],
        mask: &[Vec<bool>],
        response_index: usize,
    ) -> Result<Self> {
        let n = values.len();
        let d = values.first().map_or(0, Vec::len);
        let mask_d = mask.first().map_or(0, Vec::len);
        if mask.len() != n
            || mask_d != d
            || values.iter().any(|r| r.len() != d)
            || mask.iter().any(|r| r.len() != d)
        {
            return Err(Error::ShapeMismatch {
                values: (n, d),
                mask: (mask.len(), mask_d),
            });
        }
        let columns = (0..d).map(|j| values.iter().map(|r| r[j]).collect()).collect();
        let observed = (0..d).map(|j| mask.iter().map(|r| r[j]).collect()).collect();
        Self::from_columns(default_names(d), columns, observed, response_index)
    }

    /// Fully observed dataset from an `n x (p+1)` matrix.
    pub fn complete(values: &DMatrix<f64>, response_index: usize) -> Result<Self> {
        let d = values.ncols();
        let columns = (0..d).map(|j| values.column(j).iter().cloned().collect()).collect();
        let observed = vec![vec![true; values.nrows()]; d];
        Self::from_columns(default_names(d), columns, observed, response_index)
    }

    pub fn from_columns(
        names: Vec<String>,
        columns: Vec<Vec<f64>>,
        observed: Vec<Vec<bool>>,
        response_index: usize,
    ) -> Result<Self> {
        let d = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        if observed.len() != d
            || names.len() != d
            || columns.iter().any(|c| c.len() != n)
            || observed.iter().any(|c| c.len() != n)
        {
            return Err(Error::ShapeMismatch {
                values: (n, d),
                mask: (observed.first().map_or(0, Vec::len), observed.len()),
            });
        }
        if response_index >= d {
            return Err(Error::InvalidResponse(response_index));
        }
        Ok(Self {
            names,
            columns,
            observed,
            response_index,
        })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_cols() {
            return Err(Error::DimensionMismatch(format!(
                "{} names for {} columns",
                names.len(),
                self.n_cols()
            )));
        }
        self.names = names;
        Ok(self)
    }

    /// Replaces the mask, keeping values. `observed[j][i]` is column-major.
    pub fn with_mask(&self, observed: Vec<Vec<bool>>) -> Result<Self> {
        Self::from_columns(
            self.names.clone(),
            self.columns.clone(),
            observed,
            self.response_index,
        )
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    /// Number of predictors.
    pub fn p(&self) -> usize {
        self.n_cols().saturating_sub(1)
    }

    pub fn response_index(&self) -> usize {
        self.response_index
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.columns[col][row]
    }

    pub fn is_observed(&self, row: usize, col: usize) -> bool {
        self.observed[col][row]
    }

    pub fn column(&self, col: usize) -> &[f64] {
        &self.columns[col]
    }

    pub fn observed_column(&self, col: usize) -> &[bool] {
        &self.observed[col]
    }

    /// Original column indices in model order: predictors, then response.
    pub fn model_order(&self) -> Vec<usize> {
        (0..self.n_cols())
            .filter(|&j| j != self.response_index)
            .chain(std::iter::once(self.response_index))
            .collect()
    }

    /// Names in model order.
    pub fn model_names(&self) -> Vec<String> {
        self.model_order().into_iter().map(|j| self.names[j].clone()).collect()
    }

    pub fn is_complete_row(&self, row: usize) -> bool {
        self.observed.iter().all(|c| c[row])
    }

    pub fn complete_rows(&self) -> Vec<usize> {
        (0..self.n_rows()).filter(|&i| self.is_complete_row(i)).collect()
    }

    pub fn missing_count(&self) -> usize {
        self.observed.iter().map(|c| c.iter().filter(|o| !**o).count()).sum()
    }

    /// Dataset with rows reordered so that new row `i` is old row `order[i]`.
    pub fn permute_rows(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.n_rows() {
            return Err(Error::DimensionMismatch("row permutation length".into()));
        }
        let columns = self.columns.iter().map(|c| order.iter().map(|&i| c[i]).collect()).collect();
        let observed = self.observed.iter().map(|c| order.iter().map(|&i| c[i]).collect()).collect();
        Self::from_columns(self.names.clone(), columns, observed, self.response_index)
    }

    /// Observed-column bitmask of a row, bit `k` meaning model-order column `k`.
    pub fn row_pattern(&self, row: usize) -> u64 {
        self.model_order()
            .iter()
            .enumerate()
            .filter(|(_, &j)| self.observed[j][row])
            .fold(0u64, |acc, (k, _)| acc | (1 << k))
    }
}

fn default_names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("Z{}", j + 1)).collect()
}

/// Population (or plug-in) second-moment model of `Z = (X_1..X_p, Y)`.
///
/// `sigma` is stored in model order (response last). `precision_x` holds the
/// entries `r_jk` of the inverse predictor covariance, which is what the
/// single-coefficient variance formulas use.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    mean: DVector<f64>,
    sigma: DMatrix<f64>,
    precision_x: DMatrix<f64>,
    beta: DVector<f64>,
    resid_var: f64,
    kappa: f64,
}

impl CovarianceModel {
    /// Partitions a full covariance into regression quantities.
    /// `response_index` is moved to the last position.
    pub fn partition(sigma: &DMatrix<f64>, response_index: usize) -> Result<Self> {
        let d = sigma.nrows();
        if !sigma.is_square() || d < 2 {
            return Err(Error::DimensionMismatch(format!(
                "covariance must be square with at least 2 columns, got {}x{}",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        if response_index >= d {
            return Err(Error::InvalidResponse(response_index));
        }
        if !linalg::is_symmetric(sigma, 1e-12) {
            return Err(Error::NotSymmetric);
        }
        linalg::cholesky_checked(sigma)?;
        let order: Vec<usize> = (0..d)
            .filter(|&j| j != response_index)
            .chain(std::iter::once(response_index))
            .collect();
        let sigma = linalg::permute_sym(sigma, &order);
        let p = d - 1;
        let sigma_x = sigma.view((0, 0), (p, p)).into_owned();
        let sigma_xy: DVector<f64> = sigma.view((0, p), (p, 1)).column(0).into_owned();
        let precision_x = linalg::inverse(&sigma_x)?;
        let beta = &precision_x * &sigma_xy;
        let resid_var = sigma[(p, p)] - sigma_xy.dot(&beta);
        Ok(Self {
            mean: DVector::zeros(d),
            sigma,
            precision_x,
            beta,
            resid_var,
            kappa: 0.0,
        })
    }

    /// Builds the joint covariance from `(Sigma_x, beta, sigma^2)`.
    pub fn from_parts(sigma_x: &DMatrix<f64>, beta: &DVector<f64>, resid_var: f64) -> Result<Self> {
        let p = sigma_x.nrows();
        if !sigma_x.is_square() || beta.len() != p || p == 0 {
            return Err(Error::DimensionMismatch(format!(
                "Sigma_x {}x{} with beta of length {}",
                sigma_x.nrows(),
                sigma_x.ncols(),
                beta.len()
            )));
        }
        if !(resid_var > 0.0) {
            return Err(Error::InvalidCovariance(format!(
                "residual variance must be positive, got {resid_var}"
            )));
        }
        let sigma_xy = sigma_x * beta;
        let mut sigma = DMatrix::zeros(p + 1, p + 1);
        sigma.view_mut((0, 0), (p, p)).copy_from(sigma_x);
        for j in 0..p {
            sigma[(j, p)] = sigma_xy[j];
            sigma[(p, j)] = sigma_xy[j];
        }
        sigma[(p, p)] = beta.dot(&sigma_xy) + resid_var;
        Self::partition(&sigma, p)
    }

    pub fn with_kappa(mut self, kappa: f64) -> Result<Self> {
        if !(kappa > -0.5) {
            return Err(Error::InvalidKappa(kappa));
        }
        self.kappa = kappa;
        Ok(self)
    }

    pub fn with_mean(mut self, mean: DVector<f64>) -> Result<Self> {
        if mean.len() != self.dim() {
            return Err(Error::DimensionMismatch("mean length".into()));
        }
        self.mean = mean;
        Ok(self)
    }

    /// Number of predictors.
    pub fn p(&self) -> usize {
        self.beta.len()
    }

    /// Dimension of `Z`, i.e. `p + 1`.
    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn sigma_x(&self) -> DMatrix<f64> {
        let p = self.p();
        self.sigma.view((0, 0), (p, p)).into_owned()
    }

    pub fn sigma_xy(&self) -> DVector<f64> {
        let p = self.p();
        self.sigma.view((0, p), (p, 1)).column(0).into_owned()
    }

    pub fn sigma_y(&self) -> f64 {
        let p = self.p();
        self.sigma[(p, p)]
    }

    /// `sigma_jk` in model order.
    pub fn cov(&self, j: usize, k: usize) -> f64 {
        self.sigma[(j, k)]
    }

    pub fn precision_x(&self) -> &DMatrix<f64> {
        &self.precision_x
    }

    /// Full precision matrix `Sigma^{-1}`.
    pub fn precision(&self) -> DMatrix<f64> {
        linalg::inverse(&self.sigma).expect("sigma was checked positive definite")
    }

    pub fn beta(&self) -> &DVector<f64> {
        &self.beta
    }

    pub fn resid_var(&self) -> f64 {
        self.resid_var
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Reorders the predictors so that new predictor `i` is old predictor
    /// `order[i]`. The response stays last.
    pub fn permute_predictors(&self, order: &[usize]) -> Result<Self> {
        let p = self.p();
        let mut seen = vec![false; p];
        if order.len() != p || order.iter().any(|&j| j >= p || std::mem::replace(&mut seen[j], true)) {
            return Err(Error::DimensionMismatch(format!("{order:?} is not a permutation of 0..{p}")));
        }
        let full: Vec<usize> = order.iter().cloned().chain(std::iter::once(p)).collect();
        let sigma = linalg::permute_sym(&self.sigma, &full);
        let mean = DVector::from_iterator(full.len(), full.iter().map(|&j| self.mean[j]));
        Self::partition(&sigma, p)?.with_kappa(self.kappa)?.with_mean(mean)
    }
}

/// Observation proportions for every set of up to four columns, plus the
/// complete-case proportion.
///
/// Indices refer to model-order columns. Lookups sort and deduplicate the
/// indices first, so `q(&[j, k]) == q(&[k, j])` and `q(&[j, j, k]) == q(&[j, k])`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProportionSet {
    dim: usize,
    table: HashMap<u64, f64>,
    complete: f64,
}

impl ProportionSet {
    /// Proportions implied by a distribution over row observation patterns.
    /// Each entry is `(bitmask of observed model-order columns, probability)`.
    pub fn from_pattern_distribution(dim: usize, patterns: &[(u64, f64)]) -> Result<Self> {
        if dim == 0 || dim > 63 {
            return Err(Error::DimensionMismatch(format!("unsupported dimension {dim}")));
        }
        let total: f64 = patterns.iter().map(|(_, w)| *w).sum();
        if patterns.iter().any(|(_, w)| *w < 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidPattern(format!(
                "pattern probabilities must be nonnegative and sum to 1 (sum = {total})"
            )));
        }
        let full = (1u64 << dim) - 1;
        let mut table = HashMap::new();
        for subset in subsets_up_to_four(dim) {
            let q = patterns
                .iter()
                .filter(|(m, _)| m & subset == subset)
                .map(|(_, w)| *w)
                .sum::<f64>();
            table.insert(subset, q.min(1.0));
        }
        let complete = patterns
            .iter()
            .filter(|(m, _)| m & full == full)
            .map(|(_, w)| *w)
            .sum::<f64>()
            .min(1.0);
        Ok(Self { dim, table, complete })
    }

    /// Every column observed independently with its own probability.
    pub fn independent(q: &[f64]) -> Result<Self> {
        if q.iter().any(|v| !(*v > 0.0 && *v <= 1.0)) {
            return Err(Error::InvalidPattern(format!("proportions must lie in (0, 1]: {q:?}")));
        }
        let dim = q.len();
        let mut table = HashMap::new();
        for subset in subsets_up_to_four(dim) {
            let v = (0..dim).filter(|j| subset >> j & 1 == 1).map(|j| q[j]).product();
            table.insert(subset, v);
        }
        let complete = q.iter().product();
        Ok(Self { dim, table, complete })
    }

    /// No missing data at all.
    pub fn fully_observed(dim: usize) -> Self {
        Self::independent(&vec![1.0; dim]).expect("unit proportions are valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Proportion of rows observing every column in `cols`. The empty set
    /// gives 1. Panics for more than four distinct columns or out-of-range
    /// indices.
    pub fn q(&self, cols: &[usize]) -> f64 {
        let mask = cols.iter().fold(0u64, |m, &j| {
            assert!(j < self.dim, "column {j} out of range");
            m | (1 << j)
        });
        if mask == 0 {
            return 1.0;
        }
        *self
            .table
            .get(&mask)
            .unwrap_or_else(|| panic!("proportions are tabulated for at most four columns, got {cols:?}"))
    }

    pub fn q_complete(&self) -> f64 {
        self.complete
    }

    /// Column sets (up to size four) whose proportion is zero.
    pub fn zero_sets(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self
            .table
            .iter()
            .filter(|(_, v)| **v <= 0.0)
            .map(|(m, _)| (0..self.dim).filter(|j| m >> j & 1 == 1).collect())
            .collect();
        out.sort();
        out
    }

    /// Zero-proportion column pairs (including singletons as `(j, j)`).
    pub fn zero_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for j in 0..self.dim {
            for k in j..self.dim {
                if self.q(&[j, k]) <= 0.0 {
                    out.push((j, k));
                }
            }
        }
        out
    }

    /// Relabels columns so that new column `i` is old column `order[i]`.
    pub fn permute(&self, order: &[usize]) -> Self {
        let remap = |m: u64| {
            order
                .iter()
                .enumerate()
                .filter(|(_, &old)| m >> old & 1 == 1)
                .fold(0u64, |acc, (new, _)| acc | (1 << new))
        };
        let table = self.table.iter().map(|(m, v)| (remap(*m), *v)).collect();
        Self {
            dim: self.dim,
            table,
            complete: self.complete,
        }
    }
}

fn subsets_up_to_four(dim: usize) -> Vec<u64> {
    let mut out = Vec::new();
    for a in 0..dim {
        out.push(1 << a);
        for b in (a + 1)..dim {
            out.push(1 << a | 1 << b);
            for c in (b + 1)..dim {
                out.push(1 << a | 1 << b | 1 << c);
                for d in (c + 1)..dim {
                    out.push(1 << a | 1 << b | 1 << c | 1 << d);
                }
            }
        }
    }
    out
}

/// Empirical observation proportions of a dataset, in model order.
pub fn observation_proportions(dataset: &Dataset) -> Result<ProportionSet> {
    let n = dataset.n_rows();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut counts: HashMap<u64, usize> = HashMap::new();
    for i in 0..n {
        *counts.entry(dataset.row_pattern(i)).or_default() += 1;
    }
    let mut patterns: Vec<(u64, f64)> = counts
        .into_iter()
        .map(|(m, c)| (m, c as f64 / n as f64))
        .collect();
    patterns.sort_by_key(|(m, _)| *m);
    // Renormalize to absorb rounding in the float sum.
    let total: f64 = patterns.iter().map(|(_, w)| w).sum();
    for (_, w) in &mut patterns {
        *w /= total;
    }
    ProportionSet::from_pattern_distribution(dataset.n_cols(), &patterns)
}

/// Partitions `sigma` around the response column; see [`CovarianceModel::partition`].
pub fn partition_model(sigma: &DMatrix<f64>, response_index: usize) -> Result<CovarianceModel> {
    CovarianceModel::partition(sigma, response_index)
}
