//! Asymptotic covariance of the CC and AC coefficient estimators.
//!
//! The sample covariance is half-vectorized over the upper-triangular block of
//! its first `p` rows (the `(Y, Y)` entry is not needed by the coefficient
//! map), giving `(p^2 + 3p) / 2` coordinates. Phi, Delta and Q all share the
//! ordering of [`HalfVecIndex`].
//!
//! With `n` rows, `q~` the complete-case proportion and `∘` the Hadamard
//! product:
//!
//! ```text
//! V_CC = Δ Φ Δᵀ / (n q~)
//! V_AC = Δ (Φ ∘ Q) Δᵀ / n,      Q_(jk)(mn) = q_jkmn / (q_jk q_mn)
//! V_D  = V_CC - V_AC
//! ```

use nalgebra::{DMatrix, DVector};

use crate::data::{CovarianceModel, Dataset, ProportionSet};
use crate::error::{Error, Result};
use crate::estimators::Method;

/// Bijection between covariance positions `(j, k)`, `j <= k`, `j < p`, and
/// flat indices, row-major: `(0,0), (0,1), .., (0,p), (1,1), .., (p-1,p)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HalfVecIndex {
    p: usize,
    pairs: Vec<(usize, usize)>,
    flat: Vec<Option<usize>>,
}

impl HalfVecIndex {
    pub fn new(p: usize) -> Self {
        let d = p + 1;
        let mut pairs = Vec::with_capacity(p * (p + 3) / 2);
        let mut flat = vec![None; d * d];
        for j in 0..p {
            for k in j..d {
                flat[j * d + k] = Some(pairs.len());
                flat[k * d + j] = Some(pairs.len());
                pairs.push((j, k));
            }
        }
        Self { p, pairs, flat }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pair(&self, idx: usize) -> (usize, usize) {
        self.pairs[idx]
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Flat index of `(j, k)` in either order; `None` for `(p, p)`.
    pub fn index(&self, j: usize, k: usize) -> Option<usize> {
        let d = self.p + 1;
        if j >= d || k >= d {
            return None;
        }
        self.flat[j * d + k]
    }
}

fn build_phi(index: &HalfVecIndex, entry: impl Fn(usize, usize, usize, usize) -> f64) -> DMatrix<f64> {
    let m = index.len();
    let mut phi = DMatrix::zeros(m, m);
    for a in 0..m {
        let (j, k) = index.pair(a);
        for b in a..m {
            let (u, v) = index.pair(b);
            let value = entry(j, k, u, v);
            phi[(a, b)] = value;
            phi[(b, a)] = value;
        }
    }
    phi
}

/// Phi under an elliptical law with kurtosis parameter `kappa`:
/// `(1+κ)(σ_jk σ_mn + σ_jm σ_kn + σ_jn σ_km) - σ_jk σ_mn`.
pub fn phi_elliptical(model: &CovarianceModel) -> Result<DMatrix<f64>> {
    let kappa = model.kappa();
    if !(kappa > -0.5) {
        return Err(Error::InvalidKappa(kappa));
    }
    let s = model.sigma();
    let index = HalfVecIndex::new(model.p());
    Ok(build_phi(&index, |j, k, m, n| {
        (1.0 + kappa) * (s[(j, k)] * s[(m, n)] + s[(j, m)] * s[(k, n)] + s[(j, n)] * s[(k, m)])
            - s[(j, k)] * s[(m, n)]
    }))
}

/// Plug-in Phi from sample central moments (divisor `n`) over the complete
/// rows of `dataset`, in model order.
pub fn phi_empirical(dataset: &Dataset) -> Result<DMatrix<f64>> {
    let rows = dataset.complete_rows();
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let order = dataset.model_order();
    let n = rows.len() as f64;
    let centered: Vec<Vec<f64>> = order
        .iter()
        .map(|&c| {
            let col = dataset.column(c);
            let mean = rows.iter().map(|&i| col[i]).sum::<f64>() / n;
            rows.iter().map(|&i| col[i] - mean).collect()
        })
        .collect();
    let d = order.len();
    let mut s = DMatrix::zeros(d, d);
    for j in 0..d {
        for k in j..d {
            let v = centered[j].iter().zip(&centered[k]).map(|(a, b)| a * b).sum::<f64>() / n;
            s[(j, k)] = v;
            s[(k, j)] = v;
        }
    }
    let index = HalfVecIndex::new(d - 1);
    Ok(build_phi(&index, |j, k, m, l| {
        let m4 = (0..rows.len())
            .map(|i| centered[j][i] * centered[k][i] * centered[m][i] * centered[l][i])
            .sum::<f64>()
            / n;
        m4 - s[(j, k)] * s[(m, l)]
    }))
}

/// Jacobian of `beta(S) = S_x^{-1} S_xy` at `S = Sigma`, one column per
/// half-vectorized coordinate.
pub fn delta_matrix(model: &CovarianceModel) -> Result<DMatrix<f64>> {
    let p = model.p();
    let r = model.precision_x();
    let beta = model.beta();
    let index = HalfVecIndex::new(p);
    let mut delta = DMatrix::zeros(p, index.len());
    for (a, &(j, k)) in index.pairs().iter().enumerate() {
        for row in 0..p {
            delta[(row, a)] = if k == p {
                r[(row, j)]
            } else if j == k {
                -r[(row, j)] * beta[j]
            } else {
                -r[(row, j)] * beta[k] - r[(row, k)] * beta[j]
            };
        }
    }
    Ok(delta)
}

/// Q with entries `q_jkmn / (q_jk q_mn)`; repeated indices collapse to the
/// distinct column set.
pub fn q_matrix(props: &ProportionSet) -> Result<DMatrix<f64>> {
    let p = props.dim() - 1;
    let index = HalfVecIndex::new(p);
    for &(j, k) in index.pairs() {
        if props.q(&[j, k]) <= 0.0 {
            return Err(Error::ZeroProportion(vec![j, k]));
        }
    }
    Ok(build_phi(&index, |j, k, m, n| {
        props.q(&[j, k, m, n]) / (props.q(&[j, k]) * props.q(&[m, n]))
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticReport {
    pub phi: DMatrix<f64>,
    pub delta: DMatrix<f64>,
    pub q_matrix: DMatrix<f64>,
    pub v_cc: DMatrix<f64>,
    pub v_ac: DMatrix<f64>,
    pub v_d: DMatrix<f64>,
    pub n: f64,
}

impl AsymptoticReport {
    pub fn variance(&self, method: Method, target: usize) -> f64 {
        match method {
            Method::Cc => self.v_cc[(target, target)],
            Method::Ac => self.v_ac[(target, target)],
        }
    }
}

fn check_dims(model: &CovarianceModel, props: &ProportionSet) -> Result<()> {
    if props.dim() != model.dim() {
        return Err(Error::DimensionMismatch(format!(
            "proportions cover {} columns, model has {}",
            props.dim(),
            model.dim()
        )));
    }
    Ok(())
}

/// V_CC, V_AC and V_D under the elliptical Phi implied by the model.
pub fn v_matrices(model: &CovarianceModel, props: &ProportionSet, n: f64) -> Result<AsymptoticReport> {
    let phi = phi_elliptical(model)?;
    v_matrices_with_phi(model, phi, props, n)
}

/// V_CC, V_AC and V_D for an arbitrary (e.g. empirical) Phi.
pub fn v_matrices_with_phi(
    model: &CovarianceModel,
    phi: DMatrix<f64>,
    props: &ProportionSet,
    n: f64,
) -> Result<AsymptoticReport> {
    check_dims(model, props)?;
    let q_complete = props.q_complete();
    if !(q_complete > 0.0) {
        return Err(Error::ZeroProportion((0..props.dim()).collect()));
    }
    let delta = delta_matrix(model)?;
    if phi.nrows() != delta.ncols() || !phi.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "Phi is {}x{}, expected {}x{}",
            phi.nrows(),
            phi.ncols(),
            delta.ncols(),
            delta.ncols()
        )));
    }
    let q = q_matrix(props)?;
    let phi_q = phi.component_mul(&q);
    let sym = |m: DMatrix<f64>| (&m + m.transpose()) * 0.5;
    let v_cc = sym(&delta * &phi * delta.transpose() / (n * q_complete));
    let v_ac = sym(&delta * &phi_q * delta.transpose() / n);
    let v_d = &v_cc - &v_ac;
    Ok(AsymptoticReport {
        phi,
        delta,
        q_matrix: q,
        v_cc,
        v_ac,
        v_d,
        n,
    })
}

/// Pieces of the scalar AC variance of one coefficient:
/// `n V_AC = (1+κ) (Σ_g c_g β_g² + Σ_{g<h} d_gh β_g β_h + constant)`.
///
/// Indices are relative to the permuted model in which the target
/// coefficient is first.
#[derive(Debug, Clone, PartialEq)]
pub struct AcVarianceTerms {
    pub c: DVector<f64>,
    /// Upper triangle holds `d_gh` for `g < h`; the rest is zero.
    pub d: DMatrix<f64>,
    pub constant: f64,
    pub kappa: f64,
    /// Beta of the permuted model.
    pub beta: DVector<f64>,
}

impl AcVarianceTerms {
    /// `n V_AC` for the stored beta.
    pub fn scaled_variance(&self) -> f64 {
        self.scaled_variance_at(&self.beta)
    }

    /// `n V_AC` with the coefficients replaced by `beta` (the covariance of
    /// the predictors and the residual variance held fixed).
    pub fn scaled_variance_at(&self, beta: &DVector<f64>) -> f64 {
        let p = beta.len();
        let mut total = self.constant;
        for g in 0..p {
            total += self.c[g] * beta[g] * beta[g];
            for h in (g + 1)..p {
                total += self.d[(g, h)] * beta[g] * beta[h];
            }
        }
        (1.0 + self.kappa) * total
    }
}

/// Target moved to position 0, other predictors keep their relative order.
fn target_first(p: usize, target: usize) -> Vec<usize> {
    std::iter::once(target).chain((0..p).filter(|&j| j != target)).collect()
}

fn permuted_inputs(
    model: &CovarianceModel,
    props: &ProportionSet,
    target: usize,
) -> Result<(CovarianceModel, ProportionSet)> {
    check_dims(model, props)?;
    let p = model.p();
    if target >= p {
        return Err(Error::InvalidTarget { index: target, p });
    }
    if target == 0 {
        return Ok((model.clone(), props.clone()));
    }
    let order = target_first(p, target);
    let full: Vec<usize> = order.iter().cloned().chain(std::iter::once(p)).collect();
    Ok((model.permute_predictors(&order)?, props.permute(&full)))
}

/// Closed-form coefficients of the AC variance of `beta_target` under an
/// elliptical law.
///
/// Writing `u_j = s_jy - Σ_k β_k s_jk` (each entry on its own available
/// rows), `beta_1 - β_1 ≈ Σ_j r_1j u_j`. The response covariance splits into
/// a residual part, which gives the constant, and the differences
/// `s_jk[rows of (j,y)] - s_jk[rows of (j,k)]`, which give `c_g` and `d_gh`.
/// The response may itself be partially missing.
pub fn ac_variance_terms(
    model: &CovarianceModel,
    props: &ProportionSet,
    target: usize,
) -> Result<AcVarianceTerms> {
    let (model, props) = permuted_inputs(model, props, target)?;
    let p = model.p();
    let y = p;
    let kappa = model.kappa();
    if !(kappa > -0.5) {
        return Err(Error::InvalidKappa(kappa));
    }
    for j in 0..=p {
        for k in j..=p {
            if props.q(&[j, k]) <= 0.0 {
                return Err(Error::ZeroProportion(vec![j, k]));
            }
        }
    }
    let s = |a: usize, b: usize| model.cov(a, b);
    let r1: Vec<f64> = (0..p).map(|j| model.precision_x()[(0, j)]).collect();
    let kk = kappa / (1.0 + kappa);
    let q = |cols: &[usize]| props.q(cols);

    // n Cov(s_ab[A], s_cd[B]) ∝ q_{A∪B} / (q_A q_B); the "u_j" sample for the
    // (j, y) entry is the rows observing {j, y}.
    let weight = |j: usize, k: usize, m: usize, h: usize| {
        q(&[j, y, m]) / (q(&[j, y]) * q(&[m, y])) - q(&[j, y, m, h]) / (q(&[j, y]) * q(&[m, h]))
            - q(&[j, k, m, y]) / (q(&[j, k]) * q(&[m, y]))
            + q(&[j, k, m, h]) / (q(&[j, k]) * q(&[m, h]))
    };
    let phi_scaled = |j: usize, k: usize, m: usize, h: usize| {
        s(j, m) * s(k, h) + s(j, h) * s(k, m) + kk * s(j, k) * s(m, h)
    };

    let mut raw = DMatrix::zeros(p, p);
    for k in 0..p {
        for h in 0..p {
            let mut total = 0.0;
            for j in 0..p {
                if r1[j] == 0.0 {
                    continue;
                }
                for m in 0..p {
                    if r1[m] == 0.0 {
                        continue;
                    }
                    total += r1[j] * r1[m] * phi_scaled(j, k, m, h) * weight(j, k, m, h);
                }
            }
            raw[(k, h)] = total;
        }
    }
    let c = DVector::from_fn(p, |g, _| raw[(g, g)]);
    let mut d = DMatrix::zeros(p, p);
    for g in 0..p {
        for h in (g + 1)..p {
            d[(g, h)] = raw[(g, h)] + raw[(h, g)];
        }
    }
    let mut constant = 0.0;
    for j in 0..p {
        for m in 0..p {
            constant += r1[j] * r1[m] * s(j, m) * q(&[j, m, y]) / (q(&[j, y]) * q(&[m, y]));
        }
    }
    constant *= model.resid_var();
    Ok(AcVarianceTerms {
        c,
        d,
        constant,
        kappa,
        beta: model.beta().clone(),
    })
}

/// Scalar asymptotic variance of one coefficient under an elliptical law.
///
/// CC: `(1+κ) r_11 σ² / (n q~)`. AC: see [`ac_variance_terms`].
pub fn v_single(
    model: &CovarianceModel,
    props: &ProportionSet,
    n: f64,
    method: Method,
    target: usize,
) -> Result<f64> {
    match method {
        Method::Cc => {
            check_dims(model, props)?;
            let p = model.p();
            if target >= p {
                return Err(Error::InvalidTarget { index: target, p });
            }
            let kappa = model.kappa();
            if !(kappa > -0.5) {
                return Err(Error::InvalidKappa(kappa));
            }
            let q_complete = props.q_complete();
            if !(q_complete > 0.0) {
                return Err(Error::ZeroProportion((0..props.dim()).collect()));
            }
            let r_tt = model.precision_x()[(target, target)];
            Ok((1.0 + kappa) * r_tt * model.resid_var() / (n * q_complete))
        }
        Method::Ac => Ok(ac_variance_terms(model, props, target)?.scaled_variance() / n),
    }
}
