//! Which deletion method to prefer for one coefficient, given the covariance
//! structure, the coefficients and the missing pattern.
//!
//! Two nested block patterns get closed-form rules. In both the response is
//! always observed and `X_1` is the coefficient of interest:
//!
//! * pattern A: rows observing `X_2..X_p` are a subset of those observing
//!   `X_1` (`q_1 ≥ q_-1`);
//! * pattern B: the reverse (`q_1 ≤ q_-1`).
//!
//! Anything else goes through the full matrix computation.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::asymptotics::v_matrices;
use crate::data::{CovarianceModel, ProportionSet};
use crate::error::{Error, Result};

/// Relative tolerance for declaring a tie.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PatternKind {
    #[serde(rename = "A")]
    A,
    #[serde(rename = "B")]
    B,
    #[serde(rename = "GENERAL")]
    General,
}

impl FromStr for PatternKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a" => Ok(Self::A),
            "b" => Ok(Self::B),
            "general" => Ok(Self::General),
            other => Err(Error::InvalidPattern(format!("unknown pattern {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternSpec {
    pub kind: PatternKind,
    pub q1: f64,
    pub q_minus1: f64,
    /// Only for `General`.
    pub props: Option<ProportionSet>,
}

fn check_unit(name: &str, q: f64) -> Result<()> {
    if q > 0.0 && q <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidPattern(format!("{name} must lie in (0, 1], got {q}")))
    }
}

impl PatternSpec {
    pub fn pattern_a(q1: f64, q_minus1: f64) -> Result<Self> {
        check_unit("q1", q1)?;
        check_unit("q_minus1", q_minus1)?;
        if q1 < q_minus1 {
            return Err(Error::InvalidPattern(format!(
                "pattern A needs q1 >= q_minus1, got {q1} < {q_minus1}"
            )));
        }
        Ok(Self {
            kind: PatternKind::A,
            q1,
            q_minus1,
            props: None,
        })
    }

    pub fn pattern_b(q1: f64, q_minus1: f64) -> Result<Self> {
        check_unit("q1", q1)?;
        check_unit("q_minus1", q_minus1)?;
        if q1 > q_minus1 {
            return Err(Error::InvalidPattern(format!(
                "pattern B needs q1 <= q_minus1, got {q1} > {q_minus1}"
            )));
        }
        Ok(Self {
            kind: PatternKind::B,
            q1,
            q_minus1,
            props: None,
        })
    }

    pub fn general(props: ProportionSet) -> Self {
        Self {
            kind: PatternKind::General,
            q1: f64::NAN,
            q_minus1: f64::NAN,
            props: Some(props),
        }
    }

    /// Row-pattern distribution over `dim` model-order columns (response
    /// last) for the nested patterns.
    pub fn pattern_distribution(&self, dim: usize) -> Result<Vec<(u64, f64)>> {
        if dim < 3 {
            return Err(Error::InvalidPattern(format!(
                "nested patterns need at least two predictors, got {} columns",
                dim
            )));
        }
        let all = (1u64 << dim) - 1;
        let y = 1u64 << (dim - 1);
        let first = 1u64;
        let rest = all & !first;
        match self.kind {
            PatternKind::A => Ok(vec![
                (all, self.q_minus1),
                (first | y, self.q1 - self.q_minus1),
                (y, 1.0 - self.q1),
            ]),
            PatternKind::B => Ok(vec![
                (all, self.q1),
                (rest, self.q_minus1 - self.q1),
                (y, 1.0 - self.q_minus1),
            ]),
            PatternKind::General => Err(Error::InvalidPattern(
                "general patterns carry explicit proportions".into(),
            )),
        }
    }

    pub fn proportions(&self, dim: usize) -> Result<ProportionSet> {
        match (&self.kind, &self.props) {
            (PatternKind::General, Some(props)) => {
                if props.dim() != dim {
                    return Err(Error::DimensionMismatch(format!(
                        "pattern covers {} columns, model has {dim}",
                        props.dim()
                    )));
                }
                Ok(props.clone())
            }
            (PatternKind::General, None) => {
                Err(Error::InvalidPattern("general pattern without proportions".into()))
            }
            _ => ProportionSet::from_pattern_distribution(dim, &self.pattern_distribution(dim)?),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "AC")]
    Ac,
    #[serde(rename = "CC")]
    Cc,
    #[serde(rename = "TIE")]
    Tie,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Ac => "AC",
            Verdict::Cc => "CC",
            Verdict::Tie => "TIE",
        })
    }
}

/// Facts about the configuration that decided or explain the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    NoMissingData,
    EqualProportions,
    /// Predictors mutually uncorrelated: AC wins iff `Σ σ_g² β_g² < σ²`.
    IndependentPredictors,
    /// p = 2 and `σ_1² σ_2² < 2 σ_12²`: CC wins for every β_2.
    StrongCorrelation,
    /// Predictors other than `X_1` are exchangeable; the AC region is an
    /// ellipsoid.
    ExchangeablePredictors,
    /// Pattern B: CC is never worse.
    CcNeverWorse,
    /// Pattern B with `X_1` uncorrelated with the others: exact tie.
    FirstPredictorUncorrelated,
    /// The verdict came from the full matrix computation.
    MatrixComputation,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Geometry {
    /// Length of the β_2 interval where AC wins (p = 2).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// Semi-axis along (1, 1) of the (β_2, β_3) ellipse where AC wins.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    /// Semi-axis along (1, -1).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub verdict: Verdict,
    /// Sign decides the verdict. `n V_D` for the nested patterns, `V_D` from
    /// the matrix computation otherwise.
    pub decisive_value: f64,
    pub target: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_cc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_ac: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geometry: Option<Geometry>,
    pub conditions: Vec<Condition>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub breakpoints: Option<Vec<Breakpoints>>,
}

fn verdict_for(value: f64, scale: f64) -> Verdict {
    if value.abs() <= TIE_TOL * scale {
        Verdict::Tie
    } else if value > 0.0 {
        Verdict::Ac
    } else {
        Verdict::Cc
    }
}

/// Verdict from the two variances directly (smaller wins).
pub fn verdict_from_variances(v_cc: f64, v_ac: f64) -> Verdict {
    verdict_for(v_cc - v_ac, v_cc.abs().max(v_ac.abs()))
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa > -0.5 {
        Ok(())
    } else {
        Err(Error::InvalidKappa(kappa))
    }
}

fn check_nested(model: &CovarianceModel, q1: f64, q_minus1: f64) -> Result<()> {
    check_unit("q1", q1)?;
    check_unit("q_minus1", q_minus1)?;
    if model.p() < 2 {
        return Err(Error::InvalidPattern("nested patterns need p >= 2".into()));
    }
    check_kappa(model.kappa())
}

/// `Σ_{g,h≥2} β_g β_h {(1+2κ) σ_1g σ_1h + (1+κ) σ_1² σ_gh}`, weights `w`
/// applied to both indices (β for pattern A, r_1· for pattern B).
fn weighted_quad(model: &CovarianceModel, w: &[f64]) -> f64 {
    let kappa = model.kappa();
    let s11 = model.cov(0, 0);
    let p = model.p();
    let mut total = 0.0;
    for g in 1..p {
        for h in 1..p {
            total += w[g]
                * w[h]
                * ((1.0 + 2.0 * kappa) * model.cov(0, g) * model.cov(0, h)
                    + (1.0 + kappa) * s11 * model.cov(g, h));
        }
    }
    total
}

/// `n V_D` of `β̂_1` under pattern A as a function of `β_2..β_p`.
pub fn f_beta_pattern_a(model: &CovarianceModel, q1: f64, q_minus1: f64) -> Result<f64> {
    check_nested(model, q1, q_minus1)?;
    if q1 < q_minus1 {
        return Err(Error::InvalidPattern(format!(
            "pattern A needs q1 >= q_minus1, got {q1} < {q_minus1}"
        )));
    }
    let kappa = model.kappa();
    let r11 = model.precision_x()[(0, 0)];
    let s11 = model.cov(0, 0);
    let beta: Vec<f64> = model.beta().iter().cloned().collect();
    let factor = 1.0 / q_minus1 - 1.0 / q1;
    let constant = (1.0 + kappa) * (2.0 * r11 - r11 * r11 * s11) * model.resid_var();
    Ok(factor * (constant - r11 * r11 * weighted_quad(model, &beta)))
}

/// `c_1 = Σ_{j,k≥2} r_1j r_1k {(1+2κ) σ_1j σ_1k + (1+κ) σ_1² σ_jk}`.
pub fn c1_pattern_b(model: &CovarianceModel) -> f64 {
    let r1: Vec<f64> = (0..model.p()).map(|j| model.precision_x()[(0, j)]).collect();
    weighted_quad(model, &r1)
}

fn first_uncorrelated(model: &CovarianceModel) -> bool {
    (1..model.p()).all(|j| model.cov(0, j) == 0.0)
}

/// `n V_D` of `β̂_1` under pattern B.
pub fn vd_pattern_b(model: &CovarianceModel, q1: f64, q_minus1: f64) -> Result<f64> {
    check_nested(model, q1, q_minus1)?;
    if q1 > q_minus1 {
        return Err(Error::InvalidPattern(format!(
            "pattern B needs q1 <= q_minus1, got {q1} > {q_minus1}"
        )));
    }
    if first_uncorrelated(model) {
        // r_11 = 1/σ_1² and r_1j = 0: both terms vanish identically.
        return Ok(0.0);
    }
    let kappa = model.kappa();
    let r11 = model.precision_x()[(0, 0)];
    let s11 = model.cov(0, 0);
    let b1 = model.beta()[0];
    let factor = 1.0 / q1 - 1.0 / q_minus1;
    Ok(factor
        * ((1.0 + kappa) * r11 * (1.0 - r11 * s11) * model.resid_var() - c1_pattern_b(model) * b1 * b1))
}

fn n_v_cc_first(model: &CovarianceModel, q_complete: f64) -> f64 {
    (1.0 + model.kappa()) * model.precision_x()[(0, 0)] * model.resid_var() / q_complete
}

pub fn advise_pattern_b(model: &CovarianceModel, q1: f64, q_minus1: f64) -> Result<Recommendation> {
    let value = vd_pattern_b(model, q1, q_minus1)?;
    let n_cc = n_v_cc_first(model, q1);
    let n_ac = n_cc - value;
    let mut conditions = vec![Condition::CcNeverWorse];
    if first_uncorrelated(model) {
        conditions.push(Condition::FirstPredictorUncorrelated);
    }
    if q1 == q_minus1 {
        conditions.push(Condition::EqualProportions);
    }
    Ok(Recommendation {
        verdict: verdict_for(value, n_cc.abs().max(n_ac.abs())),
        decisive_value: value,
        target: 0,
        v_cc: None,
        v_ac: None,
        geometry: None,
        conditions,
        breakpoints: None,
    })
}

fn diagonal_predictors(model: &CovarianceModel) -> bool {
    let p = model.p();
    (0..p).all(|j| (j + 1..p).all(|k| model.cov(j, k) == 0.0))
}

/// Length of the β_2 interval (centred at zero) on which AC beats CC for
/// `β̂_1` under pattern A with two predictors.
pub fn interval_length_c(model: &CovarianceModel) -> Result<f64> {
    if model.p() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "interval length needs p = 2, got {}",
            model.p()
        )));
    }
    let kappa = model.kappa();
    check_kappa(kappa)?;
    let (s1, s2, s12) = (model.cov(0, 0), model.cov(1, 1), model.cov(0, 1));
    c_from_parts(s1, s2, s12, kappa, model.resid_var())
}

fn c_from_parts(s1: f64, s2: f64, s12: f64, kappa: f64, resid_var: f64) -> Result<f64> {
    let mut slack = s1 * s2 - 2.0 * s12 * s12;
    if slack < 0.0 {
        // Rounding at the boundary |ρ| = 1/√2 should give C = 0, not an error.
        if slack < -1e-12 * s1 * s2 {
            return Err(Error::EmptyInterval);
        }
        slack = 0.0;
    }
    let denom = ((1.0 + 2.0 * kappa) / (1.0 + kappa) * s12 * s12 + s1 * s2) * s2;
    Ok((4.0 * slack * resid_var / denom).sqrt())
}

/// `X_1` plus `p - 1` exchangeable predictors: equal variances `σ_2'²`,
/// equal covariances `σ_2'3'` among themselves and `σ_12'` with `X_1`.
///
/// `p` is kept real so that it can be treated as a continuous parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExchangeableModel {
    pub p: f64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub sigma12: f64,
    pub sigma23: f64,
    pub resid_var: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    P,
    Kappa,
    Sigma12,
    Sigma23,
    Sigma2Sq,
    Sigma1Sq,
    ResidVar,
}

impl FromStr for Parameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "p" => Self::P,
            "kappa" => Self::Kappa,
            "sigma12" => Self::Sigma12,
            "sigma23" => Self::Sigma23,
            "sigma2_sq" => Self::Sigma2Sq,
            "sigma1_sq" => Self::Sigma1Sq,
            "resid_var" => Self::ResidVar,
            other => return Err(Error::InvalidPattern(format!("unknown parameter {other:?}"))),
        })
    }
}

impl ExchangeableModel {
    /// `σ_2'² - σ_2'3'`.
    pub fn lambda1(&self) -> f64 {
        self.sigma2_sq - self.sigma23
    }

    /// `σ_2'² + (p-2) σ_2'3'`.
    pub fn lambda2(&self) -> f64 {
        self.sigma2_sq + (self.p - 2.0) * self.sigma23
    }

    /// First diagonal entry of the inverse predictor covariance.
    pub fn r11(&self) -> f64 {
        1.0 / (self.sigma1_sq - (self.p - 1.0) * self.sigma12 * self.sigma12 / self.lambda2())
    }

    pub fn get(&self, param: Parameter) -> f64 {
        match param {
            Parameter::P => self.p,
            Parameter::Kappa => self.kappa,
            Parameter::Sigma12 => self.sigma12,
            Parameter::Sigma23 => self.sigma23,
            Parameter::Sigma2Sq => self.sigma2_sq,
            Parameter::Sigma1Sq => self.sigma1_sq,
            Parameter::ResidVar => self.resid_var,
        }
    }

    pub fn with(mut self, param: Parameter, value: f64) -> Self {
        match param {
            Parameter::P => self.p = value,
            Parameter::Kappa => self.kappa = value,
            Parameter::Sigma12 => self.sigma12 = value,
            Parameter::Sigma23 => self.sigma23 = value,
            Parameter::Sigma2Sq => self.sigma2_sq = value,
            Parameter::Sigma1Sq => self.sigma1_sq = value,
            Parameter::ResidVar => self.resid_var = value,
        }
        self
    }

    fn has_pair_block(&self) -> bool {
        self.p > 2.0
    }

    /// Positive-definite predictor covariance and admissible κ, σ².
    pub fn check_valid(&self) -> Result<()> {
        check_kappa(self.kappa)?;
        if !(self.p >= 2.0) {
            return Err(Error::InvalidCovariance(format!("p must be at least 2, got {}", self.p)));
        }
        if !(self.resid_var > 0.0) {
            return Err(Error::InvalidCovariance("residual variance must be positive".into()));
        }
        if !(self.sigma1_sq > 0.0 && self.sigma2_sq > 0.0) {
            return Err(Error::InvalidCovariance("variances must be positive".into()));
        }
        if self.has_pair_block() && !(self.lambda1() > 0.0) {
            return Err(Error::InvalidCovariance("sigma23 must be below sigma2^2".into()));
        }
        if !(self.lambda2() > 0.0) {
            return Err(Error::InvalidCovariance(
                "sigma2^2 + (p-2) sigma23 must be positive".into(),
            ));
        }
        if !(self.sigma1_sq * self.lambda2() > (self.p - 1.0) * self.sigma12 * self.sigma12) {
            return Err(Error::InvalidCovariance("predictor covariance is not positive definite".into()));
        }
        Ok(())
    }

    /// `(2/r_11 - σ_1²) σ²`: positive iff AC can win anywhere.
    pub fn ellipse_constant(&self) -> f64 {
        (self.sigma1_sq - 2.0 * (self.p - 1.0) * self.sigma12 * self.sigma12 / self.lambda2())
            * self.resid_var
    }

    fn quad_diag(&self) -> f64 {
        let k = (1.0 + 2.0 * self.kappa) / (1.0 + self.kappa);
        k * self.sigma12 * self.sigma12 + self.sigma1_sq * self.sigma2_sq
    }

    fn quad_off(&self) -> f64 {
        let k = (1.0 + 2.0 * self.kappa) / (1.0 + self.kappa);
        k * self.sigma12 * self.sigma12 + self.sigma1_sq * self.sigma23
    }

    /// Full covariance model (response last) with the given coefficients.
    pub fn to_model(&self, beta: &DVector<f64>) -> Result<CovarianceModel> {
        let p = self.p.round() as usize;
        if (self.p - p as f64).abs() > 0.0 || p < 2 {
            return Err(Error::InvalidCovariance(format!("p must be an integer >= 2, got {}", self.p)));
        }
        if beta.len() != p {
            return Err(Error::DimensionMismatch(format!("{} coefficients for p = {p}", beta.len())));
        }
        let sx = DMatrix::from_fn(p, p, |j, k| match (j, k) {
            (0, 0) => self.sigma1_sq,
            (0, _) | (_, 0) => self.sigma12,
            _ if j == k => self.sigma2_sq,
            _ => self.sigma23,
        });
        CovarianceModel::from_parts(&sx, beta, self.resid_var)?.with_kappa(self.kappa)
    }

    /// Recover the exchangeable parameters from a model, if it has that
    /// structure (exact equality).
    pub fn detect(model: &CovarianceModel) -> Option<Self> {
        let p = model.p();
        if p < 2 {
            return None;
        }
        let s12 = model.cov(0, 1);
        let s2 = model.cov(1, 1);
        let s23 = if p > 2 { model.cov(1, 2) } else { 0.0 };
        for j in 1..p {
            if model.cov(0, j) != s12 || model.cov(j, j) != s2 {
                return None;
            }
            for k in (j + 1)..p {
                if model.cov(j, k) != s23 {
                    return None;
                }
            }
        }
        Some(Self {
            p: p as f64,
            sigma1_sq: model.cov(0, 0),
            sigma2_sq: s2,
            sigma12: s12,
            sigma23: s23,
            resid_var: model.resid_var(),
            kappa: model.kappa(),
        })
    }
}

/// Semi-axes of the `(β_2, β_3)` ellipse (other coefficients zero) inside
/// which AC beats CC for `β̂_1` under pattern A.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseAxes {
    /// Along (1, 1).
    pub a: f64,
    /// Along (1, -1).
    pub b: f64,
}

pub fn ellipse_axes(exch: &ExchangeableModel) -> Result<EllipseAxes> {
    if !(exch.p >= 3.0) {
        return Err(Error::DimensionMismatch(format!("ellipse needs p >= 3, got {}", exch.p)));
    }
    exch.check_valid()?;
    let c = exch.ellipse_constant();
    if !(c > 0.0) {
        return Err(Error::DegenerateEllipse);
    }
    let (a, b) = (exch.quad_diag(), exch.quad_off());
    Ok(EllipseAxes {
        a: (c / (a + b)).sqrt(),
        b: (c / (a - b)).sqrt(),
    })
}

/// C for a two-predictor exchangeable description.
pub fn interval_length_c_exch(exch: &ExchangeableModel) -> Result<f64> {
    check_kappa(exch.kappa)?;
    c_from_parts(exch.sigma1_sq, exch.sigma2_sq, exch.sigma12, exch.kappa, exch.resid_var)
}

/// Admissible range of one parameter with the others fixed, plus the points
/// where C, A or B change monotonicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakpoints {
    pub parameter: Parameter,
    pub lower: f64,
    pub upper: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m4: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub con1: Option<f64>,
}

fn real_sqrt(x: f64) -> Option<f64> {
    (x >= 0.0).then(|| x.sqrt())
}

/// Interval `{x : a x > b}` intersected with `(lo, hi)`.
fn linear_gt(a: f64, b: f64, lo: f64, hi: f64) -> (f64, f64) {
    if a > 0.0 {
        (lo.max(b / a), hi)
    } else if a < 0.0 {
        (lo, hi.min(b / a))
    } else if b < 0.0 {
        (lo, hi)
    } else {
        (f64::INFINITY, f64::NEG_INFINITY)
    }
}

fn range_two_predictors(e: &ExchangeableModel, param: Parameter) -> Result<(f64, f64)> {
    let (s1, s2, s12) = (e.sigma1_sq, e.sigma2_sq, e.sigma12);
    Ok(match param {
        Parameter::Kappa => (-0.5, f64::INFINITY),
        Parameter::ResidVar => (0.0, f64::INFINITY),
        Parameter::Sigma12 => {
            let h = (s1 * s2 / 2.0).sqrt();
            (-h, h)
        }
        Parameter::Sigma2Sq => (2.0 * s12 * s12 / s1, f64::INFINITY),
        Parameter::Sigma1Sq => (2.0 * s12 * s12 / s2, f64::INFINITY),
        Parameter::P | Parameter::Sigma23 => {
            return Err(Error::InvalidPattern(format!(
                "{param:?} is not a free parameter with two predictors"
            )))
        }
    })
}

fn range_exchangeable(e: &ExchangeableModel, param: Parameter) -> (f64, f64) {
    let p = e.p;
    let (s1, s2, s12, s23) = (e.sigma1_sq, e.sigma2_sq, e.sigma12, e.sigma23);
    let s12sq = s12 * s12;
    let lam2 = e.lambda2();
    match param {
        Parameter::Kappa => (-0.5, f64::INFINITY),
        Parameter::ResidVar => (0.0, f64::INFINITY),
        Parameter::Sigma12 => {
            let h = (s1 * lam2 / (2.0 * (p - 1.0))).sqrt();
            (-h, h)
        }
        Parameter::Sigma23 => {
            let lo = (-s2 / (p - 2.0)).max((2.0 * (p - 1.0) * s12sq - s1 * s2) / ((p - 2.0) * s1));
            (lo, s2)
        }
        Parameter::Sigma2Sq => {
            let lo = s23
                .max(-(p - 2.0) * s23)
                .max((2.0 * (p - 1.0) * s12sq - (p - 2.0) * s1 * s23) / s1);
            (lo, f64::INFINITY)
        }
        Parameter::Sigma1Sq => (2.0 * (p - 1.0) * s12sq / lam2, f64::INFINITY),
        Parameter::P => {
            // λ_2 > 0: p s23 > 2 s23 - s2.
            let (lo, hi) = linear_gt(s23, 2.0 * s23 - s2, 2.0, f64::INFINITY);
            // σ_1² λ_2 > 2 (p-1) σ_12'².
            linear_gt(
                s1 * s23 - 2.0 * s12sq,
                2.0 * s1 * s23 - s1 * s2 - 2.0 * s12sq,
                lo,
                hi,
            )
        }
    }
}

/// Feasible range of `param` and the monotonicity breakpoints that apply to
/// it: M0 for C against `σ_2²` (p = 2); M1 and M3 for A and B against
/// `σ_2'3'`; M2 (with `con_1`) and M4 for A and B against `σ_2'²`.
///
/// A breakpoint whose closed form takes the square root of a negative number
/// is reported as `None`.
pub fn breakpoints(exch: &ExchangeableModel, param: Parameter) -> Result<Breakpoints> {
    check_kappa(exch.kappa)?;
    let two = exch.p == 2.0;
    let (lower, upper) = if two {
        range_two_predictors(exch, param)?
    } else {
        range_exchangeable(exch, param)
    };
    if !(lower < upper) {
        return Err(Error::InfeasibleConfiguration(format!(
            "no admissible value of {param:?} with the other parameters fixed"
        )));
    }
    let mut out = Breakpoints {
        parameter: param,
        lower,
        upper,
        m0: None,
        m1: None,
        m2: None,
        m3: None,
        m4: None,
        con1: None,
    };
    let p = exch.p;
    let (s1, s2, s12, s23, k) = (exch.sigma1_sq, exch.sigma2_sq, exch.sigma12, exch.sigma23, exch.kappa);
    let s12sq = s12 * s12;
    match (two, param) {
        (true, Parameter::Sigma2Sq) => {
            out.m0 = Some((2.0 + (8.0 - 2.0 / (1.0 + k)).sqrt()) * s12sq / s1);
        }
        (false, Parameter::Sigma23) => {
            let shift = (s1 * s2 - 2.0 * (p - 1.0) * s12sq) / (s1 * (p - 2.0));
            out.m1 = real_sqrt(
                2.0 * s12sq
                    * (p - 1.0)
                    * ((p - 3.0) * s1 * s2
                        + (2.0 * p - 2.0 + (p - 2.0) * (2.0 + 4.0 * k) / (1.0 + k)) * s12sq),
            )
            .map(|r| r / (s1 * (p - 2.0)) - shift);
            out.m3 = real_sqrt(2.0 * s12sq * (2.0 * s12sq - s1 * s2))
                .map(|r| -(p - 1.0) * r / (s1 * (p - 2.0)) - shift);
        }
        (false, Parameter::Sigma2Sq) => {
            let con1 = (2.0 + 2.0 * p - 2.0 / (1.0 + k)) * s12sq + (3.0 - p) * s1 * s23;
            out.con1 = Some(con1);
            out.m2 = real_sqrt(2.0 * s12sq * (p - 1.0) * con1)
                .map(|r| (r + (2.0 * p - 2.0) * s12sq) / s1 + (2.0 - p) * s23);
            out.m4 = real_sqrt(2.0 * s12sq * (2.0 * s12sq - s1 * s23))
                .map(|r| (p - 1.0) / s1 * (r + 2.0 * s12sq) + (2.0 - p) * s23);
        }
        _ => {}
    }
    Ok(out)
}

/// Recommendation for `β̂_target` under any pattern.
///
/// The matrix computation is always run and its variances are reported. For
/// the nested patterns with target 0 the verdict comes from the closed form,
/// which agrees in sign with the matrix route.
pub fn advise(
    model: &CovarianceModel,
    pattern: &PatternSpec,
    n: f64,
    target: usize,
) -> Result<Recommendation> {
    let p = model.p();
    if target >= p {
        return Err(Error::InvalidTarget { index: target, p });
    }
    check_kappa(model.kappa())?;
    let props = pattern.proportions(model.dim())?;
    let report = v_matrices(model, &props, n)?;
    let v_cc = report.v_cc[(target, target)];
    let v_ac = report.v_ac[(target, target)];
    let scale = v_cc.abs().max(v_ac.abs());
    let no_missing = props.q_complete() == 1.0;

    let mut rec = match pattern.kind {
        PatternKind::A if target == 0 && !no_missing => {
            let f = f_beta_pattern_a(model, pattern.q1, pattern.q_minus1)?;
            let mut conditions = Vec::new();
            let mut geometry = Geometry::default();
            if pattern.q1 == pattern.q_minus1 {
                conditions.push(Condition::EqualProportions);
            }
            if diagonal_predictors(model) {
                conditions.push(Condition::IndependentPredictors);
            }
            if p == 2 {
                match interval_length_c(model) {
                    Ok(c) => geometry.c = Some(c),
                    Err(Error::EmptyInterval) => conditions.push(Condition::StrongCorrelation),
                    Err(e) => return Err(e),
                }
            } else if let Some(exch) = ExchangeableModel::detect(model) {
                conditions.push(Condition::ExchangeablePredictors);
                if let Ok(axes) = ellipse_axes(&exch) {
                    geometry.a = Some(axes.a);
                    geometry.b = Some(axes.b);
                }
            }
            let has_geometry = geometry != Geometry::default();
            Recommendation {
                verdict: verdict_for(f, n * scale),
                decisive_value: f,
                target,
                v_cc: None,
                v_ac: None,
                geometry: has_geometry.then_some(geometry),
                conditions,
                breakpoints: None,
            }
        }
        PatternKind::B if target == 0 && !no_missing => {
            let mut rec = advise_pattern_b(model, pattern.q1, pattern.q_minus1)?;
            rec.verdict = verdict_for(rec.decisive_value, n * scale);
            rec
        }
        _ => {
            let vd = report.v_d[(target, target)];
            let mut conditions = vec![Condition::MatrixComputation];
            if no_missing {
                conditions.insert(0, Condition::NoMissingData);
            }
            Recommendation {
                verdict: if no_missing { Verdict::Tie } else { verdict_for(vd, scale) },
                decisive_value: if no_missing { 0.0 } else { vd },
                target,
                v_cc: None,
                v_ac: None,
                geometry: None,
                conditions,
                breakpoints: None,
            }
        }
    };
    rec.v_cc = Some(v_cc);
    rec.v_ac = Some(v_ac);
    Ok(rec)
}
