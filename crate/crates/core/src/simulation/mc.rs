//! Replicated variance estimates of one coefficient.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::v_single;
use crate::error::{Error, Result};
use crate::estimators::{fit, Method};
use crate::kurtosis::kappa_marginal;

use super::mcar::apply_mcar_with;
use super::settings::SimSetting;
use super::{rng_for, Purpose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodStats {
    /// Mean over outer replicates of the inner sample variance of β̂.
    pub var_hat: f64,
    /// Standard deviation of the inner variances across outer replicates.
    pub sd_of_var: f64,
    pub mean_beta: f64,
    /// Inner fits that failed (e.g. too few complete rows) and were dropped.
    pub failures: usize,
    pub per_outer: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCResult {
    pub cc: MethodStats,
    pub ac: MethodStats,
    pub seed: u64,
    pub inner: usize,
    pub outer: usize,
    pub n: usize,
    pub target: usize,
    /// Mean marginal κ estimate over the simulated (masked) samples.
    pub kappa_hat: f64,
}

impl MCResult {
    pub fn stats(&self, method: Method) -> &MethodStats {
        match method {
            Method::Cc => &self.cc,
            Method::Ac => &self.ac,
        }
    }
}

fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

fn summarize(draws: &[Vec<Option<f64>>]) -> Result<MethodStats> {
    let mut per_outer = Vec::with_capacity(draws.len());
    let mut failures = 0;
    let (mut sum, mut count) = (0.0, 0usize);
    for outer in draws {
        let ok: Vec<f64> = outer.iter().flatten().cloned().collect();
        failures += outer.len() - ok.len();
        sum += ok.iter().sum::<f64>();
        count += ok.len();
        if ok.len() >= 2 {
            per_outer.push(sample_variance(&ok));
        }
    }
    if per_outer.is_empty() {
        return Err(Error::InsufficientRows { needed: 2, found: count });
    }
    let k = per_outer.len() as f64;
    let var_hat = per_outer.iter().sum::<f64>() / k;
    let sd_of_var = if per_outer.len() > 1 { sample_variance(&per_outer).sqrt() } else { 0.0 };
    Ok(MethodStats {
        var_hat,
        sd_of_var,
        mean_beta: sum / count as f64,
        failures,
        per_outer,
    })
}

/// `outer` repetitions of `inner` simulated fits; both methods are fitted on
/// the same masked datasets.
pub fn run_mc(setting: &SimSetting, seed: u64) -> Result<MCResult> {
    if setting.inner < 2 || setting.outer < 1 {
        return Err(Error::InvalidPattern(format!(
            "need inner >= 2 and outer >= 1, got {} and {}",
            setting.inner, setting.outer
        )));
    }
    let sampler = setting.sampler()?;
    let target = setting.target;
    let jobs: Vec<(usize, usize)> = (0..setting.outer)
        .flat_map(|o| (0..setting.inner).map(move |i| (o, i)))
        .collect();
    let fits: Vec<Result<[Option<f64>; 3]>> = jobs
        .par_iter()
        .map(|&(o, i)| {
            let full = sampler.draw(&mut rng_for(seed, o, i, Purpose::Sample));
            let data = apply_mcar_with(&full, &setting.pattern, &mut rng_for(seed, o, i, Purpose::Mask))?;
            let one = |m| fit(&data, m).ok().map(|f| f.beta_hat[target]);
            Ok([one(Method::Cc), one(Method::Ac), kappa_marginal(&data).ok().map(|k| k.value)])
        })
        .collect();
    let mut cc = vec![Vec::with_capacity(setting.inner); setting.outer];
    let mut ac = vec![Vec::with_capacity(setting.inner); setting.outer];
    let (mut kappa_sum, mut kappa_count) = (0.0, 0usize);
    for (&(o, _), r) in jobs.iter().zip(fits) {
        let [c, a, k] = r?;
        cc[o].push(c);
        ac[o].push(a);
        if let Some(k) = k {
            kappa_sum += k;
            kappa_count += 1;
        }
    }
    Ok(MCResult {
        cc: summarize(&cc)?,
        ac: summarize(&ac)?,
        seed,
        inner: setting.inner,
        outer: setting.outer,
        n: setting.n,
        target,
        kappa_hat: kappa_sum / kappa_count as f64,
    })
}

/// Asymptotic variance of the target coefficient for the setting's
/// population model and pattern.
pub fn theoretical_variance(setting: &SimSetting, method: Method) -> Result<f64> {
    let props = setting.pattern.proportions(setting.model.dim())?;
    v_single(&setting.model, &props, setting.n as f64, method, setting.target)
}

/// Mean marginal κ estimate over `count` samples drawn exactly as `run_mc`
/// draws its first outer replicate.
pub fn mean_sample_kappa(setting: &SimSetting, seed: u64, count: usize) -> Result<f64> {
    let sampler = setting.sampler()?;
    let values: Vec<Option<f64>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let full = sampler.draw(&mut rng_for(seed, 0, i, Purpose::Sample));
            let data = apply_mcar_with(&full, &setting.pattern, &mut rng_for(seed, 0, i, Purpose::Mask)).ok()?;
            kappa_marginal(&data).ok().map(|k| k.value)
        })
        .collect();
    let ok: Vec<f64> = values.into_iter().flatten().collect();
    if ok.is_empty() {
        return Err(Error::InsufficientRows { needed: 4, found: setting.n });
    }
    Ok(ok.iter().sum::<f64>() / ok.len() as f64)
}
