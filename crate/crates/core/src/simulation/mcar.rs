//! Missing-completely-at-random masks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::advisor::{PatternKind, PatternSpec};
use crate::data::Dataset;
use crate::error::{Error, Result};

use super::{rng_for, Purpose};

fn exact_count(n: usize, q: f64) -> usize {
    ((n as f64) * q + 1e-9).floor() as usize
}

/// Mask `dataset` according to `pattern`, using the stream for `seed`.
pub fn apply_mcar(dataset: &Dataset, pattern: &PatternSpec, seed: u64) -> Result<Dataset> {
    apply_mcar_with(dataset, pattern, &mut rng_for(seed, 0, 0, Purpose::Mask))
}

/// Nested patterns observe exactly `floor(n q)` rows per block, on a random
/// row subset. General patterns mask each cell independently with the
/// single-column proportions. The response is never masked by the nested
/// patterns.
pub fn apply_mcar_with<R: Rng>(dataset: &Dataset, pattern: &PatternSpec, rng: &mut R) -> Result<Dataset> {
    let n = dataset.n_rows();
    let order = dataset.model_order();
    let dim = order.len();
    let mut observed: Vec<Vec<bool>> = (0..dataset.n_cols())
        .map(|j| dataset.observed_column(j).to_vec())
        .collect();
    match pattern.kind {
        PatternKind::A | PatternKind::B => {
            let (q1, qm) = (pattern.q1, pattern.q_minus1);
            for q in [q1, qm] {
                if !(q > 0.0 && q <= 1.0) {
                    return Err(Error::InvalidPattern(format!("proportion {q} outside (0, 1]")));
                }
            }
            if dim < 3 {
                return Err(Error::InvalidPattern("nested patterns need two predictors".into()));
            }
            let nested_ok = match pattern.kind {
                PatternKind::A => q1 >= qm,
                _ => q1 <= qm,
            };
            if !nested_ok {
                return Err(Error::InvalidPattern(format!(
                    "q1 = {q1} and q_minus1 = {qm} do not nest for pattern {:?}",
                    pattern.kind
                )));
            }
            let mut rows: Vec<usize> = (0..n).collect();
            rows.shuffle(rng);
            let (k1, km) = (exact_count(n, q1), exact_count(n, qm));
            let first = order[0];
            let rest = &order[1..dim - 1];
            for (rank, &i) in rows.iter().enumerate() {
                if rank >= k1 {
                    observed[first][i] = false;
                }
                if rank >= km {
                    for &c in rest {
                        observed[c][i] = false;
                    }
                }
            }
        }
        PatternKind::General => {
            let props = pattern.proportions(dim)?;
            let q: Vec<f64> = (0..dim).map(|j| props.q(&[j])).collect();
            for i in 0..n {
                for (j, &c) in order.iter().enumerate() {
                    if q[j] < 1.0 && !rng.random_bool(q[j]) {
                        observed[c][i] = false;
                    }
                }
            }
        }
    }
    dataset.with_mask(observed)
}
