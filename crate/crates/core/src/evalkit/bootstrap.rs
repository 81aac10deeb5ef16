//! Paired bootstrap resampling for system comparison.
//!
//! One-sided test of "system A beats system B": item indices are resampled
//! with replacement `n_resamples` times and the p-value is the fraction of
//! resamples where A's mean does not exceed B's. When A does not beat B on
//! the full set the test reports p = 1.0 with a direction note instead of
//! resampling.
//!
//! Index stream (see [`crate::det`]): one ChaCha20 generator seeded with
//! the given seed; for each resample, `len` indices drawn in order via
//! `next_u64() % len`.

use super::EvalError;
use crate::det;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BootstrapOutcome {
    pub p_value: f64,
    pub n_resamples: u32,
    pub seed: u64,
    /// Set when A does not beat B on the full data, in which case no
    /// resampling happened.
    pub direction_note: Option<String>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn paired_bootstrap(
    system_a: &[f64],
    system_b: &[f64],
    n_resamples: u32,
    seed: u64,
) -> Result<BootstrapOutcome, EvalError> {
    if system_a.len() != system_b.len() {
        return Err(EvalError::ScoreLengthMismatch {
            a: system_a.len(),
            b: system_b.len(),
        });
    }
    if system_a.len() < 2 {
        return Err(EvalError::TooFewItems(system_a.len()));
    }
    if n_resamples < 100 {
        return Err(EvalError::TooFewResamples(n_resamples));
    }

    if mean(system_a) <= mean(system_b) {
        return Ok(BootstrapOutcome {
            p_value: 1.0,
            n_resamples,
            seed,
            direction_note: Some(
                "system A does not beat system B on the full set; no resampling performed".into(),
            ),
        });
    }

    let len = system_a.len();
    let mut rng = det::rng_from_seed(seed);
    let mut not_better: u32 = 0;
    for _ in 0..n_resamples {
        let mut sum_a = 0.0;
        let mut sum_b = 0.0;
        for _ in 0..len {
            let idx = det::index_below(&mut rng, len);
            sum_a += system_a[idx];
            sum_b += system_b[idx];
        }
        if sum_a <= sum_b {
            not_better += 1;
        }
    }
    Ok(BootstrapOutcome {
        p_value: not_better as f64 / n_resamples as f64,
        n_resamples,
        seed,
        direction_note: None,
    })
}
