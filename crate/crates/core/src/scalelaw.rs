//! The translation-performance scaling law and its estimation.
//!
//! A law predicts a 0-100 metric score from the translation-instruction
//! data scale:
//!
//! ```text
//! score(x) = 100 - alpha * (gamma * x)^beta,   alpha > 0,  -1 < beta < 0
//! ```
//!
//! with `gamma` the language-similarity coefficient from [`crate::simlang`].
//! The model is log-linear in `100 - score`, so estimation is closed-form
//! least squares on `ln(100 - score)` against `ln(gamma * x)` — no
//! iteration, no initialization, no tolerance knobs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::Lang;
use crate::simlang::LanguageProfile;

#[derive(Debug, Error)]
pub enum LawError {
    #[error("alpha must be positive, got {0}")]
    BadAlpha(f64),
    #[error("beta must lie in the open interval (-1, 0), got {0}")]
    BadBeta(f64),
    #[error("data scale must be positive and finite, got {0}")]
    BadScale(f64),
    #[error("score {0} is not below 100; log(100 - score) is undefined")]
    ScoreAtCeiling(f64),
    #[error("need at least 2 distinct data scales to fit, got {0}")]
    TooFewScales(usize),
    #[error("fitted parameters rejected: alpha={alpha}, beta={beta} (beta outside (-1, 0)); rmse={rmse}")]
    RejectedFit { alpha: f64, beta: f64, rmse: f64 },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

/// A fitted (or hand-specified) scaling law for one language and setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingLaw {
    pub profile: LanguageProfile,
    pub alpha: f64,
    pub beta: f64,
    /// Which experimental family the law describes, e.g.
    /// "coit-translation" vs "continued-pretraining".
    pub setting_tag: String,
}

impl ScalingLaw {
    pub fn new(
        profile: LanguageProfile,
        alpha: f64,
        beta: f64,
        setting_tag: &str,
    ) -> Result<Self, LawError> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(LawError::BadAlpha(alpha));
        }
        if !(beta > -1.0 && beta < 0.0) {
            return Err(LawError::BadBeta(beta));
        }
        Ok(ScalingLaw {
            profile,
            alpha,
            beta,
            setting_tag: setting_tag.to_string(),
        })
    }

    pub fn gamma(&self) -> f64 {
        self.profile.gamma
    }

    /// Predicted score at data scale `x`. Strictly increasing in `x`,
    /// strictly below 100 for finite `x`, undefined at `x = 0` where the
    /// negative exponent diverges.
    pub fn predict(&self, x: f64) -> Result<f64, LawError> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(LawError::BadScale(x));
        }
        Ok(100.0 - self.alpha * (self.gamma() * x).powf(self.beta))
    }

    /// First derivative of the predicted score with respect to `x`:
    /// `-alpha * beta * gamma^beta * x^(beta - 1)`. Strictly positive and
    /// strictly decreasing in `x`.
    pub fn marginal_gain(&self, x: f64) -> Result<f64, LawError> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(LawError::BadScale(x));
        }
        Ok(-self.alpha * self.beta * self.gamma().powf(self.beta) * x.powf(self.beta - 1.0))
    }

    /// Data scale at which the marginal gain equals `g`; the inverse of
    /// [`ScalingLaw::marginal_gain`].
    pub fn scale_at_marginal_gain(&self, g: f64) -> f64 {
        let k = -self.alpha * self.beta * self.gamma().powf(self.beta);
        (g / k).powf(1.0 / (self.beta - 1.0))
    }
}

/// One observed (data scale, score) measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub data_scale: u64,
    pub score: f64,
}

/// Result of [`fit_law`]: the law plus the residual RMSE in transformed
/// space, `sqrt(mean((ln(100-score) - fit)^2))`.
#[derive(Debug, Clone, Serialize)]
pub struct LawFit {
    pub law: ScalingLaw,
    pub rmse: f64,
    pub n_points: usize,
}

/// Ordinary least squares on the log-transformed model.
///
/// Regresses `y = ln(100 - score)` on `x = ln(gamma * data_scale)`; the
/// slope is `beta` and `exp(intercept)` is `alpha`. A fit whose slope
/// falls outside (-1, 0) is an error carrying the raw estimates rather
/// than a silent clamp.
pub fn fit_law(
    points: &[DataPoint],
    profile: &LanguageProfile,
    setting_tag: &str,
) -> Result<LawFit, LawError> {
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for p in points {
        if p.data_scale == 0 {
            return Err(LawError::BadScale(0.0));
        }
        if !(p.score < 100.0) {
            return Err(LawError::ScoreAtCeiling(p.score));
        }
        xs.push((profile.gamma * p.data_scale as f64).ln());
        ys.push((100.0 - p.score).ln());
    }
    let mut distinct: Vec<u64> = points.iter().map(|p| p.data_scale).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(LawError::TooFewScales(distinct.len()));
    }

    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let beta = sxy / sxx;
    let intercept = my - beta * mx;
    let alpha = intercept.exp();

    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + beta * x);
            r * r
        })
        .sum();
    let rmse = (sse / n).sqrt();

    if !(beta > -1.0 && beta < 0.0) || !(alpha > 0.0) || !alpha.is_finite() {
        return Err(LawError::RejectedFit { alpha, beta, rmse });
    }
    let law = ScalingLaw::new(profile.clone(), alpha, beta, setting_tag)?;
    Ok(LawFit {
        law,
        rmse,
        n_points: points.len(),
    })
}

/// Read fit input: TSV lines of `data_scale<TAB>score`. Lines starting
/// with `#` and blank lines are ignored.
pub fn read_points_tsv(path: &Path) -> Result<Vec<DataPoint>, LawError> {
    let text = std::fs::read_to_string(path).map_err(|e| LawError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse = || -> Option<DataPoint> {
            let mut cols = line.split('\t');
            let scale: u64 = cols.next()?.trim().parse().ok()?;
            let score: f64 = cols.next()?.trim().parse().ok()?;
            if cols.next().is_some() {
                return None;
            }
            Some(DataPoint {
                data_scale: scale,
                score,
            })
        };
        let point = parse().ok_or_else(|| LawError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: "expected `data_scale<TAB>score`".to_string(),
        })?;
        points.push(point);
    }
    Ok(points)
}

/// Flat record for law JSON files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LawRecord {
    pub lang: Lang,
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rmse: Option<f64>,
    pub setting_tag: String,
}

impl LawRecord {
    pub fn from_fit(fit: &LawFit) -> Self {
        LawRecord {
            lang: fit.law.profile.lang.clone(),
            gamma: fit.law.profile.gamma,
            alpha: fit.law.alpha,
            beta: fit.law.beta,
            rmse: Some(fit.rmse),
            setting_tag: fit.law.setting_tag.clone(),
        }
    }

    pub fn to_law(&self) -> Result<ScalingLaw, crate::simlang::SimError> {
        let profile = LanguageProfile {
            lang: self.lang.clone(),
            gamma: self.gamma,
            sample_count: 0,
            method_tag: "from-record".to_string(),
        };
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(crate::simlang::SimError::GammaOutOfRange(self.gamma));
        }
        Ok(ScalingLaw::new(profile, self.alpha, self.beta, &self.setting_tag)
            .expect("record carries validated parameters"))
    }
}

/// Sample (x, predicted score) rows for external plotting.
pub fn plot_samples(
    law: &ScalingLaw,
    min_scale: u64,
    max_scale: u64,
    samples: usize,
    log_spaced: bool,
) -> Result<Vec<(u64, f64)>, LawError> {
    if min_scale == 0 {
        return Err(LawError::BadScale(0.0));
    }
    if max_scale < min_scale || samples < 2 {
        return Err(LawError::BadScale(max_scale as f64));
    }
    let mut out = Vec::with_capacity(samples);
    for i in 0..samples {
        let t = i as f64 / (samples - 1) as f64;
        let x = if log_spaced {
            ((min_scale as f64).ln() + t * ((max_scale as f64).ln() - (min_scale as f64).ln())).exp()
        } else {
            min_scale as f64 + t * (max_scale - min_scale) as f64
        };
        let x = x.round().max(1.0) as u64;
        out.push((x, law.predict(x as f64)?));
    }
    out.dedup_by_key(|(x, _)| *x);
    Ok(out)
}
