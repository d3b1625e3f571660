//! The replica-averaged measure `I_G(U;Y)` for a uniform parameter sent over
//! AWGN, with and without Gaussian fading. Signals enter only through their
//! normalized correlation `ρ(u,u')` and its mean `ϱ`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChannelError {
    #[error("domain error: {0}")]
    Domain(String),
}

type Kernel = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum SignalModel {
    /// `ρ(u,u') = 0` for `u ≠ u'`.
    Orthogonal,
    /// Triangular correlation of a rectangular pulse of width `delta`,
    /// `max(0, 1 - d/Δ)` with `d` the distance on the unit circle.
    RectangularPulse { delta: f64 },
    Custom { corr: Kernel, mean_corr: f64 },
}

impl fmt::Debug for SignalModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignalModel::Orthogonal => write!(f, "Orthogonal"),
            SignalModel::RectangularPulse { delta } => write!(f, "RectangularPulse {{ delta: {delta} }}"),
            SignalModel::Custom { mean_corr, .. } => write!(f, "Custom {{ mean_corr: {mean_corr} }}"),
        }
    }
}

impl SignalModel {
    pub fn rectangular_pulse(delta: f64) -> Result<Self, ChannelError> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(ChannelError::Domain(format!("pulse width {delta} outside (0, 1]")));
        }
        Ok(SignalModel::RectangularPulse { delta })
    }

    /// A user kernel. The caller supplies `ϱ = E ρ(U,U')` for independent
    /// uniform `U, U'`; it is not recomputed.
    pub fn custom<K>(corr: K, mean_corr: f64) -> Result<Self, ChannelError>
    where
        K: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        if !(0.0..=1.0).contains(&mean_corr) {
            return Err(ChannelError::Domain(format!("mean correlation {mean_corr} outside [0, 1]")));
        }
        Ok(SignalModel::Custom {
            corr: Arc::new(corr),
            mean_corr,
        })
    }

    pub fn corr(&self, u: f64, v: f64) -> f64 {
        match self {
            SignalModel::Orthogonal => {
                if u == v {
                    1.0
                } else {
                    0.0
                }
            }
            SignalModel::RectangularPulse { delta } => {
                let d = (u - v).abs().rem_euclid(1.0);
                let d = d.min(1.0 - d);
                (1.0 - d / delta).max(0.0)
            }
            SignalModel::Custom { corr, .. } => corr(u, v),
        }
    }

    /// `ϱ`. For the pulse this is `Δ` when `Δ ≤ 1/2` (circular distance has
    /// density 2 on `[0, 1/2]`) and `1 - 1/(4Δ)` beyond.
    pub fn mean_corr(&self) -> f64 {
        match self {
            SignalModel::Orthogonal => 0.0,
            SignalModel::RectangularPulse { delta } => {
                if *delta <= 0.5 {
                    *delta
                } else {
                    1.0 - 0.25 / delta
                }
            }
            SignalModel::Custom { mean_corr, .. } => *mean_corr,
        }
    }
}

fn check_snr(snr: f64) -> Result<(), ChannelError> {
    if !(snr.is_finite() && snr >= 0.0) {
        return Err(ChannelError::Domain(format!("snr {snr} must be finite and non-negative")));
    }
    Ok(())
}

fn check_k(k: usize) -> Result<(), ChannelError> {
    if k == 0 {
        return Err(ChannelError::Domain("k must be a positive integer".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Half-width of the normal 95% interval.
    pub ci_halfwidth: f64,
    pub samples: usize,
}

pub const MIN_MC_SAMPLES: usize = 1000;
/// Samples per RNG stream. Fixed, so the estimate does not depend on the
/// number of workers.
pub const MC_BLOCK: usize = 4096;

/// Running mean and centred second moment.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Moments {
    pub n: f64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(self, o: Moments) -> Moments {
        if self.n == 0.0 {
            return o;
        }
        if o.n == 0.0 {
            return self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * o.n / n,
            m2: self.m2 + o.m2 + d * d * self.n * o.n / n,
        }
    }

    pub fn ci95(&self) -> f64 {
        if self.n < 2.0 {
            return f64::INFINITY;
        }
        1.96 * (self.m2 / (self.n - 1.0) / self.n).sqrt()
    }
}

/// Monte Carlo estimate of `-E exp{-x[1 - (k+1)^{-2} ΣΣ ρ(U_i,U_j)]}` over
/// i.i.d. uniform replicas on `[-1/2, 1/2)`.
pub fn awgn_ig_exact_mc(
    signal: &SignalModel,
    k: usize,
    snr: f64,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate, ChannelError> {
    check_k(k)?;
    check_snr(snr)?;
    if n_samples < MIN_MC_SAMPLES {
        return Err(ChannelError::Domain(format!(
            "need at least {MIN_MC_SAMPLES} samples, got {n_samples}"
        )));
    }
    let m = k + 1;
    let norm = 1.0 / (m * m) as f64;
    let blocks = n_samples.div_ceil(MC_BLOCK);
    let parts: Vec<Moments> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let count = MC_BLOCK.min(n_samples - b * MC_BLOCK);
            let mut u = vec![0.0; m];
            let mut acc = Moments::default();
            for _ in 0..count {
                u.iter_mut().for_each(|v| *v = rng.random::<f64>() - 0.5);
                // ΣΣρ over ordered pairs, diagonal included
                let mut sum = m as f64;
                for i in 0..m {
                    for j in i + 1..m {
                        sum += 2.0 * signal.corr(u[i], u[j]);
                    }
                }
                acc.push(-(-snr * (1.0 - sum * norm)).exp());
            }
            acc
        })
        .collect();
    let total = parts.into_iter().fold(Moments::default(), Moments::merge);
    Ok(McEstimate {
        mean: total.mean,
        ci_halfwidth: total.ci95(),
        samples: n_samples,
    })
}

/// `-exp{-x k/(k+1) (1-ϱ)}`: Jensen's inequality applied inside the
/// expectation, an upper bound on the exact value.
pub fn awgn_ig_jensen(varrho: f64, k: usize, snr: f64) -> Result<f64, ChannelError> {
    check_k(k)?;
    check_snr(snr)?;
    if !(0.0..=1.0).contains(&varrho) {
        return Err(ChannelError::Domain(format!("mean correlation {varrho} outside [0, 1]")));
    }
    let kf = k as f64;
    Ok(-(-snr * kf / (kf + 1.0) * (1.0 - varrho)).exp())
}

/// `ln(-I_G)` for the fading channel; see [`fading_ig_closed`].
pub fn fading_ig_log(k: usize, snr: f64, sigma2: f64) -> Result<f64, ChannelError> {
    check_k(k)?;
    check_snr(snr)?;
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(ChannelError::Domain(format!("fading variance {sigma2} must be positive")));
    }
    let kf = k as f64;
    let q = 2.0 * sigma2 * snr;
    // a = (k+1)(1+2σ²x), μ = 2kσ²x² / (2(2k+1)σ²x + k+1)
    let ln_a = (kf + 1.0).ln() + q.ln_1p();
    let ln_first = ln_a - (kf + 1.0 + kf * q).ln();
    let ln_second = ln_a - (ln_a.exp() + kf * q).ln();
    // 2μσ² = k q² / ((2k+1)q + k+1), grouped so that q² is never formed
    let two_mu_sigma2 = kf * q * (q / ((2.0 * kf + 1.0) * q + kf + 1.0));
    let ln_third = two_mu_sigma2.ln_1p();
    Ok(0.5 * kf * ln_first + 0.5 * ln_second - 0.5 * ln_third)
}

/// Closed-form `I_G(U;Y)` for `y = A x(t,u) + n`, `A ~ N(0, σ²)`, assuming the
/// signal correlation vanishes off the diagonal.
pub fn fading_ig_closed(k: usize, snr: f64, sigma2: f64) -> Result<f64, ChannelError> {
    Ok(-fading_ig_log(k, snr, sigma2)?.exp())
}

/// High-SNR constant: `I_G ≈ -f_k/(σ√x)`.
pub fn f_k(k: usize) -> f64 {
    let kf = k as f64;
    std::f64::consts::FRAC_1_SQRT_2 * (1.0 + 1.0 / kf).powf(0.5 * (kf + 1.0))
}

fn check_s(s: f64, snr: f64, sigma2: f64) -> Result<(), ChannelError> {
    check_snr(snr)?;
    if !(0.0..=1.0).contains(&s) {
        return Err(ChannelError::Domain(format!("s = {s} outside [0, 1]")));
    }
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(ChannelError::Domain(format!("fading variance {sigma2} must be positive")));
    }
    Ok(())
}

/// `μ(s,h)` for `h ≠ 0` under vanishing correlation:
/// `½[ln(1+2σ²x) - ln(1+2sσ²x) - ln(1+2(1-s)σ²x)]`.
pub fn fading_mu_log(s: f64, snr: f64, sigma2: f64) -> Result<f64, ChannelError> {
    check_s(s, snr, sigma2)?;
    let q = 2.0 * sigma2 * snr;
    Ok(0.5 * (q.ln_1p() - (s * q).ln_1p() - ((1.0 - s) * q).ln_1p()))
}

/// `e^{μ(s,h)} = sqrt((1+2σ²x) / ((1+2sσ²x)(1+2(1-s)σ²x)))`.
pub fn fading_mu(s: f64, snr: f64, sigma2: f64) -> Result<f64, ChannelError> {
    Ok(fading_mu_log(s, snr, sigma2)?.exp())
}

/// `∂μ/∂s`.
pub fn fading_mu_d1(s: f64, snr: f64, sigma2: f64) -> Result<f64, ChannelError> {
    check_s(s, snr, sigma2)?;
    let q = 2.0 * sigma2 * snr;
    Ok(0.5 * (-q / (1.0 + s * q) + q / (1.0 + (1.0 - s) * q)))
}

/// `∂²μ/∂s²`; tends to 4 at `s = 1/2` as the SNR grows.
pub fn fading_mu_d2(s: f64, snr: f64, sigma2: f64) -> Result<f64, ChannelError> {
    check_s(s, snr, sigma2)?;
    let q = 2.0 * sigma2 * snr;
    let a = q / (1.0 + s * q);
    let b = q / (1.0 + (1.0 - s) * q);
    Ok(0.5 * (a * a + b * b))
}
