//! Monte Carlo MSE of the maximum-likelihood estimator for `N` orthogonal
//! signals, one per cell of a uniform grid on the unit circle.
//!
//! Works on the normalized correlator outputs `z_j = √(2x)·A·1{j = i*} + n_j`
//! with `n_j ~ N(0,1)` i.i.d. (`A = 1` without fading, `A ~ N(0,σ²)` with),
//! which are sufficient and exactly distributed for orthogonal signals.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, BoundKind, BoundQuery, KSpec, MSpec, Mode, Scenario};
use crate::channel_measures::Moments;

/// Upper limit on `trials · N` (one Gaussian draw each).
pub const WORK_LIMIT: u64 = 2_000_000_000;
pub const MIN_TRIALS: u64 = 1000;
pub const MIN_GRID: u32 = 8;
/// Trials per accumulation block; fixed so results do not depend on workers.
const BLOCK: u64 = 1024;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("budget exceeded: trials·N = {work} > {limit}; reduce trials to at most {max_trials} for N = {n}")]
    Budget { work: u64, limit: u64, max_trials: u64, n: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SimChannel {
    Awgn,
    Fading { sigma2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub channel: SimChannel,
    #[serde(rename = "N")]
    pub grid_size: u32,
    /// Linear `E/N0`.
    pub snr: f64,
    pub trials: u64,
    pub seed: u64,
}

impl SimScenario {
    pub fn validate(&self) -> Result<(), SimError> {
        let n = self.grid_size;
        if n < MIN_GRID || !n.is_power_of_two() {
            return Err(SimError::Invalid(format!("N = {n} must be a power of two, at least {MIN_GRID}")));
        }
        if self.trials < MIN_TRIALS {
            return Err(SimError::Invalid(format!("trials = {} below {MIN_TRIALS}", self.trials)));
        }
        if !(self.snr.is_finite() && self.snr >= 0.0) {
            return Err(SimError::Invalid(format!("snr {} must be finite and non-negative", self.snr)));
        }
        if let SimChannel::Fading { sigma2 } = self.channel {
            if !(sigma2.is_finite() && sigma2 > 0.0) {
                return Err(SimError::Invalid(format!("sigma2 {sigma2} must be positive")));
            }
        }
        let work = self.trials.saturating_mul(n as u64);
        if work > WORK_LIMIT {
            return Err(SimError::Budget {
                work,
                limit: WORK_LIMIT,
                max_trials: WORK_LIMIT / n as u64,
                n,
            });
        }
        Ok(())
    }

    /// Quantization floor of the cell-centre estimate, `1/(12N²)`.
    pub fn floor(&self) -> f64 {
        let n = self.grid_size as f64;
        1.0 / (12.0 * n * n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundMargin {
    pub name: String,
    pub value: f64,
    pub valid: bool,
    /// `mse - value`; NaN for invalid bounds.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub scenario: SimScenario,
    pub mse: f64,
    pub ci95: f64,
    pub floor: f64,
    pub margins: Vec<BoundMargin>,
}

impl SimResult {
    pub fn margin_map(&self) -> BTreeMap<&str, f64> {
        self.margins.iter().map(|m| (m.name.as_str(), m.margin)).collect()
    }
}

/// Circular squared distance between two points of the unit circle.
fn circ_sq(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    let d = d.min(1.0 - d);
    d * d
}

fn one_trial(rng: &mut ChaCha8Rng, s: &SimScenario, amp: f64) -> f64 {
    let n = s.grid_size as usize;
    let u: f64 = rng.random::<f64>() - 0.5;
    let cell = (((u + 0.5) * n as f64) as usize).min(n - 1);
    let gain = match s.channel {
        SimChannel::Awgn => 1.0,
        SimChannel::Fading { sigma2 } => sigma2.sqrt() * rng.sample::<f64, _>(StandardNormal),
    };
    let fading = matches!(s.channel, SimChannel::Fading { .. });
    let mut best = 0usize;
    let mut best_score = f64::NEG_INFINITY;
    for j in 0..n {
        let mut z: f64 = rng.sample(StandardNormal);
        if j == cell {
            z += amp * gain;
        }
        let score = if fading { z * z } else { z };
        if score > best_score {
            best_score = score;
            best = j;
        }
    }
    let estimate = (best as f64 + 0.5) / n as f64 - 0.5;
    circ_sq(estimate, u)
}

/// Runs the trials on the current rayon pool.
pub fn simulate_mse(s: &SimScenario) -> Result<SimResult, SimError> {
    s.validate()?;
    let amp = (2.0 * s.snr).sqrt();
    let blocks = s.trials.div_ceil(BLOCK);
    let parts: Vec<Moments> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = Moments::default();
            let end = ((b + 1) * BLOCK).min(s.trials);
            let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
            for t in b * BLOCK..end {
                rng.set_stream(t);
                rng.set_word_pos(0);
                acc.push(one_trial(&mut rng, s, amp));
            }
            acc
        })
        .collect();
    let m = parts.into_iter().fold(Moments::default(), Moments::merge);
    let mse = m.mean;
    let margins = reference_bounds(s)
        .into_iter()
        .map(|(name, r)| {
            let (value, valid) = match r {
                Ok(r) => (r.value, r.valid),
                Err(_) => (0.0, false),
            };
            BoundMargin {
                name,
                value,
                valid,
                margin: if valid { mse - value } else { f64::NAN },
            }
        })
        .collect();
    Ok(SimResult {
        scenario: *s,
        mse,
        ci95: m.ci95(),
        floor: s.floor(),
        margins,
    })
}

type Evaluated = Result<bounds::BoundResult, bounds::BoundError>;

/// The bounds each scenario is checked against, in column order.
pub fn reference_bounds(s: &SimScenario) -> Vec<(String, Evaluated)> {
    let x = s.snr;
    // N orthogonal cells: two independent replicas share a cell w.p. 1/N.
    let varrho = 1.0 / s.grid_size as f64;
    let base = |bound, k, mode| BoundQuery {
        scenario: Scenario::Awgn,
        bound,
        k,
        snr: x,
        sigma2: None,
        varrho,
        m: Some(MSpec::Optimize),
        mode,
    };
    match s.channel {
        SimChannel::Awgn => {
            let mut out: Vec<(String, Evaluated)> = (1..=3)
                .map(|k| {
                    let q = base(BoundKind::Dpt, Some(KSpec::Finite(k)), Mode::Exact);
                    (format!("dpt_k{k}"), bounds::evaluate(&q))
                })
                .collect();
            out.push(("wwb".into(), bounds::evaluate(&base(BoundKind::Wwb, None, Mode::Exact))));
            out.push(("cc".into(), bounds::evaluate(&base(BoundKind::Cc, None, Mode::Exact))));
            out
        }
        SimChannel::Fading { sigma2 } => {
            let fq = |bound, k, mode| BoundQuery {
                scenario: Scenario::Fading,
                sigma2: Some(sigma2),
                varrho: 0.0,
                ..base(bound, k, mode)
            };
            let mut out: Vec<(String, Evaluated)> = [3usize, 8]
                .iter()
                .map(|&k| {
                    let q = fq(BoundKind::Dpt, Some(KSpec::Finite(k)), Mode::Exact);
                    (format!("dpt_k{k}"), bounds::evaluate(&q))
                })
                .collect();
            out.push((
                "dpt_kinf".into(),
                bounds::evaluate(&fq(BoundKind::Dpt, Some(KSpec::Infinity), Mode::Asymptotic)),
            ));
            out.push(("wwb".into(), bounds::evaluate(&fq(BoundKind::Wwb, None, Mode::Exact))));
            out.push(("cc".into(), bounds::evaluate(&fq(BoundKind::Cc, None, Mode::Exact))));
            out.push(("czzb".into(), bounds::evaluate(&fq(BoundKind::Czzb, None, Mode::Asymptotic))));
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn awgn(snr: f64, n: u32, trials: u64) -> SimScenario {
        SimScenario {
            channel: SimChannel::Awgn,
            grid_size: n,
            snr,
            trials,
            seed: 5,
        }
    }

    #[test]
    fn validation() {
        assert!(awgn(1.0, 12, 1000).validate().is_err());
        assert!(awgn(1.0, 4, 1000).validate().is_err());
        assert!(awgn(1.0, 8, 999).validate().is_err());
        let err = awgn(1.0, 1 << 20, 1 << 12).validate().unwrap_err();
        match err {
            SimError::Budget { max_trials, .. } => assert_eq!(max_trials, WORK_LIMIT >> 20),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn circular_distance() {
        assert!((circ_sq(0.49, -0.49) - 0.0004).abs() < 1e-15);
        assert!((circ_sq(0.1, -0.1) - 0.04).abs() < 1e-15);
    }

    #[test]
    fn noiseless_limit_hits_the_floor() {
        let s = awgn(1e4, 64, 20_000);
        let r = simulate_mse(&s).unwrap();
        assert!((r.mse - r.floor).abs() < 3.0 * r.ci95, "{} vs {}", r.mse, r.floor);
    }

    #[test]
    fn worker_count_does_not_matter() {
        let s = SimScenario {
            channel: SimChannel::Fading { sigma2: 1.0 },
            ..awgn(100.0, 32, 5000)
        };
        let a = simulate_mse(&s).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = one.install(|| simulate_mse(&s).unwrap());
        assert_eq!(a.mse.to_bits(), b.mse.to_bits());
        assert_eq!(a.ci95.to_bits(), b.ci95.to_bits());
    }
}
