//! Data-processing checks: a measure evaluated on `X→Y` must dominate the
//! same measure on the degraded `X→Z`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::exponents::ExponentChain;
use super::gurantz::{gen_bhattacharyya, gurantz_eval, ReplicaAssignment};
use super::tree::FactorTree;
use super::{FiniteChannel, MeasureError};

/// Absolute slack allowed before a check counts as a violation.
pub const DPI_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Measure {
    Chain { chain: ExponentChain },
    Tree { tree: FactorTree },
    Weights { b: Vec<f64> },
}

impl Measure {
    pub fn eval(&self, channel: &FiniteChannel, replicas: &ReplicaAssignment) -> Result<f64, MeasureError> {
        match self {
            Measure::Chain { chain } => gurantz_eval(channel, replicas, chain),
            Measure::Tree { tree } => tree.eval(channel, replicas),
            Measure::Weights { b } => gen_bhattacharyya(channel, replicas, b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpiReport {
    pub value_y: f64,
    pub value_z: f64,
    pub holds: bool,
    /// `value_y - value_z`; non-negative when the inequality holds exactly.
    pub slack: f64,
}

pub fn dpi_check(
    channel_xy: &FiniteChannel,
    degradation_yz: &FiniteChannel,
    measure: &Measure,
    replicas: &ReplicaAssignment,
) -> Result<DpiReport, MeasureError> {
    let channel_xz = channel_xy.compose(degradation_yz)?;
    let value_y = measure.eval(channel_xy, replicas)?;
    let value_z = measure.eval(&channel_xz, replicas)?;
    Ok(DpiReport {
        value_y,
        value_z,
        holds: value_y >= value_z - DPI_TOL,
        slack: value_y - value_z,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzConfig {
    pub instances: usize,
    pub seed: u64,
    /// Largest input alphabet; sizes are drawn from `2..=max_inputs`.
    pub max_inputs: usize,
    /// Largest output alphabet for both `Y` (`2..=`) and `Z` (`1..=`).
    pub max_outputs: usize,
    /// Largest chain length; drawn from `1..=max_k`.
    pub max_k: usize,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        Self {
            instances: 10_000,
            seed: 0,
            max_inputs: 6,
            max_outputs: 8,
            max_k: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzInstance {
    pub index: usize,
    pub n_inputs: usize,
    pub n_outputs: usize,
    pub n_degraded: usize,
    pub a: Vec<f64>,
    pub replicas: Vec<usize>,
    pub report: DpiReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzReport {
    pub config: FuzzConfig,
    pub violations: usize,
    pub errors: usize,
    /// The instance with the smallest slack (absent when no instances ran).
    pub min_slack: Option<FuzzInstance>,
    pub first_error: Option<String>,
}

impl FuzzReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.errors == 0
    }
}

fn draw_exponent(rng: &mut ChaCha8Rng) -> f64 {
    // Hit the endpoints now and then; the chain degenerates there.
    match rng.random_range(0..20) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.random(),
    }
}

/// Builds instance `index` of a campaign. Each instance has its own ChaCha
/// stream, so instances are independent of evaluation order.
pub fn fuzz_instance(
    config: &FuzzConfig,
    index: usize,
) -> (FiniteChannel, FiniteChannel, ExponentChain, ReplicaAssignment) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index as u64);
    let nx = rng.random_range(2..=config.max_inputs.max(2));
    let ny = rng.random_range(2..=config.max_outputs.max(2));
    let nz = rng.random_range(1..=config.max_outputs.max(1));
    let k = rng.random_range(1..=config.max_k.max(1));
    let channel = FiniteChannel::random_dirichlet(&mut rng, nx, ny);
    let degradation = FiniteChannel::random_dirichlet(&mut rng, ny, nz);
    let a: Vec<f64> = (0..k).map(|_| draw_exponent(&mut rng)).collect();
    let chain = ExponentChain::new(a).expect("exponents drawn from [0, 1]");
    let replicas = ReplicaAssignment((0..=k).map(|_| rng.random_range(0..nx)).collect());
    (channel, degradation, chain, replicas)
}

/// Runs `config.instances` random chain-measure checks on the current rayon
/// pool. The report does not depend on the number of workers.
pub fn fuzz_dpi(config: &FuzzConfig) -> FuzzReport {
    let outcomes: Vec<Result<FuzzInstance, String>> = (0..config.instances)
        .into_par_iter()
        .map(|i| {
            let (ch, deg, chain, reps) = fuzz_instance(config, i);
            let measure = Measure::Chain { chain: chain.clone() };
            dpi_check(&ch, &deg, &measure, &reps)
                .map(|report| FuzzInstance {
                    index: i,
                    n_inputs: ch.n_inputs(),
                    n_outputs: ch.n_outputs(),
                    n_degraded: deg.n_outputs(),
                    a: chain.a().to_vec(),
                    replicas: reps.0,
                    report,
                })
                .map_err(|e| format!("instance {i}: {e}"))
        })
        .collect();

    let mut report = FuzzReport {
        config: config.clone(),
        violations: 0,
        errors: 0,
        min_slack: None,
        first_error: None,
    };
    for outcome in outcomes {
        match outcome {
            Ok(inst) => {
                if !inst.report.holds {
                    report.violations += 1;
                }
                let better = report
                    .min_slack
                    .as_ref()
                    .is_none_or(|m| inst.report.slack < m.report.slack);
                if better {
                    report.min_slack = Some(inst);
                }
            }
            Err(e) => {
                report.errors += 1;
                report.first_error.get_or_insert(e);
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_degradation_has_zero_slack() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ch = FiniteChannel::random_dirichlet(&mut rng, 3, 4);
        let m = Measure::Chain {
            chain: ExponentChain::new(vec![0.4, 0.7]).unwrap(),
        };
        let r = dpi_check(&ch, &FiniteChannel::identity(4).unwrap(), &m, &ReplicaAssignment(vec![0, 2, 1])).unwrap();
        assert!(r.holds);
        assert!(r.slack.abs() < 1e-15);
    }

    #[test]
    fn total_loss_saturates() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ch = FiniteChannel::random_dirichlet(&mut rng, 2, 5);
        let m = Measure::Weights { b: vec![0.5, 0.5] };
        let r = dpi_check(&ch, &FiniteChannel::collapse(5).unwrap(), &m, &ReplicaAssignment(vec![0, 1])).unwrap();
        assert!((r.value_z + 1.0).abs() < 1e-15);
        assert!(r.holds && r.value_y > -1.0);
    }

    #[test]
    fn mismatched_degradation() {
        let ch = FiniteChannel::identity(3).unwrap();
        let m = Measure::Weights { b: vec![0.5, 0.5] };
        let err = dpi_check(&ch, &FiniteChannel::identity(2).unwrap(), &m, &ReplicaAssignment(vec![0, 1])).unwrap_err();
        assert!(matches!(err, MeasureError::DimensionMismatch { .. }));
    }

    #[test]
    fn small_campaign_is_clean_and_order_free() {
        let cfg = FuzzConfig {
            instances: 300,
            seed: 3,
            ..FuzzConfig::default()
        };
        let r = fuzz_dpi(&cfg);
        assert!(r.passed(), "{r:?}");
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        assert_eq!(one.install(|| fuzz_dpi(&cfg)), r);
        assert!(fuzz_dpi(&FuzzConfig { instances: 0, ..cfg }).min_slack.is_none());
    }
}
