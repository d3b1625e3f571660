//! Nested likelihood-ratio functionals on finite alphabets.

mod channel;
pub mod dpi;
pub mod exponents;
pub mod gallager;
pub mod gurantz;
pub mod tree;

pub use channel::{random_simplex, FiniteChannel, ROW_SUM_TOL};
pub use dpi::{dpi_check, fuzz_dpi, DpiReport, FuzzConfig, FuzzReport, Measure};
pub use exponents::{a_to_b, b_to_a, ExponentChain};
pub use gallager::{gallager_e0, replica_average};
pub use gurantz::{gen_bhattacharyya, gurantz_eval, ReplicaAssignment};
pub use tree::{FactorTree, FunctionNode, Node, NodeId, VariableNode};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MeasureError {
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("alphabet mismatch: expected {expected} symbols, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("weights exhaust their mass after prefix b_0..b_{}", prefix.saturating_sub(1))]
    DegenerateWeights { prefix: usize },
    #[error("{replicas} replicas given, measure needs {expected}")]
    LengthMismatch { replicas: usize, expected: usize },
    #[error("replica symbol {index} outside input alphabet of size {n_inputs}")]
    ReplicaOutOfRange { index: usize, n_inputs: usize },
    #[error("zero denominator with nonzero numerator at output {y}, level {level}")]
    ZeroDenominator { y: usize, level: usize },
    #[error("invalid factor tree: {0}")]
    InvalidTree(String),
}
