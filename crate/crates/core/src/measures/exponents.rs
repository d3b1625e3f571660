//! Power-function exponents of the nested chain and their replica weights.
//!
//! With `Q_1(t) = -t^{a_1}` and `Q_i(t) = t^{a_i}` the nested functional
//! collapses to a weighted geometric mean of the `k+1` replica rows, with
//! weights
//!
//! ```text
//! b_0 = 1 - a_1
//! b_j = (1 - a_{j+1}) a_1 ... a_j      (1 <= j < k)
//! b_k = a_1 ... a_k
//! ```

use serde::{Deserialize, Serialize};

use super::MeasureError;

/// Tolerance on `Σ b_i = 1` accepted by [`b_to_a`].
pub const WEIGHT_SUM_TOL: f64 = 1e-10;

pub fn a_to_b(a: &[f64]) -> Result<Vec<f64>, MeasureError> {
    if a.is_empty() {
        return Err(MeasureError::Domain("exponent chain must be non-empty".into()));
    }
    if let Some((i, v)) = a.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
        return Err(MeasureError::Domain(format!(
            "exponent a_{} = {v} outside [0, 1]",
            i + 1
        )));
    }
    let mut b = Vec::with_capacity(a.len() + 1);
    let mut prefix = 1.0;
    for &ai in a {
        b.push((1.0 - ai) * prefix);
        prefix *= ai;
    }
    b.push(prefix);
    Ok(b)
}

pub fn b_to_a(b: &[f64]) -> Result<Vec<f64>, MeasureError> {
    check_weights(b)?;
    let k = b.len() - 1;
    let mut a = Vec::with_capacity(k);
    // Remaining mass Σ_{i≥j} b_i; summed from the tail so that it stays
    // accurate when the head carries almost all the weight.
    let mut tails = vec![0.0; b.len() + 1];
    for i in (0..b.len()).rev() {
        tails[i] = tails[i + 1] + b[i];
    }
    for j in 0..k {
        let remaining = tails[j];
        if remaining <= 0.0 {
            return Err(MeasureError::DegenerateWeights { prefix: j });
        }
        a.push((1.0 - b[j] / remaining).clamp(0.0, 1.0));
    }
    Ok(a)
}

/// Validates a replica weight vector: at least two entries, all non-negative,
/// summing to one within [`WEIGHT_SUM_TOL`].
pub fn check_weights(b: &[f64]) -> Result<(), MeasureError> {
    if b.len() < 2 {
        return Err(MeasureError::Domain(format!(
            "need at least two replica weights, got {}",
            b.len()
        )));
    }
    if let Some((i, v)) = b.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
        return Err(MeasureError::Domain(format!("weight b_{i} = {v} is negative or not finite")));
    }
    let sum: f64 = b.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(MeasureError::Domain(format!("weights sum to {sum}, not 1")));
    }
    Ok(())
}

/// The exponents `a_1..a_k` together with their cached replica weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChainRepr", into = "ChainRepr")]
pub struct ExponentChain {
    a: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ChainRepr {
    a: Vec<f64>,
}

impl TryFrom<ChainRepr> for ExponentChain {
    type Error = MeasureError;
    fn try_from(r: ChainRepr) -> Result<Self, Self::Error> {
        ExponentChain::new(r.a)
    }
}

impl From<ExponentChain> for ChainRepr {
    fn from(c: ExponentChain) -> Self {
        ChainRepr { a: c.a }
    }
}

impl ExponentChain {
    pub fn new(a: Vec<f64>) -> Result<Self, MeasureError> {
        let b = a_to_b(&a)?;
        Ok(Self { a, b })
    }

    pub fn from_weights(b: &[f64]) -> Result<Self, MeasureError> {
        Self::new(b_to_a(b)?)
    }

    /// The symmetric chain whose weights are all `1/(k+1)`.
    pub fn uniform(k: usize) -> Self {
        // a_j = 1 - 1/(k+2-j)
        let a = (1..=k).map(|j| 1.0 - 1.0 / (k + 2 - j) as f64).collect();
        Self::new(a).expect("uniform exponents lie in [0, 1]")
    }

    pub fn k(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }
}
