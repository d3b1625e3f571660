use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::MeasureError;

/// Row-sum tolerance for a conditional distribution.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// A conditional distribution `P(y|x)` on finite alphabets, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelRepr", into = "ChannelRepr")]
pub struct FiniteChannel {
    n_inputs: usize,
    n_outputs: usize,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ChannelRepr {
    rows: Vec<Vec<f64>>,
}

impl TryFrom<ChannelRepr> for FiniteChannel {
    type Error = MeasureError;

    fn try_from(repr: ChannelRepr) -> Result<Self, Self::Error> {
        FiniteChannel::new(repr.rows)
    }
}

impl From<FiniteChannel> for ChannelRepr {
    fn from(ch: FiniteChannel) -> Self {
        ChannelRepr { rows: ch.rows() }
    }
}

impl FiniteChannel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, MeasureError> {
        Self::with_min_inputs(rows, 2)
    }

    /// Like [`FiniteChannel::new`] but allows a single input row. Only used for
    /// degradations out of a one-letter output alphabet.
    fn with_min_inputs(rows: Vec<Vec<f64>>, min_inputs: usize) -> Result<Self, MeasureError> {
        let n_inputs = rows.len();
        if n_inputs < min_inputs {
            return Err(MeasureError::InvalidChannel(format!(
                "need at least {min_inputs} input rows, got {n_inputs}"
            )));
        }
        let n_outputs = rows[0].len();
        if n_outputs == 0 {
            return Err(MeasureError::InvalidChannel("empty output alphabet".into()));
        }
        let mut probs = Vec::with_capacity(n_inputs * n_outputs);
        for (x, row) in rows.iter().enumerate() {
            if row.len() != n_outputs {
                return Err(MeasureError::InvalidChannel(format!(
                    "row {x} has {} entries, expected {n_outputs}",
                    row.len()
                )));
            }
            if let Some(p) = row.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
                return Err(MeasureError::InvalidChannel(format!(
                    "row {x} has invalid entry {p}"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(MeasureError::InvalidChannel(format!(
                    "row {x} sums to {sum}"
                )));
            }
            probs.extend_from_slice(row);
        }
        Ok(Self {
            n_inputs,
            n_outputs,
            probs,
        })
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    #[inline]
    pub fn row(&self, x: usize) -> &[f64] {
        &self.probs[x * self.n_outputs..(x + 1) * self.n_outputs]
    }

    #[inline]
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.probs[x * self.n_outputs + y]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_inputs).map(|x| self.row(x).to_vec()).collect()
    }

    /// Cascade `self` (X→Y) with `degradation` (Y→Z), giving X→Z.
    pub fn compose(&self, degradation: &FiniteChannel) -> Result<FiniteChannel, MeasureError> {
        if degradation.n_inputs != self.n_outputs {
            return Err(MeasureError::DimensionMismatch {
                expected: self.n_outputs,
                found: degradation.n_inputs,
            });
        }
        let nz = degradation.n_outputs;
        let mut probs = vec![0.0; self.n_inputs * nz];
        for x in 0..self.n_inputs {
            let out = &mut probs[x * nz..(x + 1) * nz];
            for (y, &pyx) in self.row(x).iter().enumerate() {
                if pyx == 0.0 {
                    continue;
                }
                for (o, &pzy) in out.iter_mut().zip(degradation.row(y)) {
                    *o += pyx * pzy;
                }
            }
        }
        Ok(FiniteChannel {
            n_inputs: self.n_inputs,
            n_outputs: nz,
            probs,
        })
    }

    pub fn identity(n: usize) -> Result<FiniteChannel, MeasureError> {
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::with_min_inputs(rows, 1)
    }

    /// The channel that maps every input to a single output symbol.
    pub fn collapse(n_inputs: usize) -> Result<FiniteChannel, MeasureError> {
        Self::with_min_inputs(vec![vec![1.0]; n_inputs], 1)
    }

    /// Deterministic map `y ↦ g[y]` as a channel onto `n_outputs` symbols.
    pub fn deterministic(map: &[usize], n_outputs: usize) -> Result<FiniteChannel, MeasureError> {
        let rows = map
            .iter()
            .map(|&v| {
                if v >= n_outputs {
                    return Err(MeasureError::InvalidChannel(format!(
                        "map target {v} outside output alphabet of size {n_outputs}"
                    )));
                }
                let mut row = vec![0.0; n_outputs];
                row[v] = 1.0;
                Ok(row)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::with_min_inputs(rows, 1)
    }

    /// Rows drawn independently from the flat Dirichlet distribution.
    ///
    /// Accepts `n_inputs == 1` so that it can also produce degradations
    /// `Y→Z` of an arbitrary output alphabet.
    pub fn random_dirichlet<R: Rng + ?Sized>(
        rng: &mut R,
        n_inputs: usize,
        n_outputs: usize,
    ) -> FiniteChannel {
        assert!(n_inputs >= 1 && n_outputs >= 1);
        let mut probs = Vec::with_capacity(n_inputs * n_outputs);
        for _ in 0..n_inputs {
            probs.extend(random_simplex(rng, n_outputs));
        }
        FiniteChannel {
            n_inputs,
            n_outputs,
            probs,
        }
    }
}

/// A point drawn from the flat Dirichlet distribution on the `n`-simplex.
/// Every coordinate is strictly positive.
pub fn random_simplex<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            let e: f64 = Exp1.sample(rng);
            e.max(f64::MIN_POSITIVE)
        })
        .collect();
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|p| *p /= total);
    v
}
