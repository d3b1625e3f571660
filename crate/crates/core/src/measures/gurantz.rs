use serde::{Deserialize, Serialize};

use super::exponents::{check_weights, ExponentChain};
use super::{FiniteChannel, MeasureError};

/// Input symbols `x_0, x_1, ..., x_k` fed to the replicas; repetitions allowed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReplicaAssignment(pub Vec<usize>);

impl ReplicaAssignment {
    pub fn new(indices: Vec<usize>) -> Self {
        Self(indices)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub(crate) fn check(&self, channel: &FiniteChannel) -> Result<(), MeasureError> {
        if let Some(&x) = self.0.iter().find(|&&x| x >= channel.n_inputs()) {
            return Err(MeasureError::ReplicaOutOfRange {
                index: x,
                n_inputs: channel.n_inputs(),
            });
        }
        Ok(())
    }
}

/// `-Σ_y Π_i P(y|x_i)^{b_i}`, with `0^0 = 1`.
pub fn gen_bhattacharyya(
    channel: &FiniteChannel,
    replicas: &ReplicaAssignment,
    b: &[f64],
) -> Result<f64, MeasureError> {
    if replicas.len() != b.len() {
        return Err(MeasureError::LengthMismatch {
            replicas: replicas.len(),
            expected: b.len(),
        });
    }
    check_weights(b)?;
    replicas.check(channel)?;
    let rows: Vec<&[f64]> = replicas.indices().iter().map(|&x| channel.row(x)).collect();
    let total: f64 = (0..channel.n_outputs())
        .map(|y| {
            rows.iter()
                .zip(b)
                .map(|(row, &w)| if w == 0.0 { 1.0 } else { row[y].powf(w) })
                .product::<f64>()
        })
        .sum();
    Ok(-total)
}

/// The nested functional with power functions, evaluated literally from the
/// innermost likelihood ratio outwards:
///
/// ```text
/// -Σ_y P(y|x_0) (L_1 (L_2 ( ... (L_k)^{a_k} ... )^{a_2})^{a_1},   L_i = P(y|x_i)/P(y|x_{i-1})
/// ```
///
/// Outputs with `P(y|x_0) = 0` contribute nothing. Inside the nest a ratio
/// `0/0` is taken as 0, and a positive numerator over a zero denominator is
/// an error. When `a_1 = 1` the first convention drops mass that the product
/// form keeps, so the two agree only on channels where `P(y|x_0) > 0`
/// wherever `P(y|x_1) > 0`.
pub fn gurantz_eval(
    channel: &FiniteChannel,
    replicas: &ReplicaAssignment,
    chain: &ExponentChain,
) -> Result<f64, MeasureError> {
    let k = chain.k();
    if replicas.len() != k + 1 {
        return Err(MeasureError::LengthMismatch {
            replicas: replicas.len(),
            expected: k + 1,
        });
    }
    replicas.check(channel)?;
    let a = chain.a();
    let xs = replicas.indices();
    let mut total = 0.0;
    for y in 0..channel.n_outputs() {
        let p0 = channel.prob(xs[0], y);
        if p0 == 0.0 {
            continue;
        }
        let mut inner = 1.0;
        for level in (1..=k).rev() {
            let num = channel.prob(xs[level], y);
            let den = channel.prob(xs[level - 1], y);
            let ratio = if den > 0.0 {
                num / den
            } else if num == 0.0 {
                0.0
            } else {
                return Err(MeasureError::ZeroDenominator { y, level });
            };
            inner = (ratio * inner).powf(a[level - 1]);
        }
        total += p0 * inner;
    }
    Ok(-total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::exponents::a_to_b;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bsc(p: f64) -> FiniteChannel {
        FiniteChannel::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]]).unwrap()
    }

    #[test]
    fn identical_rows_give_minus_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ch = FiniteChannel::random_dirichlet(&mut rng, 3, 5);
        for b in [vec![0.2, 0.3, 0.5], vec![1.0 / 3.0; 3], vec![0.0, 0.0, 1.0]] {
            let v = gen_bhattacharyya(&ch, &ReplicaAssignment(vec![2, 2, 2]), &b).unwrap();
            assert!((v + 1.0).abs() < 1e-15, "{v}");
        }
    }

    #[test]
    fn bsc_bhattacharyya() {
        let v = gen_bhattacharyya(&bsc(0.1), &ReplicaAssignment(vec![0, 1]), &[0.5, 0.5]).unwrap();
        // 2 sqrt(0.1 * 0.9)
        assert!((v + 0.6).abs() < 1e-15, "{v}");
        let g = gurantz_eval(
            &bsc(0.1),
            &ReplicaAssignment(vec![0, 1]),
            &ExponentChain::new(vec![0.5]).unwrap(),
        )
        .unwrap();
        assert!((g + 0.6).abs() < 1e-15, "{g}");
    }

    #[test]
    fn random_channel_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ch = FiniteChannel::random_dirichlet(&mut rng, 3, 4);
        let rows = ch.rows();
        let oracle: f64 = (0..4).map(|y| (rows[0][y] * rows[1][y] * rows[2][y]).cbrt()).sum();
        let v = gen_bhattacharyya(&ch, &ReplicaAssignment(vec![0, 1, 2]), &[1.0 / 3.0; 3]).unwrap();
        assert!((v + oracle).abs() < 1e-12, "{v} vs {oracle}");
    }

    #[test]
    fn unit_top_exponent_is_minus_one() {
        let g = gurantz_eval(
            &bsc(0.1),
            &ReplicaAssignment(vec![0, 1]),
            &ExponentChain::new(vec![1.0]).unwrap(),
        )
        .unwrap();
        assert!((g + 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_leading_exponent_is_constant() {
        // a_1 = 0 puts all weight on x_0 whatever follows.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ch = FiniteChannel::random_dirichlet(&mut rng, 4, 6);
        let chain = ExponentChain::new(vec![0.0, 0.3, 0.9]).unwrap();
        let g = gurantz_eval(&ch, &ReplicaAssignment(vec![0, 1, 2, 3]), &chain).unwrap();
        assert!((g + 1.0).abs() < 1e-14);
    }

    #[test]
    fn nested_matches_weighted_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let nx = rng.random_range(2..6);
            let ny = rng.random_range(2..8);
            let k = rng.random_range(1..5);
            let ch = FiniteChannel::random_dirichlet(&mut rng, nx, ny);
            let a: Vec<f64> = (0..k).map(|_| rng.random()).collect();
            let reps = ReplicaAssignment((0..=k).map(|_| rng.random_range(0..nx)).collect());
            let chain = ExponentChain::new(a.clone()).unwrap();
            let g = gurantz_eval(&ch, &reps, &chain).unwrap();
            let w = gen_bhattacharyya(&ch, &reps, &a_to_b(&a).unwrap()).unwrap();
            assert!((g - w).abs() < 1e-12, "{g} vs {w}");
            assert!((-1.0 - 1e-12..=0.0).contains(&g));
        }
    }

    #[test]
    fn zero_handling() {
        let ch = FiniteChannel::new(vec![
            vec![0.5, 0.5, 0.0],
            vec![0.5, 0.0, 0.5],
            vec![0.0, 0.5, 0.5],
        ])
        .unwrap();
        let chain = ExponentChain::new(vec![0.5, 0.5]).unwrap();
        // x_1 = 1 has zero mass at y = 1 where x_2 = 2 has mass: L_2 = 0.5 / 0.
        let err = gurantz_eval(&ch, &ReplicaAssignment(vec![0, 1, 2]), &chain).unwrap_err();
        assert!(matches!(err, MeasureError::ZeroDenominator { y: 1, level: 2 }), "{err:?}");
        // With x_2 = x_1 every zero is matched, and the value equals the product form.
        let reps = ReplicaAssignment(vec![0, 1, 1]);
        let g = gurantz_eval(&ch, &reps, &chain).unwrap();
        let w = gen_bhattacharyya(&ch, &reps, chain.b()).unwrap();
        assert!((g - w).abs() < 1e-15);
    }

    #[test]
    fn length_and_range_errors() {
        let ch = bsc(0.2);
        let chain = ExponentChain::new(vec![0.5]).unwrap();
        assert!(matches!(
            gurantz_eval(&ch, &ReplicaAssignment(vec![0, 1, 1]), &chain),
            Err(MeasureError::LengthMismatch { .. })
        ));
        assert!(matches!(
            gurantz_eval(&ch, &ReplicaAssignment(vec![0, 2]), &chain),
            Err(MeasureError::ReplicaOutOfRange { index: 2, .. })
        ));
        assert!(gen_bhattacharyya(&ch, &ReplicaAssignment(vec![0, 1]), &[0.7, 0.7]).is_err());
    }
}
