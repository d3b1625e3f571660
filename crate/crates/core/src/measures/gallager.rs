use super::gurantz::{gen_bhattacharyya, ReplicaAssignment};
use super::{FiniteChannel, MeasureError, ROW_SUM_TOL};

fn check_distribution(p: &[f64], channel: &FiniteChannel) -> Result<(), MeasureError> {
    if p.len() != channel.n_inputs() {
        return Err(MeasureError::DimensionMismatch {
            expected: channel.n_inputs(),
            found: p.len(),
        });
    }
    if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(MeasureError::Domain("input distribution has a negative entry".into()));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e3 * ROW_SUM_TOL {
        return Err(MeasureError::Domain(format!("input distribution sums to {s}")));
    }
    Ok(())
}

/// `E_0(ρ, P) = -ln Σ_y [Σ_x P(x) P(y|x)^{1/(1+ρ)}]^{1+ρ}`.
pub fn gallager_e0(input_dist: &[f64], channel: &FiniteChannel, rho: f64) -> Result<f64, MeasureError> {
    check_distribution(input_dist, channel)?;
    if !(rho.is_finite() && rho >= 0.0) {
        return Err(MeasureError::Domain(format!("rho = {rho} must be non-negative")));
    }
    let e = 1.0 / (1.0 + rho);
    let total: f64 = (0..channel.n_outputs())
        .map(|y| {
            let inner: f64 = input_dist
                .iter()
                .enumerate()
                .filter(|(_, &px)| px > 0.0)
                .map(|(x, &px)| px * channel.prob(x, y).powf(e))
                .sum();
            inner.powf(1.0 + rho)
        })
        .sum();
    Ok(-total.ln())
}

/// `E[G]` over `b.len()` i.i.d. replicas drawn from `input_dist`, by
/// enumerating every replica tuple. Cost is `n_inputs^{len(b)}` measure
/// evaluations.
pub fn replica_average(
    channel: &FiniteChannel,
    input_dist: &[f64],
    b: &[f64],
) -> Result<f64, MeasureError> {
    check_distribution(input_dist, channel)?;
    let n = channel.n_inputs();
    let m = b.len();
    let mut idx = vec![0usize; m];
    let mut total = 0.0;
    loop {
        let w: f64 = idx.iter().map(|&x| input_dist[x]).product();
        if w > 0.0 {
            total += w * gen_bhattacharyya(channel, &ReplicaAssignment(idx.clone()), b)?;
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == m {
                return Ok(total);
            }
            idx[pos] += 1;
            if idx[pos] < n {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}
