use divbound::bounds::{self, BoundKind, Scenario, SweepSpec};
use divbound::mc_sim::{self, SimChannel, SimError, SimScenario};
use divbound::measures::{fuzz_dpi, FuzzConfig};
use divbound::rd::{self, RDPoint, Regime};

use crate::config::{BoundsArgs, DpiArgs, RdArgs, SimulateArgs};
use crate::table::{Cell, Table};

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Budget(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// Cells with `valid = false` under `--strict`.
    Invalid(usize),
    /// DPI violations or evaluation errors.
    Violations(usize),
}

pub struct Outcome {
    pub table: Table,
    pub status: Status,
}

fn usage(msg: impl ToString) -> Failure {
    Failure::Usage(msg.to_string())
}

fn check_sigma2(scenario: Scenario, sigma2: Option<f64>) -> Result<Option<f64>, Failure> {
    match (scenario, sigma2) {
        (Scenario::Fading, None) => Err(usage("--sigma2 is required for the fading scenario")),
        (_, Some(s)) if !(s.is_finite() && s > 0.0) => Err(usage(format!("--sigma2 {s} must be positive"))),
        (Scenario::Awgn, _) => Ok(None),
        (Scenario::Fading, s) => Ok(s),
    }
}

pub fn bounds(a: &BoundsArgs, strict: bool) -> Result<Outcome, Failure> {
    let sigma2 = check_sigma2(a.scenario, a.sigma2)?;
    if a.bounds.contains(&BoundKind::Dpt) && a.k.is_empty() {
        return Err(usage("dpt needs at least one --k"));
    }
    let spec = SweepSpec {
        scenario: a.scenario,
        snr_db: a.snr_db.clone(),
        sigma2,
        ks: a.k.clone(),
        bounds: a.bounds.clone(),
        m: a.m,
        mode: a.mode,
        varrho: a.varrho,
    };
    let rows = bounds::bound_sweep(&spec);
    let mut table = Table::new([
        "scenario", "bound", "k", "M", "snr_db", "sigma2", "mode", "value", "valid", "reason",
    ]);
    let mut invalid = 0;
    for row in rows {
        let r = &row.result;
        invalid += usize::from(!r.valid);
        table.push(vec![
            Cell::Text(row.scenario.to_string()),
            Cell::Text(row.bound.to_string()),
            row.k.map_or(Cell::Empty, |k| Cell::Text(k.to_string())),
            r.chosen_m().map_or(Cell::Empty, |m| Cell::Int(m.into())),
            Cell::Num(row.snr_db),
            Cell::opt(row.sigma2),
            Cell::Text(r.mode.to_string()),
            Cell::Num(r.value),
            Cell::Bool(r.valid),
            r.reason.clone().map_or(Cell::Empty, Cell::Text),
        ]);
    }
    let status = if strict && invalid > 0 { Status::Invalid(invalid) } else { Status::Ok };
    Ok(Outcome { table, status })
}

fn parse_decades(text: &str) -> Result<(i32, i32), Failure> {
    let bad = || usage(format!("--s-decades expects lo:hi with integer decades, got {text:?}"));
    let (lo, hi) = text.split_once(':').ok_or_else(bad)?;
    let (lo, hi): (i32, i32) = (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?);
    if lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

const RD_COLUMNS: [&str; 11] = [
    "s", "k", "C", "F", "G", "D", "R", "identity_residual", "D_high_asym", "D_low_asym", "k2_log_ratio",
];

fn rd_cells(p: &RDPoint) -> Vec<Cell> {
    let k2 = (p.k == 2 && p.s > 10.0).then(|| rd::k2_log_ratio(p.s).ok()).flatten();
    vec![
        Cell::Num(p.s),
        Cell::Int(p.k as u64),
        Cell::Num(p.c),
        Cell::Num(p.f),
        Cell::Num(p.g),
        Cell::Num(p.d),
        Cell::Num(p.r),
        Cell::Num(p.identity_residual()),
        Cell::opt(rd::rd_asymptotic(p.r, p.k, Regime::High).ok()),
        Cell::opt(rd::rd_asymptotic(p.r, p.k, Regime::Low).ok()),
        Cell::opt(k2),
    ]
}

pub fn rd(a: &RdArgs) -> Result<Outcome, Failure> {
    let k = a.k as usize;
    if let Some(rate) = a.invert {
        let p = rd::solve_rate(rate, k).map_err(usage)?;
        let mut table = Table::new(std::iter::once("R_target").chain(RD_COLUMNS));
        let mut row = vec![Cell::Num(rate)];
        row.extend(rd_cells(&p));
        table.push(row);
        return Ok(Outcome { table, status: Status::Ok });
    }
    let s_values: Vec<f64> = if a.s.is_empty() {
        let (lo, hi) = parse_decades(a.s_decades.as_deref().unwrap_or("-3:10"))?;
        let per = a.per_decade as i32;
        (0..=(hi - lo) * per)
            .map(|j| 10f64.powf(lo as f64 + j as f64 / per as f64))
            .collect()
    } else {
        a.s.clone()
    };
    let points = rd::rd_curve(&s_values, k).map_err(usage)?;
    let mut table = Table::new(RD_COLUMNS);
    for p in &points {
        table.push(rd_cells(p));
    }
    Ok(Outcome { table, status: Status::Ok })
}

fn parse_alphabet(text: &str) -> Result<(usize, usize), Failure> {
    let bad = || usage(format!("--alphabet expects INPUTSxOUTPUTS, both at least 2, got {text:?}"));
    let (x, y) = text.split_once(['x', 'X']).ok_or_else(bad)?;
    let (x, y): (usize, usize) = (x.trim().parse().map_err(|_| bad())?, y.trim().parse().map_err(|_| bad())?);
    if x < 2 || y < 2 {
        return Err(bad());
    }
    Ok((x, y))
}

pub fn dpi(a: &DpiArgs, seed: u64) -> Result<Outcome, Failure> {
    let (max_inputs, max_outputs) = parse_alphabet(&a.alphabet)?;
    let config = FuzzConfig {
        instances: a.instances,
        seed,
        max_inputs,
        max_outputs,
        max_k: a.k as usize,
    };
    let report = fuzz_dpi(&config);
    let mut table = Table::new([
        "instances",
        "seed",
        "alphabet",
        "max_k",
        "violations",
        "errors",
        "min_slack",
        "min_slack_index",
        "min_slack_shape",
        "min_slack_a",
        "min_slack_replicas",
        "first_error",
    ]);
    let join = |v: &[String]| v.join(" ");
    let (slack, index, shape, a_text, reps) = match &report.min_slack {
        Some(m) => (
            Cell::Num(m.report.slack),
            Cell::Int(m.index as u64),
            Cell::Text(format!("{}x{}x{}", m.n_inputs, m.n_outputs, m.n_degraded)),
            Cell::Text(join(&m.a.iter().map(|v| v.to_string()).collect::<Vec<_>>())),
            Cell::Text(join(&m.replicas.iter().map(|v| v.to_string()).collect::<Vec<_>>())),
        ),
        None => (Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty),
    };
    table.push(vec![
        Cell::Int(a.instances as u64),
        Cell::Int(seed),
        Cell::Text(format!("{max_inputs}x{max_outputs}")),
        Cell::Int(a.k),
        Cell::Int(report.violations as u64),
        Cell::Int(report.errors as u64),
        slack,
        index,
        shape,
        a_text,
        reps,
        report.first_error.clone().map_or(Cell::Empty, Cell::Text),
    ]);
    let bad = report.violations + report.errors;
    let status = if bad > 0 { Status::Violations(bad) } else { Status::Ok };
    Ok(Outcome { table, status })
}

pub fn simulate(a: &SimulateArgs, seed: u64) -> Result<Outcome, Failure> {
    let sigma2 = check_sigma2(a.scenario, a.sigma2)?;
    let channel = match sigma2 {
        Some(sigma2) => SimChannel::Fading { sigma2 },
        None => SimChannel::Awgn,
    };
    let scenarios: Vec<SimScenario> = a
        .snr_db
        .iter()
        .map(|&db| SimScenario {
            channel,
            grid_size: a.n,
            snr: bounds::db_to_linear(db),
            trials: a.trials,
            seed,
        })
        .collect();
    // Reject the whole run before spending any time on it.
    for s in &scenarios {
        s.validate().map_err(|e| match e {
            SimError::Budget { .. } => Failure::Budget(e.to_string()),
            SimError::Invalid(_) => usage(e),
        })?;
    }
    let results = scenarios
        .iter()
        .map(|s| mc_sim::simulate_mse(s).map_err(usage))
        .collect::<Result<Vec<_>, _>>()?;
    let margin_names: Vec<String> = results
        .first()
        .map(|r| r.margins.iter().map(|m| format!("margin_{}", m.name)).collect())
        .unwrap_or_default();
    let mut columns: Vec<String> = ["scenario", "snr_db", "sigma2", "N", "trials", "seed", "mse", "ci95", "floor"]
        .map(String::from)
        .to_vec();
    columns.extend(margin_names);
    let mut table = Table::new(columns);
    for (r, &db) in results.iter().zip(&a.snr_db) {
        let mut row = vec![
            Cell::Text(a.scenario.to_string()),
            Cell::Num(db),
            Cell::opt(sigma2),
            Cell::Int(a.n.into()),
            Cell::Int(a.trials),
            Cell::Int(seed),
            Cell::Num(r.mse),
            Cell::Num(r.ci95),
            Cell::Num(r.floor),
        ];
        row.extend(r.margins.iter().map(|m| if m.valid { Cell::Num(m.margin) } else { Cell::Empty }));
        table.push(row);
    }
    Ok(Outcome { table, status: Status::Ok })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decade_and_alphabet_parsing() {
        assert_eq!(parse_decades("-3:10").unwrap(), (-3, 10));
        assert!(parse_decades("3:1").is_err());
        assert!(parse_decades("3").is_err());
        assert_eq!(parse_alphabet("6x8").unwrap(), (6, 8));
        assert!(parse_alphabet("1x8").is_err());
        assert!(parse_alphabet("six").is_err());
    }
}
