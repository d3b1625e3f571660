//! Bayesian lower bounds on the mean squared error of estimating a uniform
//! parameter on the unit circle: the data-processing bound (DPT) against the
//! Weiss–Weinstein (WWB), channel-coding (CC) and Chazan–Zakai–Ziv (CZZB)
//! bounds.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::channel_measures::{self as cm, ChannelError};
use crate::rd::{self, RdError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BoundError {
    #[error("invalid query: {0}")]
    Query(String),
    #[error("unknown {what} `{value}`")]
    Parse { what: &'static str, value: String },
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

macro_rules! keyword_enum {
    ($name:ident, $what:literal, { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "lowercase")]
        pub enum $name { $($variant),+ }

        impl $name {
            pub fn as_str(&self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = BoundError;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s.to_ascii_lowercase().as_str() {
                    $($text => Ok($name::$variant),)+
                    _ => Err(BoundError::Parse { what: $what, value: s.to_string() }),
                }
            }
        }
    };
}

keyword_enum!(Scenario, "scenario", { Awgn => "awgn", Fading => "fading" });
keyword_enum!(BoundKind, "bound", { Dpt => "dpt", Wwb => "wwb", Cc => "cc", Czzb => "czzb" });
keyword_enum!(Mode, "mode", { Exact => "exact", Asymptotic => "asymptotic" });

/// Chain length for the data-processing bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum KSpec {
    Finite(usize),
    Infinity,
}

impl fmt::Display for KSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KSpec::Finite(k) => write!(f, "{k}"),
            KSpec::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for KSpec {
    type Err = BoundError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "inf" | "infinity" => Ok(KSpec::Infinity),
            t => match t.parse::<usize>() {
                Ok(k) if k >= 1 => Ok(KSpec::Finite(k)),
                _ => Err(BoundError::Parse { what: "k", value: s.to_string() }),
            },
        }
    }
}

/// Number of hypotheses for the channel-coding bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MSpec {
    Fixed(u32),
    Optimize,
}

impl fmt::Display for MSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MSpec::Fixed(m) => write!(f, "{m}"),
            MSpec::Optimize => f.write_str("optimize"),
        }
    }
}

impl FromStr for MSpec {
    type Err = BoundError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("optimize") {
            return Ok(MSpec::Optimize);
        }
        s.parse::<u32>()
            .map(MSpec::Fixed)
            .map_err(|_| BoundError::Parse { what: "M", value: s.to_string() })
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NumOrText {
    Num(u64),
    Text(String),
}

macro_rules! number_or_keyword_serde {
    ($name:ident, $finite:ident) => {
        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                match self {
                    $name::$finite(v) => s.serialize_u64(*v as u64),
                    other => s.serialize_str(&other.to_string()),
                }
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let text = match NumOrText::deserialize(d)? {
                    NumOrText::Num(n) => n.to_string(),
                    NumOrText::Text(t) => t,
                };
                text.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

number_or_keyword_serde!(KSpec, Finite);
number_or_keyword_serde!(MSpec, Fixed);

/// Largest M scanned by `MSpec::Optimize`.
pub const M_MAX: u32 = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundQuery {
    pub scenario: Scenario,
    pub bound: BoundKind,
    /// Chain length (dpt only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<KSpec>,
    /// Linear `E/N0`.
    pub snr: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    /// Mean signal correlation (awgn dpt).
    #[serde(default)]
    pub varrho: f64,
    #[serde(default, rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<MSpec>,
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub value: f64,
    pub valid: bool,
    /// Mode actually used; asymptotic-only bounds and `k = ∞` report
    /// `asymptotic` whatever was asked for.
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub detail: BTreeMap<String, f64>,
}

impl BoundResult {
    fn ok(value: f64, mode: Mode) -> Self {
        Self {
            value,
            valid: true,
            mode,
            reason: None,
            detail: BTreeMap::new(),
        }
    }

    fn invalid(mode: Mode, reason: impl Into<String>) -> Self {
        Self {
            value: 0.0,
            valid: false,
            mode,
            reason: Some(reason.into()),
            detail: BTreeMap::new(),
        }
    }

    fn with(mut self, key: &str, v: f64) -> Self {
        self.detail.insert(key.to_string(), v);
        self
    }

    /// The chosen number of hypotheses, when the bound picked one.
    pub fn chosen_m(&self) -> Option<u32> {
        self.detail.get("M").map(|&m| m as u32)
    }
}

/// Gaussian tail `Q(x) = P(N(0,1) > x) = erfc(x/√2)/2`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// `g_k = (1/(4√2)) (1-2/k)^k (1+1/k)^{(k+1)/2}`: fading dpt constant for k > 2.
pub fn g_k(k: usize) -> f64 {
    let kf = k as f64;
    (1.0 - 2.0 / kf).powi(k as i32) * (1.0 + 1.0 / kf).powf(0.5 * (kf + 1.0)) / (4.0 * SQRT_2)
}

/// `lim g_k = 1/(4√2 e^{3/2})`.
pub fn g_inf() -> f64 {
    1.0 / (4.0 * SQRT_2 * 1.5f64.exp())
}

/// `P_e` constant of the CZZB reduction: `f_1 e^{-√(μ''/2)}/8` with the
/// high-SNR `μ''(1/2) = 4`.
pub fn czzb_pe_constant() -> f64 {
    czzb_pe_constant_for(4.0)
}

fn czzb_pe_constant_for(mu2: f64) -> f64 {
    cm::f_k(1) * (-(0.5 * (2.0 * mu2).sqrt())).exp() / 8.0
}

/// `∫_0^1 h(1-h) dh`.
pub const CZZB_H_INTEGRAL: f64 = 1.0 / 6.0;

fn check_snr(snr: f64) -> Result<(), BoundError> {
    if !(snr.is_finite() && snr >= 0.0) {
        return Err(BoundError::Query(format!("snr {snr} must be finite and non-negative")));
    }
    Ok(())
}

fn require_sigma2(q: &BoundQuery) -> Result<f64, BoundError> {
    match q.sigma2 {
        Some(s) if s.is_finite() && s > 0.0 => Ok(s),
        Some(s) => Err(BoundError::Query(format!("sigma2 {s} must be positive"))),
        None => Err(BoundError::Query("fading queries require sigma2".into())),
    }
}

fn check_m(m: u32) -> Result<(), BoundError> {
    if m < 4 || !m.is_multiple_of(2) {
        return Err(BoundError::Query(format!("M = {m} must be even and at least 4")));
    }
    Ok(())
}

fn rd_invalid(mode: Mode, ig: f64, e: RdError) -> BoundResult {
    BoundResult::invalid(mode, format!("rate {ig:e} not invertible: {e}")).with("ig", ig)
}

/// Solves `R(D) = I_G` on the parametric curve.
fn dpt_exact(ig: f64, k: usize) -> BoundResult {
    if ig <= -1.0 + 1e-15 {
        return BoundResult::invalid(Mode::Exact, "I_G at -1: rate out of range").with("ig", ig);
    }
    match rd::solve_rate(ig, k) {
        Ok(p) => BoundResult::ok(p.d, Mode::Exact).with("ig", ig).with("s_star", p.s),
        // Past the top of the s range the high-resolution form is accurate
        // and sits below the parametric curve, so it is still a lower bound.
        Err(RdError::OutOfRange { target, hi, .. }) if target > hi && k != 2 => {
            match rd::rd_asymptotic(ig, k, rd::Regime::High) {
                Ok(d) => BoundResult::ok(d, Mode::Exact)
                    .with("ig", ig)
                    .with("beyond_s_max", 1.0),
                Err(e) => rd_invalid(Mode::Exact, ig, e),
            }
        }
        Err(e) => rd_invalid(Mode::Exact, ig, e),
    }
}

pub fn dpt_bound(q: &BoundQuery) -> Result<BoundResult, BoundError> {
    check_snr(q.snr)?;
    let k = q.k.ok_or_else(|| BoundError::Query("dpt requires k".into()))?;
    let x = q.snr;
    let mode = match k {
        KSpec::Infinity => Mode::Asymptotic,
        KSpec::Finite(_) => q.mode,
    };
    let fell_back = mode != q.mode;
    let mut r = match q.scenario {
        Scenario::Awgn => {
            if !(0.0..=1.0).contains(&q.varrho) {
                return Err(BoundError::Query(format!("varrho {} outside [0, 1]", q.varrho)));
            }
            let e = (1.0 - q.varrho) * x;
            match (mode, k) {
                (Mode::Exact, KSpec::Finite(k)) => dpt_exact(cm::awgn_ig_jensen(q.varrho, k, x)?, k),
                (_, KSpec::Finite(1)) => BoundResult::ok((-e).exp() / (16.0 * rd::C1 * rd::C1), mode).with("exponent", e),
                (_, KSpec::Finite(2)) => {
                    BoundResult::invalid(mode, "k = 2: exponent only, no closed-form prefactor")
                        .with("exponent", 2.0 * e / 3.0)
                }
                (_, KSpec::Finite(k)) => {
                    let kf = k as f64;
                    let expo = e * kf / (kf + 1.0);
                    BoundResult::ok(0.25 * (1.0 - 2.0 / kf).powi(k as i32) * (-expo).exp(), mode)
                        .with("exponent", expo)
                }
                (_, KSpec::Infinity) => {
                    BoundResult::ok(0.25 * (-2.0f64).exp() * (-e).exp(), mode).with("exponent", e)
                }
            }
        }
        Scenario::Fading => {
            let s2 = require_sigma2(q)?;
            let sigma = s2.sqrt();
            match (mode, k) {
                (Mode::Exact, KSpec::Finite(k)) => {
                    let ig = cm::fading_ig_closed(k, x, s2)?;
                    dpt_exact(ig, k)
                }
                (_, KSpec::Finite(1)) => {
                    // R²/(16c₁²) with R ≈ -f_1/(σ√x)
                    let f1 = cm::f_k(1);
                    BoundResult::ok(f1 * f1 / (16.0 * rd::C1 * rd::C1 * s2 * x), mode)
                }
                (_, KSpec::Finite(2)) => {
                    BoundResult::invalid(mode, "k = 2: no closed-form high-resolution distortion")
                }
                (_, KSpec::Finite(k)) => {
                    let g = g_k(k);
                    BoundResult::ok(g / (sigma * x.sqrt()), mode).with("g_k", g)
                }
                (_, KSpec::Infinity) => {
                    let g = g_inf();
                    BoundResult::ok(g / (sigma * x.sqrt()), mode).with("g_k", g)
                }
            }
        }
    };
    if fell_back {
        r = r.with("fallback_asymptotic", 1.0);
    }
    Ok(r)
}

/// Modulation-independent WWB for AWGN: `e^{-x}/(2(1-e^{-x}))`.
pub fn wwb_universal_awgn(snr: f64) -> Result<BoundResult, BoundError> {
    check_snr(snr)?;
    if snr == 0.0 {
        return Ok(BoundResult::invalid(Mode::Exact, "snr must be positive"));
    }
    Ok(BoundResult::ok(0.5 / snr.exp_m1(), Mode::Exact))
}

/// Fading WWB at `s = 1/2`: `f_1²/(σ²x) / (2[1 - f_1/(σ√x)])`, valid while
/// the bracket is positive.
pub fn wwb_fading(snr: f64, sigma2: f64) -> Result<BoundResult, BoundError> {
    check_snr(snr)?;
    if !(sigma2 > 0.0) {
        return Err(BoundError::Query(format!("sigma2 {sigma2} must be positive")));
    }
    let f1 = cm::f_k(1);
    let ratio = f1 / (sigma2.sqrt() * snr.sqrt());
    if !(ratio < 1.0) {
        return Ok(BoundResult::invalid(Mode::Exact, "denominator 1 - f_1/(σ√x) is not positive").with("ratio", ratio));
    }
    let v = f1 * f1 / (sigma2 * snr) / (2.0 * (1.0 - ratio));
    Ok(BoundResult::ok(v, Mode::Exact).with("ratio", ratio))
}

fn best_m<F: Fn(u32) -> f64>(f: F) -> (u32, f64) {
    (4..=M_MAX)
        .step_by(2)
        .map(|m| (m, f(m)))
        .fold((4, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best })
}

fn cc_awgn_value(x: f64, m: u32) -> f64 {
    let mf = m as f64;
    q_function((x * mf / (mf - 2.0)).sqrt()) / (8.0 * mf * mf)
}

/// `Q(√(x M/(M-2)))/(8M²)`.
pub fn cc_bound_awgn(snr: f64, m: MSpec) -> Result<BoundResult, BoundError> {
    check_snr(snr)?;
    let (m, v) = match m {
        MSpec::Fixed(m) => {
            check_m(m)?;
            (m, cc_awgn_value(snr, m))
        }
        MSpec::Optimize => best_m(|m| cc_awgn_value(snr, m)),
    };
    Ok(BoundResult::ok(v, Mode::Exact).with("M", m as f64))
}

fn cc_fading_value(x: f64, sigma2: f64, m: u32, mode: Mode) -> f64 {
    let mf = m as f64;
    match mode {
        Mode::Exact => 1.0 / (8.0 * PI * mf * mf * (1.0 + sigma2 * x * mf / (mf - 2.0)).sqrt()),
        Mode::Asymptotic => ((mf - 2.0) / mf.powi(5)).sqrt() / (8.0 * PI * (sigma2 * x).sqrt()),
    }
}

/// `1/(8πM²√(1+σ²xM/(M-2)))`, or its high-SNR form `√((M-2)/M⁵)/(8πσ√x)`.
pub fn cc_bound_fading(snr: f64, sigma2: f64, m: MSpec, mode: Mode) -> Result<BoundResult, BoundError> {
    check_snr(snr)?;
    if !(sigma2 > 0.0) {
        return Err(BoundError::Query(format!("sigma2 {sigma2} must be positive")));
    }
    if mode == Mode::Asymptotic && snr == 0.0 {
        return Ok(BoundResult::invalid(mode, "asymptotic form needs snr > 0"));
    }
    let (m, v) = match m {
        MSpec::Fixed(m) => {
            check_m(m)?;
            (m, cc_fading_value(snr, sigma2, m, mode))
        }
        MSpec::Optimize => best_m(|m| cc_fading_value(snr, sigma2, m, mode)),
    };
    Ok(BoundResult::ok(v, mode).with("M", m as f64))
}

/// High-SNR CZZB for the fading channel: `P_e h`-integral `= 0.042977/6/(σ√x)`.
///
/// `detail` also carries the Shannon–Gallager–Berlekamp bound at `s = 1/2`
/// evaluated at this snr, and the constants the reading `μ''(1/2) = 1/4`
/// would give.
pub fn czzb_fading(snr: f64, sigma2: f64) -> Result<BoundResult, BoundError> {
    check_snr(snr)?;
    if !(sigma2 > 0.0) {
        return Err(BoundError::Query(format!("sigma2 {sigma2} must be positive")));
    }
    if snr == 0.0 {
        return Ok(BoundResult::invalid(Mode::Asymptotic, "asymptotic form needs snr > 0"));
    }
    let pe = czzb_pe_constant();
    let scale = 1.0 / (sigma2.sqrt() * snr.sqrt());
    // min{A, B}/2 at s = 1/2, where μ' = 0 makes A = B.
    let mu = cm::fading_mu_log(0.5, snr, sigma2)?;
    let mu2 = cm::fading_mu_d2(0.5, snr, sigma2)?;
    let sgb = 0.125 * (mu - 0.5 * (2.0 * mu2).sqrt()).exp();
    let alt = czzb_pe_constant_for(0.25);
    Ok(BoundResult::ok(pe * CZZB_H_INTEGRAL * scale, Mode::Asymptotic)
        .with("pe_constant", pe)
        .with("h_integral", CZZB_H_INTEGRAL)
        .with("mu2_half", mu2)
        .with("pe_sgb_at_snr", sgb)
        .with("value_sgb_at_snr", sgb * CZZB_H_INTEGRAL)
        .with("pe_constant_mu2_quarter", alt)
        .with("value_constant_mu2_quarter", alt * CZZB_H_INTEGRAL))
}

/// Evaluates any query.
pub fn evaluate(q: &BoundQuery) -> Result<BoundResult, BoundError> {
    match (q.bound, q.scenario) {
        (BoundKind::Dpt, _) => dpt_bound(q),
        (BoundKind::Wwb, Scenario::Awgn) => wwb_universal_awgn(q.snr),
        (BoundKind::Wwb, Scenario::Fading) => wwb_fading(q.snr, require_sigma2(q)?),
        (BoundKind::Cc, Scenario::Awgn) => cc_bound_awgn(q.snr, q.m.unwrap_or(MSpec::Optimize)),
        (BoundKind::Cc, Scenario::Fading) => {
            cc_bound_fading(q.snr, require_sigma2(q)?, q.m.unwrap_or(MSpec::Optimize), q.mode)
        }
        (BoundKind::Czzb, Scenario::Fading) => czzb_fading(q.snr, require_sigma2(q)?),
        (BoundKind::Czzb, Scenario::Awgn) => Ok(BoundResult::invalid(
            Mode::Asymptotic,
            "czzb is only available for the fading scenario",
        )),
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub scenario: Scenario,
    pub snr_db: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    pub ks: Vec<KSpec>,
    pub bounds: Vec<BoundKind>,
    #[serde(rename = "M")]
    pub m: MSpec,
    pub mode: Mode,
    #[serde(default)]
    pub varrho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scenario: Scenario,
    pub bound: BoundKind,
    pub k: Option<KSpec>,
    pub snr_db: f64,
    pub sigma2: Option<f64>,
    pub result: BoundResult,
}

/// Every requested bound at every grid point (dpt once per k), sorted by
/// (bound, k, snr). Bad cells come back with `valid = false`.
pub fn bound_sweep(spec: &SweepSpec) -> Vec<SweepRow> {
    let mut cells = Vec::new();
    for &bound in &spec.bounds {
        let ks: Vec<Option<KSpec>> = if bound == BoundKind::Dpt {
            spec.ks.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        for k in ks {
            for &db in &spec.snr_db {
                cells.push((bound, k, db));
            }
        }
    }
    let mut rows: Vec<SweepRow> = cells
        .into_par_iter()
        .map(|(bound, k, db)| {
            let q = BoundQuery {
                scenario: spec.scenario,
                bound,
                k,
                snr: db_to_linear(db),
                sigma2: spec.sigma2,
                varrho: spec.varrho,
                m: Some(spec.m),
                mode: spec.mode,
            };
            let result = evaluate(&q).unwrap_or_else(|e| BoundResult::invalid(spec.mode, e.to_string()));
            SweepRow {
                scenario: spec.scenario,
                bound,
                k,
                snr_db: db,
                sigma2: spec.sigma2,
                result,
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        (a.bound, a.k)
            .cmp(&(b.bound, b.k))
            .then(a.snr_db.total_cmp(&b.snr_db))
    });
    rows
}
