//! Generalized rate–distortion function for a uniform parameter on the unit
//! circle under modulo-1 squared error.
//!
//! The optimal backward channel is `f*(w) = C(s)(1+s w²)^{-(1+1/k)}` and the
//! curve is traced by
//!
//! ```text
//! 1/C(s) = ∫ (1+s w²)^{-(1+1/k)} dw
//! F(s)   = ∫ w² (1+s w²)^{-(1+1/k)} dw
//! G(s)   = ∫ (1+s w²)^{-1/k} dw              (all over w ∈ [-1/2, 1/2])
//! D_s = C F,   R(D_s) = -C G^{k+1}
//! ```

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::quad::{integrate, QuadError, Tolerance};

/// Relative tolerance for the two exact identities between C, F and G.
pub const IDENTITY_TOL: f64 = 1e-8;
/// `∫_ℝ dt/(1+t²)²`, the k = 1 high-resolution constant.
pub const C1: f64 = PI / 2.0;

/// Bracket for the rate inversion, in decades of `s`.
pub const LOG10_S_MIN: f64 = -9.0;
pub const LOG10_S_MAX: f64 = 30.0;

/// Above this `s` the integrals are taken in the stretched variable `t = √s·w`.
const STRETCH_ABOVE: f64 = 1e4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RdError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("rate {target} is outside the reachable range [{lo}, {hi}] for s in [1e{LOG10_S_MIN}, 1e{LOG10_S_MAX}]")]
    OutOfRange { target: f64, lo: f64, hi: f64 },
    #[error("R(s) is not monotone near s = {s:e} ({detail})")]
    NonMonotone { s: f64, detail: String },
    #[error("identity check failed at s = {s:e}, k = {k}: relative residual {residual:e}")]
    Identity { s: f64, k: usize, residual: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cfg {
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "G")]
    pub g: f64,
}

fn check_k(k: usize) -> Result<(), RdError> {
    if k == 0 {
        return Err(RdError::Domain("k must be a positive integer".into()));
    }
    Ok(())
}

/// Integral of `h(t)` over `[0, L]`, split at 1 with `t = e^u` on the tail so
/// that slowly decaying integrands stay well resolved for huge `L`.
fn half_line<H: Fn(f64) -> f64>(h: H, l: f64, tol: Tolerance) -> Result<f64, QuadError> {
    if l <= 1.0 {
        return Ok(integrate(&h, 0.0, l, tol)?.value);
    }
    let head = integrate(&h, 0.0, 1.0, tol)?.value;
    let tail = integrate(|u: f64| {
        let t = u.exp();
        h(t) * t
    }, 0.0, l.ln(), tol)?
    .value;
    Ok(head + tail)
}

pub fn cfg_integrals(s: f64, k: usize) -> Result<Cfg, RdError> {
    check_k(k)?;
    if !(s.is_finite() && s >= 0.0) {
        return Err(RdError::Domain(format!("s = {s} must be finite and non-negative")));
    }
    if s == 0.0 {
        return Ok(Cfg { c: 1.0, f: 1.0 / 12.0, g: 1.0 });
    }
    let e = 1.0 + 1.0 / k as f64;
    let ek = 1.0 / k as f64;
    let tol = Tolerance::default();
    if s <= STRETCH_ABOVE {
        // Even integrands: twice the integral over [0, 1/2].
        let i0 = 2.0 * integrate(|w| (1.0 + s * w * w).powf(-e), 0.0, 0.5, tol)?.value;
        let f = 2.0 * integrate(|w| w * w * (1.0 + s * w * w).powf(-e), 0.0, 0.5, tol)?.value;
        let g = 2.0 * integrate(|w| (1.0 + s * w * w).powf(-ek), 0.0, 0.5, tol)?.value;
        return Ok(Cfg { c: 1.0 / i0, f, g });
    }
    let rs = s.sqrt();
    let l = 0.5 * rs;
    let j0 = half_line(|t| (1.0 + t * t).powf(-e), l, tol)?;
    let j2 = half_line(|t| t * t * (1.0 + t * t).powf(-e), l, tol)?;
    let jg = half_line(|t| (1.0 + t * t).powf(-ek), l, tol)?;
    Ok(Cfg {
        c: rs / (2.0 * j0),
        f: 2.0 * j2 / (s * rs),
        g: 2.0 * jg / rs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RDPoint {
    pub s: f64,
    pub k: usize,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "R")]
    pub r: f64,
}

impl RDPoint {
    /// Largest relative residual of `G = 1/C + sF` and
    /// `G = (1+s/4)^{-1/k} + (2s/k)F`.
    pub fn identity_residual(&self) -> f64 {
        let kf = self.k as f64;
        let a = 1.0 / self.c + self.s * self.f;
        let b = (1.0 + self.s / 4.0).powf(-1.0 / kf) + 2.0 * self.s / kf * self.f;
        ((a - self.g) / self.g).abs().max(((b - self.g) / self.g).abs())
    }
}

pub fn rd_point(s: f64, k: usize) -> Result<RDPoint, RdError> {
    let Cfg { c, f, g } = cfg_integrals(s, k)?;
    let p = RDPoint {
        s,
        k,
        c,
        f,
        g,
        d: c * f,
        r: -c * g.powi(k as i32 + 1),
    };
    let residual = p.identity_residual();
    if !(residual <= IDENTITY_TOL) {
        return Err(RdError::Identity { s, k, residual });
    }
    debug_assert!(p.d > 0.0 && p.d <= 1.0 / 12.0 + 1e-15);
    debug_assert!((-1.0 - 1e-14..0.0).contains(&p.r));
    Ok(p)
}

/// Points on a grid of `s` values, evaluated in parallel, in input order.
pub fn rd_curve(s_values: &[f64], k: usize) -> Result<Vec<RDPoint>, RdError> {
    s_values.par_iter().map(|&s| rd_point(s, k)).collect()
}

// Absolute slack for monotonicity checks: R sits at -1 to machine precision
// for tiny s.
const MONOTONE_SLACK: f64 = 1e-12;

/// The curve point whose rate equals `target`, by bisection on `log10 s`.
pub fn solve_rate(target: f64, k: usize) -> Result<RDPoint, RdError> {
    check_k(k)?;
    if !(target > -1.0 && target < 0.0) {
        return Err(RdError::Domain(format!("rate {target} must lie in (-1, 0)")));
    }
    // Coarse scan, one point per decade, checking monotonicity.
    let decades: Vec<f64> = (LOG10_S_MIN as i32..=LOG10_S_MAX as i32).map(f64::from).collect();
    let mut prev: Option<RDPoint> = None;
    let mut bracket = None;
    for &ls in &decades {
        let p = rd_point(10f64.powf(ls), k)?;
        if let Some(q) = prev {
            if p.r < q.r - MONOTONE_SLACK {
                return Err(RdError::NonMonotone {
                    s: p.s,
                    detail: format!("R fell from {} to {}", q.r, p.r),
                });
            }
            if bracket.is_none() && q.r < target && target <= p.r {
                bracket = Some((ls - 1.0, ls, q, p));
            }
        } else if target <= p.r {
            return Err(RdError::OutOfRange { target, lo: p.r, hi: p.r });
        }
        prev = Some(p);
    }
    let Some((mut lo, mut hi, mut plo, mut phi)) = bracket else {
        let first = rd_point(10f64.powf(LOG10_S_MIN), k)?;
        return Err(RdError::OutOfRange {
            target,
            lo: first.r,
            hi: prev.map_or(0.0, |p| p.r),
        });
    };
    for _ in 0..200 {
        if hi - lo < 1e-13 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let p = rd_point(10f64.powf(mid), k)?;
        if p.r < plo.r - MONOTONE_SLACK || p.r > phi.r + MONOTONE_SLACK {
            return Err(RdError::NonMonotone {
                s: p.s,
                detail: format!("R = {} outside [{}, {}]", p.r, plo.r, phi.r),
            });
        }
        if p.r < target {
            lo = mid;
            plo = p;
        } else {
            hi = mid;
            phi = p;
        }
    }
    // Pick the endpoint with the closer rate.
    Ok(if (plo.r - target).abs() < (phi.r - target).abs() { plo } else { phi })
}

pub fn distortion_at_rate(target: f64, k: usize) -> Result<f64, RdError> {
    Ok(solve_rate(target, k)?.d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Near `R = -1` (low resolution).
    Low,
    /// Near `R = 0` (high resolution).
    High,
}

/// Closed-form approximations to the curve at its two ends.
///
/// `Low`: `1/12 - √(1+R)/15`. `High`: `R²/(16c₁²)` for k = 1 and
/// `-(1/4)(1-2/k)^k R` for k > 2; k = 2 has no closed form.
pub fn rd_asymptotic(r: f64, k: usize, regime: Regime) -> Result<f64, RdError> {
    check_k(k)?;
    if !(-1.0..0.0).contains(&r) {
        return Err(RdError::Domain(format!("rate {r} must lie in [-1, 0)")));
    }
    match regime {
        Regime::Low => Ok(1.0 / 12.0 - (1.0 + r).sqrt() / 15.0),
        Regime::High => match k {
            1 => Ok(r * r / (16.0 * C1 * C1)),
            2 => Err(RdError::Unsupported(
                "k = 2 has no high-resolution closed form; use the parametric curve (rd_point) \
                 and k2_log_ratio"
                    .into(),
            )),
            _ => {
                let kf = k as f64;
                Ok(-0.25 * (1.0 - 2.0 / kf).powi(k as i32) * r)
            }
        },
    }
}

/// `ln D_s / ln(-R(D_s))` for k = 2, which tends to 1 (slowly) as `s → ∞`.
pub fn k2_log_ratio(s: f64) -> Result<f64, RdError> {
    if !(s > 10.0) {
        return Err(RdError::Domain(format!("k2_log_ratio needs s > 10, got {s}")));
    }
    let p = rd_point(s, 2)?;
    Ok(p.d.ln() / (-p.r).ln())
}

/// Error moment `E|U-V|^p` paired with the chain length `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSpec {
    p: f64,
    k: usize,
}

impl MomentSpec {
    pub fn new(p: f64, k: usize) -> Result<Self, RdError> {
        check_k(k)?;
        if !(p.is_finite() && p > 0.0) {
            return Err(RdError::Domain(format!("moment order p = {p} must be positive")));
        }
        if p == k as f64 {
            return Err(RdError::Unsupported(format!("p = k = {k} is excluded")));
        }
        Ok(Self { p, k })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `c = ∫_ℝ dt/(1+|t|^p)^{1+1/k} = (2/p) B(1/p, 1+1/k-1/p)`; finite for `k < p`.
    pub fn c(&self) -> Result<f64, RdError> {
        let (p, kf) = (self.p, self.k as f64);
        let beta_b = 1.0 + 1.0 / kf - 1.0 / p;
        if beta_b <= 0.0 {
            return Err(RdError::Domain(format!("c diverges for p = {p}, k = {}", self.k)));
        }
        let a = 1.0 / p;
        let ln_beta = libm::lgamma(a) + libm::lgamma(beta_b) - libm::lgamma(a + beta_b);
        Ok(2.0 / p * ln_beta.exp())
    }

    /// `S_1 = k/(c^p (p-k)) (1-k/p)^{p(1+1/k)}`, the coefficient for `k < p`.
    pub fn s1(&self) -> Result<f64, RdError> {
        let (p, kf) = (self.p, self.k as f64);
        if kf > p {
            return Err(RdError::Domain("S1 applies to k < p".into()));
        }
        let c = self.c()?;
        Ok(kf / (c.powf(p) * (p - kf)) * (1.0 - kf / p).powf(p * (1.0 + 1.0 / kf)))
    }

    /// `S_2 = 2^{-p} (1-p/k)^k`, the coefficient for `k > p`.
    pub fn s2(&self) -> Result<f64, RdError> {
        let (p, kf) = (self.p, self.k as f64);
        if kf < p {
            return Err(RdError::Domain("S2 applies to k > p".into()));
        }
        Ok(2f64.powf(-p) * (1.0 - p / kf).powi(self.k as i32))
    }
}

/// High-resolution distortion for the p-th error moment: `S_1(-R)^{p/k}` when
/// `k < p`, `-S_2 R` when `k > p`.
pub fn moment_rd_asymptotic(spec: &MomentSpec, r: f64) -> Result<f64, RdError> {
    if !(-1.0..0.0).contains(&r) {
        return Err(RdError::Domain(format!("rate {r} must lie in [-1, 0)")));
    }
    let kf = spec.k as f64;
    if kf < spec.p {
        Ok(spec.s1()? * (-r).powf(spec.p / kf))
    } else {
        Ok(-spec.s2()? * r)
    }
}
