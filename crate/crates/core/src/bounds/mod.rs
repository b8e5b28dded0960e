//! PAC-Bayesian risk bounds for nearest-neighbour hypotheses.
//!
//! All logarithms are natural. Results are clamped to `[0, 1]`; the raw value
//! and clamp flags are kept alongside.

use std::fmt;

use serde::Serialize;

use crate::{Error, Result, Scalar};

mod optimize;

pub use optimize::{golden_section_min, optimize_sparsity, SparsityOptimum, DEFAULT_GRID, S_MAX_GAP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Theorem {
    T1,
    T2,
    T3,
    T4,
    T5,
}

impl Theorem {
    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Theorem::T1),
            2 => Some(Theorem::T2),
            3 => Some(Theorem::T3),
            4 => Some(Theorem::T4),
            5 => Some(Theorem::T5),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        self as u8 + 1
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}", self.number())
    }
}

/// Natural log of a prior probability; never positive.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct LogPriorMass<T> {
    log_p: T,
}

impl<T: Scalar> LogPriorMass<T> {
    pub fn new(log_p: T) -> Result<Self> {
        if log_p.is_nan() || log_p > T::zero() {
            return Err(Error::domain("log prior", log_p.to_f64_lossy(), "(-inf, 0]"));
        }
        Ok(Self { log_p })
    }

    /// Probability one.
    pub fn certain() -> Self {
        Self { log_p: T::zero() }
    }

    pub fn value(self) -> T {
        self.log_p
    }

    /// `ln(1/P)`, the complexity term.
    pub fn complexity(self) -> T {
        -self.log_p
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundResult<T> {
    pub value: T,
    pub raw: T,
    pub theorem: Theorem,
    pub clamped_low: bool,
    pub clamped_high: bool,
    /// Thm 2/5 only: the square-root argument was negative and replaced by 0.
    pub radicand_clamped: bool,
}

impl<T: Scalar> BoundResult<T> {
    fn new(raw: T, theorem: Theorem, radicand_clamped: bool) -> Self {
        let clamped_low = raw < T::zero();
        let clamped_high = raw > T::one();
        Self {
            value: raw.max(T::zero()).min(T::one()),
            raw,
            theorem,
            clamped_low,
            clamped_high,
            radicand_clamped,
        }
    }

    pub fn clamped(&self) -> bool {
        self.clamped_low || self.clamped_high
    }
}

/// Inputs shared by all theorems. `s` is read by Thm 4/5 and `r_emp` by Thm
/// 2/5.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundQuery<T> {
    pub m: usize,
    pub r: usize,
    pub delta: T,
    pub s: T,
    pub r_emp: T,
}

impl<T: Scalar> BoundQuery<T> {
    pub fn new(m: usize, r: usize, delta: T) -> Self {
        Self {
            m,
            r,
            delta,
            s: T::zero(),
            r_emp: T::zero(),
        }
    }

    pub fn with_sparsity(mut self, s: T) -> Self {
        self.s = s;
        self
    }

    pub fn with_empirical_risk(mut self, r_emp: T) -> Self {
        self.r_emp = r_emp;
        self
    }

    /// Thm 1/2 use the simple prior here, matching Thm 3.
    pub fn evaluate(&self, theorem: Theorem) -> Result<BoundResult<T>> {
        match theorem {
            Theorem::T1 => thm1_bound(simple_prior_mass(self.m, self.r)?, self.m, self.delta),
            Theorem::T2 => thm2_bound(simple_prior_mass(self.m, self.r)?, self.m, self.delta, self.r_emp),
            Theorem::T3 => thm3_bound(self.m, self.r, self.delta),
            Theorem::T4 => thm4_bound(self.m, self.r, self.delta, self.s),
            Theorem::T5 => thm5_bound(self.m, self.r, self.delta, self.s, self.r_emp),
        }
    }
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::domain("m", 0.0, "[1, inf)"));
    }
    Ok(())
}

fn check_r(m: usize, r: usize) -> Result<()> {
    if r > m {
        return Err(Error::domain("r", r as f64, "[0, m]"));
    }
    Ok(())
}

fn check_delta<T: Scalar>(delta: T) -> Result<()> {
    if !(delta > T::zero() && delta < T::one()) {
        return Err(Error::domain("delta", delta.to_f64_lossy(), "(0,1)"));
    }
    Ok(())
}

fn check_sparsity<T: Scalar>(s: T) -> Result<()> {
    if !(s >= T::zero() && s < T::one()) {
        return Err(Error::domain("S", s.to_f64_lossy(), "[0,1["));
    }
    Ok(())
}

fn check_risk<T: Scalar>(r_emp: T) -> Result<()> {
    if !(r_emp >= T::zero() && r_emp <= T::one()) {
        return Err(Error::domain("R_emp", r_emp.to_f64_lossy(), "[0,1]"));
    }
    Ok(())
}

/// `√(max(0, x) / 2m)` and whether `x` was negative.
pub fn deviation_slack<T: Scalar>(numerator: T, m: usize) -> (T, bool) {
    let clamped = numerator < T::zero();
    let x = numerator.max(T::zero());
    ((x / (T::of(2.0) * T::of_usize(m))).sqrt(), clamped)
}

/// `(ln 1/P(h) + ln 1/δ) / m` for a hypothesis consistent with the sample.
pub fn thm1_bound<T: Scalar>(prior: LogPriorMass<T>, m: usize, delta: T) -> Result<BoundResult<T>> {
    check_m(m)?;
    check_delta(delta)?;
    let raw = (prior.complexity() - delta.ln()) / T::of_usize(m);
    Ok(BoundResult::new(raw, Theorem::T1, false))
}

/// `R_emp + √((ln 1/P(h) + ln 1/δ) / 2m)`.
pub fn thm2_bound<T: Scalar>(prior: LogPriorMass<T>, m: usize, delta: T, r_emp: T) -> Result<BoundResult<T>> {
    check_m(m)?;
    check_delta(delta)?;
    check_risk(r_emp)?;
    let (slack, clamped) = deviation_slack(prior.complexity() - delta.ln(), m);
    Ok(BoundResult::new(r_emp + slack, Theorem::T2, clamped))
}

/// `ln(2^r / (3^m − 1))`.
pub fn simple_prior_mass<T: Scalar>(m: usize, r: usize) -> Result<LogPriorMass<T>> {
    check_m(m)?;
    check_r(m, r)?;
    let (mf, rf) = (T::of_usize(m), T::of_usize(r));
    let ln3 = T::of(3f64.ln());
    // ln(3^m − 1) = m ln 3 + ln(1 − 3^−m)
    let ln_total = mf * ln3 + (-(-mf * ln3).exp()).ln_1p();
    Ok(LogPriorMass {
        log_p: (rf * T::of(std::f64::consts::LN_2) - ln_total).min(T::zero()),
    })
}

/// `ln((1−S)^(m−r) (1+S)^r / (2^m (1 − S^m)))`, floored at probability one.
pub fn refined_prior_mass<T: Scalar>(m: usize, r: usize, s: T) -> Result<LogPriorMass<T>> {
    check_m(m)?;
    check_r(m, r)?;
    check_sparsity(s)?;
    let (mf, rf) = (T::of_usize(m), T::of_usize(r));
    let half = T::of(0.5);
    let ln_norm = if s == T::zero() {
        T::zero()
    } else {
        let ln_s = if s > half { (s - T::one()).ln_1p() } else { s.ln() };
        // ln(1 − S^m) without cancellation near S = 1
        (-(mf * ln_s).exp_m1()).ln()
    };
    let log_p = (mf - rf) * (-s).ln_1p() + rf * s.ln_1p() - mf * T::of(std::f64::consts::LN_2) - ln_norm;
    Ok(LogPriorMass {
        log_p: log_p.min(T::zero()),
    })
}

/// `(m ln 3 − r ln 2 + ln 1/δ) / m`.
pub fn thm3_bound<T: Scalar>(m: usize, r: usize, delta: T) -> Result<BoundResult<T>> {
    check_m(m)?;
    check_r(m, r)?;
    check_delta(delta)?;
    let (mf, rf) = (T::of_usize(m), T::of_usize(r));
    let raw = (mf * T::of(3f64.ln()) - rf * T::of(std::f64::consts::LN_2) - delta.ln()) / mf;
    Ok(BoundResult::new(raw, Theorem::T3, false))
}

/// Thm 1 under the sparsity prior.
pub fn thm4_bound<T: Scalar>(m: usize, r: usize, delta: T, s: T) -> Result<BoundResult<T>> {
    let prior = refined_prior_mass(m, r, s)?;
    let mut b = thm1_bound(prior, m, delta)?;
    b.theorem = Theorem::T4;
    Ok(b)
}

/// Thm 2 under the sparsity prior: `R_emp + √((ln 1/P + ln 1/δ) / 2m)`.
pub fn thm5_bound<T: Scalar>(m: usize, r: usize, delta: T, s: T, r_emp: T) -> Result<BoundResult<T>> {
    let prior = refined_prior_mass(m, r, s)?;
    let mut b = thm2_bound(prior, m, delta, r_emp)?;
    b.theorem = Theorem::T5;
    Ok(b)
}
