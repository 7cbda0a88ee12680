//! Stepsize parameters `β_k`, the clipping rule and theorem constants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::smoothness::SymmetryConstants;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepSchedule {
    /// `β_k = 2 / (a·(offset + k))`
    Harmonic { a: f64, offset: f64 },
    /// `β_k = b / (k+1)^q` with `q ∈ (1/2, 1)`
    PowerLaw { b: f64, q: f64 },
    /// `β_k = c₀ / (c₀ + k^q)`
    Experiment { c0: f64, q: f64 },
    /// `β_k = beta`
    Constant { beta: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

impl StepSchedule {
    pub fn harmonic(a: f64, offset: f64) -> Result<Self> {
        positive("harmonic a", a)?;
        positive("harmonic offset", offset)?;
        Ok(StepSchedule::Harmonic { a, offset })
    }

    pub fn power_law(b: f64, q: f64) -> Result<Self> {
        positive("power_law b", b)?;
        if !(q > 0.5 && q < 1.0) {
            return Err(Error::Domain(format!(
                "power_law q must lie in (1/2, 1), got {q}"
            )));
        }
        Ok(StepSchedule::PowerLaw { b, q })
    }

    pub fn experiment(c0: f64, q: f64) -> Result<Self> {
        positive("experiment c0", c0)?;
        positive("experiment q", q)?;
        Ok(StepSchedule::Experiment { c0, q })
    }

    pub fn constant(beta: f64) -> Result<Self> {
        positive("constant beta", beta)?;
        Ok(StepSchedule::Constant { beta })
    }

    /// Re-runs the constructor checks; used after deserialization.
    pub fn validated(self) -> Result<Self> {
        match self {
            StepSchedule::Harmonic { a, offset } => Self::harmonic(a, offset),
            StepSchedule::PowerLaw { b, q } => Self::power_law(b, q),
            StepSchedule::Experiment { c0, q } => Self::experiment(c0, q),
            StepSchedule::Constant { beta } => Self::constant(beta),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            StepSchedule::Harmonic { .. } => "harmonic",
            StepSchedule::PowerLaw { .. } => "power_law",
            StepSchedule::Experiment { .. } => "experiment",
            StepSchedule::Constant { .. } => "constant",
        }
    }

    #[inline]
    pub fn beta(&self, k: u64) -> f64 {
        let k = k as f64;
        match *self {
            StepSchedule::Harmonic { a, offset } => 2.0 / (a * (offset + k)),
            StepSchedule::PowerLaw { b, q } => b / (k + 1.0).powf(q),
            StepSchedule::Experiment { c0, q } => c0 / (c0 + k.powf(q)),
            StepSchedule::Constant { beta } => beta,
        }
    }
}

/// `β·min{1, 1/clip_norm}` with `min{1, 1/0} = 1`.
#[inline]
pub fn clip_stepsize(beta: f64, clip_norm: f64) -> f64 {
    if clip_norm > 1.0 {
        beta / clip_norm
    } else {
        beta
    }
}

/// `a = μ·min{1, 1/(2(C_F + σ))}`.
pub fn theoretical_a(mu: f64, c_f: f64, sigma: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::Domain(format!("μ must be positive, got {mu}")));
    }
    if !(c_f >= 0.0) || !(sigma >= 0.0) {
        return Err(Error::Domain(format!(
            "C_F and σ must be nonnegative, got C_F={c_f}, σ={sigma}"
        )));
    }
    let s = c_f + sigma;
    if s == 0.0 {
        return Ok(mu);
    }
    Ok(mu * (1.0f64).min(1.0 / (2.0 * s)))
}

/// `d = max{4μ, 2√3(K₀ + K₁ + K₂)}`.
pub fn korpelevich_offset(mu: f64, constants: &SymmetryConstants) -> Result<f64> {
    let k = constants.derived.ok_or_else(|| {
        Error::Domain("the extragradient offset needs α < 1 derived constants".into())
    })?;
    Ok((4.0 * mu).max(2.0 * 3f64.sqrt() * k.sum()))
}

/// Largest stepsize parameter admitted by the extragradient power-law
/// construction, `min{1/(4μ), 1/(2√3(K₀+K₁+K₂))}`.
pub fn korpelevich_max_b(mu: f64, constants: &SymmetryConstants) -> Result<f64> {
    Ok(1.0 / korpelevich_offset(mu, constants)?)
}

fn check_q(q: f64, closed_half: bool) -> Result<()> {
    let ok = if closed_half { q >= 0.5 } else { q > 0.5 };
    if ok && q < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "series exponent q out of range: {q}"
        )))
    }
}

/// `((K+1)^{1−q} − 2^{1−q}) / (1−q)`, a lower bound on `Σ_{t=0}^{K} (t+1)^{−q}`
/// for `q ∈ [1/2, 1)` and `K ≥ 1`.
pub fn series_lower_bound(q: f64, big_k: u64) -> Result<f64> {
    check_q(q, true)?;
    if big_k < 1 {
        return Err(Error::Domain("series bound needs K ≥ 1".into()));
    }
    let e = 1.0 - q;
    Ok(((big_k as f64 + 1.0).powf(e) - 2f64.powf(e)) / e)
}

/// The integral part of the bound on `Σ_{t=0}^{K} (t+1)^{−2q}`: `log(K+1)` at
/// `q = 1/2`, `1/(2q−1)` for `q > 1/2`. It omits the `t = 0` summand and so
/// is not itself an upper bound for small `K`.
pub fn square_series_integral_bound(q: f64, big_k: u64) -> Result<f64> {
    check_q(q, true)?;
    if q == 0.5 {
        Ok((big_k as f64 + 1.0).ln())
    } else {
        Ok(1.0 / (2.0 * q - 1.0))
    }
}

/// Upper bound on `Σ_{t=0}^{K} (t+1)^{−2q}`: the first summand plus
/// [`square_series_integral_bound`].
pub fn square_series_upper_bound(q: f64, big_k: u64) -> Result<f64> {
    Ok(1.0 + square_series_integral_bound(q, big_k)?)
}
