use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::analysis::{linear_fit, local_maxima, refine_peak};
use crate::error::{Error, Result};
use crate::series::ComplexSeries;
use crate::spectral::SpinDensity;
use crate::system::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateMethod {
    TimeFit,
    Markov,
    Asymptotic,
    LorentzFormula,
    NoBroadening,
}

/// A decay rate of |A|^2 in rad/ns and how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRateEstimate {
    pub gamma: f64,
    pub method: RateMethod,
    pub note: String,
}

/// Decay rates of the two branches; equal in the underdamped regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBranches {
    pub slow: f64,
    pub fast: f64,
    pub overdamped: bool,
}

/// Peaks below this fraction of the largest sample are treated as noise.
const NOISE_FLOOR: f64 = 1e-12;
/// Window for the non-oscillatory fit, relative to |A(0)|^2.
const WINDOW: (f64, f64) = (1e-6, 1e-1);

/// Weak-coupling rate 2[kappa + pi Omega^2 rho(omega_s)].
pub fn gamma_markov(params: &SystemParams, density: &SpinDensity) -> Result<DecayRateEstimate> {
    if density.is_dirac() {
        return Err(Error::param("density", "the weak-coupling rate needs a continuous density"));
    }
    let g = 2.0 * (params.kappa + PI * params.coupling.powi(2) * density.eval(params.omega_s));
    Ok(DecayRateEstimate { gamma: g, method: RateMethod::Markov, note: "valid for weak coupling".into() })
}

/// Strong-coupling rate kappa + pi Omega^2 rho(omega_c + Omega).
pub fn gamma_asymptotic(params: &SystemParams, density: &SpinDensity) -> Result<DecayRateEstimate> {
    if density.is_dirac() {
        return Ok(DecayRateEstimate { gamma: params.kappa, method: RateMethod::Asymptotic, note: "no broadening".into() });
    }
    let g = params.kappa + PI * params.coupling.powi(2) * density.eval(params.omega_c + params.coupling);
    Ok(DecayRateEstimate { gamma: g, method: RateMethod::Asymptotic, note: "valid for strong coupling".into() })
}

/// Rates of |A|^2 for a Lorentzian of half width `delta`.
pub fn gamma_lorentz_formula(coupling: f64, delta: f64, kappa: f64) -> RateBranches {
    let disc = (delta - kappa).powi(2) - 4.0 * coupling * coupling;
    if disc > 0.0 {
        let r = disc.sqrt();
        RateBranches { slow: delta + kappa - r, fast: delta + kappa + r, overdamped: true }
    } else {
        RateBranches { slow: delta + kappa, fast: delta + kappa, overdamped: false }
    }
}

/// Rates of |A|^2 without broadening.
pub fn gamma_no_broadening(coupling: f64, kappa: f64) -> RateBranches {
    gamma_lorentz_formula(coupling, 0.0, kappa)
}

/// Decay rate of |A|^2 fitted to a free-decay trace.
///
/// With at least three local maxima above the noise floor the log of the peak
/// heights is fitted against time; otherwise ln|A|^2 is fitted where it lies
/// between 1e-6 and 1e-1 of its initial value.
pub fn decay_rate_timefit(series: &ComplexSeries) -> Result<DecayRateEstimate> {
    let v = series.abs2();
    if v.len() < 3 {
        return Err(Error::Fit("too few samples".into()));
    }
    let t = series.times();
    let top = v.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return Err(Error::Fit("trace is identically zero".into()));
    }
    let peaks: Vec<usize> = local_maxima(&v).into_iter().filter(|&i| v[i] > NOISE_FLOOR * top).collect();
    let (x, y, note) = if peaks.len() >= 3 {
        let (x, y): (Vec<f64>, Vec<f64>) = peaks
            .iter()
            .map(|&i| {
                let (tp, vp) = refine_peak(&t, &v, i);
                (tp, vp.ln())
            })
            .unzip();
        let n = x.len();
        (x, y, format!("fit to {n} peaks"))
    } else {
        let (lo, hi) = (WINDOW.0 * v[0], WINDOW.1 * v[0]);
        let (x, y): (Vec<f64>, Vec<f64>) = t
            .iter()
            .zip(&v)
            .filter(|(_, &a)| a >= lo && a <= hi)
            .map(|(&ti, &a)| (ti, a.ln()))
            .unzip();
        if x.len() < 2 {
            return Err(Error::Fit("trace never enters the fit window".into()));
        }
        let n = x.len();
        (x, y, format!("fit to {n} samples of the monotone decay"))
    };
    let (slope, _) = linear_fit(&x, &y).ok_or_else(|| Error::Fit("degenerate fit".into()))?;
    if !(slope < 0.0) {
        return Err(Error::Fit("input is not decaying".into()));
    }
    Ok(DecayRateEstimate { gamma: -slope, method: RateMethod::TimeFit, note })
}
