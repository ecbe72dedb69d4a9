//! Closed-form dynamics for a Lorentzian spin distribution at resonance.
//!
//! With a Lorentzian of half width Delta the ensemble acts as a single damped
//! oscillator, so cavity and collective spin form a pair of coupled damped
//! oscillators with exponents lambda_{1,2} = [-(Delta+kappa) +- sqrt((Delta-kappa)^2 - 4 Omega^2)]/2.
//!
//! The closed forms below are written with R = sqrt(4 Omega^2 - (Delta-kappa)^2)
//! as a complex number, so they stay valid (and real) in the overdamped regime too.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::{bisect, golden_section_max};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzParams {
    pub coupling: f64,
    pub delta: f64,
    pub kappa: f64,
    pub eta: f64,
    pub tau_d: f64,
}

impl LorentzParams {
    pub fn new(coupling: f64, delta: f64, kappa: f64, eta: f64, tau_d: f64) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::param("kappa", "must be positive"));
        }
        if !(coupling >= 0.0 && delta >= 0.0) {
            return Err(Error::param("coupling", "rates must be non-negative"));
        }
        if !(tau_d >= 0.0) || !eta.is_finite() {
            return Err(Error::param("tau_d", "must be non-negative"));
        }
        Ok(LorentzParams { coupling, delta, kappa, eta, tau_d })
    }

    /// Omega^2 + Delta kappa
    fn stiffness(&self) -> f64 {
        self.coupling * self.coupling + self.delta * self.kappa
    }

    /// R^2 = 4 Omega^2 - (Delta - kappa)^2, negative when overdamped.
    pub fn rabi_squared(&self) -> f64 {
        4.0 * self.coupling * self.coupling - (self.delta - self.kappa).powi(2)
    }

    fn rabi_complex(&self) -> Result<Complex64> {
        let r2 = self.rabi_squared();
        let scale = (self.delta + self.kappa + 2.0 * self.coupling).powi(2);
        if r2.abs() <= 1e-14 * scale {
            return Err(Error::param("coupling", "critically damped point has no closed form here"));
        }
        Ok(Complex64::new(r2, 0.0).sqrt())
    }
}

pub fn exponents(p: &LorentzParams) -> (Complex64, Complex64) {
    let disc = Complex64::new(-p.rabi_squared(), 0.0).sqrt();
    let m = -(p.delta + p.kappa);
    ((m + disc) / 2.0, (m - disc) / 2.0)
}

/// Omega_R = sqrt(4 Omega^2 - (Delta - kappa)^2).
pub fn rabi_frequency(p: &LorentzParams) -> Result<f64> {
    let r2 = p.rabi_squared();
    if r2 <= 0.0 {
        return Err(Error::Overdamped);
    }
    Ok(r2.sqrt())
}

/// Coupling at which the oscillation disappears, |Delta - kappa|/2.
pub fn critical_coupling(delta: f64, kappa: f64) -> f64 {
    0.5 * (delta - kappa).abs()
}

/// (A_st, J_x,st) under a constant drive.
pub fn steady_state(p: &LorentzParams) -> (f64, f64) {
    let n = p.stiffness();
    (-p.delta * p.eta / n, p.eta * p.coupling / (2.0 * n))
}

/// Step response during the drive, t measured from switch-on.
fn step_cavity(p: &LorentzParams, t: f64, r: Complex64) -> f64 {
    let (d, k, n) = (p.delta, p.kappa, p.stiffness());
    let th = r * (t / 2.0);
    let env = (-(d + k) * t / 2.0).exp();
    let osc = 2.0 * r * d * th.cos() - (r * r - d * d + k * k) * th.sin();
    -d * p.eta / n + (p.eta * env / (2.0 * n) * osc / r).re
}

fn step_spin(p: &LorentzParams, t: f64, r: Complex64) -> f64 {
    let (d, k, n, g) = (p.delta, p.kappa, p.stiffness(), p.coupling);
    let th = r * (t / 2.0);
    let env = (-(d + k) * t / 2.0).exp();
    let osc = (d + k) * th.sin() + r * th.cos();
    p.eta * g / (2.0 * n) - (p.eta * g * env / (2.0 * n) * osc / r).re
}

/// Cavity amplitude while the drive is on (0 <= t <= tau_d).
pub fn cavity_on(p: &LorentzParams, t: f64) -> Result<f64> {
    Ok(step_cavity(p, t, p.rabi_complex()?))
}

pub fn spin_on(p: &LorentzParams, t: f64) -> Result<f64> {
    Ok(step_spin(p, t, p.rabi_complex()?))
}

/// Decay after switching off a drive that had reached the steady state; s is the time since switch-off.
pub fn cavity_off_from_steady(p: &LorentzParams, s: f64) -> Result<f64> {
    let r = p.rabi_complex()?;
    Ok(steady_state(p).0 - step_cavity(p, s, r))
}

pub fn spin_off_from_steady(p: &LorentzParams, s: f64) -> Result<f64> {
    let r = p.rabi_complex()?;
    Ok(steady_state(p).1 - step_spin(p, s, r))
}

/// Cavity amplitude after a pulse of length tau_d, for t >= tau_d.
///
/// Exact for any tau_d: the steady-state decay plus the part of the switch-on transient
/// that had not died out yet.
pub fn cavity_off(p: &LorentzParams, t: f64) -> Result<f64> {
    let r = p.rabi_complex()?;
    Ok(step_cavity(p, t, r) - step_cavity(p, t - p.tau_d, r))
}

pub fn spin_off(p: &LorentzParams, t: f64) -> Result<f64> {
    let r = p.rabi_complex()?;
    Ok(step_spin(p, t, r) - step_spin(p, t - p.tau_d, r))
}

/// Full rectangular-pulse response for any t >= 0.
pub fn cavity(p: &LorentzParams, t: f64) -> Result<f64> {
    if t <= p.tau_d {
        cavity_on(p, t)
    } else {
        cavity_off(p, t)
    }
}

pub fn spin(p: &LorentzParams, t: f64) -> Result<f64> {
    if t <= p.tau_d {
        spin_on(p, t)
    } else {
        spin_off(p, t)
    }
}

/// |A|^2 of the first post-pulse maximum (pulse long enough to reach the steady state).
///
/// The first zero of A after switch-off is known in closed form; the following maximum
/// lies within the next half period and is located by golden-section search.
pub fn overshoot_first_peak(p: &LorentzParams) -> Result<f64> {
    let (s, v) = first_peak(p)?;
    let _ = s;
    Ok(v)
}

/// (time since switch-off, |A|^2) of the first post-pulse maximum.
pub fn first_peak(p: &LorentzParams) -> Result<(f64, f64)> {
    let r = rabi_frequency(p)?;
    let (d, k) = (p.delta, p.kappa);
    // A_off ~ -2 R Delta cos(R s/2) + (R^2 - Delta^2 + kappa^2) sin(R s/2)
    let theta0 = (2.0 * r * d).atan2(r * r - d * d + k * k);
    let s0 = 2.0 * theta0 / r;
    let f = |s: f64| cavity_off_from_steady(p, s).map(|a| a * a).unwrap_or(0.0);
    let (s, v) = golden_section_max(f, s0, s0 + 2.0 * std::f64::consts::PI / r, 1e-6);
    Ok((s, v))
}

/// The first-peak estimate A_1^2 = A_st^2 exp(-(2(Delta+kappa)/Omega_R) arccos(-(Delta-kappa)/(2 Omega))).
///
/// Kept for comparison; it never exceeds A_st^2, unlike the actual first peak.
pub fn overshoot_formula(p: &LorentzParams) -> Result<f64> {
    let r = rabi_frequency(p)?;
    let a_st = steady_state(p).0;
    let arg = -(p.delta - p.kappa) / (2.0 * p.coupling);
    Ok(a_st * a_st * (-(2.0 * (p.delta + p.kappa) / r) * arg.acos()).exp())
}

/// Coupling above which the first post-pulse peak exceeds the steady state.
pub fn overshoot_threshold(delta: f64, kappa: f64) -> Result<f64> {
    let excess = |g: f64| -> f64 {
        match LorentzParams::new(g, delta, kappa, 1.0, f64::INFINITY) {
            Ok(p) => match overshoot_first_peak(&p) {
                Ok(v) => {
                    let a = steady_state(&p).0;
                    v / (a * a) - 1.0
                }
                Err(_) => -1.0,
            },
            Err(_) => -1.0,
        }
    };
    let lo = critical_coupling(delta, kappa).max(1e-9 * (delta + kappa)) * (1.0 + 1e-6);
    let hi = 100.0 * (delta + kappa);
    let steps = 400;
    let ratio = (hi / lo).powf(1.0 / steps as f64);
    let mut a = lo;
    let mut fa = excess(a);
    for _ in 0..steps {
        let b = a * ratio;
        let fb = excess(b);
        if fa < 0.0 && fb >= 0.0 {
            let tol = crate::units::mhz_to_angular(1e-4);
            return bisect(excess, a, b, tol).ok_or(Error::NoSignChange("overshoot threshold"));
        }
        a = b;
        fa = fb;
    }
    Err(Error::NoSignChange("overshoot threshold"))
}

/// Lorentzian (coupling, Delta) reproducing a given Rabi frequency and steady state.
///
/// `rate` is the steady-state loading pi Omega^2 rho(omega_s) of the target system; a
/// Lorentzian matches it when Omega^2/Delta = rate. Of the two roots the narrower one
/// is returned.
pub fn equivalent_lorentzian(rabi: f64, rate: f64, kappa: f64) -> Result<(f64, f64)> {
    let b = 2.0 * kappa + 4.0 * rate;
    let disc = b * b - 4.0 * (kappa * kappa + rabi * rabi);
    if disc < 0.0 || !(rabi > 0.0 && rate > 0.0) {
        return Err(Error::param("rabi", "no Lorentzian reproduces this Rabi frequency and steady state"));
    }
    let delta = 0.5 * (b - disc.sqrt());
    Ok(((rate * delta).sqrt(), delta))
}
