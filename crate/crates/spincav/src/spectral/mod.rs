//! Spectral densities of the spin ensemble and the frequency integrals built on them.

mod grid;
mod pv;

pub use grid::{default_spacing, normalize, FrequencyGrid, SpectralMeasure};
pub use pv::{lamb_shift, lamb_shift_on_grid, sokhotski_split, SokhotskiSplit};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DensityKind {
    /// Tsallis q-Gaussian with width parameter `delta`.
    QGaussian { q: f64, delta: f64 },
    /// `delta` is the half width at half maximum.
    Lorentzian { delta: f64 },
    DiracDelta,
}

/// What happens to the probability mass cut off by the finite support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailPolicy {
    /// Rescale so the discretised density integrates to one.
    Renormalize,
    /// Keep the analytic normalisation; the truncated tails are simply dropped.
    AnalyticTail,
}

/// How the half width of the support is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SupportRule {
    /// Smallest half width whose two-sided tail mass is below `eps`, failing above `cap`.
    TailMass { eps: f64, cap: f64 },
    HalfWidth(f64),
}

/// Tail mass below which the q-Gaussian support is cut.
pub const TAIL_MASS: f64 = 1e-6;
/// Default Lorentzian half width in units of its HWHM. A 1e-6 tail rule would need ~6e5 HWHM.
pub const LORENTZ_SUPPORT_HWHM: f64 = 200.0;
/// Support cap for the tail-mass rule, in units of the FWHM.
pub const SUPPORT_CAP_FWHM: f64 = 100.0;

/// Normalised density of spin transition frequencies rho(omega) [ns/rad].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinDensity {
    kind: DensityKind,
    center: f64,
    norm: f64,
    half_width: f64,
    policy: TailPolicy,
}

/// Full width at half maximum of a q-Gaussian with width parameter `delta`.
pub fn fwhm_relation(q: f64, delta: f64) -> Result<f64> {
    check_q(q)?;
    if !(delta > 0.0) {
        return Err(Error::param("delta", "must be positive"));
    }
    Ok(2.0 * delta * fwhm_factor(q))
}

pub fn delta_from_fwhm(q: f64, fwhm: f64) -> Result<f64> {
    check_q(q)?;
    if !(fwhm > 0.0) {
        return Err(Error::param("fwhm", "must be positive"));
    }
    Ok(fwhm / (2.0 * fwhm_factor(q)))
}

fn fwhm_factor(q: f64) -> f64 {
    ((2f64.powf(q) - 2.0) / (2.0 * q - 2.0)).sqrt()
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 1.0 && q < 3.0) {
        return Err(Error::param("q", format!("{q} outside (1, 3)")));
    }
    Ok(())
}

/// Analytic value of 1 / integral of (1 + b x^2)^(-a) dx.
fn power_norm(a: f64, b: f64) -> f64 {
    let ratio = (ln_gamma(a - 0.5) - ln_gamma(a)).exp();
    b.sqrt() / (PI.sqrt() * ratio)
}

impl SpinDensity {
    pub fn q_gaussian(q: f64, delta: f64, center: f64) -> Result<Self> {
        let fwhm = fwhm_relation(q, delta)?;
        Self::q_gaussian_with(
            q,
            delta,
            center,
            SupportRule::TailMass { eps: TAIL_MASS, cap: SUPPORT_CAP_FWHM * fwhm },
        )
    }

    /// q-Gaussian parametrised by its FWHM, the way widths are usually quoted.
    pub fn q_gaussian_fwhm(q: f64, fwhm: f64, center: f64) -> Result<Self> {
        Self::q_gaussian(q, delta_from_fwhm(q, fwhm)?, center)
    }

    pub fn q_gaussian_with(q: f64, delta: f64, center: f64, rule: SupportRule) -> Result<Self> {
        check_q(q)?;
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::param("delta", "must be positive"));
        }
        let a = 1.0 / (q - 1.0);
        let b = (q - 1.0) / (delta * delta);
        let norm = power_norm(a, b);
        let half_width = match rule {
            SupportRule::HalfWidth(w) => w,
            SupportRule::TailMass { eps, cap } => {
                // tail of C (b x^2)^(-a) beyond W on both sides: 2 C b^(-a) W^(1-2a) / (2a-1)
                let w = (2.0 * norm * b.powf(-a) / ((2.0 * a - 1.0) * eps)).powf(1.0 / (2.0 * a - 1.0));
                if !(w <= cap) {
                    return Err(Error::SupportTooWide { required: w, cap });
                }
                w
            }
        };
        let d = SpinDensity {
            kind: DensityKind::QGaussian { q, delta },
            center,
            norm,
            half_width,
            policy: TailPolicy::Renormalize,
        };
        d.check_center()?;
        Ok(d)
    }

    /// Lorentzian of half width `delta`, truncated at +-200 delta with its analytic normalisation.
    pub fn lorentzian(delta: f64, center: f64) -> Result<Self> {
        Self::lorentzian_with(delta, center, LORENTZ_SUPPORT_HWHM * delta)
    }

    pub fn lorentzian_with(delta: f64, center: f64, half_width: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::param("delta", "must be positive"));
        }
        if !(half_width > 0.0) {
            return Err(Error::param("half_width", "must be positive"));
        }
        let d = SpinDensity {
            kind: DensityKind::Lorentzian { delta },
            center,
            norm: 1.0 / (PI * delta),
            half_width,
            policy: TailPolicy::AnalyticTail,
        };
        d.check_center()?;
        Ok(d)
    }

    pub fn dirac(center: f64) -> Result<Self> {
        let d = SpinDensity {
            kind: DensityKind::DiracDelta,
            center,
            norm: 1.0,
            half_width: 0.0,
            policy: TailPolicy::AnalyticTail,
        };
        d.check_center()?;
        Ok(d)
    }

    fn check_center(&self) -> Result<()> {
        if !self.center.is_finite() {
            return Err(Error::param("center", "must be finite"));
        }
        Ok(())
    }

    pub fn kind(&self) -> DensityKind {
        self.kind
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn norm_c(&self) -> f64 {
        self.norm
    }

    pub fn policy(&self) -> TailPolicy {
        self.policy
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }

    pub fn is_dirac(&self) -> bool {
        matches!(self.kind, DensityKind::DiracDelta)
    }

    /// Same density with a different support half width.
    pub fn with_half_width(mut self, half_width: f64) -> Self {
        if !self.is_dirac() {
            self.half_width = half_width;
        }
        self
    }

    pub(crate) fn with_norm(mut self, norm: f64) -> Self {
        self.norm = norm;
        self
    }

    pub fn fwhm(&self) -> f64 {
        match self.kind {
            DensityKind::QGaussian { q, delta } => 2.0 * delta * fwhm_factor(q),
            DensityKind::Lorentzian { delta } => 2.0 * delta,
            DensityKind::DiracDelta => 0.0,
        }
    }

    /// (a, b) with rho = C (1 + b x^2)^(-a)
    fn shape(&self) -> Option<(f64, f64)> {
        match self.kind {
            DensityKind::QGaussian { q, delta } => Some((1.0 / (q - 1.0), (q - 1.0) / (delta * delta))),
            DensityKind::Lorentzian { delta } => Some((1.0, 1.0 / (delta * delta))),
            DensityKind::DiracDelta => None,
        }
    }

    /// rho at offset x = omega - center. Dirac returns 0 off centre and infinity at it.
    pub fn eval_offset(&self, x: f64) -> f64 {
        match self.shape() {
            Some((a, b)) => {
                let s = 1.0 + b * x * x;
                if a == 1.0 {
                    self.norm / s
                } else {
                    self.norm * s.powf(-a)
                }
            }
            None => {
                if x == 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
        }
    }

    pub fn eval(&self, omega: f64) -> f64 {
        self.eval_offset(omega - self.center)
    }

    /// d rho / d omega at offset x.
    pub fn derivative_offset(&self, x: f64) -> f64 {
        match self.shape() {
            Some((a, b)) => {
                let s = 1.0 + b * x * x;
                -2.0 * a * b * x * self.norm * s.powf(-a - 1.0)
            }
            None => 0.0,
        }
    }

    /// rho masked to zero outside the support.
    pub(crate) fn eval_masked(&self, x: f64) -> f64 {
        if x.abs() <= self.half_width * (1.0 + 1e-12) {
            self.eval_offset(x)
        } else {
            0.0
        }
    }

    /// rho(center), finite for every continuous kind.
    pub fn peak(&self) -> f64 {
        self.eval_offset(0.0)
    }
}

/// q-Gaussian value; errors on other kinds.
pub fn qgauss_eval(density: &SpinDensity, omega: f64) -> Result<f64> {
    match density.kind() {
        DensityKind::QGaussian { .. } => Ok(density.eval(omega)),
        _ => Err(Error::param("density", "not a q-Gaussian")),
    }
}
