//! Poles of the Laplace-transformed cavity amplitude for the free decay.
//!
//! In offset variables x = omega - omega_c the transform is 1/D(s) with
//! D(s) = s + kappa + Omega^2 g(s), g(s) = int rho(x)/(s + i x) dx. Poles are
//! sought at s = sigma + i y with sigma < 0. Near the real axis the integrand is
//! almost singular at x = -y, so a quadratic Taylor model of rho around that
//! point is subtracted and integrated analytically.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{SpectralMeasure, SpinDensity};
use crate::system::SystemParams;

const I: Complex64 = Complex64::new(0.0, 1.0);
/// Grid steps per FWHM for the pole integrals.
const STEPS_PER_FWHM: f64 = 1000.0;
const FIXED_POINT_ITERS: usize = 400;
const NEWTON_ITERS: usize = 60;
const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleSolution {
    /// Real part, always negative [rad/ns].
    pub sigma: f64,
    /// Imaginary part in the laboratory convention: omega = y - omega_c [rad/ns].
    pub omega: f64,
    /// 1 / D'(s)
    pub residue: Complex64,
}

impl PoleSolution {
    /// Oscillation frequency in the rotating frame.
    pub fn rotating_frequency(&self, params: &SystemParams) -> f64 {
        self.omega + params.omega_c
    }

    pub fn s(&self, params: &SystemParams) -> Complex64 {
        Complex64::new(self.sigma, self.rotating_frequency(params))
    }
}

/// Poles found plus notes on starts that failed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PoleSearch {
    pub poles: Vec<PoleSolution>,
    pub diagnostics: Vec<String>,
}

/// g(s) and h(s) = int rho/(s + ix)^2 over a fixed discretisation of the density.
pub(crate) struct Resolvent {
    dirac: bool,
    density: SpinDensity,
    offsets: Vec<f64>,
    weights: Vec<f64>,
    rho: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl Resolvent {
    pub(crate) fn new(density: &SpinDensity) -> Result<Self> {
        if density.is_dirac() {
            return Ok(Resolvent { dirac: true, density: *density, offsets: vec![], weights: vec![], rho: vec![], lo: 0.0, hi: 0.0 });
        }
        let m = SpectralMeasure::new(density, density.fwhm() / STEPS_PER_FWHM)?;
        let d = m.density;
        let rho = m.offsets().iter().map(|&x| d.eval_offset(x)).collect();
        let lo = m.grid.offsets[0];
        let hi = *m.grid.offsets.last().unwrap();
        Ok(Resolvent { dirac: false, density: d, offsets: m.grid.offsets.clone(), weights: m.grid.weights, rho, lo, hi })
    }

    /// (g(s), h(s)) for Re s != 0.
    pub(crate) fn eval(&self, s: Complex64) -> (Complex64, Complex64) {
        if self.dirac {
            return (1.0 / s, 1.0 / (s * s));
        }
        let sigma = s.re;
        let xs = -s.im;
        let d = &self.density;
        let r0 = d.eval_offset(xs);
        let r1 = d.derivative_offset(xs);
        let e = 1e-4 * d.fwhm();
        let r2 = 0.25 * (d.derivative_offset(xs + e) - d.derivative_offset(xs - e)) / e;
        let (u1, u2) = (self.lo - xs, self.hi - xs);

        let prim0 = |u: f64| Complex64::new((u / sigma).atan(), -0.5 * (sigma * sigma + u * u).ln());
        let l0 = prim0(u2) - prim0(u1);
        let l1 = -I * (u2 - u1) + I * sigma * l0;
        let l2 = -I * 0.5 * (u2 * u2 - u1 * u1) + I * sigma * l1;
        let m0 = I / Complex64::new(sigma, u2) - I / Complex64::new(sigma, u1);
        let m1 = -I * l0 + I * sigma * m0;
        let m2 = -(u2 - u1) + 2.0 * sigma * l0 - sigma * sigma * m0;

        let mut g = Complex64::new(0.0, 0.0);
        let mut h = Complex64::new(0.0, 0.0);
        for ((&x, &w), &r) in self.offsets.iter().zip(&self.weights).zip(&self.rho) {
            let u = x - xs;
            let rem = r - (r0 + u * (r1 + u * r2));
            let z = 1.0 / Complex64::new(sigma, u);
            g += w * rem * z;
            h += w * rem * z * z;
        }
        g += r0 * l0 + r1 * l1 + r2 * l2;
        h += r0 * m0 + r1 * m1 + r2 * m2;
        (g, h)
    }
}

fn d_and_derivative(params: &SystemParams, res: &Resolvent, s: Complex64) -> (Complex64, Complex64) {
    let o2 = params.coupling * params.coupling;
    let (g, h) = res.eval(s);
    (s + params.kappa + o2 * g, 1.0 - o2 * h)
}

/// Largest of the two normalised fixed-point residuals.
fn residual(params: &SystemParams, res: &Resolvent, s: Complex64) -> f64 {
    let o2 = params.coupling * params.coupling;
    let (g, _) = res.eval(s);
    // sigma (1 + Omega^2 int rho/|s+ix|^2) + kappa = 0 and y = Omega^2 int rho (x+y)/|s+ix|^2
    let i1 = g.re / s.re;
    let i2 = -g.im;
    let r1 = (s.re * (1.0 + o2 * i1) + params.kappa).abs() / params.kappa;
    let r2 = (s.im - o2 * i2).abs() / (s.im.abs() + o2 * i2.abs() + params.kappa);
    r1.max(r2)
}

fn require_resonance(params: &SystemParams, density: &SpinDensity) -> Result<()> {
    let tol = 1e-12 * params.omega_c;
    if (params.omega_p - params.omega_c).abs() > tol || (density.center() - params.omega_c).abs() > tol {
        return Err(Error::param("omega_p", "pole analysis is for omega_p = omega_c = omega_s"));
    }
    Ok(())
}

fn polish(params: &SystemParams, res: &Resolvent, start: Complex64) -> std::result::Result<Complex64, String> {
    let kappa = params.kappa;
    let o2 = params.coupling * params.coupling;
    let (mut sigma, mut y) = (start.re, start.im);
    // damped fixed-point iteration on the pole equations
    for _ in 0..FIXED_POINT_ITERS {
        let (g, _) = res.eval(Complex64::new(sigma, y));
        let ns = -kappa / (1.0 + o2 * g.re / sigma);
        let ny = -o2 * g.im;
        let (ds, dy) = (ns - sigma, ny - y);
        sigma += 0.5 * ds;
        y += 0.5 * dy;
        if !(sigma < 0.0) || !sigma.is_finite() || !y.is_finite() {
            return Err(format!("iteration from ({:.3e}, {:.3e}) left the left half plane", start.re, start.im));
        }
        if sigma.abs() < 1e-9 * kappa {
            return Err(format!("iteration from ({:.3e}, {:.3e}) collapsed onto the imaginary axis", start.re, start.im));
        }
        if ds.abs().max(dy.abs()) < 1e-13 * (kappa + y.abs()) {
            break;
        }
    }
    let mut s = Complex64::new(sigma, y);
    for _ in 0..NEWTON_ITERS {
        let (d, dp) = d_and_derivative(params, res, s);
        if dp.norm() == 0.0 {
            break;
        }
        let step = d / dp;
        let mut next = s - step;
        // keep Newton inside the left half plane
        let mut damp = 1.0;
        while next.re >= 0.0 && damp > 1e-6 {
            damp *= 0.5;
            next = s - step * damp;
        }
        if next.re >= 0.0 {
            return Err("Newton step left the left half plane".into());
        }
        s = next;
        if step.norm() * damp < 1e-15 * (kappa + s.norm()) {
            break;
        }
    }
    let r = residual(params, res, s);
    if r > RESIDUAL_TOL {
        return Err(format!("no convergence from ({:.3e}, {:.3e}): residual {r:.2e}", start.re, start.im));
    }
    if !(s.re < -1e-9 * kappa) {
        return Err(format!("root at sigma = {:.3e} is not strictly damped", s.re));
    }
    Ok(s)
}

/// Multistart search for the poles of the free-decay transform (resonant case).
pub fn find_poles(params: &SystemParams, density: &SpinDensity) -> Result<PoleSearch> {
    params.validate()?;
    require_resonance(params, density)?;
    let res = Resolvent::new(density)?;
    let (k, g) = (params.kappa, params.coupling);
    let starts = [
        Complex64::new(-k, 0.0),
        Complex64::new(-0.1 * k, 0.0),
        Complex64::new(-0.1 * k, g),
        Complex64::new(-0.1 * k, -g),
        Complex64::new(-k, g),
        Complex64::new(-k, -g),
    ];
    let mut out = PoleSearch::default();
    let mut found: Vec<Complex64> = Vec::new();
    for st in starts {
        match polish(params, &res, st) {
            Ok(s) => {
                let tol = 1e-6 * (k + s.norm());
                if found.iter().all(|f| (f - s).norm() > tol) {
                    found.push(s);
                }
            }
            Err(msg) => out.diagnostics.push(msg),
        }
    }
    found.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
    for s in found {
        let (_, dp) = d_and_derivative(params, &res, s);
        if dp.norm() < 1e-12 {
            return Err(Error::DegeneratePole(dp.norm()));
        }
        out.poles.push(PoleSolution { sigma: s.re, omega: s.im - params.omega_c, residue: 1.0 / dp });
    }
    Ok(out)
}

/// Residue weight 1/D'(s) of a pole.
pub fn residue(params: &SystemParams, density: &SpinDensity, pole: &PoleSolution) -> Result<Complex64> {
    let res = Resolvent::new(density)?;
    let (_, dp) = d_and_derivative(params, &res, pole.s(params));
    if dp.norm() < 1e-12 {
        return Err(Error::DegeneratePole(dp.norm()));
    }
    Ok(1.0 / dp)
}

/// Normalised residual of the pole equations at a pole.
pub fn pole_residual(params: &SystemParams, density: &SpinDensity, pole: &PoleSolution) -> Result<f64> {
    let res = Resolvent::new(density)?;
    Ok(residual(params, &res, pole.s(params)))
}
