use num_complex::Complex64;
use rayon::prelude::*;

use super::kernel::KernelCache;
use crate::error::{Error, Result};
use crate::series::ComplexSeries;
use crate::spectral::{sokhotski_split, SpectralMeasure, SpinDensity};
use crate::system::{SystemParams, TimeGrid};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn require_resonance(params: &SystemParams, density: &SpinDensity) -> Result<()> {
    let tol = 1e-12 * params.omega_c.abs();
    if (params.omega_c - params.omega_p).abs() > tol || (density.center() - params.omega_c).abs() > tol {
        return Err(Error::param("omega_p", "steady-state analysis needs omega_p = omega_c = omega_s"));
    }
    Ok(())
}

/// Long-time response to a constant drive `eta` at resonance: (A_st, J_x,st).
pub fn steady_state(params: &SystemParams, density: &SpinDensity, eta: Complex64) -> Result<(Complex64, f64)> {
    params.validate()?;
    require_resonance(params, density)?;
    if density.is_dirac() {
        if params.coupling == 0.0 {
            return Ok((-eta / params.kappa, 0.0));
        }
        // a single undamped mode absorbs the drive completely
        return Ok((ZERO, (eta / (2.0 * params.coupling)).re));
    }
    let split = sokhotski_split(density, |w| density.eval(w));
    let o2 = params.coupling * params.coupling;
    // A_st = eta / (-kappa + i Omega^2 int rho/(w - w_s - i0))
    let a_st = eta / (-params.kappa + Complex64::new(0.0, o2) * split.total());
    let jx = (Complex64::new(0.0, 0.5 * params.coupling) * a_st * split.pole).re;
    Ok((a_st, jx))
}

/// sin(x t)/x, including the x = 0 limit.
fn sin_over(x: f64, t: f64) -> f64 {
    let z = x * t;
    if z.abs() < 1e-6 {
        t * (1.0 - z * z / 6.0)
    } else {
        z.sin() / x
    }
}

/// Free evolution after a long resonant pulse, starting from the steady state A(0) = A_st.
///
/// The ensemble polarisation built up during the drive enters as an extra source:
/// A(t) = A_st exp(-kappa t) + Omega^2 A_st {sum_x m_x [kappa sin(xt)/x - cos(xt) + exp(-kappa t)]/(kappa^2 + x^2)
///        - pi rho(w_s)(1 - exp(-kappa t))/kappa} + int_0^t K(t - s) A(s) ds.
pub fn decay_from_steady_state(params: &SystemParams, density: &SpinDensity, grid: &TimeGrid, eta: Complex64) -> Result<ComplexSeries> {
    let m = SpectralMeasure::for_duration(density, grid.t_end() - grid.t_start)?;
    decay_from_steady_state_with(params, &m, grid, eta)
}

pub fn decay_from_steady_state_with(params: &SystemParams, measure: &SpectralMeasure, grid: &TimeGrid, eta: Complex64) -> Result<ComplexSeries> {
    let density = &measure.density;
    if density.is_dirac() && params.coupling > 0.0 {
        return Err(Error::param("density", "decay from steady state needs a continuous density"));
    }
    let (a_st, _) = steady_state(params, density, eta)?;
    if !density.is_dirac() {
        measure.grid.check_resolution(grid.t_end() - grid.t_start)?;
    }
    let dt = grid.dt;
    let n = grid.n_steps;
    let kappa = params.kappa;
    let o2 = params.coupling * params.coupling;
    let kernel = KernelCache::build(params, measure, dt, n);
    let k = &kernel.values;
    let rho0 = density.peak();
    let sources: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let t = i as f64 * dt;
            let e = (-kappa * t).exp();
            let mut s = 0.0;
            if o2 != 0.0 {
                for (&mj, &x) in measure.masses.iter().zip(measure.offsets()) {
                    s += mj * (kappa * sin_over(x, t) - (x * t).cos() + e) / (kappa * kappa + x * x);
                }
            }
            a_st * e + a_st * o2 * (s - std::f64::consts::PI * rho0 * (1.0 - e) / kappa)
        })
        .collect();
    let mut a = vec![ZERO; n];
    a[0] = a_st;
    for i in 1..n {
        let source = sources[i];
        let mut conv = 0.5 * k[i] * a[0];
        for j in 1..i {
            conv += k[i - j] * a[j];
        }
        a[i] = dt * conv + source;
    }
    ComplexSeries::new(*grid, a)
}

/// Collective spin for the free evolution started from the steady state.
pub fn collective_spin_from_steady(a: &ComplexSeries, params: &SystemParams, measure: &SpectralMeasure, a_st: Complex64) -> Result<ComplexSeries> {
    let mut j = super::collective_spin(a, params, measure)?;
    let rho0 = measure.density.peak();
    for (i, t) in a.grid.times().enumerate() {
        let t = t - a.grid.t_start;
        let tail: f64 = measure.masses.iter().zip(measure.offsets()).map(|(&m, &x)| m * sin_over(x, t)).sum();
        j.values[i] += -0.5 * params.coupling * a_st * (std::f64::consts::PI * rho0 - tail);
    }
    Ok(j)
}
