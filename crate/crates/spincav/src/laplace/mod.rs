//! Free decay from a single cavity photon: the spectral kernel U, pole search,
//! inversion back to the time domain, and decay-rate estimates.

mod poles;
mod rates;

pub use poles::{find_poles, pole_residual, residue, PoleSearch, PoleSolution};
pub use rates::{
    decay_rate_timefit, gamma_asymptotic, gamma_lorentz_formula, gamma_markov, gamma_no_broadening,
    DecayRateEstimate, RateBranches, RateMethod,
};

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::series::ComplexSeries;
use crate::spectral::{default_spacing, lamb_shift, lamb_shift_on_grid, SpectralMeasure, SpinDensity};
use crate::system::{SystemParams, TimeGrid};

fn require_resonance(params: &SystemParams, density: &SpinDensity) -> Result<()> {
    let tol = 1e-12 * params.omega_c;
    if (params.omega_p - params.omega_c).abs() > tol || (density.center() - params.omega_c).abs() > tol {
        return Err(Error::param("omega_p", "the Laplace analysis is for omega_p = omega_c = omega_s"));
    }
    Ok(())
}

/// Spectral kernel U at `omega`,
/// U(omega) = rho / [(omega - omega_c - Omega^2 delta(omega) + i kappa)^2 + (pi Omega^2 rho)^2].
///
/// The square in the denominator is a complex square, so U is complex; U(omega_c - x)
/// is the conjugate of U(omega_c + x), which keeps A(t) real at resonance.
pub fn kernel_u(params: &SystemParams, density: &SpinDensity, omega: f64) -> Result<Complex64> {
    require_resonance(params, density)?;
    if density.is_dirac() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let x = omega - params.omega_c;
    let rho = density.eval_masked(x);
    let o2 = params.coupling * params.coupling;
    let a = Complex64::new(x - o2 * lamb_shift(density, omega), params.kappa);
    Ok(rho / (a * a + (PI * o2 * rho).powi(2)))
}

/// Nodes, weights and Lamb shifts for the spectral integral.
struct Quadrature {
    x: Vec<f64>,
    w: Vec<f64>,
    shift: Vec<f64>,
}

/// Eight-point Gauss-Legendre rule on [-1, 1], positive half.
const GL_X: [f64; 4] = [0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363];
const GL_W: [f64; 4] = [0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763];

/// Lines narrower than this many grid steps get a graded mesh.
const NARROW_LINE_STEPS: f64 = 50.0;
/// Half width of the graded window, in grid steps.
const WINDOW_STEPS: usize = 200;
/// Growth factor of the graded mesh away from a line.
const GRADING: f64 = 1.5;

/// Cubic interpolation of grid values at an arbitrary offset.
fn interp_cubic(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let h = xs[1] - xs[0];
    let n = xs.len();
    let j = (((x - xs[0]) / h).floor() as isize).clamp(1, n as isize - 3) as usize;
    let idx = [j - 1, j, j + 1, j + 2];
    let mut s = 0.0;
    for &a in &idx {
        let mut l = 1.0;
        for &b in &idx {
            if a != b {
                l *= (x - xs[b]) / (xs[a] - xs[b]);
            }
        }
        s += l * ys[a];
    }
    s
}

/// Trapezoid rule on the uniform grid, replaced by graded Gauss-Legendre panels
/// around polariton lines that the grid cannot resolve.
///
/// Near the coupling where a pole pair leaves the branch cut the kernel U has a
/// Lorentzian component of half width |kappa - pi Omega^2 rho(x*)| / |1 - Omega^2 delta'(x*)|
/// at each root x* of x = Omega^2 delta(x); this width goes to zero at the threshold.
fn spectral_quadrature(params: &SystemParams, m: &SpectralMeasure, shifts: &[f64]) -> Quadrature {
    let xs = m.offsets();
    let n = xs.len();
    let h = m.grid.spacing;
    let o2 = params.coupling * params.coupling;
    let d = &m.density;
    let g: Vec<f64> = xs.iter().zip(shifts).map(|(&x, &s)| x - o2 * s).collect();

    // (window start node, window end node, root, width)
    let mut windows: Vec<(usize, usize, f64, f64)> = Vec::new();
    for j in 0..n.saturating_sub(1) {
        if g[j] == 0.0 || g[j].signum() != g[j + 1].signum() {
            let slope = (g[j + 1] - g[j]) / h;
            let root = if g[j] == 0.0 { xs[j] } else { xs[j] - g[j] / slope };
            let width = (params.kappa - PI * o2 * d.eval_offset(root)).abs() / slope.abs().max(1e-12);
            if width < NARROW_LINE_STEPS * h {
                let lo = j.saturating_sub(WINDOW_STEPS);
                let hi = (j + 1 + WINDOW_STEPS).min(n - 1);
                windows.push((lo, hi, root, width.max(1e-12 * h)));
            }
        }
    }
    if windows.is_empty() {
        return Quadrature { x: xs.to_vec(), w: m.grid.weights.clone(), shift: shifts.to_vec() };
    }

    // merge overlapping windows
    windows.sort_by(|a, b| a.0.cmp(&b.0));
    let mut merged: Vec<(usize, usize, Vec<(f64, f64)>)> = Vec::new();
    for (lo, hi, root, width) in windows {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => {
                last.1 = last.1.max(hi);
                last.2.push((root, width));
            }
            _ => merged.push((lo, hi, vec![(root, width)])),
        }
    }

    let mut inside = vec![false; n.saturating_sub(1)];
    for &(lo, hi, _) in &merged {
        inside[lo..hi].iter_mut().for_each(|p| *p = true);
    }
    let mut w = vec![0.0; n];
    for (j, &refined) in inside.iter().enumerate() {
        if !refined {
            w[j] += 0.5 * h;
            w[j + 1] += 0.5 * h;
        }
    }
    let mut q = Quadrature { x: Vec::new(), w: Vec::new(), shift: Vec::new() };
    for j in 0..n {
        if w[j] > 0.0 {
            q.x.push(xs[j]);
            q.w.push(w[j]);
            q.shift.push(shifts[j]);
        }
    }
    for (lo, hi, roots) in merged {
        let (a, b) = (xs[lo], xs[hi]);
        let mut cuts = vec![a, b];
        for &(root, width) in &roots {
            cuts.push(root.clamp(a, b));
            let mut e = width;
            while e < b - a {
                for c in [root - e, root + e] {
                    if c > a && c < b {
                        cuts.push(c);
                    }
                }
                e *= GRADING;
            }
        }
        // never coarser than the uniform grid
        cuts.extend(xs[lo..=hi].iter().copied());
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|p, q| (*p - *q).abs() <= 1e-14 * h);
        for pair in cuts.windows(2) {
            let (mid, half) = (0.5 * (pair[0] + pair[1]), 0.5 * (pair[1] - pair[0]));
            for (gx, gw) in GL_X.iter().zip(&GL_W) {
                for x in [mid - half * gx, mid + half * gx] {
                    q.x.push(x);
                    q.w.push(half * gw);
                    q.shift.push(interp_cubic(xs, shifts, x));
                }
            }
        }
    }
    q
}

/// Rotating-frame A(t) for A(0) = 1 and unexcited spins, from the spectral integral of U plus pole terms.
pub fn invert(params: &SystemParams, density: &SpinDensity, grid: &TimeGrid) -> Result<ComplexSeries> {
    require_resonance(params, density)?;
    let t_max = grid.t_end();
    let mut values = vec![Complex64::new(0.0, 0.0); grid.n_steps];
    if !density.is_dirac() && params.coupling > 0.0 {
        // cover both polariton peaks even if they sit outside the density support
        let wide = density.with_half_width(density.half_width().max(2.0 * params.coupling));
        let spacing = default_spacing(density, t_max).min(density.fwhm() / 400.0);
        let m = SpectralMeasure::new(&wide, spacing)?;
        m.grid.check_resolution(t_max)?;
        let d = &m.density;
        let shifts = lamb_shift_on_grid(&m);
        let o2 = params.coupling * params.coupling;
        let q = spectral_quadrature(params, &m, &shifts);
        let coeffs: Vec<Complex64> = q
            .x
            .iter()
            .zip(&q.w)
            .zip(&q.shift)
            .map(|((&x, &w), &sh)| {
                let rho = d.eval_offset(x);
                let a = Complex64::new(x - o2 * sh, params.kappa);
                o2 * w * rho / (a * a + (PI * o2 * rho).powi(2))
            })
            .collect();
        // sum_j c_j exp(-i x_j t) on the time grid
        let t0 = grid.t_start;
        let shift: Vec<Complex64> = coeffs
            .iter()
            .zip(&q.x)
            .map(|(c, &x)| c * Complex64::from_polar(1.0, -x * t0))
            .collect();
        let sums = crate::volterra::phasor_sums(&shift, &q.x, grid.dt, grid.n_steps);
        values.copy_from_slice(&sums);
    }
    let search = find_poles(params, density)?;
    for p in &search.poles {
        let s = p.s(params);
        for (v, t) in values.iter_mut().zip(grid.times()) {
            *v += p.residue * (s * t).exp();
        }
    }
    ComplexSeries::new(*grid, values)
}
