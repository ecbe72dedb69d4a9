use num_complex::Complex64;
use rayon::prelude::*;

use super::kernel::{detunings, forcing_f, phasor_sums, KernelCache};
use crate::drive::DriveProtocol;
use crate::error::{Error, Result};
use crate::series::ComplexSeries;
use crate::spectral::{SpectralMeasure, SpinDensity};
use crate::system::{SystemParams, TimeGrid};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Default size cap for the O(N^2) direct solver.
pub const DIRECT_STEP_CAP: usize = 4000;

/// Long constant-drive stretches are cut into pieces of at most this many steps.
/// The recurrence is exact across any cut, and short pieces keep the in-piece
/// convolution cheap.
const MAX_PIECE: usize = 4096;

/// State carried across a segment boundary T_n.
#[derive(Debug, Clone)]
pub struct SolverMemory {
    pub index: usize,
    pub boundary_amplitude: Complex64,
    /// I_n(omega_j) = int_0^{T_n} exp(-i(omega_j - omega_p)(T_n - s)) A(s) ds
    pub memory: Vec<Complex64>,
}

/// Constant-drive pieces of the time grid: (first node, last node, eta).
fn pieces(protocol: &DriveProtocol, grid: &TimeGrid) -> Result<Vec<(usize, usize, Complex64)>> {
    let last = grid.n_steps - 1;
    let mut out = Vec::new();
    let mut start = 0usize;
    for (_, b, eta) in protocol.intervals() {
        if start >= last {
            break;
        }
        let end = match grid.node_of(b) {
            Some(k) => k,
            None if b >= grid.t_end() - grid.t_start => last,
            None => return Err(Error::Misaligned { time: b, dt: grid.dt }),
        }
        .min(last);
        split_into(&mut out, start, end, eta);
        start = start.max(end);
    }
    split_into(&mut out, start, last, ZERO);
    Ok(out)
}

fn split_into(out: &mut Vec<(usize, usize, Complex64)>, mut start: usize, end: usize, eta: Complex64) {
    while start < end {
        let e = end.min(start + MAX_PIECE);
        out.push((start, e, eta));
        start = e;
    }
}

fn check_inputs(params: &SystemParams, measure: &SpectralMeasure, grid: &TimeGrid) -> Result<()> {
    params.validate()?;
    if !measure.density.is_dirac() {
        measure.grid.check_resolution(grid.t_end() - grid.t_start)?;
    }
    Ok(())
}

/// Cavity amplitude driven by `protocol`, starting from an empty cavity and unexcited spins.
pub fn solve(params: &SystemParams, density: &SpinDensity, protocol: &DriveProtocol, grid: &TimeGrid) -> Result<ComplexSeries> {
    let m = SpectralMeasure::for_duration(density, grid.t_end() - grid.t_start)?;
    solve_with(params, &m, protocol, grid, ZERO)
}

/// Segment recurrence on a prebuilt measure, with initial cavity amplitude `a0` and unexcited spins.
///
/// Within each constant-drive piece the memory integral only runs from the piece's
/// start; everything earlier enters through the per-frequency memory I_n, which is
/// advanced once per piece.
pub fn solve_with(
    params: &SystemParams,
    measure: &SpectralMeasure,
    protocol: &DriveProtocol,
    grid: &TimeGrid,
    a0: Complex64,
) -> Result<ComplexSeries> {
    check_inputs(params, measure, grid)?;
    let dt = grid.dt;
    let pieces = pieces(protocol, grid)?;
    let longest = pieces.iter().map(|p| p.1 - p.0).max().unwrap_or(1);
    let kernel = KernelCache::build(params, measure, dt, longest);
    let k = &kernel.values;

    let lambda = params.cavity_pole();
    let o2 = params.coupling * params.coupling;
    let nu = detunings(params, measure);
    let resolvent: Vec<Complex64> = nu.iter().map(|&v| 1.0 / (lambda - Complex64::new(0.0, v))).collect();
    let rot: Vec<Complex64> = nu.iter().map(|&v| Complex64::from_polar(1.0, -v * dt)).collect();

    let mut a = vec![ZERO; grid.n_steps];
    a[0] = a0;
    let mut mem = SolverMemory { index: 0, boundary_amplitude: a0, memory: vec![ZERO; measure.len()] };

    for &(s, e, eta) in &pieces {
        let len = e - s;
        // contribution of the memory I_n: -Omega^2 sum_j m_j I_j (p_j^u - q^u)/(lambda - i nu_j)
        let coeffs: Vec<Complex64> = measure
            .masses
            .iter()
            .zip(&mem.memory)
            .zip(&resolvent)
            .map(|((&m, &i), &r)| m * i * r)
            .collect();
        let has_memory = mem.memory.iter().any(|v| *v != ZERO) && o2 != 0.0;
        let (hist, hist_total) = if has_memory {
            (phasor_sums(&coeffs, &nu, dt, len + 1), coeffs.iter().sum())
        } else {
            (Vec::new(), ZERO)
        };
        let a_start = a[s];
        for m in 1..=len {
            let u = m as f64 * dt;
            let q = (-lambda * u).exp();
            let mut f = q * a_start - eta * (1.0 - q) / lambda;
            if has_memory {
                f -= o2 * (hist[m] - hist_total * q);
            }
            let mut conv = 0.5 * k[m] * a[s];
            for j in 1..m {
                conv += k[m - j] * a[s + j];
            }
            a[s + m] = dt * conv + f;
        }
        // advance I_n to the end of the piece with trapezoid weights (Horner form)
        let seg = &a[s..=e];
        mem.memory.par_iter_mut().zip(rot.par_iter()).for_each(|(acc, &r)| {
            let mut v = *acc + 0.5 * dt * seg[0];
            for x in &seg[1..len] {
                v = v * r + dt * x;
            }
            *acc = v * r + 0.5 * dt * seg[len];
        });
        mem.index += 1;
        mem.boundary_amplitude = a[e];
    }
    ComplexSeries::new(*grid, a)
}

/// Full-history trapezoid discretisation; the slow reference for `solve`.
pub fn solve_direct(params: &SystemParams, density: &SpinDensity, protocol: &DriveProtocol, grid: &TimeGrid) -> Result<ComplexSeries> {
    let m = SpectralMeasure::for_duration(density, grid.t_end() - grid.t_start)?;
    solve_direct_with(params, &m, protocol, grid, ZERO, DIRECT_STEP_CAP)
}

pub fn solve_direct_with(
    params: &SystemParams,
    measure: &SpectralMeasure,
    protocol: &DriveProtocol,
    grid: &TimeGrid,
    a0: Complex64,
    cap: usize,
) -> Result<ComplexSeries> {
    if grid.n_steps > cap {
        return Err(Error::GridTooLarge { n: grid.n_steps, cap });
    }
    check_inputs(params, measure, grid)?;
    // alignment is not needed here, but keep the same contract as `solve`
    pieces(protocol, grid)?;
    let dt = grid.dt;
    let n = grid.n_steps;
    let kernel = KernelCache::build(params, measure, dt, n);
    let k = &kernel.values;
    let lambda = params.cavity_pole();
    let mut a = vec![ZERO; n];
    a[0] = a0;
    for m in 1..n {
        let t = m as f64 * dt;
        let f = (-lambda * t).exp() * a0 + forcing_f(params, protocol, t);
        let mut conv = 0.5 * k[m] * a[0];
        for j in 1..m {
            conv += k[m - j] * a[j];
        }
        a[m] = dt * conv + f;
    }
    ComplexSeries::new(*grid, a)
}
