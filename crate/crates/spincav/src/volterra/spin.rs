use num_complex::Complex64;
use rayon::prelude::*;

use super::kernel::detunings;
use crate::error::Result;
use crate::series::ComplexSeries;
use crate::spectral::SpectralMeasure;
use crate::system::SystemParams;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
/// Frequencies per work unit; fixed so the reduction order never depends on the thread count.
const CHUNK: usize = 256;

/// J_x + i J_y = -(Omega/2) sum_j m_j S_j(t), S_j(t) = int_0^t exp(-i nu_j (t - s)) A(s) ds.
///
/// One accumulator per frequency node, advanced by the trapezoid rule each step.
pub fn collective_spin(a: &ComplexSeries, params: &SystemParams, measure: &SpectralMeasure) -> Result<ComplexSeries> {
    let nu = detunings(params, measure);
    let dt = a.grid.dt;
    let n = a.len();
    let masses = &measure.masses;
    let idx: Vec<usize> = (0..masses.len()).step_by(CHUNK).collect();
    let partial: Vec<Vec<Complex64>> = idx
        .par_iter()
        .map(|&j0| {
            let j1 = (j0 + CHUNK).min(masses.len());
            let rot: Vec<Complex64> = nu[j0..j1].iter().map(|&v| Complex64::from_polar(1.0, -v * dt)).collect();
            let mut acc = vec![ZERO; j1 - j0];
            let mut out = vec![ZERO; n];
            for i in 1..n {
                let (prev, cur) = (a.values[i - 1], a.values[i]);
                let mut s = ZERO;
                for ((sj, r), &m) in acc.iter_mut().zip(&rot).zip(&masses[j0..j1]) {
                    *sj = *sj * r + 0.5 * dt * (r * prev + cur);
                    s += m * *sj;
                }
                out[i] = s;
            }
            out
        })
        .collect();
    let scale = -0.5 * params.coupling;
    let mut j = vec![ZERO; n];
    for part in &partial {
        for (x, p) in j.iter_mut().zip(part) {
            *x += p;
        }
    }
    for x in &mut j {
        *x *= scale;
    }
    ComplexSeries::new(a.grid, j)
}

/// Amplitude of a single spin mode, B_k(t) = -g_k int_0^t exp(-(gamma + i(omega_k - omega_p))(t - s)) A(s) ds.
pub fn spin_mode_amplitude(a: &ComplexSeries, params: &SystemParams, omega_k: f64, g_k: f64) -> Result<ComplexSeries> {
    let dt = a.grid.dt;
    let r = (-Complex64::new(params.gamma, omega_k - params.omega_p) * dt).exp();
    let mut s = ZERO;
    let mut out = vec![ZERO; a.len()];
    for i in 1..a.len() {
        s = s * r + 0.5 * dt * (r * a.values[i - 1] + a.values[i]);
        out[i] = -g_k * s;
    }
    ComplexSeries::new(a.grid, out)
}
