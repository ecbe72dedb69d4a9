use num_complex::Complex64;
use rayon::prelude::*;

use crate::drive::DriveProtocol;
use crate::spectral::{SpectralMeasure, SpinDensity};
use crate::system::SystemParams;

/// Samples per block between exact re-seeds of the rotating phasors.
const BLOCK: usize = 256;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Detunings nu_j = omega_j - omega_p of the measure nodes.
pub(crate) fn detunings(params: &SystemParams, measure: &SpectralMeasure) -> Vec<f64> {
    let shift = measure.grid.center - params.omega_p;
    measure.offsets().iter().map(|&x| shift + x).collect()
}

/// sum_j c_j exp(-i nu_j m dt) for m = 0..count.
///
/// Blocks of `BLOCK` samples restart from exact exponentials, so the result does
/// not depend on how the blocks are scheduled across threads.
pub(crate) fn phasor_sums(coeffs: &[Complex64], nu: &[f64], dt: f64, count: usize) -> Vec<Complex64> {
    let blocks: Vec<usize> = (0..count).step_by(BLOCK).collect();
    let rot: Vec<Complex64> = nu.iter().map(|&v| Complex64::from_polar(1.0, -v * dt)).collect();
    let parts: Vec<Vec<Complex64>> = blocks
        .par_iter()
        .map(|&m0| {
            let len = BLOCK.min(count - m0);
            let mut z: Vec<Complex64> = nu.iter().map(|&v| Complex64::from_polar(1.0, -v * dt * m0 as f64)).collect();
            let mut out = Vec::with_capacity(len);
            for _ in 0..len {
                let mut s = ZERO;
                for ((zj, cj), rj) in z.iter_mut().zip(coeffs).zip(&rot) {
                    s += cj * *zj;
                    *zj *= rj;
                }
                out.push(s);
            }
            out
        })
        .collect();
    parts.concat()
}

/// Memory kernel K(lag) evaluated by quadrature over a discretised density.
pub fn kernel_on(params: &SystemParams, measure: &SpectralMeasure, lag: f64) -> Complex64 {
    let lambda = params.cavity_pole();
    let decay = (-lambda * lag).exp();
    let nu = detunings(params, measure);
    let mut s = ZERO;
    for (&m, &v) in measure.masses.iter().zip(&nu) {
        let den = lambda - Complex64::new(0.0, v);
        s += m * (Complex64::from_polar(1.0, -v * lag) - decay) / den;
    }
    -params.coupling * params.coupling * s
}

/// Memory kernel K(lag); the density is discretised with the default spacing for `lag`.
pub fn kernel_k(params: &SystemParams, density: &SpinDensity, lag: f64) -> crate::Result<Complex64> {
    let m = SpectralMeasure::for_duration(density, lag.max(1.0))?;
    Ok(kernel_on(params, &m, lag))
}

/// K(m dt) for m = 0..=m_max.
#[derive(Debug, Clone)]
pub struct KernelCache {
    pub params: SystemParams,
    pub dt: f64,
    pub values: Vec<Complex64>,
}

impl KernelCache {
    pub fn build(params: &SystemParams, measure: &SpectralMeasure, dt: f64, m_max: usize) -> Self {
        let lambda = params.cavity_pole();
        let nu = detunings(params, measure);
        let coeffs: Vec<Complex64> = measure
            .masses
            .iter()
            .zip(&nu)
            .map(|(&m, &v)| m / (lambda - Complex64::new(0.0, v)))
            .collect();
        let total: Complex64 = coeffs.iter().sum();
        let sums = phasor_sums(&coeffs, &nu, dt, m_max + 1);
        let o2 = params.coupling * params.coupling;
        let mut values: Vec<Complex64> = sums
            .iter()
            .enumerate()
            .map(|(m, s)| -o2 * (s - total * (-lambda * (m as f64 * dt)).exp()))
            .collect();
        values[0] = ZERO;
        KernelCache { params: *params, dt, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Drive term F(t) = -int_0^t eta(s) exp(-lambda (t - s)) ds, summed in closed form per segment.
pub fn forcing_f(params: &SystemParams, protocol: &DriveProtocol, t: f64) -> Complex64 {
    let lambda = params.cavity_pole();
    let mut f = ZERO;
    for (a, b, eta) in protocol.intervals() {
        if t <= a {
            break;
        }
        let end = b.min(t);
        f -= eta * ((-lambda * (t - end)).exp() - (-lambda * (t - a)).exp()) / lambda;
    }
    f
}
