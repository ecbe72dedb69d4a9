//! Principal-value integrals over the spin density.
//!
//! The singular point is handled by pairing nodes symmetric about it: on a
//! uniform grid centred at the singularity, P int g(u)/u du becomes
//! int_0 (g(u) - g(-u))/u du, whose integrand is smooth and even, so the
//! trapezoid rule converges very fast. The central cell contributes the
//! limit -2 rho'(omega) times half a step.

use num_complex::Complex64;
use std::f64::consts::PI;

use super::{SpectralMeasure, SpinDensity};

/// Grid steps per FWHM used by the stand-alone evaluators.
const STEPS_PER_FWHM: f64 = 400.0;

/// Lamb shift delta(omega) = P int rho(w) / (omega - w) dw over the density's support.
pub fn lamb_shift(density: &SpinDensity, omega: f64) -> f64 {
    let w = omega - density.center();
    if density.is_dirac() {
        return if w == 0.0 { 0.0 } else { 1.0 / w };
    }
    let h = density.fwhm() / STEPS_PER_FWHM;
    let half = density.half_width();
    if w.abs() > half + 10.0 * h {
        // no singularity inside the support: plain trapezoid
        let n = (half / h).ceil() as i64;
        let hh = half / n as f64;
        let mut s = 0.0;
        for k in -n..=n {
            let x = k as f64 * hh;
            let f = density.eval_offset(x) / (w - x);
            s += if k.abs() == n { 0.5 * f } else { f };
        }
        return s * hh;
    }
    let kmax = ((w.abs() + half) / h).ceil() as usize;
    let mut s = -density.derivative_offset(w);
    for k in 1..=kmax {
        let u = k as f64 * h;
        let g = (density.eval_masked(w - u) - density.eval_masked(w + u)) / u;
        s += if k == kmax { 0.5 * g } else { g };
    }
    s * h
}

/// Lamb shift at every node of a discretised density.
pub fn lamb_shift_on_grid(measure: &SpectralMeasure) -> Vec<f64> {
    let n = measure.len();
    let d = &measure.density;
    if d.is_dirac() {
        return vec![0.0];
    }
    let h = measure.grid.spacing;
    let rho: Vec<f64> = measure.offsets().iter().map(|&x| d.eval_offset(x)).collect();
    let inv: Vec<f64> = (0..n).map(|k| if k == 0 { 0.0 } else { 1.0 / (k as f64 * h) }).collect();
    (0..n)
        .map(|j| {
            let mut s = -d.derivative_offset(measure.offsets()[j]);
            let kmax = j.max(n - 1 - j);
            for k in 1..=kmax {
                let lo = if k <= j { rho[j - k] } else { 0.0 };
                let hi = if j + k < n { rho[j + k] } else { 0.0 };
                s += (lo - hi) * inv[k];
            }
            s * h
        })
        .collect()
}

/// int f(w) / (w - omega_s - i0) dw split into its principal value and pole parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SokhotskiSplit {
    pub principal: f64,
    /// i pi f(omega_s)
    pub pole: Complex64,
}

impl SokhotskiSplit {
    pub fn total(&self) -> Complex64 {
        self.pole + self.principal
    }
}

/// Splits int f(w)/(w - omega_s - i0) dw over the support of `density`, for f smooth at the centre.
pub fn sokhotski_split(density: &SpinDensity, f: impl Fn(f64) -> f64) -> SokhotskiSplit {
    let c = density.center();
    let pole = Complex64::new(0.0, PI * f(c));
    if density.is_dirac() {
        return SokhotskiSplit { principal: 0.0, pole };
    }
    let h = density.fwhm() / STEPS_PER_FWHM;
    let kmax = (density.half_width() / h).ceil() as usize;
    let eps = h * 1e-3;
    let slope = (f(c + eps) - f(c - eps)) / (2.0 * eps);
    let mut s = slope;
    for k in 1..=kmax {
        let u = k as f64 * h;
        let g = (f(c + u) - f(c - u)) / u;
        s += if k == kmax { 0.5 * g } else { g };
    }
    SokhotskiSplit { principal: s * h, pole }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::mhz_to_angular;

    fn nv_density() -> SpinDensity {
        SpinDensity::q_gaussian_fwhm(1.39, mhz_to_angular(9.4), 0.0).unwrap()
    }

    #[test]
    fn zero_at_center_and_odd() {
        let d = nv_density();
        assert!(lamb_shift(&d, 0.0).abs() < 1e-12);
        let g = d.fwhm();
        for x in [0.1 * g, 0.5 * g, 2.0 * g, 30.0 * g] {
            let (a, b) = (lamb_shift(&d, x), lamb_shift(&d, -x));
            assert!((a + b).abs() < 1e-9 * a.abs(), "{a} {b}");
        }
    }

    #[test]
    fn lorentzian_hilbert_transform() {
        let delta = 0.02;
        let d = SpinDensity::lorentzian(delta, 0.0).unwrap();
        for w in [delta, 0.3 * delta, 3.0 * delta] {
            let want = w / (w * w + delta * delta);
            let got = lamb_shift(&d, w);
            assert!((got - want).abs() < 1e-6 * want, "w={w}: {got} vs {want}");
        }
    }

    #[test]
    fn far_field_is_monopole() {
        let d = nv_density();
        let delta = match d.kind() {
            super::super::DensityKind::QGaussian { delta, .. } => delta,
            _ => unreachable!(),
        };
        let w = 100.0 * delta;
        assert!((lamb_shift(&d, w) * w - 1.0).abs() < 1e-2);
    }

    #[test]
    fn grid_version_agrees() {
        let d = nv_density();
        let m = SpectralMeasure::new(&d, d.fwhm() / 100.0).unwrap();
        let dg = lamb_shift_on_grid(&m);
        let n = m.len();
        for j in [n / 2, n / 2 + 37, n / 2 + 400, n / 2 - 1000] {
            let want = lamb_shift(&m.density, m.grid.omega(j));
            assert!((dg[j] - want).abs() < 1e-6 * want.abs().max(1.0), "{} {}", dg[j], want);
        }
        assert!(dg[n / 2].abs() < 1e-9);
    }

    #[test]
    fn sokhotski_on_density() {
        let d = nv_density();
        let s = sokhotski_split(&d, |w| d.eval(w));
        assert!(s.principal.abs() < 1e-12);
        assert!((s.pole.im - PI * d.peak()).abs() < 1e-15);
        // an odd-plus-even test function: P int x rho / x = int rho ~ 1
        let s2 = sokhotski_split(&d, |w| w * d.eval(w));
        assert!((s2.principal - 1.0).abs() < 1e-5);
        assert_eq!(s2.pole.im, 0.0);
    }
}
