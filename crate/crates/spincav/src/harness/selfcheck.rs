//! Fast invariant suite behind the `validate` subcommand.

use std::time::Instant;

use serde::Serialize;

use crate::drive::{phase_switched_train, rect_pulse, DriveProtocol};
use crate::error::Result;
use crate::laplace::invert;
use crate::lorentz::{self, LorentzParams};
use crate::series::ComplexSeries;
use crate::spectral::{lamb_shift, SpectralMeasure, SpinDensity};
use crate::system::{SystemParams, TimeGrid};
use crate::units::{ghz_to_angular, mhz_to_angular};
use crate::volterra::{collective_spin, solve_direct_with, solve_with};
use crate::Complex64;

use super::config::{ScenarioConfig, ScenarioKind};
use super::presets::preset;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub value: f64,
    pub limit: f64,
    pub seconds: f64,
}

fn system(coupling_mhz: f64) -> Result<(SystemParams, SpinDensity)> {
    let w = ghz_to_angular(2.6915);
    let p = SystemParams::resonant(w, mhz_to_angular(0.4), mhz_to_angular(coupling_mhz))?;
    let d = SpinDensity::q_gaussian_fwhm(1.39, mhz_to_angular(9.4), w)?;
    Ok((p, d))
}

fn driven(p: &SystemParams, d: &SpinDensity, proto: &DriveProtocol, grid: &TimeGrid) -> Result<(ComplexSeries, SpectralMeasure)> {
    let m = SpectralMeasure::for_duration(d, grid.t_end())?;
    let a = solve_with(p, &m, proto, grid, Complex64::new(0.0, 0.0))?;
    Ok((a, m))
}

type Check = (&'static str, f64, fn() -> Result<f64>);

fn checks() -> Vec<Check> {
    vec![
        ("density normalisation", 1e-8, || {
            let (_, d) = system(8.56)?;
            let m = SpectralMeasure::new(&d, d.fwhm() / 200.0)?;
            Ok((m.total_mass() - 1.0).abs())
        }),
        ("lamb shift odd and zero at centre", 1e-10, || {
            let (_, d) = system(8.56)?;
            let c = d.center();
            let mut worst = lamb_shift(&d, c).abs();
            for x in [0.003, 0.02, 0.09] {
                let (a, b) = (lamb_shift(&d, c + x), lamb_shift(&d, c - x));
                worst = worst.max((a + b).abs() / a.abs());
            }
            Ok(worst)
        }),
        ("linearity in drive amplitude", 1e-12, || {
            let (p, d) = system(8.56)?;
            let g = TimeGrid::covering(100.0, 0.05)?;
            let eta = Complex64::new(p.kappa, 0.0);
            let (a, _) = driven(&p, &d, &rect_pulse(eta, 60.0)?, &g)?;
            let (b, _) = driven(&p, &d, &rect_pulse(eta * Complex64::new(-3.0, 2.0), 60.0)?, &g)?;
            let scaled = ComplexSeries::new(g, a.values.iter().map(|z| z * Complex64::new(-3.0, 2.0)).collect())?;
            Ok(b.rel_linf(&scaled))
        }),
        ("recurrence against full-history quadrature", 1e-6, || {
            let (p, d) = system(8.56)?;
            let g = TimeGrid::new(0.0, 0.05, 1500)?;
            let proto = phase_switched_train(Complex64::new(p.kappa, 0.0), 26.0, 3)?;
            let m = SpectralMeasure::for_duration(&d, g.t_end())?;
            let fast = solve_with(&p, &m, &proto, &g, Complex64::new(0.0, 0.0))?;
            let slow = solve_direct_with(&p, &m, &proto, &g, Complex64::new(0.0, 0.0), 1500)?;
            Ok(fast.rel_linf(&slow))
        }),
        ("lorentzian ensemble against closed form", 1e-3, || {
            let (p, _) = system(8.56)?;
            let delta = mhz_to_angular(4.0);
            let d = SpinDensity::lorentzian(delta, p.omega_s)?;
            let g = TimeGrid::covering(200.0, 0.05)?;
            let eta = p.kappa;
            let (a, _) = driven(&p, &d, &rect_pulse(Complex64::new(eta, 0.0), 120.0)?, &g)?;
            let lp = LorentzParams::new(p.coupling, delta, p.kappa, eta, 120.0)?;
            let exact: Vec<Complex64> = g.times().map(|t| lorentz::cavity(&lp, t).map(|v| Complex64::new(v, 0.0))).collect::<Result<_>>()?;
            Ok(a.rel_linf(&ComplexSeries::new(g, exact)?))
        }),
        ("photon number closure at t = 0", 1e-3, || {
            let (p, d) = system(8.56)?;
            let a = invert(&p, &d, &TimeGrid::new(0.0, 1.0, 2)?)?;
            Ok((a.values[0].norm() - 1.0).abs())
        }),
        ("no out-of-phase spin at resonance", 1e-8, || {
            let (p, d) = system(8.56)?;
            let g = TimeGrid::covering(150.0, 0.05)?;
            let (a, m) = driven(&p, &d, &rect_pulse(Complex64::new(p.kappa, 0.0), 100.0)?, &g)?;
            let j = collective_spin(&a, &p, &m)?;
            let jy = j.values.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
            Ok(jy / j.max_abs())
        }),
        ("overshoot threshold of the reference lorentzian", 0.02, || {
            let g = lorentz::overshoot_threshold(mhz_to_angular(4.0), mhz_to_angular(0.4))?;
            Ok((crate::units::angular_to_mhz(g) / 7.15 - 1.0).abs())
        }),
        ("configuration round trip", 0.5, || {
            let bad = ScenarioKind::ALL
                .iter()
                .filter(|&&k| {
                    let c = preset(k);
                    ScenarioConfig::from_json(&c.to_json()).map(|b| b != c).unwrap_or(true)
                })
                .count();
            Ok(bad as f64)
        }),
    ]
}

/// Runs every check; an error inside a check counts as a failure.
pub fn run_selfcheck() -> Vec<CheckResult> {
    checks()
        .into_iter()
        .map(|(name, limit, f)| {
            let t0 = Instant::now();
            let value = f().unwrap_or(f64::INFINITY);
            CheckResult { name, passed: value <= limit, value, limit, seconds: t0.elapsed().as_secs_f64() }
        })
        .collect()
}
