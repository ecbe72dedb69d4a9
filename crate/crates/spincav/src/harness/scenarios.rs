//! Scenario runners. Each sweep point is solved independently on the rayon pool
//! and the rows are assembled in sweep order, so the table does not depend on
//! the number of workers.

use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::analysis::{local_maxima, prominence, refine_peak};
use crate::error::{Error, Result};
use crate::laplace::{decay_rate_timefit, find_poles, gamma_asymptotic, gamma_lorentz_formula, gamma_markov, gamma_no_broadening};
use crate::lorentz::{self, LorentzParams};
use crate::series::ComplexSeries;
use crate::spectral::{delta_from_fwhm, SpectralMeasure, SpinDensity};
use crate::system::{SystemParams, TimeGrid};
use crate::units::{angular_to_mhz, mhz_to_angular};
use crate::volterra::{collective_spin, solve_with, steady_state};
use crate::Complex64;

use super::config::*;
use super::table::{Manifest, ResultTable, RunOutput};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Longest automatic post-pulse tail, in ns.
const MAX_AUTO_TAIL: f64 = 20_000.0;

/// Runs whichever scenario the configuration names.
pub fn run(cfg: &ScenarioConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let started = Instant::now();
    let mut out = match cfg.scenario {
        ScenarioKind::LongPulse => run_long_pulse(cfg),
        ScenarioKind::TrainMap => run_pulse_train_map(cfg),
        ScenarioKind::GammaSweep => run_gamma_sweep(cfg),
        ScenarioKind::TrainCompare => run_train_compare(cfg),
        ScenarioKind::MaxScan => run_max_amplitude_scan(cfg),
        ScenarioKind::LorentzAnalytic => run_lorentz_analytic(cfg),
    }?;
    out.manifest.columns = out.table.columns().to_vec();
    out.manifest.rows = out.table.len();
    out.manifest.time("total", started.elapsed().as_secs_f64());
    Ok(out)
}

/// One point of the sweep grid, with everything built from the configuration.
struct Point {
    /// Values written in the axis columns (tau after snapping).
    axes: Vec<f64>,
    params: SystemParams,
    density: SpinDensity,
    drive: BuiltDrive,
}

struct PointResult {
    rows: Vec<Vec<f64>>,
    metrics: Map<String, Value>,
    notes: Vec<String>,
}

fn cartesian(axes: &[SweepAxis]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}

fn build_point(cfg: &ScenarioConfig, axes: &[SweepAxis], values: &[f64]) -> Result<Point> {
    let mut system = cfg.system.clone();
    let mut tau = None;
    for (axis, &v) in axes.iter().zip(values) {
        match axis.param {
            SweepParam::CouplingMhz => system.coupling_mhz = v,
            SweepParam::ProbeDetuningMhz => system.probe_detuning_mhz = v,
            SweepParam::TauNs => tau = Some(v),
        }
    }
    let params = system.params().map_err(|e| Error::Config(e.to_string()))?;
    let density = cfg.density.build(&system)?;
    let drive = cfg.drive.build(params.kappa, cfg.time.dt_ns, tau)?;
    let axes_out = axes
        .iter()
        .zip(values)
        .map(|(a, &v)| if a.param == SweepParam::TauNs { drive.tau_ns.unwrap_or(v) } else { v })
        .collect();
    Ok(Point { axes: axes_out, params, density, drive })
}

/// Solves every sweep point in parallel and stitches the rows together in order.
fn sweep(
    cfg: &ScenarioConfig,
    axes: &[SweepAxis],
    value_columns: &[&str],
    manifest: &mut Manifest,
    job: impl Fn(&Point) -> Result<PointResult> + Sync,
) -> Result<ResultTable> {
    let mut columns: Vec<String> = axes.iter().map(|a| a.param.column().to_string()).collect();
    columns.extend(value_columns.iter().map(|c| c.to_string()));
    let mut table = ResultTable::new(columns, manifest.provenance.clone());

    let grid = cartesian(axes);
    let results: Vec<Result<(Point, PointResult)>> = grid
        .par_iter()
        .map(|values| {
            let p = build_point(cfg, axes, values)?;
            let r = job(&p)?;
            Ok((p, r))
        })
        .collect();

    let mut points = Vec::with_capacity(results.len());
    let mut snapped = Vec::new();
    for r in results {
        let (p, res) = r?;
        for row in res.rows {
            let mut full = p.axes.clone();
            full.extend(row);
            table.push(full)?;
        }
        if let (Some(req), Some(got)) = (p.drive.tau_requested_ns, p.drive.tau_ns) {
            if (req - got).abs() > 1e-9 * req {
                snapped.push(json!({"requested_ns": req, "used_ns": got}));
            }
        }
        let mut m = Map::new();
        for (a, v) in axes.iter().zip(&p.axes) {
            m.insert(a.param.column().to_string(), json!(v));
        }
        m.extend(res.metrics);
        points.push(Value::Object(m));
        manifest.diagnostics.extend(res.notes);
    }
    if !snapped.is_empty() {
        manifest.note(format!("{} pulse length(s) moved onto the {} ns grid", snapped.len(), cfg.time.dt_ns));
        manifest.derive("tau_snapped", snapped);
    }
    manifest.derive("points", points);
    Ok(table)
}

/// Constants every manifest carries.
fn common_derived(cfg: &ScenarioConfig, manifest: &mut Manifest) -> Result<()> {
    let s = &cfg.system;
    manifest.derive("coupling_mhz", s.coupling_mhz);
    manifest.derive("two_coupling_mhz", 2.0 * s.coupling_mhz);
    manifest.derive("kappa_mhz", s.kappa_mhz);
    manifest.derive("cavity_linewidth_fwhm_mhz", 2.0 * s.kappa_mhz);
    manifest.derive("eta_over_kappa", cfg.drive.eta_over_kappa());
    if let DensitySpec::QGaussian { q, fwhm_mhz } = cfg.density {
        let d = delta_from_fwhm(q, mhz_to_angular(fwhm_mhz)).map_err(|e| Error::Config(e.to_string()))?;
        manifest.derive("qgaussian_delta_mhz", angular_to_mhz(d));
    }
    manifest.derive("lorentz_reference_hwhm_mhz", cfg.lorentz.hwhm_mhz(s.kappa_mhz));
    Ok(())
}

fn grid_until(t_end: f64, dt: f64) -> Result<TimeGrid> {
    TimeGrid::covering(t_end, dt)
}

fn strided(n: usize, stride: usize) -> impl Iterator<Item = usize> {
    let last = n - 1;
    (0..n).step_by(stride).chain(if last % stride != 0 { Some(last) } else { None })
}

/// Drive-free |A|^2 rate used to size the post-pulse tail.
fn rough_rate(params: &SystemParams, density: &SpinDensity) -> f64 {
    if density.is_dirac() {
        return params.kappa;
    }
    let m = gamma_markov(params, density).map(|g| g.gamma).unwrap_or(f64::INFINITY);
    let a = gamma_asymptotic(params, density).map(|g| g.gamma).unwrap_or(f64::INFINITY);
    m.min(a).max(params.kappa)
}

/// Solves the driven problem, lengthening an automatic tail until |A|^2 has
/// fallen three decades below its post-pulse maximum.
fn solve_driven(cfg: &ScenarioConfig, p: &Point, notes: &mut Vec<String>) -> Result<(ComplexSeries, SpectralMeasure)> {
    let dt = cfg.time.dt_ns;
    let on = p.drive.protocol.total_duration();
    let fixed = cfg.time.t_end_ns.or(cfg.time.tail_ns.map(|t| on + t));
    let mut tail = 5.0 / rough_rate(&p.params, &p.density);
    loop {
        let t_end = fixed.unwrap_or(on + tail).max(2.0 * dt);
        let grid = grid_until(t_end, dt)?;
        let measure = SpectralMeasure::for_duration(&p.density, grid.t_end())?;
        let a = solve_with(&p.params, &measure, &p.drive.protocol, &grid, ZERO)?;
        if fixed.is_some() {
            return Ok((a, measure));
        }
        let ab = a.abs2();
        let i_off = ((on / dt).round() as usize).min(ab.len() - 1);
        let post = &ab[i_off..];
        let top = post.iter().cloned().fold(0.0, f64::max);
        let last = &post[post.len() - post.len() / 10 - 1..];
        let end = last.iter().cloned().fold(0.0, f64::max);
        if end <= 1e-3 * top || top == 0.0 {
            return Ok((a, measure));
        }
        if tail * 2.0 > MAX_AUTO_TAIL {
            notes.push(format!("tail capped at {tail:.0} ns before |A|^2 fell three decades"));
            return Ok((a, measure));
        }
        tail *= 2.0;
    }
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().cloned().fold(0.0, f64::max)
}

/// Drive-on and ring-down observables of a single long pulse.
fn pulse_metrics(ab: &[f64], dt: f64, i_off: usize, a_ref2: f64) -> Map<String, Value> {
    let mut m = Map::new();
    let t: Vec<f64> = (0..ab.len()).map(|i| i as f64 * dt).collect();
    let on = &ab[..=i_off];
    let interior: Vec<usize> = local_maxima(on).into_iter().filter(|&i| i > 0 && i < i_off).collect();
    let proms: Vec<f64> = interior.iter().map(|&i| prominence(on, i)).collect();
    let floor = 0.01 * a_ref2;
    m.insert("drive_prominent_maxima".into(), json!(proms.iter().filter(|&&p| p > floor).count()));
    m.insert("drive_contrast".into(), json!(proms.iter().cloned().fold(0.0, f64::max) / a_ref2));

    let post = &ab[i_off..];
    let ptop = max_of(post);
    let peaks: Vec<usize> = local_maxima(post).into_iter().filter(|&i| i > 0 && prominence(post, i) > 1e-3 * ptop).collect();
    if let Some(&first) = peaks.first() {
        let (tp, vp) = refine_peak(&t[i_off..], post, first);
        m.insert("first_peak_delay_ns".into(), json!(tp - t[i_off]));
        m.insert("overshoot_ratio".into(), json!(vp / a_ref2));
    }
    let times: Vec<f64> = peaks.iter().take(7).map(|&i| refine_peak(&t[i_off..], post, i).0).collect();
    if times.len() >= 3 {
        let spacing = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        m.insert("ringdown_peak_spacing_ns".into(), json!(spacing));
        // |A|^2 beats at the splitting, so the peak spacing is 2 pi / Omega_R
        m.insert("rabi_mhz".into(), json!(1e3 / spacing));
    }
    m
}

/// Long rectangular pulse with ring-down: t, |A|^2, J_x^2, J_y^2.
pub fn run_long_pulse(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let mut manifest = Manifest::new(cfg);
    common_derived(cfg, &mut manifest)?;
    if !matches!(cfg.drive, DriveSpec::Rect { .. }) {
        return Err(Error::Config("long-pulse needs a rect drive".into()));
    }
    let stride = cfg.time.output_stride;
    let table = sweep(cfg, &cfg.sweep, &["t_ns", "abs2_a", "jx2", "jy2"], &mut manifest, |p| {
        let mut notes = Vec::new();
        let (a, measure) = solve_driven(cfg, p, &mut notes)?;
        let j = collective_spin(&a, &p.params, &measure)?;
        let ab = a.abs2();
        let dt = a.grid.dt;
        let on = p.drive.protocol.total_duration();
        let i_off = ((on / dt).round() as usize).min(ab.len() - 1);

        let resonant = p.params.is_resonant() && (p.density.center() - p.params.omega_c).abs() <= 1e-12 * p.params.omega_c;
        let a_st2 = if resonant { Some(steady_state(&p.params, &p.density, p.drive.eta)?.0.norm_sqr()) } else { None };
        let a_ref2 = a_st2.unwrap_or(ab[i_off]);
        let mut metrics = pulse_metrics(&ab, dt, i_off, a_ref2);
        metrics.insert("t_end_ns".into(), json!(a.grid.t_end()));
        metrics.insert("abs2_at_switch_off".into(), json!(ab[i_off]));
        if let Some(s) = a_st2 {
            metrics.insert("abs2_steady_state".into(), json!(s));
        }
        if let (true, Some(r)) = (resonant && !p.density.is_dirac(), metrics.get("rabi_mhz").and_then(Value::as_f64)) {
            let rate = PI * p.params.coupling.powi(2) * p.density.peak();
            if let Ok((g, d)) = lorentz::equivalent_lorentzian(mhz_to_angular(r), rate, p.params.kappa) {
                metrics.insert("equivalent_lorentz_coupling_mhz".into(), json!(angular_to_mhz(g)));
                metrics.insert("equivalent_lorentz_hwhm_mhz".into(), json!(angular_to_mhz(d)));
            }
        }
        let jmax = j.max_abs();
        let jy = j.values.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        metrics.insert("max_abs_jy_over_max_abs_j".into(), json!(if jmax > 0.0 { jy / jmax } else { 0.0 }));

        let rows = strided(a.len(), stride)
            .map(|i| {
                let z = j.values[i];
                vec![a.grid.time(i), ab[i], z.re * z.re, z.im * z.im]
            })
            .collect();
        Ok(PointResult { rows, metrics, notes })
    })?;
    Ok(RunOutput { table, manifest })
}

/// |A(t)|^2 under phase-switched trains, for every pulse length in the sweep.
pub fn run_pulse_train_map(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let mut manifest = Manifest::new(cfg);
    common_derived(cfg, &mut manifest)?;
    if !matches!(cfg.drive, DriveSpec::Train { .. }) {
        return Err(Error::Config("train-map needs a train drive".into()));
    }
    let mut axes = cfg.sweep.clone();
    if !axes.iter().any(|a| a.param == SweepParam::TauNs) {
        let DriveSpec::Train { tau_ns, .. } = cfg.drive else { unreachable!() };
        axes.push(SweepAxis { param: SweepParam::TauNs, values: vec![tau_ns] });
    }
    let stride = cfg.time.output_stride;
    let table = sweep(cfg, &axes, &["t_ns", "abs2_a"], &mut manifest, |p| {
        let mut notes = Vec::new();
        let (a, _) = solve_driven(cfg, p, &mut notes)?;
        let ab = a.abs2();
        let (imax, vmax) = ab.iter().enumerate().fold((0, 0.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let mut metrics = Map::new();
        metrics.insert("max_abs2".into(), json!(vmax));
        metrics.insert("t_of_max_ns".into(), json!(a.grid.time(imax)));
        if p.params.is_resonant() {
            let st = steady_state(&p.params, &p.density, p.drive.eta)?.0.norm_sqr();
            metrics.insert("max_over_steady_state".into(), json!(vmax / st));
        }
        let rows = strided(a.len(), stride).map(|i| vec![a.grid.time(i), ab[i]]).collect();
        Ok(PointResult { rows, metrics, notes })
    })?;
    summarise_best(&mut manifest, "tau_ns", "max_abs2");
    Ok(RunOutput { table, manifest })
}

/// Records the point with the largest `value` in the manifest.
fn summarise_best(manifest: &mut Manifest, key: &str, value: &str) {
    let best = manifest.derived.get("points").and_then(Value::as_array).and_then(|pts| {
        pts.iter()
            .filter_map(|p| Some((p.get(key)?.as_f64()?, p.get(value)?.as_f64()?, p.get("max_over_steady_state").and_then(Value::as_f64))))
            .fold(None, |acc: Option<(f64, f64, Option<f64>)>, x| match acc {
                Some(a) if a.1 >= x.1 => Some(a),
                _ => Some(x),
            })
    });
    if let Some((k, v, r)) = best {
        manifest.derive(format!("best_{key}"), k);
        manifest.derive(format!("best_{value}"), v);
        if let Some(r) = r {
            manifest.derive("best_max_over_steady_state", r);
        }
    }
}

/// Decay rate of a single photon versus coupling, by every estimate available.
pub fn run_gamma_sweep(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let mut manifest = Manifest::new(cfg);
    common_derived(cfg, &mut manifest)?;
    if matches!(cfg.density, DensitySpec::Dirac) {
        return Err(Error::Config("gamma-sweep needs a continuous spin density".into()));
    }
    let mut axes = cfg.sweep.clone();
    if !axes.iter().any(|a| a.param == SweepParam::CouplingMhz) {
        axes.push(SweepAxis { param: SweepParam::CouplingMhz, values: vec![cfg.system.coupling_mhz] });
    }
    let kappa = mhz_to_angular(cfg.system.kappa_mhz);
    let lz_delta = mhz_to_angular(cfg.lorentz.hwhm_mhz(cfg.system.kappa_mhz));
    let cols = [
        "gamma_timefit_mhz",
        "gamma_markov_mhz",
        "gamma_asymptotic_mhz",
        "gamma_lorentz_slow_mhz",
        "gamma_lorentz_fast_mhz",
        "gamma_nobroadening_slow_mhz",
        "gamma_nobroadening_fast_mhz",
        "n_poles",
        "t_end_ns",
    ];
    let table = sweep(cfg, &axes, &cols, &mut manifest, |p| {
        let mut notes = Vec::new();
        let gm = gamma_markov(&p.params, &p.density)?.gamma;
        let ga = gamma_asymptotic(&p.params, &p.density)?.gamma;
        let t_end = cfg.time.t_end_ns.unwrap_or_else(|| (16.0 / gm.min(ga)).clamp(100.0, 3000.0));
        let grid = grid_until(t_end, cfg.time.dt_ns)?;
        let measure = SpectralMeasure::for_duration(&p.density, grid.t_end())?;
        let a = solve_with(&p.params, &measure, &crate::drive::DriveProtocol::none(), &grid, Complex64::new(1.0, 0.0))?;
        let fit = decay_rate_timefit(&a)?;
        let lz = gamma_lorentz_formula(p.params.coupling, lz_delta, kappa);
        let nb = gamma_no_broadening(p.params.coupling, kappa);
        let n_poles = match find_poles(&p.params, &p.density) {
            Ok(s) => s.poles.len() as f64,
            Err(e) => {
                notes.push(format!("pole search at {} MHz: {e}", angular_to_mhz(p.params.coupling)));
                -1.0
            }
        };
        let mut metrics = Map::new();
        metrics.insert("timefit_note".into(), json!(fit.note));
        let row = vec![
            angular_to_mhz(fit.gamma),
            angular_to_mhz(gm),
            angular_to_mhz(ga),
            angular_to_mhz(lz.slow),
            angular_to_mhz(lz.fast),
            angular_to_mhz(nb.slow),
            angular_to_mhz(nb.fast),
            n_poles,
            grid.t_end(),
        ];
        Ok(PointResult { rows: vec![row], metrics, notes })
    })?;

    let g = table.column("coupling_mhz").unwrap_or_default();
    let fit = table.column("gamma_timefit_mhz").unwrap_or_default();
    if let Some((i, &gmax)) = fit.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)) {
        manifest.derive("gamma_max_mhz", gmax);
        manifest.derive("coupling_at_gamma_max_mhz", g[i]);
        if let Some(i_last) = g.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|x| x.0) {
            manifest.derive("gamma_at_largest_coupling_over_max", fit[i_last] / gmax);
        }
    }
    Ok(RunOutput { table, manifest })
}

/// Peak-to-peak |A|^2 in each of the last `cycles` drive periods, newest first.
pub fn cycle_amplitudes(ab: &[f64], period_steps: usize, cycles: usize) -> Vec<f64> {
    let n = ab.len();
    (0..cycles)
        .take_while(|c| (c + 1) * period_steps < n)
        .map(|c| {
            let w = &ab[n - 1 - (c + 1) * period_steps..n - c * period_steps];
            max_of(w) - w.iter().cloned().fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Largest relative change between consecutive cycle amplitudes.
pub fn cycle_drift(amps: &[f64]) -> f64 {
    amps.windows(2).map(|w| (w[0] - w[1]).abs() / w[0].abs().max(f64::MIN_POSITIVE)).fold(0.0, f64::max)
}

/// The configured density against its reference Lorentzian under the same pulse train.
pub fn run_train_compare(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let mut manifest = Manifest::new(cfg);
    common_derived(cfg, &mut manifest)?;
    if !matches!(cfg.drive, DriveSpec::Train { .. }) {
        return Err(Error::Config("train-compare needs a train drive".into()));
    }
    let hwhm = mhz_to_angular(cfg.lorentz.hwhm_mhz(cfg.system.kappa_mhz));
    let stride = cfg.time.output_stride;
    let table = sweep(cfg, &cfg.sweep, &["t_ns", "abs2_a", "abs2_lorentz"], &mut manifest, |p| {
        let mut notes = Vec::new();
        let (a, _) = solve_driven(cfg, p, &mut notes)?;
        let lz = SpinDensity::lorentzian(hwhm, p.density.center())?;
        let m = SpectralMeasure::for_duration(&lz, a.grid.t_end())?;
        let b = solve_with(&p.params, &m, &p.drive.protocol, &a.grid, ZERO)?;
        let (ab, bb) = (a.abs2(), b.abs2());

        let tau = p.drive.tau_ns.expect("train drive");
        let period = (2.0 * tau / a.grid.dt).round() as usize;
        let end = ((p.drive.protocol.total_duration() / a.grid.dt).round() as usize + 1).min(ab.len());
        let (amp_a, amp_b) = (cycle_amplitudes(&ab[..end], period, 5), cycle_amplitudes(&bb[..end], period, 5));
        let mut metrics = Map::new();
        if let (Some(&x), Some(&y)) = (amp_a.first(), amp_b.first()) {
            metrics.insert("settled_amplitude".into(), json!(x));
            metrics.insert("settled_amplitude_lorentz".into(), json!(y));
            metrics.insert("amplitude_ratio".into(), json!(x / y));
            metrics.insert("cycle_drift".into(), json!(cycle_drift(&amp_a)));
            metrics.insert("cycle_drift_lorentz".into(), json!(cycle_drift(&amp_b)));
        } else {
            notes.push("train too short for a settled amplitude".into());
        }
        let rows = strided(a.len(), stride).map(|i| vec![a.grid.time(i), ab[i], bb[i]]).collect();
        Ok(PointResult { rows, metrics, notes })
    })?;
    Ok(RunOutput { table, manifest })
}

/// Largest |A|^2 over the last fifth of a long train, over pulse length and probe detuning.
pub fn run_max_amplitude_scan(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let mut manifest = Manifest::new(cfg);
    common_derived(cfg, &mut manifest)?;
    if !matches!(cfg.drive, DriveSpec::Train { .. }) {
        return Err(Error::Config("max-scan needs a train drive".into()));
    }
    let table = sweep(cfg, &cfg.sweep, &["pi_over_tau_mhz", "max_abs2"], &mut manifest, |p| {
        let mut notes = Vec::new();
        let (a, _) = solve_driven(cfg, p, &mut notes)?;
        let ab = a.abs2();
        let from = ab.len() - ab.len() / 5 - 1;
        let tau = p.drive.tau_ns.expect("train drive");
        // pi/tau as an ordinary frequency, in MHz
        let row = vec![500.0 / tau, max_of(&ab[from..])];
        Ok(PointResult { rows: vec![row], metrics: Map::new(), notes })
    })?;

    // best pulse length for each detuning
    if let (Some(det), Some(f), Some(v)) = (table.column("detuning_mhz"), table.column("pi_over_tau_mhz"), table.column("max_abs2")) {
        let mut keys: Vec<f64> = det.clone();
        keys.sort_by(f64::total_cmp);
        keys.dedup();
        let best: Vec<Value> = keys
            .iter()
            .map(|&k| {
                let (i, _) = (0..det.len())
                    .filter(|&i| det[i] == k)
                    .map(|i| (i, v[i]))
                    .fold((usize::MAX, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
                json!({"detuning_mhz": k, "pi_over_tau_mhz": f[i], "max_abs2": v[i]})
            })
            .collect();
        manifest.derive("best_per_detuning", best);
    }
    Ok(RunOutput { table, manifest })
}

/// Closed-form Lorentzian traces. A q-Gaussian density is replaced by the
/// Lorentzian with the same Rabi frequency and steady state.
pub fn run_lorentz_analytic(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let mut manifest = Manifest::new(cfg);
    common_derived(cfg, &mut manifest)?;
    let DriveSpec::Rect { eta_over_kappa, duration_ns } = cfg.drive else {
        return Err(Error::Config("lorentz-analytic needs a rect drive".into()));
    };
    if cfg.system.probe_detuning_mhz != 0.0 || cfg.system.spin_ghz != cfg.system.cavity_ghz || cfg.sweep.iter().any(|a| a.param != SweepParam::CouplingMhz) {
        return Err(Error::Config("lorentz-analytic covers the resonant case; only coupling may be swept".into()));
    }
    let kappa = mhz_to_angular(cfg.system.kappa_mhz);
    let eta = eta_over_kappa * kappa;
    let t_end = cfg.time.t_end_ns.unwrap_or(duration_ns + cfg.time.tail_ns.unwrap_or(400.0));
    let grid = grid_until(t_end, cfg.time.dt_ns)?;
    let stride = cfg.time.output_stride;

    // Lorentzian of each sweep point: (coupling, hwhm)
    let pair = |density: &SpinDensity, coupling: f64| -> Result<(f64, f64)> {
        match cfg.density {
            DensitySpec::Lorentzian { hwhm_mhz } => Ok((coupling, mhz_to_angular(hwhm_mhz))),
            DensitySpec::QGaussian { .. } => {
                let rate = PI * coupling * coupling * density.peak();
                lorentz::equivalent_lorentzian(mhz_to_angular(cfg.lorentz.rabi_target_mhz), rate, kappa)
            }
            DensitySpec::Dirac => Err(Error::Config("lorentz-analytic needs a Lorentzian or q-Gaussian density".into())),
        }
    };

    let table = sweep(cfg, &cfg.sweep, &["t_ns", "abs2_a", "jx2"], &mut manifest, |p| {
        let (g, d) = pair(&p.density, p.params.coupling)?;
        let lp = LorentzParams::new(g, d, kappa, eta, p.drive.protocol.total_duration())?;
        let mut metrics = Map::new();
        metrics.insert("lorentz_coupling_mhz".into(), json!(angular_to_mhz(g)));
        metrics.insert("lorentz_hwhm_mhz".into(), json!(angular_to_mhz(d)));
        let (a_st, j_st) = lorentz::steady_state(&lp);
        metrics.insert("abs2_steady_state".into(), json!(a_st * a_st));
        metrics.insert("jx_steady_state".into(), json!(j_st));
        match lorentz::rabi_frequency(&lp) {
            Ok(r) => {
                metrics.insert("rabi_mhz".into(), json!(angular_to_mhz(r)));
                if let Ok((s, v)) = lorentz::first_peak(&lp) {
                    metrics.insert("first_peak_delay_ns".into(), json!(s));
                    metrics.insert("overshoot_ratio".into(), json!(v / (a_st * a_st)));
                }
                if let Ok(v) = lorentz::overshoot_formula(&lp) {
                    metrics.insert("overshoot_ratio_closed_estimate".into(), json!(v / (a_st * a_st)));
                }
            }
            Err(_) => {
                metrics.insert("overdamped".into(), json!(true));
            }
        }
        let mut rows = Vec::new();
        for i in strided(grid.n_steps, stride) {
            let t = grid.time(i);
            let a = lorentz::cavity(&lp, t)?;
            let j = lorentz::spin(&lp, t)?;
            rows.push(vec![t, a * a, j * j]);
        }
        Ok(PointResult { rows, metrics, notes: Vec::new() })
    })?;

    if let DensitySpec::Lorentzian { hwhm_mhz } = cfg.density {
        let d = mhz_to_angular(hwhm_mhz);
        manifest.derive("critical_coupling_mhz", angular_to_mhz(lorentz::critical_coupling(d, kappa)));
        match lorentz::overshoot_threshold(d, kappa) {
            Ok(g) => manifest.derive("overshoot_threshold_mhz", angular_to_mhz(g)),
            Err(e) => manifest.note(format!("overshoot threshold: {e}")),
        }
    }
    Ok(RunOutput { table, manifest })
}
