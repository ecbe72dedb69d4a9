//! Built-in configurations, one per scenario.

use super::config::*;

fn base(kind: ScenarioKind) -> ScenarioConfig {
    ScenarioConfig {
        scenario: kind,
        system: SystemSpec::default(),
        density: DensitySpec::default(),
        drive: DriveSpec::default(),
        time: TimeSpec::default(),
        lorentz: LorentzSpec::default(),
        sweep: Vec::new(),
        output: None,
    }
}

/// Evenly spaced values from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

pub fn preset(kind: ScenarioKind) -> ScenarioConfig {
    let mut c = base(kind);
    match kind {
        ScenarioKind::LongPulse => {
            c.time.tail_ns = Some(400.0);
        }
        ScenarioKind::TrainMap => {
            c.drive = DriveSpec::Train { eta_over_kappa: 1.0, tau_ns: 52.0, pulses: Some(11), duration_ns: None };
            c.time.tail_ns = Some(100.0);
            c.time.output_stride = 10;
            c.sweep = vec![SweepAxis { param: SweepParam::TauNs, values: linspace(30.0, 80.0, 51) }];
        }
        ScenarioKind::GammaSweep => {
            c.drive = DriveSpec::None;
            c.time.dt_ns = 0.1;
            let mut v = vec![0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0, 3.5, 4.0, 5.0, 6.0, 8.56, 12.0, 18.0, 25.0];
            v.sort_by(f64::total_cmp);
            c.sweep = vec![SweepAxis { param: SweepParam::CouplingMhz, values: v }];
        }
        ScenarioKind::TrainCompare => {
            c.system.coupling_mhz = 25.0;
            c.drive = DriveSpec::Train { eta_over_kappa: 1.0, tau_ns: 19.5, pulses: Some(70), duration_ns: None };
            c.time.tail_ns = Some(0.0);
        }
        ScenarioKind::MaxScan => {
            c.drive = DriveSpec::Train { eta_over_kappa: 1.0, tau_ns: 52.0, pulses: None, duration_ns: Some(1000.0) };
            c.time.tail_ns = Some(0.0);
            c.time.dt_ns = 0.1;
            let taus = linspace(4.0, 16.0, 49).into_iter().map(|f| 500.0 / f).collect();
            let r = c.lorentz.rabi_target_mhz;
            let dets = [-0.5, -0.25, -0.125, 0.0, 0.125, 0.25, 0.5].iter().map(|f| f * r).collect();
            c.sweep = vec![
                SweepAxis { param: SweepParam::ProbeDetuningMhz, values: dets },
                SweepAxis { param: SweepParam::TauNs, values: taus },
            ];
        }
        ScenarioKind::LorentzAnalytic => {
            c.density = DensitySpec::Lorentzian { hwhm_mhz: 4.0 };
            c.time.tail_ns = Some(400.0);
        }
    }
    c
}
