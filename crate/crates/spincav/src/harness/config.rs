//! Scenario configuration: one JSON document per run
//! (MHz for nu = omega/2pi, GHz for carrier frequencies, ns for times).

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::drive::{phase_switched_train, rect_pulse, DriveProtocol};
use crate::error::{Error, Result};
use crate::spectral::SpinDensity;
use crate::system::SystemParams;
use crate::units::{ghz_to_angular, mhz_to_angular};
use crate::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    LongPulse,
    TrainMap,
    GammaSweep,
    TrainCompare,
    MaxScan,
    LorentzAnalytic,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 6] = [
        ScenarioKind::LongPulse,
        ScenarioKind::TrainMap,
        ScenarioKind::GammaSweep,
        ScenarioKind::TrainCompare,
        ScenarioKind::MaxScan,
        ScenarioKind::LorentzAnalytic,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::LongPulse => "long-pulse",
            ScenarioKind::TrainMap => "train-map",
            ScenarioKind::GammaSweep => "gamma-sweep",
            ScenarioKind::TrainCompare => "train-compare",
            ScenarioKind::MaxScan => "max-scan",
            ScenarioKind::LorentzAnalytic => "lorentz-analytic",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemSpec {
    pub cavity_ghz: f64,
    pub spin_ghz: f64,
    /// omega_p - omega_c
    pub probe_detuning_mhz: f64,
    /// Amplitude decay rate of the cavity (half the intensity linewidth).
    pub kappa_mhz: f64,
    pub gamma_mhz: f64,
    /// Collective coupling Omega (not 2 Omega).
    pub coupling_mhz: f64,
}

impl Default for SystemSpec {
    fn default() -> Self {
        SystemSpec {
            cavity_ghz: 2.6915,
            spin_ghz: 2.6915,
            probe_detuning_mhz: 0.0,
            kappa_mhz: 0.4,
            gamma_mhz: 0.0,
            coupling_mhz: 8.56,
        }
    }
}

impl SystemSpec {
    pub fn params(&self) -> Result<SystemParams> {
        let wc = ghz_to_angular(self.cavity_ghz);
        SystemParams::new(
            wc,
            ghz_to_angular(self.spin_ghz),
            wc + mhz_to_angular(self.probe_detuning_mhz),
            mhz_to_angular(self.kappa_mhz),
            mhz_to_angular(self.gamma_mhz),
            mhz_to_angular(self.coupling_mhz),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DensitySpec {
    QGaussian { q: f64, fwhm_mhz: f64 },
    Lorentzian { hwhm_mhz: f64 },
    Dirac,
}

impl Default for DensitySpec {
    fn default() -> Self {
        DensitySpec::QGaussian { q: 1.39, fwhm_mhz: 9.4 }
    }
}

impl DensitySpec {
    /// Density centred on the spin frequency.
    pub fn build(&self, system: &SystemSpec) -> Result<SpinDensity> {
        let c = ghz_to_angular(system.spin_ghz);
        match *self {
            DensitySpec::QGaussian { q, fwhm_mhz } => SpinDensity::q_gaussian_fwhm(q, mhz_to_angular(fwhm_mhz), c),
            DensitySpec::Lorentzian { hwhm_mhz } => SpinDensity::lorentzian(mhz_to_angular(hwhm_mhz), c),
            DensitySpec::Dirac => SpinDensity::dirac(c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DriveSpec {
    /// Single pulse; the amplitude is given in units of kappa.
    Rect { eta_over_kappa: f64, duration_ns: f64 },
    /// Phase-alternating train. Give either `pulses` or a total `duration_ns`.
    Train {
        eta_over_kappa: f64,
        tau_ns: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pulses: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        duration_ns: Option<f64>,
    },
    None,
}

impl Default for DriveSpec {
    fn default() -> Self {
        DriveSpec::Rect { eta_over_kappa: 1.0, duration_ns: 800.0 }
    }
}

/// A drive protocol together with any adjustment made to fit the time grid.
#[derive(Debug, Clone)]
pub struct BuiltDrive {
    pub protocol: DriveProtocol,
    pub eta: Complex64,
    /// Pulse length after snapping to the grid, if it is a train.
    pub tau_ns: Option<f64>,
    pub tau_requested_ns: Option<f64>,
}

fn snap(t: f64, dt: f64) -> f64 {
    ((t / dt).round()).max(1.0) * dt
}

impl DriveSpec {
    pub fn eta_over_kappa(&self) -> f64 {
        match *self {
            DriveSpec::Rect { eta_over_kappa, .. } | DriveSpec::Train { eta_over_kappa, .. } => eta_over_kappa,
            DriveSpec::None => 0.0,
        }
    }

    /// Builds the protocol, snapping every boundary onto the time grid.
    pub fn build(&self, kappa: f64, dt: f64, tau_override: Option<f64>) -> Result<BuiltDrive> {
        let eta = Complex64::new(self.eta_over_kappa() * kappa, 0.0);
        match *self {
            DriveSpec::Rect { duration_ns, .. } => Ok(BuiltDrive {
                protocol: rect_pulse(eta, snap(duration_ns, dt))?,
                eta,
                tau_ns: None,
                tau_requested_ns: None,
            }),
            DriveSpec::Train { tau_ns, pulses, duration_ns, .. } => {
                let requested = tau_override.unwrap_or(tau_ns);
                if !(requested > 0.0) {
                    return Err(Error::Config(format!("pulse length {requested} ns must be positive")));
                }
                let tau = snap(requested, dt);
                let n = match (pulses, duration_ns) {
                    (Some(n), _) => n,
                    (None, Some(d)) => ((d / tau).round() as usize).max(1),
                    (None, None) => return Err(Error::Config("train drive needs `pulses` or `duration_ns`".into())),
                };
                Ok(BuiltDrive {
                    protocol: phase_switched_train(eta, tau, n)?,
                    eta,
                    tau_ns: Some(tau),
                    tau_requested_ns: Some(requested),
                })
            }
            DriveSpec::None => Ok(BuiltDrive { protocol: DriveProtocol::none(), eta, tau_ns: None, tau_requested_ns: None }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSpec {
    pub dt_ns: f64,
    /// Absolute end of the simulation. Overrides `tail_ns`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end_ns: Option<f64>,
    /// Simulated time after the drive ends; chosen automatically when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_ns: Option<f64>,
    /// Write every n-th sample.
    pub output_stride: usize,
}

impl Default for TimeSpec {
    fn default() -> Self {
        TimeSpec { dt_ns: 0.05, t_end_ns: None, tail_ns: None, output_stride: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    CouplingMhz,
    ProbeDetuningMhz,
    TauNs,
}

impl SweepParam {
    pub fn column(&self) -> &'static str {
        match self {
            SweepParam::CouplingMhz => "coupling_mhz",
            SweepParam::ProbeDetuningMhz => "detuning_mhz",
            SweepParam::TauNs => "tau_ns",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

/// Settings for the Lorentzian reference curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LorentzSpec {
    /// Half width of the reference Lorentzian. Derived from `overdamped_below_mhz` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hwhm_mhz: Option<f64>,
    /// Coupling below which the reference Lorentzian is overdamped; fixes hwhm = 2 * this + kappa.
    pub overdamped_below_mhz: f64,
    /// Rabi frequency the equivalent Lorentzian of a broadened run must reproduce.
    pub rabi_target_mhz: f64,
}

impl Default for LorentzSpec {
    fn default() -> Self {
        LorentzSpec { hwhm_mhz: None, overdamped_below_mhz: 1.8, rabi_target_mhz: 19.2 }
    }
}

impl LorentzSpec {
    pub fn hwhm_mhz(&self, kappa_mhz: f64) -> f64 {
        self.hwhm_mhz.unwrap_or(2.0 * self.overdamped_below_mhz + kappa_mhz)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    #[serde(default)]
    pub system: SystemSpec,
    #[serde(default)]
    pub density: DensitySpec,
    #[serde(default)]
    pub drive: DriveSpec,
    #[serde(default)]
    pub time: TimeSpec,
    #[serde(default)]
    pub lorentz: LorentzSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepAxis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses `text`, applies `key.path=value` overrides, then validates.
    pub fn from_json_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut v: Value = serde_json::from_str(text)?;
        for o in overrides {
            apply_override(&mut v, o)?;
        }
        let cfg: ScenarioConfig = serde_json::from_value(v)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serialises");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| Error::Config(e.to_string());
        self.system.params().map_err(cfg_err)?;
        self.density.build(&self.system).map_err(cfg_err)?;
        let t = &self.time;
        if !(t.dt_ns > 0.0 && t.dt_ns.is_finite()) {
            return Err(Error::Config("time.dt_ns must be positive".into()));
        }
        if t.output_stride == 0 {
            return Err(Error::Config("time.output_stride must be at least 1".into()));
        }
        if matches!(t.t_end_ns, Some(x) if !(x > 0.0)) || matches!(t.tail_ns, Some(x) if !(x >= 0.0)) {
            return Err(Error::Config("time.t_end_ns / time.tail_ns must be positive".into()));
        }
        match self.drive {
            DriveSpec::Rect { duration_ns, eta_over_kappa } => {
                if !(duration_ns > 0.0) || !eta_over_kappa.is_finite() {
                    return Err(Error::Config("drive needs a positive duration and finite amplitude".into()));
                }
            }
            DriveSpec::Train { tau_ns, pulses, duration_ns, eta_over_kappa } => {
                if !(tau_ns > 0.0) || !eta_over_kappa.is_finite() || pulses == Some(0) {
                    return Err(Error::Config("train needs tau_ns > 0 and at least one pulse".into()));
                }
                if pulses.is_none() && duration_ns.is_none() {
                    return Err(Error::Config("train drive needs `pulses` or `duration_ns`".into()));
                }
            }
            DriveSpec::None => {}
        }
        for axis in &self.sweep {
            if axis.values.is_empty() || axis.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config(format!("sweep over {} needs finite values", axis.param.column())));
            }
            if axis.param == SweepParam::TauNs && !matches!(self.drive, DriveSpec::Train { .. }) {
                return Err(Error::Config("sweeping tau_ns needs a train drive".into()));
            }
            for &v in &axis.values {
                let mut s = self.system.clone();
                match axis.param {
                    SweepParam::CouplingMhz => s.coupling_mhz = v,
                    SweepParam::ProbeDetuningMhz => s.probe_detuning_mhz = v,
                    SweepParam::TauNs => {
                        if !(v > 0.0) {
                            return Err(Error::Config(format!("tau_ns value {v} must be positive")));
                        }
                    }
                }
                s.params().map_err(cfg_err)?;
            }
        }
        let mut seen = std::collections::HashSet::new();
        if !self.sweep.iter().all(|a| seen.insert(a.param)) {
            return Err(Error::Config("each sweep parameter may appear once".into()));
        }
        Ok(())
    }
}

/// Sets `a.b.c=value` in a JSON tree; the value is parsed as JSON, or taken as a string.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("bad override path `{path}`")));
    }
    for (i, key) in keys.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("`{}` is not an object", keys[..i].join("."))))?;
        if i + 1 == keys.len() {
            obj.insert(key.to_string(), value);
            return Ok(());
        }
        node = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_all_presets() {
        for k in ScenarioKind::ALL {
            let cfg = super::super::presets::preset(k);
            let back = ScenarioConfig::from_json(&cfg.to_json()).unwrap();
            assert_eq!(cfg, back);
            assert_eq!(cfg.hash(), back.hash());
            assert_eq!(ScenarioKind::from_name(k.name()), Some(k));
        }
    }

    #[test]
    fn overrides() {
        let text = r#"{"scenario": "long-pulse"}"#;
        let cfg = ScenarioConfig::from_json_with_overrides(
            text,
            &["system.coupling_mhz=12.5".into(), r#"drive={"kind":"rect","eta_over_kappa":1,"duration_ns":100}"#.into()],
        )
        .unwrap();
        assert_eq!(cfg.system.coupling_mhz, 12.5);
        assert_eq!(cfg.drive, DriveSpec::Rect { eta_over_kappa: 1.0, duration_ns: 100.0 });
        assert!(ScenarioConfig::from_json_with_overrides(text, &["nonsense".into()]).is_err());
        assert!(ScenarioConfig::from_json_with_overrides(text, &["system.bogus=1".into()]).is_err());
        assert!(ScenarioConfig::from_json_with_overrides(text, &["system.kappa_mhz=-1".into()]).is_err());
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(ScenarioConfig::from_json("{}").is_err());
        assert!(ScenarioConfig::from_json(r#"{"scenario": "fig-99"}"#).is_err());
        assert!(ScenarioConfig::from_json(r#"{"scenario": "long-pulse", "time": {"dt_ns": 0}}"#).is_err());
        assert!(ScenarioConfig::from_json(r#"{"scenario": "long-pulse", "system": {"coupling_mhz": 80}}"#).is_err());
        let tau_without_train = r#"{"scenario": "train-map", "sweep": [{"param": "tau_ns", "values": [50]}]}"#;
        assert!(ScenarioConfig::from_json(tau_without_train).is_err());
    }

    #[test]
    fn snapping() {
        let d = DriveSpec::Train { eta_over_kappa: 1.0, tau_ns: 19.52, pulses: Some(70), duration_ns: None };
        let b = d.build(0.01, 0.05, None).unwrap();
        assert!((b.tau_ns.unwrap() - 19.5).abs() < 1e-12);
        assert_eq!(b.protocol.segments().len(), 70);
        let d = DriveSpec::Train { eta_over_kappa: 1.0, tau_ns: 50.0, pulses: None, duration_ns: Some(1000.0) };
        assert_eq!(d.build(0.01, 0.05, Some(40.0)).unwrap().protocol.segments().len(), 25);
    }
}
