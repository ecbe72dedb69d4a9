use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// ns
    pub duration: f64,
    /// rad/ns
    pub eta: Complex64,
}

/// Piecewise-constant drive starting at t = 0; zero after the last segment.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DriveProtocol {
    segments: Vec<Segment>,
}

impl DriveProtocol {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        for s in &segments {
            if !(s.duration > 0.0 && s.duration.is_finite()) {
                return Err(Error::param("duration", format!("segment duration {} must be positive", s.duration)));
            }
            if !(s.eta.re.is_finite() && s.eta.im.is_finite()) {
                return Err(Error::param("eta", "must be finite"));
            }
        }
        Ok(DriveProtocol { segments })
    }

    /// No drive at all.
    pub fn none() -> Self {
        DriveProtocol { segments: Vec::new() }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Start/end times of every segment.
    pub fn intervals(&self) -> Vec<(f64, f64, Complex64)> {
        let mut t = 0.0;
        self.segments
            .iter()
            .map(|s| {
                let a = t;
                t += s.duration;
                (a, t, s.eta)
            })
            .collect()
    }

    pub fn eta_at(&self, t: f64) -> Complex64 {
        if t < 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let mut start = 0.0;
        for s in &self.segments {
            if t < start + s.duration {
                return s.eta;
            }
            start += s.duration;
        }
        Complex64::new(0.0, 0.0)
    }

    /// Integral of |eta|^2 over the protocol.
    pub fn injected_energy(&self) -> f64 {
        self.segments.iter().map(|s| s.eta.norm_sqr() * s.duration).sum()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        DriveProtocol {
            segments: self.segments.iter().map(|s| Segment { duration: s.duration, eta: s.eta * c }).collect(),
        }
    }
}

/// Single rectangular pulse of length `tau_d`.
pub fn rect_pulse(eta: Complex64, tau_d: f64) -> Result<DriveProtocol> {
    if !(tau_d > 0.0) {
        return Err(Error::param("tau_d", "pulse duration must be positive"));
    }
    DriveProtocol::new(vec![Segment { duration: tau_d, eta }])
}

/// `n_pulses` back-to-back pulses of length `tau` whose phase flips by pi each time.
pub fn phase_switched_train(eta: Complex64, tau: f64, n_pulses: usize) -> Result<DriveProtocol> {
    if !(tau > 0.0) {
        return Err(Error::param("tau", "pulse duration must be positive"));
    }
    if n_pulses == 0 {
        return Err(Error::param("n_pulses", "need at least one pulse"));
    }
    let segments = (0..n_pulses)
        .map(|k| Segment { duration: tau, eta: if k % 2 == 0 { eta } else { -eta } })
        .collect();
    DriveProtocol::new(segments)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rect_and_train() {
        let eta = Complex64::new(0.0025, 0.0);
        let r = rect_pulse(eta, 800.0).unwrap();
        assert_eq!(r.segments().len(), 1);
        assert_eq!(r.eta_at(799.9), eta);
        assert_eq!(r.eta_at(800.0), Complex64::new(0.0, 0.0));
        assert!(rect_pulse(eta, 0.0).is_err());
        assert!(rect_pulse(eta, -1.0).is_err());

        assert_eq!(phase_switched_train(eta, 52.0, 1).unwrap(), rect_pulse(eta, 52.0).unwrap());
        let t = phase_switched_train(eta, 52.0, 11).unwrap();
        assert_eq!(t.segments().len(), 11);
        assert_eq!(t.eta_at(60.0), -eta);
        assert_eq!(t.eta_at(110.0), eta);
        assert_eq!(phase_switched_train(eta, 19.5, 70).unwrap().segments().len(), 70);
        assert!(phase_switched_train(eta, 19.5, 0).is_err());

        let zero = rect_pulse(Complex64::new(0.0, 0.0), 10.0).unwrap();
        assert_eq!(zero.injected_energy(), 0.0);
    }

    proptest::proptest! {
        #[test]
        fn switching_preserves_energy(re in -1.0f64..1.0, im in -1.0f64..1.0, tau in 0.1f64..100.0, n in 1usize..80) {
            let eta = Complex64::new(re, im);
            let train = phase_switched_train(eta, tau, n).unwrap();
            let rect = rect_pulse(eta, tau * n as f64).unwrap();
            let (a, b) = (train.injected_energy(), rect.injected_energy());
            proptest::prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
        }
    }
}
