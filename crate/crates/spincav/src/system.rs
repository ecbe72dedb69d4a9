use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frequencies and rates of the driven cavity/ensemble system, all in rad/ns.
///
/// `kappa` is the amplitude decay rate of the cavity field (the half width of
/// the cavity line in angular units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega_c: f64,
    pub omega_s: f64,
    pub omega_p: f64,
    pub kappa: f64,
    pub gamma: f64,
    /// Collective coupling strength.
    pub coupling: f64,
}

impl SystemParams {
    pub fn new(
        omega_c: f64,
        omega_s: f64,
        omega_p: f64,
        kappa: f64,
        gamma: f64,
        coupling: f64,
    ) -> Result<Self> {
        let p = SystemParams { omega_c, omega_s, omega_p, kappa, gamma, coupling };
        p.validate()?;
        Ok(p)
    }

    /// Everything on resonance at `omega`.
    pub fn resonant(omega: f64, kappa: f64, coupling: f64) -> Result<Self> {
        Self::new(omega, omega, omega, kappa, 0.0, coupling)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega_c", self.omega_c),
            ("omega_s", self.omega_s),
            ("omega_p", self.omega_p),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("coupling", self.coupling),
        ] {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        if self.kappa <= 0.0 {
            return Err(Error::param("kappa", "must be positive"));
        }
        if self.gamma < 0.0 {
            return Err(Error::param("gamma", "must be non-negative"));
        }
        if self.coupling < 0.0 {
            return Err(Error::param("coupling", "must be non-negative"));
        }
        if self.omega_c <= 0.0 {
            return Err(Error::param("omega_c", "must be positive"));
        }
        // the amplitude equations rely on the rotating-wave approximation
        if self.coupling >= self.omega_c / 50.0 {
            return Err(Error::param(
                "coupling",
                format!("{} rad/ns violates coupling < omega_c/50", self.coupling),
            ));
        }
        Ok(())
    }

    pub fn with_coupling(mut self, coupling: f64) -> Result<Self> {
        self.coupling = coupling;
        self.validate()?;
        Ok(self)
    }

    pub fn with_probe(mut self, omega_p: f64) -> Result<Self> {
        self.omega_p = omega_p;
        self.validate()?;
        Ok(self)
    }

    /// lambda = kappa + i(omega_c - omega_p): the bare cavity propagates as exp(-lambda t).
    pub fn cavity_pole(&self) -> Complex64 {
        Complex64::new(self.kappa, self.omega_c - self.omega_p)
    }

    pub fn is_resonant(&self) -> bool {
        let tol = 1e-12 * self.omega_c.abs();
        (self.omega_c - self.omega_p).abs() <= tol && (self.omega_c - self.omega_s).abs() <= tol
    }
}

/// Uniform time grid t_i = t_start + i*dt, i = 0..n_steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub dt: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, dt: f64, n_steps: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", "must be positive and finite"));
        }
        if n_steps < 2 {
            return Err(Error::param("n_steps", "need at least two grid points"));
        }
        if !t_start.is_finite() {
            return Err(Error::param("t_start", "must be finite"));
        }
        Ok(TimeGrid { t_start, dt, n_steps })
    }

    /// Grid from 0 to at least `t_end` in steps of `dt`.
    pub fn covering(t_end: f64, dt: f64) -> Result<Self> {
        if !(t_end > 0.0) {
            return Err(Error::param("t_end", "must be positive"));
        }
        let n = (t_end / dt - 1e-9).ceil() as usize + 1;
        Self::new(0.0, dt, n.max(2))
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t_start + i as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.n_steps - 1)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_steps).map(|i| self.time(i))
    }

    /// Index of `t` (relative to t_start) if it lies on a grid node.
    pub fn node_of(&self, t: f64) -> Option<usize> {
        let x = t / self.dt;
        let k = x.round();
        if (x - k).abs() <= 1e-6 && k >= 0.0 {
            Some(k as usize)
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{ghz_to_angular, mhz_to_angular};

    #[test]
    fn rejects_bad_params() {
        let w = ghz_to_angular(2.6915);
        assert!(SystemParams::resonant(w, 0.0, 0.1).is_err());
        assert!(SystemParams::resonant(w, 0.01, -0.1).is_err());
        assert!(SystemParams::new(w, w, w, 0.01, -1.0, 0.1).is_err());
        // rotating-wave limit
        assert!(SystemParams::resonant(w, 0.01, w / 49.0).is_err());
        assert!(SystemParams::resonant(w, 0.01, mhz_to_angular(40.0)).is_ok());
    }

    #[test]
    fn grid_covering() {
        let g = TimeGrid::covering(1200.0, 0.05).unwrap();
        assert_eq!(g.n_steps, 24001);
        assert!((g.t_end() - 1200.0).abs() < 1e-9);
        assert_eq!(g.node_of(800.0), Some(16000));
        assert_eq!(g.node_of(800.02), None);
        assert!(TimeGrid::new(0.0, 0.0, 10).is_err());
        assert!(TimeGrid::new(0.0, 0.1, 1).is_err());
    }
}
