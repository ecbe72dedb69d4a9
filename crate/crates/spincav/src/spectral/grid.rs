use std::f64::consts::FRAC_PI_4;

use super::{SpinDensity, TailPolicy};
use crate::error::{Error, Result};

/// Largest grid we are willing to build.
const MAX_NODES: usize = 2_000_000;

/// Uniform frequency grid symmetric about the density centre, with trapezoid weights.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    pub center: f64,
    pub spacing: f64,
    /// omega - center, strictly increasing
    pub offsets: Vec<f64>,
    pub weights: Vec<f64>,
}

impl FrequencyGrid {
    /// Grid covering `density`'s support with the given spacing. A Dirac density gets one node.
    pub fn new(density: &SpinDensity, spacing: f64) -> Result<Self> {
        if density.is_dirac() {
            return Ok(FrequencyGrid { center: density.center(), spacing: 0.0, offsets: vec![0.0], weights: vec![1.0] });
        }
        Self::symmetric(density.center(), density.half_width(), spacing)
    }

    pub fn symmetric(center: f64, half_width: f64, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::param("spacing", "must be positive"));
        }
        let k = (half_width / spacing - 1e-9).ceil().max(1.0);
        if 2.0 * k + 1.0 > MAX_NODES as f64 {
            return Err(Error::GridTooLarge { n: (2.0 * k + 1.0) as usize, cap: MAX_NODES });
        }
        let k = k as i64;
        let offsets: Vec<f64> = (-k..=k).map(|j| j as f64 * spacing).collect();
        let mut weights = vec![spacing; offsets.len()];
        weights[0] *= 0.5;
        *weights.last_mut().unwrap() *= 0.5;
        Ok(FrequencyGrid { center, spacing, offsets, weights })
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn omega(&self, j: usize) -> f64 {
        self.center + self.offsets[j]
    }

    /// Fails unless spacing * t_max < pi/4.
    pub fn check_resolution(&self, t_max: f64) -> Result<()> {
        if self.spacing * t_max >= FRAC_PI_4 {
            return Err(Error::QuadratureResolution { spacing: self.spacing, t_max });
        }
        Ok(())
    }
}

/// Default spacing: FWHM/200, refined if needed so that spacing * t_max < pi/4.
pub fn default_spacing(density: &SpinDensity, t_max: f64) -> f64 {
    let base = density.fwhm() / 200.0;
    if t_max > 0.0 {
        base.min(0.95 * FRAC_PI_4 / t_max)
    } else {
        base
    }
}

/// C such that the trapezoid integral of the density over `grid` is one.
pub fn normalize(density: &SpinDensity, grid: &FrequencyGrid) -> f64 {
    if density.is_dirac() {
        return 1.0;
    }
    let sum: f64 = grid
        .offsets
        .iter()
        .zip(&grid.weights)
        .map(|(&x, &w)| w * density.eval_offset(x))
        .sum();
    density.norm_c() / sum
}

/// The density discretised on a grid: masses m_j = w_j rho(omega_j).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasure {
    pub density: SpinDensity,
    pub grid: FrequencyGrid,
    pub masses: Vec<f64>,
}

impl SpectralMeasure {
    /// Discretise with the given spacing, renormalising when the density's policy asks for it.
    pub fn new(density: &SpinDensity, spacing: f64) -> Result<Self> {
        let grid = FrequencyGrid::new(density, spacing)?;
        let density = match density.policy() {
            TailPolicy::Renormalize => density.with_norm(normalize(density, &grid)),
            TailPolicy::AnalyticTail => *density,
        };
        let masses = if density.is_dirac() {
            vec![1.0]
        } else {
            grid.offsets.iter().zip(&grid.weights).map(|(&x, &w)| w * density.eval_offset(x)).collect()
        };
        Ok(SpectralMeasure { density, grid, masses })
    }

    /// Measure fine enough for dynamics up to `t_max`.
    pub fn for_duration(density: &SpinDensity, t_max: f64) -> Result<Self> {
        let m = Self::new(density, default_spacing(density, t_max))?;
        if !density.is_dirac() {
            m.grid.check_resolution(t_max)?;
        }
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn offsets(&self) -> &[f64] {
        &self.grid.offsets
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::mhz_to_angular;

    #[test]
    fn q_gaussian_normalises() {
        let d = SpinDensity::q_gaussian_fwhm(1.39, mhz_to_angular(9.4), 0.0).unwrap();
        let m = SpectralMeasure::new(&d, d.fwhm() / 200.0).unwrap();
        assert!((m.total_mass() - 1.0).abs() < 1e-8);
        // renormalisation only fixes the 1e-6 tail and the quadrature error
        assert!((m.density.norm_c() / d.norm_c() - 1.0).abs() < 1e-5);
        let w = m.grid.offsets.windows(2).all(|p| p[1] > p[0]);
        assert!(w && m.grid.weights.iter().all(|&w| w > 0.0));
        assert!(m.grid.offsets[0] <= -d.half_width() && *m.grid.offsets.last().unwrap() >= d.half_width());
    }

    #[test]
    fn lorentzian_truncation_policy() {
        let delta = mhz_to_angular(4.0);
        let d = SpinDensity::lorentzian(delta, 0.0).unwrap();
        let m = SpectralMeasure::new(&d, delta / 100.0).unwrap();
        // analytic normalisation is kept; the mass beyond 200 HWHM is missing
        let want = 2.0 / std::f64::consts::PI * 200f64.atan();
        assert!((m.total_mass() - want).abs() < 1e-6, "{} vs {}", m.total_mass(), want);
        assert_eq!(m.density.norm_c(), d.norm_c());
    }

    #[test]
    fn dirac_is_single_node() {
        let d = SpinDensity::dirac(3.0).unwrap();
        let m = SpectralMeasure::new(&d, 0.1).unwrap();
        assert_eq!(m.masses, vec![1.0]);
        assert_eq!(normalize(&d, &m.grid), 1.0);
    }

    #[test]
    fn resolution_rule() {
        let d = SpinDensity::q_gaussian_fwhm(1.39, mhz_to_angular(9.4), 0.0).unwrap();
        let g = FrequencyGrid::new(&d, d.fwhm() / 200.0).unwrap();
        assert!(g.check_resolution(1200.0).is_ok());
        assert!(g.check_resolution(5000.0).is_err());
        let s = default_spacing(&d, 5000.0);
        assert!(s * 5000.0 < FRAC_PI_4);
    }
}
