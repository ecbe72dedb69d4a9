//! Non-Markovian dynamics of a driven microwave cavity strongly coupled to an
//! inhomogeneously broadened spin ensemble.
//!
//! Units: time in ns, angular frequency in rad/ns, everything in the frame
//! rotating at the probe frequency.

pub mod analysis;
pub mod drive;
pub mod error;
pub mod harness;
pub mod laplace;
pub mod lorentz;
pub mod series;
pub mod spectral;
pub mod system;
pub mod units;
pub mod volterra;

pub use drive::{phase_switched_train, rect_pulse, DriveProtocol, Segment};
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use series::ComplexSeries;
pub use spectral::{DensityKind, FrequencyGrid, SpectralMeasure, SpinDensity};
pub use system::{SystemParams, TimeGrid};
pub use units::{angular_to_mhz, ghz_to_angular, mhz_to_angular};
