//! Cavity amplitude from the memory-kernel integral equation
//! A(t) = int_0^t K(t - s) A(s) ds + F(t), and quantities derived from it.

mod kernel;
mod solver;
mod spin;
mod steady;

pub(crate) use kernel::phasor_sums;
pub use kernel::{forcing_f, kernel_k, kernel_on, KernelCache};
pub use solver::{solve, solve_direct, solve_direct_with, solve_with, SolverMemory, DIRECT_STEP_CAP};
pub use spin::{collective_spin, spin_mode_amplitude};
pub use steady::{collective_spin_from_steady, decay_from_steady_state, decay_from_steady_state_with, steady_state};
