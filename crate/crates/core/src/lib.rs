//! Certified worst-case convergence rates for gradient descent whose step
//! size varies inside an interval, via integral quadratic constraints.
//!
//! ```
//! use ratecert::{certify, CertifyOptions, FunctionClass, IqcKind, StepSizeInterval};
//!
//! let fc = FunctionClass::new(1.0, 10.0).unwrap();
//! let iv = StepSizeInterval::from_c(&fc, 1.0).unwrap();
//! let cert = certify(&fc, &iv, 10, IqcKind::Sector, &CertifyOptions::default()).unwrap();
//! assert!((cert.rho_star.unwrap() - 0.9).abs() < 1e-3);
//! ```

pub mod certifier;
pub mod cli;
pub mod iqc;
pub mod linalg;
pub mod model;
pub mod simulator;
pub mod sweep;

pub use certifier::{
    assemble_lmi_block, certify, closed_form_rate, feasible_at_rho, verify_certificate, Backend,
    Certificate, CertifyError, CertifyOptions, Feasibility, LmiInstance, Witness,
};
pub use iqc::{IqcKind, IqcMultiplier};
pub use linalg::{Matrix, SymMatrix};
pub use model::{make_grid, FunctionClass, Plant, StepGrid, StepSizeInterval};
pub use simulator::{Policy, QuadraticProblem, TrajectoryReport};
pub use sweep::SweepRow;
