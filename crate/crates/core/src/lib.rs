//! Joint sensing and covert communication design for a RIS-assisted NOMA
//! downlink with a dual-function radar-communication transmitter.
//!
//! The crate is organised bottom-up:
//!
//! * [`channel`] synthesizes steering vectors, channels and the NOMA SINRs.
//! * [`covertness`] holds the detection-side mathematics at the warden.
//! * [`sensing`] models the echo, the angle CRB and the CRB-bounded CSI error.
//! * [`convex_kit`] provides the DC bounds, rank-one penalty pieces, the two
//!   LMIs and a small Hermitian conic modelling layer on top of Clarabel.
//! * [`optimizer`] runs the known-location and unknown-location algorithms and
//!   the OMA / norm-bounded baselines.
//! * [`oracle`] contains brute-force validators that share no code paths with
//!   the implementations they check.
//! * [`experiments`] drives scenarios, sweeps, beampatterns and plots.

pub mod channel;
pub mod config;
pub mod convex_kit;
pub mod covertness;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod optimizer;
pub mod oracle;
pub mod sensing;

// keeps the system BLAS/LAPACK symbols linked for the SDP backend
extern crate openblas_src as _;

pub use config::{Profile, SolveOptions, SystemConfig};
pub use error::{Error, Result};
pub use linalg::{CMat, CVec, C64};
