//! Convex building blocks: DC bounds of `Tr(AB)`, rank-one penalty pieces,
//! the two LMIs of the robust design, and a small conic modelling layer.

pub mod dc;
pub mod lmi;
pub mod model;
pub mod solve;

pub use crate::config::ConicOptions;
pub use dc::{f_lb, f_ub, linearize_spectral, rank_one_gap, spectral_direction, ExpansionPoint};
pub use lmi::{covert_lmi_numeric, schur_sensing_lmi, sprocedure_covert_lmi, CovertLmi, CovertLmiParams};
pub use model::{CExpr, ConicProgram, Constraint, HermExpr, HermVar, LinExpr, ScalarVar};
pub use solve::{solve_conic, ConicSolution, ConicStatus, KktResiduals};
