//! Nonlinear hyperelastic shell analysis with orthonormal moving frames and
//! higher-order through-thickness expansions.

pub mod error;
pub mod expr;
pub mod geometry;
pub mod kinematics;
pub mod material;
pub mod mesh;
pub mod spectral;
pub mod assembly;
pub mod config;
pub mod output;
pub mod presets;
pub mod run;
pub mod linsolve;
pub mod solver;

pub use error::{Result, ShellError};
