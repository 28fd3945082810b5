pub mod error;
pub mod grid;
pub mod harness;
pub mod linsolve;
pub mod problems;
pub mod schemes;
pub mod splitting;
pub mod stencils;
