//! Stochastic dynamic linear programming for multistage stochastic LPs.

pub mod error;
pub mod fixtures;
pub mod instance;
pub mod io;
pub mod linalg;
pub mod lp;
pub mod oracle;
pub mod process;
pub mod sddp;
pub mod sdlp;
pub mod stage;
