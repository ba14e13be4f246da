//! Computational toolkit for finite-dimensional normed spaces.
//!
//! Polytope norms are handled in exact rational arithmetic; ℓ_p norms in double
//! precision with explicit tolerances. All defects are on the logarithmic scale:
//! a map `T` has defect `C` when `e^{-C}‖x‖ ≤ ‖Tx‖ ≤ e^{C}‖x‖`.

pub mod classes;
pub mod constructions;
pub mod error;
pub mod game;
pub mod limits;
pub mod lp;
pub mod map;
pub mod matrix;
pub mod metrics;
pub mod optimize;
pub mod polytope;
pub mod rational;
pub mod spaces;

pub use error::{Error, Result};
pub use map::LinearMap;
pub use matrix::Matrix;
pub use metrics::{EmbeddingCertificate, Exactness};
pub use polytope::Polytope;
pub use rational::Rat;
pub use spaces::{NormSpec, NormValue, NormedSpace};
