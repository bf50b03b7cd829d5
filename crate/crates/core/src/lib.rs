pub mod bounds;
pub mod contour;
pub mod eigenvalues;
pub mod experiments;
pub mod ensembles;
pub mod error;
mod linalg;
pub mod par;
pub mod rng;
pub mod skewness;
pub mod spectral;

pub use error::{Error, Result};
