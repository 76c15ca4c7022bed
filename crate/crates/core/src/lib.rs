//! Finite type I_N von Neumann factors in standard form: the vector/operator
//! dictionary, modular objects computed from polar data, the modular inverse
//! problem and the classification of its solutions by spectral data.

pub mod correspondence;
pub mod error;
pub mod format;
pub mod inverse;
pub mod matkit;
pub mod modular;
pub mod random;
pub mod spectral;
pub mod standard_form;

pub use error::{Error, Result};
pub use matkit::{CMatrix, Tolerances, C64};
