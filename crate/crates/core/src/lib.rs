//! Human error probability estimation from performance shaping factors.
//!
//! - [`psf`]: PSF taxonomy, multiplier tables and the closed-form HEP algebra.
//! - [`dataset`]: observation/design CSV I/O and the bundled case-study tables.
//! - [`ann`]: replicated feedforward regressor mapping normalized PSFs to HEP.
//! - [`rsm`]: response-surface fits, ANOVA and PSF screening.
//! - [`pipeline`]: the train → design → fit → screen → retrain loop.

pub mod ann;
pub mod dataset;
pub mod error;
mod linalg;
pub mod pipeline;
pub mod psf;
pub mod rsm;
pub mod stats;

pub use error::{Error, Result};
