//! Response-surface screening: designs, quadratic fits, ANOVA and
//! hierarchical backward elimination.

mod anova;
mod design;
mod fit;
mod model;
mod screen;

pub use anova::{anova, partial_sums_of_squares, AnovaRow, AnovaTable, Source};
pub use design::{evaluate_design, generate_ccd, FactorCoding, DEFAULT_AXIAL};
pub use fit::{fit, FitResult, ResponsePrediction};
pub use model::{FactorId, ModelSpec, ModelTerm, CASE_STUDY_MODEL};
pub use screen::{
    backward_eliminate, backward_eliminate_by_refit, fit_with_anova, screen_psfs, EliminationStep, FactorEvidence,
    ScreeningReport,
};
