//! Grid-mask sampling, crease guide points and curve fitting.

mod guides;
mod identity;
mod mask;
mod spline;

use thiserror::Error;

pub use guides::{
    quantize, sample_bezier_guides, sample_principal_guides, Bounds, CurveRole, GuidePointSet,
    Margin, Point, BEZIER_DEGREE, MIN_X_GAP, PRINCIPAL_DEGREES,
};
pub use identity::{
    cpd_variant, sample_identity, IdentityConfig, IdentityRecord, ParentRef, GENERATOR_VERSION,
    IDENTITY_SCHEMA_VERSION,
};
pub use mask::{
    sample_grid_mask, GridMask, MaskViolation, RowMask, CELLS_PER_ROW, GRID_COLS, GRID_ROWS,
    MIN_ACTIVE_ROWS,
};
pub use spline::{
    averaged_knots, chord_length_params, eval_bezier, fit_bspline, interpolate, BSplineCurve,
};

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("degree {0} not allowed")]
    InvalidDegree(usize),
    #[error("perturbation margin {0} outside [0.3, 0.6]")]
    MarginOutOfRange(f64),
    #[error("perturbation magnitude {0} must be finite and non-negative")]
    InvalidMagnitude(f64),
    #[error("row {0} outside the 6-row grid")]
    RowOutOfRange(usize),
    #[error("cell {0} outside the 3 merged cells of a row")]
    CellOutOfRange(usize),
    #[error("degree {degree} curve needs more than {count} guide points")]
    TooFewGuides { degree: usize, count: usize },
    #[error("guide x-coordinates must be strictly increasing")]
    NotIncreasing,
    #[error("collocation system is singular")]
    SingularSystem,
    #[error("parameter {0} outside [0, 1]")]
    Domain(f64),
    #[error("invalid knot vector: {0}")]
    BadKnots(String),
    #[error("invalid guide points: {0}")]
    InvalidGuides(String),
    #[error("invalid grid mask: {0}")]
    InvalidMask(#[from] MaskViolation),
    #[error("identity inconsistent with its mask: {0}")]
    Inconsistent(String),
    #[error("unsupported identity schema version {0}")]
    Schema(u32),
    #[error("identity json: {0}")]
    Json(#[from] serde_json::Error),
}
