use thiserror::Error;

use crate::modes::GaussianFit;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown unit tag `{0}`")]
    UnknownUnit(String),

    #[error("waist {waist:.3e} m does not fit on a grid of extent {extent:.3e} m (need {required:.3e} m)")]
    WaistTooLarge {
        waist: f64,
        extent: f64,
        required: f64,
    },

    #[error("field has zero power")]
    ZeroPower,

    #[error("Gaussian fit did not converge after {iterations} iterations")]
    FitNotConverged {
        iterations: usize,
        estimate: Box<GaussianFit>,
    },

    #[error("found {found} intensity peaks along the centroid cut, need three")]
    TooFewPeaks { found: usize },

    #[error("image error: {0}")]
    Image(String),

    #[error("mask blocks all light")]
    EmptyMask,

    #[error("diffusion kernel width {sigma:.3e} m is below two samples ({min:.3e} m)")]
    KernelUnderResolved { sigma: f64, min: f64 },

    #[error(
        "diffusion kernel width {sigma:.3e} m exceeds one eighth of the grid extent ({max:.3e} m)"
    )]
    KernelOverExtended { sigma: f64, max: f64 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("numerical instability at t = {time:.6e} s: {detail}")]
    Unstable { time: f64, detail: String },

    #[error("3D grid too large ({0}); use the factorized path for production-scale grids")]
    GridTooLarge(String),

    #[error("echo record has no transverse output field")]
    MissingTransverse,

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
