use thiserror::Error;

/// Errors raised by the geometry pipeline.
///
/// Points are reported as `(i, j)` grid indices together with the chart
/// coordinates `(x, y)` where that helps diagnose the offending sample.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("causal orientation error: {0}")]
    CausalOrientation(String),

    #[error("surface is not spacelike at grid point ({i},{j}) x={x:.6} y={y:.6}: <f_z,f_zbar> = {value:.6e}")]
    NotSpacelike {
        i: usize,
        j: usize,
        x: f64,
        y: f64,
        value: f64,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("state error: {0}")]
    State(String),

    #[error("isotropy error: Hopf differential q vanishes at grid point ({i},{j}) x={x:.6} y={y:.6} (|q| = {value:.6e})")]
    Isotropy {
        i: usize,
        j: usize,
        x: f64,
        y: f64,
        value: f64,
    },

    #[error("gauss map constant: Hopf differential q vanishes identically (max |q| = {0:.6e}); classification undefined")]
    GaussMapConstant(f64),

    #[error("degeneracy error: {0}")]
    Degeneracy(String),

    #[error("non-integrable: {0}")]
    NonIntegrable(String),

    #[error("integration failure: {0}")]
    IntegrationFailure(String),

    #[error("normalization error: {0}")]
    Normalization(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("internal consistency error: {0}")]
    InternalConsistency(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
