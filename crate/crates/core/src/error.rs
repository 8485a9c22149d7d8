use thiserror::Error;

/// Errors surfaced by grid construction, quadrature, time stepping and studies.
///
/// Dimension misuse of the vertical operators (e.g. differentiating a single
/// layer) is a programming error and panics instead; see the `layers` module.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not converge on [{a}, {b}] (requested rel. tol. {tol:e})")]
    Quadrature { a: f64, b: f64, tol: f64 },

    #[error("cavitation guard tripped at t = {t}: layer {layer}, node {node}, depth {depth:e} < {floor:e}")]
    Cavitation {
        t: f64,
        layer: usize,
        node: usize,
        depth: f64,
        floor: f64,
    },

    #[error("non-finite value detected at t = {t} in {field}")]
    BlowUp { t: f64, field: &'static str },

    #[error("degenerate rate fit: {0}")]
    DegenerateFit(String),
}
