//! Norm dictionary for layer vectors and layer fields.
//!
//! Conventions, fixed so every value is bit-defined:
//! - normalized vector norms divide by the ambient layer count `N` of the
//!   underlying density grid, also for vectors shortened by the vertical
//!   operators (this is the weighting under which the operator bounds of the
//!   discrete calculus hold uniformly in `N`);
//! - horizontal integrals are the periodic Riemann sum `Δx Σ_j`;
//! - the discrete Sobolev norm is
//!   `‖F‖²_{s,k} = Σ_{j<=k} ‖D^j F‖²_{l²(H^{s-j}_x)}`, with vertical
//!   derivative orders that exceed `N-1` contributing nothing (their target
//!   space is trivial).

use serde::{Deserialize, Serialize};

use crate::layers::{self, DensityGrid};
use crate::spectral::SpatialGrid;
use crate::LayerField;

/// Integrability exponent for the normalized vector and grid norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Exponent {
    One,
    Two,
    Inf,
}

/// Which index is taken first in a mixed norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixedOrder {
    /// `L^p_x(l^q)`: the layer norm is taken pointwise in x, then integrated.
    XOuter,
    /// `l^q(L^p_x)`: each layer is integrated in x, then the layer norm taken.
    LayerOuter,
}

/// Normalized `l^q` norm with ambient weight `1/N`.
pub fn lq_norm(values: &[f64], q: Exponent, ambient_n: usize) -> f64 {
    assert!(ambient_n >= values.len() && ambient_n > 0);
    let inv = 1.0 / ambient_n as f64;
    match q {
        Exponent::One => values.iter().map(|v| v.abs()).sum::<f64>() * inv,
        Exponent::Two => (values.iter().map(|v| v * v).sum::<f64>() * inv).sqrt(),
        Exponent::Inf => values.iter().fold(0.0, |m, v| m.max(v.abs())),
    }
}

fn lp_grid(grid: &SpatialGrid, values: &[f64], p: Exponent) -> f64 {
    match p {
        Exponent::One => grid.dx() * values.iter().map(|v| v.abs()).sum::<f64>(),
        Exponent::Two => (grid.dx() * values.iter().map(|v| v * v).sum::<f64>()).sqrt(),
        Exponent::Inf => values.iter().fold(0.0, |m, v| m.max(v.abs())),
    }
}

/// Mixed norm of a layer field in either nesting order.
pub fn mixed_norm(
    grid: &SpatialGrid,
    field: &LayerField,
    order: MixedOrder,
    p: Exponent,
    q: Exponent,
    ambient_n: usize,
) -> f64 {
    let (rows, cols) = field.dim();
    assert_eq!(cols, grid.points());
    match order {
        MixedOrder::XOuter => {
            let mut pointwise = vec![0.0; cols];
            let mut col = vec![0.0; rows];
            for (j, slot) in pointwise.iter_mut().enumerate() {
                for (i, c) in col.iter_mut().enumerate() {
                    *c = field[[i, j]];
                }
                *slot = lq_norm(&col, q, ambient_n);
            }
            lp_grid(grid, &pointwise, p)
        }
        MixedOrder::LayerOuter => {
            let per_layer: Vec<f64> = field
                .outer_iter()
                .map(|row| lp_grid(grid, row.as_slice().unwrap(), p))
                .collect();
            lq_norm(&per_layer, q, ambient_n)
        }
    }
}

/// `‖F‖_{l²(H^s_x)}` with `s` possibly fractional, ambient weight `1/N`.
pub fn l2_sobolev_norm(grid: &SpatialGrid, field: &LayerField, s: f64, ambient_n: usize) -> f64 {
    let sum: f64 = field
        .outer_iter()
        .map(|row| grid.sobolev_norm_sq(row.as_slice().unwrap(), s))
        .sum();
    (sum / ambient_n as f64).sqrt()
}

/// Discrete Sobolev norm `H^{s,k}` with integer `s` and `k ∈ {0,1,2}`,
/// `k <= s`. Vertical orders above `N-1` contribute nothing.
pub fn hsk_norm(grid: &SpatialGrid, ambient_n: usize, field: &LayerField, s: u32, k: u32) -> f64 {
    assert!(k <= 2, "vertical order above 2 is unsupported");
    assert!(k <= s, "need k <= s");
    let rows = field.dim().0;
    assert!(ambient_n >= rows && ambient_n > 0);
    let mut total = 0.0;
    let mut level = field.clone();
    for j in 0..=k {
        if j > 0 {
            if level.dim().0 < 2 {
                break;
            }
            level = layers::derivative_field(ambient_n, &level);
        }
        let sigma = (s - j) as f64;
        let t = l2_sobolev_norm(grid, &level, sigma, ambient_n);
        total += t * t;
    }
    total.sqrt()
}

/// `Σ_{l<=k} |D^l F|_{l^∞}`; requires more layers than the order `k`.
pub fn wk_inf_norm(values: &[f64], ambient_n: usize, k: u32) -> f64 {
    assert!(k <= 2, "vertical order above 2 is unsupported");
    assert!(
        values.len() > k as usize,
        "w^{{k,inf}} norm needs more than k values"
    );
    let mut total = lq_norm(values, Exponent::Inf, ambient_n);
    let mut level = values.to_vec();
    for _ in 0..k {
        level = layers::derivative(ambient_n, &level);
        total += lq_norm(&level, Exponent::Inf, ambient_n);
    }
    total
}

/// Running dissipation integrals feeding the composite solution norm; all
/// four are integrals in time of squared spatial-derivative norms.
#[derive(Debug, Clone, Default, Serialize)]
pub struct DissipationIntegrals {
    /// `∫ ‖∂ₓH‖²_{H^{s-1,1}} dτ`
    pub h_low: f64,
    /// `∫ ‖∂ₓ SH‖²_{H^{s,2}} dτ`
    pub integrated: f64,
    /// `∫ ‖∂ₓ TSH‖²_{H^{s,0}} dτ`
    pub surface: f64,
    /// `∫ ‖∂ₓH‖²_{H^{s,2}} dτ`
    pub h_full: f64,
}

/// Composite solution norm: instantaneous part
/// `‖H‖_{H^{s-1,1}} + ‖SH‖_{H^{s,2}} + ‖TSH‖_{H^{s,0}} + ‖U‖_{H^{s,2}}
///  + κ^{1/2}‖H‖_{H^{s,2}}`
/// plus the accumulated dissipation contributions
/// `κ^{1/2}(√∫‖∂ₓH‖²_{H^{s-1,1}} + √∫‖∂ₓSH‖²_{H^{s,2}} + √∫‖∂ₓTSH‖²_{H^{s,0}})
///  + κ √∫‖∂ₓH‖²_{H^{s,2}}`.
pub fn solution_norm(
    sgrid: &SpatialGrid,
    dgrid: &DensityGrid,
    h: &LayerField,
    u: &LayerField,
    diss: &DissipationIntegrals,
    kappa: f64,
    s: u32,
) -> f64 {
    assert!(s >= 1);
    let n = dgrid.n();
    let sh = layers::integrate_field(h);
    let tsh = layers::trace_field(&sh);
    let sqrt_kappa = kappa.sqrt();
    let instantaneous = hsk_norm(sgrid, n, h, s - 1, 1.min(s - 1))
        + hsk_norm(sgrid, n, &sh, s, 2.min(s))
        + hsk_norm(sgrid, n, &tsh, s, 0)
        + hsk_norm(sgrid, n, u, s, 2.min(s))
        + sqrt_kappa * hsk_norm(sgrid, n, h, s, 2.min(s));
    let integrated = sqrt_kappa
        * (diss.h_low.sqrt() + diss.integrated.sqrt() + diss.surface.sqrt())
        + kappa * diss.h_full.sqrt();
    instantaneous + integrated
}

/// Instantaneous part only (used as the study difference metric).
pub fn solution_norm_instantaneous(
    sgrid: &SpatialGrid,
    dgrid: &DensityGrid,
    h: &LayerField,
    u: &LayerField,
    kappa: f64,
    s: u32,
) -> f64 {
    solution_norm(
        sgrid,
        dgrid,
        h,
        u,
        &DissipationIntegrals::default(),
        kappa,
        s,
    )
}
