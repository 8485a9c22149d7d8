//! Density grid and the discrete vertical operator dictionary.
//!
//! Layer quantities are `N`-vectors (or `N×M` fields operated on column-wise,
//! implemented as row arithmetic). All operators are matrix-free: integration
//! is a running sum, differentiation and averaging are two-point stencils, and
//! the coupling operator is applied in O(N) through its rank-one-plus-smoother
//! decomposition. Dense matrices exist only for test oracles.
//!
//! Dimension-changing operators return shorter vectors; calling them on inputs
//! that are too short is a contract violation and panics.
//!
//! Internally the density axis is rescaled so that the surface-to-bottom
//! density difference is exactly one (with gravity normalized to one); all
//! coupling coefficients and energies are expressed in these units.

use ndarray::Array2;
use serde::Serialize;

use crate::error::Error;
use crate::LayerField;

/// Equidistributed midpoint densities for `N` layers.
#[derive(Debug, Clone, Serialize)]
pub struct DensityGrid {
    n: usize,
    rho_surf_input: f64,
    rho_bott_input: f64,
    /// Multiplier taking input densities to the normalized convention.
    scale: f64,
    /// Rescaled surface density; the rescaled bottom density is `rho_surf + 1`.
    rho_surf: f64,
    /// Rescaled midpoint densities, strictly increasing with spacing `1/N`.
    rho: Vec<f64>,
}

impl DensityGrid {
    pub fn new(n: usize, rho_surf: f64, rho_bott: f64) -> Result<Self, Error> {
        if n == 0 {
            return Err(Error::InvalidGrid("layer count must be at least 1".into()));
        }
        if !crate::positive_finite(rho_surf) || !rho_bott.is_finite() || rho_bott <= rho_surf {
            return Err(Error::InvalidGrid(format!(
                "need 0 < rho_surf < rho_bott, got ({rho_surf}, {rho_bott})"
            )));
        }
        let scale = 1.0 / (rho_bott - rho_surf);
        let surf = rho_surf * scale;
        // Midpoint offsets (i + 1/2)/n are computed as a single correctly
        // rounded division so that nested grids share midpoint bits exactly.
        let rho = (0..n).map(|i| surf + (i as f64 + 0.5) / n as f64).collect();
        Ok(Self {
            n,
            rho_surf_input: rho_surf,
            rho_bott_input: rho_bott,
            scale,
            rho_surf: surf,
            rho,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Rescaled midpoint densities.
    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// Rescaled surface density.
    pub fn rho_surf(&self) -> f64 {
        self.rho_surf
    }

    /// Rescaled bottom density (`rho_surf + 1`).
    pub fn rho_bott(&self) -> f64 {
        self.rho_surf + 1.0
    }

    /// Rescaled density of the top layer.
    pub fn rho_first(&self) -> f64 {
        self.rho[0]
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn rho_surf_input(&self) -> f64 {
        self.rho_surf_input
    }

    pub fn rho_bott_input(&self) -> f64 {
        self.rho_bott_input
    }
}

/// Discrete integration: `(1/N) Σ_{j>=i} f_j`, mapping N values to N values.
pub fn integrate(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 1, "integrate needs at least one layer");
    let inv = 1.0 / n as f64;
    let mut out = vec![0.0; n];
    let mut acc = 0.0;
    for i in (0..n).rev() {
        acc += f[i];
        out[i] = acc * inv;
    }
    out
}

/// Integration of interface data: takes `N-1` values, returns `N` values with
/// `(1/N) Σ_{i<=j<=N-1} g_j` in slot `i` and zero in the last slot.
pub fn integrate_interfaces(g: &[f64]) -> Vec<f64> {
    let n = g.len() + 1;
    assert!(n >= 2, "interface integration needs at least two layers");
    let inv = 1.0 / n as f64;
    let mut out = vec![0.0; n];
    let mut acc = 0.0;
    for i in (0..n - 1).rev() {
        acc += g[i];
        out[i] = acc * inv;
    }
    out
}

/// Adjoint of [`integrate`]: `(1/N) Σ_{j<=i} f_j`.
pub fn integrate_transpose(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 1);
    let inv = 1.0 / n as f64;
    let mut out = vec![0.0; n];
    let mut acc = 0.0;
    for i in 0..n {
        acc += f[i];
        out[i] = acc * inv;
    }
    out
}

/// Vertical differentiation `N (f_i - f_{i+1})`, one value shorter than the
/// input. `n_layers` is the ambient layer count fixing the `N` factor; it
/// stays the same when the operator is iterated on already-shortened data.
pub fn derivative(n_layers: usize, f: &[f64]) -> Vec<f64> {
    assert!(
        f.len() >= 2,
        "vertical derivative undefined for fewer than two values"
    );
    assert!(n_layers >= f.len());
    let scale = n_layers as f64;
    f.windows(2).map(|w| scale * (w[0] - w[1])).collect()
}

/// Iterated differentiation `N² (f_i - 2 f_{i+1} + f_{i+2})`.
pub fn derivative2(n_layers: usize, f: &[f64]) -> Vec<f64> {
    assert!(
        f.len() >= 3,
        "second vertical derivative undefined for fewer than three values"
    );
    derivative(n_layers, &derivative(n_layers, f))
}

/// Neighbor average `(f_i + f_{i+1})/2`, one value shorter.
pub fn average(f: &[f64]) -> Vec<f64> {
    assert!(f.len() >= 2, "average undefined for fewer than two values");
    f.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

/// Iterated neighbor average, two values shorter.
pub fn average2(f: &[f64]) -> Vec<f64> {
    assert!(f.len() >= 3, "iterated average needs at least three values");
    average(&average(f))
}

/// Discrete surface trace: `√N f_1` in the first slot, zeros elsewhere.
pub fn trace(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 1);
    let mut out = vec![0.0; n];
    out[0] = (n as f64).sqrt() * f[0];
    out
}

/// Complementary projection zeroing the surface slot.
pub fn interior(f: &[f64]) -> Vec<f64> {
    let mut out = f.to_vec();
    if !out.is_empty() {
        out[0] = 0.0;
    }
    out
}

/// Drops the first entry (upwards reduction).
pub fn drop_first(f: &[f64]) -> Vec<f64> {
    assert!(f.len() >= 2, "reduction needs at least two values");
    f[1..].to_vec()
}

/// Drops the last entry (downwards reduction).
pub fn drop_last(f: &[f64]) -> Vec<f64> {
    assert!(f.len() >= 2, "reduction needs at least two values");
    f[..f.len() - 1].to_vec()
}

/// Dense coupling matrix `Γ_{ij} = (1/N) min(ρ_i, ρ_j)/ρ_i`. Test/oracle path;
/// production code uses [`coupling_apply`].
pub fn coupling_dense(grid: &DensityGrid) -> Array2<f64> {
    let n = grid.n();
    let rho = grid.rho();
    let inv = 1.0 / n as f64;
    Array2::from_shape_fn((n, n), |(i, j)| inv * rho[i].min(rho[j]) / rho[i])
}

/// O(N) coupling apply through `ρΓ = ρ₁ (TS)ᵗTS + SᵗCS`: the first piece is
/// rank one (`ρ₁ · mean(f)`), the second a prefix sum of the zeroed-surface
/// running integral.
pub fn coupling_apply(grid: &DensityGrid, f: &[f64]) -> Vec<f64> {
    let n = grid.n();
    assert_eq!(f.len(), n, "coupling input must have one value per layer");
    let mean = f.iter().sum::<f64>() / n as f64;
    let rank_one = grid.rho_first() * mean;
    let smoother = integrate_transpose(&interior(&integrate(f)));
    grid.rho()
        .iter()
        .zip(smoother)
        .map(|(&rho_i, s)| (rank_one + s) / rho_i)
        .collect()
}

// ---------------------------------------------------------------------------
// Field (N×M) variants: the same operators applied to every column, written
// as row arithmetic so each pass is contiguous.
// ---------------------------------------------------------------------------

pub fn integrate_field(f: &LayerField) -> LayerField {
    let (n, m) = f.dim();
    assert!(n >= 1);
    let inv = 1.0 / n as f64;
    let mut out = Array2::zeros((n, m));
    let mut acc = vec![0.0; m];
    for i in (0..n).rev() {
        for (a, v) in acc.iter_mut().zip(f.row(i)) {
            *a += *v;
        }
        for (o, a) in out.row_mut(i).iter_mut().zip(&acc) {
            *o = *a * inv;
        }
    }
    out
}

pub fn derivative_field(n_layers: usize, f: &LayerField) -> LayerField {
    let (rows, m) = f.dim();
    assert!(rows >= 2);
    assert!(n_layers >= rows);
    let scale = n_layers as f64;
    let mut out = Array2::zeros((rows - 1, m));
    for i in 0..rows - 1 {
        let top = f.row(i);
        let bot = f.row(i + 1);
        for (j, o) in out.row_mut(i).iter_mut().enumerate() {
            *o = scale * (top[j] - bot[j]);
        }
    }
    out
}

pub fn derivative2_field(n_layers: usize, f: &LayerField) -> LayerField {
    derivative_field(n_layers, &derivative_field(n_layers, f))
}

pub fn average_field(f: &LayerField) -> LayerField {
    let (rows, m) = f.dim();
    assert!(rows >= 2);
    let mut out = Array2::zeros((rows - 1, m));
    for i in 0..rows - 1 {
        let top = f.row(i);
        let bot = f.row(i + 1);
        for (j, o) in out.row_mut(i).iter_mut().enumerate() {
            *o = 0.5 * (top[j] + bot[j]);
        }
    }
    out
}

pub fn trace_field(f: &LayerField) -> LayerField {
    let (n, m) = f.dim();
    let mut out = Array2::zeros((n, m));
    let scale = (n as f64).sqrt();
    for (j, o) in out.row_mut(0).iter_mut().enumerate() {
        *o = scale * f[[0, j]];
    }
    out
}

pub fn interior_field(f: &LayerField) -> LayerField {
    let mut out = f.clone();
    out.row_mut(0).fill(0.0);
    out
}

pub fn coupling_apply_field(grid: &DensityGrid, f: &LayerField) -> LayerField {
    let (n, m) = f.dim();
    assert_eq!(n, grid.n());
    let inv = 1.0 / n as f64;

    // column means -> rank-one part
    let mut mean = vec![0.0; m];
    for row in f.outer_iter() {
        for (s, v) in mean.iter_mut().zip(row) {
            *s += *v;
        }
    }
    for s in mean.iter_mut() {
        *s *= inv;
    }

    // running integral with zeroed surface slot, then its prefix-sum adjoint
    let s_field = integrate_field(f);
    let mut out = Array2::zeros((n, m));
    let mut prefix = vec![0.0; m];
    let rho1 = grid.rho_first();
    for i in 0..n {
        if i > 0 {
            for (p, v) in prefix.iter_mut().zip(s_field.row(i)) {
                *p += *v;
            }
        }
        let rho_i = grid.rho()[i];
        for (j, o) in out.row_mut(i).iter_mut().enumerate() {
            *o = (rho1 * mean[j] + prefix[j] * inv) / rho_i;
        }
    }
    out
}
