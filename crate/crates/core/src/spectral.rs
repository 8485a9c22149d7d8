//! Periodic pseudo-spectral grid on `[0, L)`.
//!
//! Transform normalization: the forward transform is unscaled,
//! `f̂_m = Σ_j f_j e^{-2πi jm/M}`, and the inverse carries the `1/M` factor.
//! Under this convention the discrete Parseval identity reads
//! `(1/M) Σ_j f_j² = (1/M²) Σ_m |f̂_m|²`.
//!
//! Wavenumbers are `k_m = 2πm/L` for `m ∈ {-M/2, …, M/2-1}` in standard FFT
//! index order. The derivative zeroes the Nyquist mode `m = -M/2` so that all
//! operators map real fields to real fields.

use std::sync::Arc;

use ndarray::Array2;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::Error;
use crate::LayerField;

/// Uniform periodic grid with cached transform plans.
#[derive(Clone)]
pub struct SpatialGrid {
    length: f64,
    points: usize,
    dx: f64,
    nodes: Vec<f64>,
    /// Angular wavenumbers in FFT index order (index `m` holds `k` for the
    /// mode `m` if `m < M/2`, else `m - M`).
    wavenumbers: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpatialGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpatialGrid")
            .field("length", &self.length)
            .field("points", &self.points)
            .finish()
    }
}

impl SpatialGrid {
    /// `points` must be a power of two, at least 8.
    pub fn new(length: f64, points: usize) -> Result<Self, Error> {
        if !crate::positive_finite(length) {
            return Err(Error::InvalidGrid(format!(
                "domain length must be positive and finite, got {length}"
            )));
        }
        if points < 8 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "grid size must be a power of two >= 8, got {points}"
            )));
        }
        let dx = length / points as f64;
        let nodes = (0..points).map(|j| j as f64 * dx).collect();
        let wavenumbers = (0..points)
            .map(|m| {
                let m = if m < points / 2 {
                    m as i64
                } else {
                    m as i64 - points as i64
                };
                2.0 * std::f64::consts::PI * m as f64 / length
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Self {
            length,
            points,
            dx,
            nodes,
            wavenumbers,
            fwd: planner.plan_fft_forward(points),
            inv: planner.plan_fft_inverse(points),
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Unscaled forward transform of a real sample vector.
    pub fn spectrum(&self, f: &[f64]) -> Vec<Complex64> {
        assert_eq!(f.len(), self.points, "sample count does not match grid");
        let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf
    }

    /// Inverse transform (scaled by `1/M`), returning the real part.
    pub fn synthesize(&self, spectrum: &[Complex64]) -> Vec<f64> {
        assert_eq!(spectrum.len(), self.points);
        let mut buf = spectrum.to_vec();
        self.inv.process(&mut buf);
        let scale = 1.0 / self.points as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }

    fn apply_multiplier(&self, f: &[f64], mult: impl Fn(usize, f64) -> Complex64) -> Vec<f64> {
        let mut spec = self.spectrum(f);
        for (m, c) in spec.iter_mut().enumerate() {
            *c *= mult(m, self.wavenumbers[m]);
        }
        self.synthesize(&spec)
    }

    /// Spectral derivative; exact on resolved trigonometric polynomials.
    /// The Nyquist mode of the derivative is set to zero.
    pub fn ddx(&self, f: &[f64]) -> Vec<f64> {
        let nyquist = self.points / 2;
        self.apply_multiplier(f, |m, k| {
            if m == nyquist {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, k)
            }
        })
    }

    /// Fractional smoothing `(1 - ∂²ₓ)^{s/2}` as the Fourier multiplier
    /// `(1 + k²)^{s/2}`; `s` may be negative.
    pub fn lambda_pow(&self, f: &[f64], s: f64) -> Vec<f64> {
        if s == 0.0 {
            return f.to_vec();
        }
        self.apply_multiplier(f, |_, k| Complex64::new((1.0 + k * k).powf(0.5 * s), 0.0))
    }

    /// Exact heat propagation: multiplies mode `m` by `exp(-κ k_m² dt)`.
    /// The mean (`k = 0`) is preserved exactly.
    pub fn heat_step(&self, f: &[f64], kappa: f64, dt: f64) -> Vec<f64> {
        assert!(
            kappa >= 0.0 && dt >= 0.0,
            "heat_step requires kappa, dt >= 0"
        );
        self.heat_propagate(f, kappa, dt)
    }

    /// Signed-time heat multiplier used internally by the integrating-factor
    /// stepper; `dt < 0` amplifies high modes and is not part of the public
    /// propagation contract.
    pub(crate) fn heat_propagate(&self, f: &[f64], kappa: f64, dt: f64) -> Vec<f64> {
        if kappa == 0.0 || dt == 0.0 {
            return f.to_vec();
        }
        self.apply_multiplier(f, |_, k| Complex64::new((-kappa * k * k * dt).exp(), 0.0))
    }

    /// 2/3-rule dealiasing: zeroes every mode with `3|m| > M`; the mean is a
    /// kept mode and is preserved.
    pub fn dealias(&self, f: &[f64]) -> Vec<f64> {
        let m_max = self.points as i64;
        let mut spec = self.spectrum(f);
        for (m, c) in spec.iter_mut().enumerate() {
            let mode = if m < self.points / 2 {
                m as i64
            } else {
                m as i64 - m_max
            };
            if 3 * mode.abs() > m_max {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        self.synthesize(&spec)
    }

    /// `Δx Σ_j f_j²`.
    pub fn l2_norm_sq(&self, f: &[f64]) -> f64 {
        self.dx * f.iter().map(|v| v * v).sum::<f64>()
    }

    /// `‖Λ^s f‖²_{L²}` evaluated in spectral space via Parseval:
    /// `(Δx/M) Σ_m (1 + k_m²)^s |f̂_m|²`.
    pub fn sobolev_norm_sq(&self, f: &[f64], s: f64) -> f64 {
        let spec = self.spectrum(f);
        let sum: f64 = spec
            .iter()
            .zip(&self.wavenumbers)
            .map(|(c, &k)| (1.0 + k * k).powf(s) * c.norm_sqr())
            .sum();
        self.dx / self.points as f64 * sum
    }

    /// Raw transform coefficient of mode `m` (signed index).
    pub fn mode_coefficient(&self, f: &[f64], mode: i64) -> Complex64 {
        let idx = mode.rem_euclid(self.points as i64) as usize;
        self.spectrum(f)[idx]
    }

    fn map_rows(&self, field: &LayerField, op: impl Fn(&[f64]) -> Vec<f64>) -> LayerField {
        let mut out = Array2::zeros(field.raw_dim());
        for (mut dst, src) in out.outer_iter_mut().zip(field.outer_iter()) {
            let row = op(src.as_slice().expect("row-major field"));
            dst.as_slice_mut().unwrap().copy_from_slice(&row);
        }
        out
    }

    pub fn ddx_field(&self, field: &LayerField) -> LayerField {
        self.map_rows(field, |r| self.ddx(r))
    }

    pub fn lambda_pow_field(&self, field: &LayerField, s: f64) -> LayerField {
        self.map_rows(field, |r| self.lambda_pow(r, s))
    }

    pub fn heat_step_field(&self, field: &LayerField, kappa: f64, dt: f64) -> LayerField {
        assert!(
            kappa >= 0.0 && dt >= 0.0,
            "heat_step requires kappa, dt >= 0"
        );
        self.map_rows(field, |r| self.heat_propagate(r, kappa, dt))
    }

    pub(crate) fn heat_propagate_field(
        &self,
        field: &LayerField,
        kappa: f64,
        dt: f64,
    ) -> LayerField {
        self.map_rows(field, |r| self.heat_propagate(r, kappa, dt))
    }

    pub fn dealias_field(&self, field: &LayerField) -> LayerField {
        self.map_rows(field, |r| self.dealias(r))
    }
}
