//! Continuously stratified profiles and their layer projections.
//!
//! Profiles are finite sums of separable terms `coef · φ(x) · ψ(ρ)` where the
//! horizontal shapes carry closed-form derivatives and the vertical shapes
//! carry closed-form derivatives and antiderivatives. This keeps every bridge
//! quantity (sampling and cell-average projections, the min-kernel coupling
//! integral, the consistency remainder) evaluable to near machine precision,
//! so layer-count studies measure the layer discretization error and nothing
//! else.
//!
//! Vertical shapes are functions of the offset `t = ρ - ρ_surf ∈ [0, 1]` in
//! the rescaled density units of [`DensityGrid`].

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::layers::{self, DensityGrid};
use crate::quadrature;
use crate::spectral::SpatialGrid;
use crate::LayerField;

/// Horizontal factor of a separable term.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum XShape {
    Const,
    /// `sin(2π·mode·x/L + phase)`; `mode` counts full periods over the domain.
    Sine {
        mode: u32,
        phase: f64,
    },
    /// `sech²((x - center)/width)`.
    Sech2 {
        center: f64,
        width: f64,
    },
}

impl XShape {
    pub fn value(&self, x: f64, length: f64) -> f64 {
        match self {
            XShape::Const => 1.0,
            XShape::Sine { mode, phase } => {
                let k = 2.0 * std::f64::consts::PI * *mode as f64 / length;
                (k * x + phase).sin()
            }
            XShape::Sech2 { center, width } => {
                let z = (x - center) / width;
                let s = 1.0 / z.cosh();
                s * s
            }
        }
    }

    pub fn deriv(&self, x: f64, length: f64) -> f64 {
        match self {
            XShape::Const => 0.0,
            XShape::Sine { mode, phase } => {
                let k = 2.0 * std::f64::consts::PI * *mode as f64 / length;
                k * (k * x + phase).cos()
            }
            XShape::Sech2 { center, width } => {
                let z = (x - center) / width;
                let s = 1.0 / z.cosh();
                -2.0 * s * s * z.tanh() / width
            }
        }
    }
}

/// Vertical factor of a separable term, as a function of `t = ρ - ρ_surf`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RhoShape {
    Const,
    /// `Σ_k c_k t^k`.
    Poly {
        coeffs: Vec<f64>,
    },
    /// `cos(omega·t + phase)`.
    Trig {
        omega: f64,
        phase: f64,
    },
}

impl RhoShape {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            RhoShape::Const => 1.0,
            RhoShape::Poly { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c),
            RhoShape::Trig { omega, phase } => (omega * t + phase).cos(),
        }
    }

    pub fn d1(&self, t: f64) -> f64 {
        match self {
            RhoShape::Const => 0.0,
            RhoShape::Poly { coeffs } => {
                let mut acc = 0.0;
                for (k, c) in coeffs.iter().enumerate().skip(1).rev() {
                    acc = acc * t + k as f64 * c;
                }
                acc
            }
            RhoShape::Trig { omega, phase } => -omega * (omega * t + phase).sin(),
        }
    }

    pub fn d2(&self, t: f64) -> f64 {
        match self {
            RhoShape::Const => 0.0,
            RhoShape::Poly { coeffs } => {
                let mut acc = 0.0;
                for (k, c) in coeffs.iter().enumerate().skip(2).rev() {
                    acc = acc * t + (k * (k - 1)) as f64 * c;
                }
                acc
            }
            RhoShape::Trig { omega, phase } => -omega * omega * (omega * t + phase).cos(),
        }
    }

    /// Antiderivative in `t`, normalized to vanish at `t = 0`.
    pub fn antiderivative(&self, t: f64) -> f64 {
        match self {
            RhoShape::Const => t,
            RhoShape::Poly { coeffs } => {
                let mut acc = 0.0;
                for (k, c) in coeffs.iter().enumerate().rev() {
                    acc = acc * t + c / (k + 1) as f64;
                }
                acc * t
            }
            RhoShape::Trig { omega, phase } => {
                if omega.abs() < 1e-300 {
                    t * phase.cos()
                } else {
                    ((omega * t + phase).sin() - phase.sin()) / omega
                }
            }
        }
    }
}

/// One separable term `coef · φ(x) · ψ(t)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub coef: f64,
    pub x: XShape,
    pub rho: RhoShape,
}

/// One x-independent background term `coef · ψ(t)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhoTerm {
    pub coef: f64,
    pub rho: RhoShape,
}

/// Full stratified configuration: deviations `(h, u)` and backgrounds
/// `(h̄, ū)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuousProfile {
    #[serde(default)]
    pub h: Vec<Term>,
    #[serde(default)]
    pub u: Vec<Term>,
    #[serde(default)]
    pub hbar: Vec<RhoTerm>,
    #[serde(default)]
    pub ubar: Vec<RhoTerm>,
}

impl ContinuousProfile {
    /// Packet-over-stratification profile used by the consistency study and
    /// the plain simulation preset: h̄ = 1.2 - 0.2t and a sech² packet whose
    /// vertical structure is `1 + cos(πt)/2`, amplitude 0.1.
    pub fn preset_default(length: f64) -> Self {
        let packet = |coef: f64, rho: RhoShape| Term {
            coef,
            x: XShape::Sech2 {
                center: 0.5 * length,
                width: 1.0,
            },
            rho,
        };
        ContinuousProfile {
            h: vec![
                packet(0.1, RhoShape::Const),
                packet(
                    0.05,
                    RhoShape::Trig {
                        omega: std::f64::consts::PI,
                        phase: 0.0,
                    },
                ),
            ],
            u: vec![],
            hbar: vec![RhoTerm {
                coef: 1.0,
                rho: RhoShape::Poly {
                    coeffs: vec![1.2, -0.2],
                },
            }],
            ubar: vec![],
        }
    }

    /// Small-amplitude fully periodic preset for self-convergence runs: every
    /// horizontal shape is a resolved trigonometric mode, so the spatial
    /// representation is exact and the layer error dominates.
    pub fn preset_small(_length: f64) -> Self {
        let half_pi = 0.5 * std::f64::consts::PI;
        ContinuousProfile {
            h: vec![
                Term {
                    coef: 1e-3,
                    x: XShape::Sine {
                        mode: 1,
                        phase: 0.0,
                    },
                    rho: RhoShape::Const,
                },
                Term {
                    coef: 5e-4,
                    x: XShape::Sine {
                        mode: 1,
                        phase: half_pi,
                    },
                    rho: RhoShape::Trig {
                        omega: std::f64::consts::PI,
                        phase: 0.0,
                    },
                },
            ],
            u: vec![
                Term {
                    coef: 1e-3,
                    x: XShape::Sine {
                        mode: 1,
                        phase: half_pi,
                    },
                    rho: RhoShape::Const,
                },
                Term {
                    coef: 5e-4,
                    x: XShape::Sine {
                        mode: 2,
                        phase: 0.0,
                    },
                    rho: RhoShape::Poly {
                        coeffs: vec![-0.5, 1.0],
                    },
                },
            ],
            hbar: vec![RhoTerm {
                coef: 1.0,
                rho: RhoShape::Poly {
                    coeffs: vec![1.2, -0.2],
                },
            }],
            ubar: vec![],
        }
    }

    /// Background stratification only; the deviations vanish identically.
    pub fn preset_rest(_length: f64) -> Self {
        ContinuousProfile {
            h: vec![],
            u: vec![],
            hbar: vec![RhoTerm {
                coef: 1.0,
                rho: RhoShape::Poly {
                    coeffs: vec![1.2, -0.2],
                },
            }],
            ubar: vec![],
        }
    }

    pub fn eval_h(&self, x: f64, t: f64, length: f64) -> f64 {
        eval_terms(&self.h, x, t, length)
    }

    pub fn eval_u(&self, x: f64, t: f64, length: f64) -> f64 {
        eval_terms(&self.u, x, t, length)
    }

    pub fn eval_hbar(&self, t: f64) -> f64 {
        self.hbar.iter().map(|b| b.coef * b.rho.value(t)).sum()
    }

    pub fn eval_ubar(&self, t: f64) -> f64 {
        self.ubar.iter().map(|b| b.coef * b.rho.value(t)).sum()
    }

    /// Minimum of the total depth `h̄ + h` over the grid nodes and a fine
    /// vertical sampling; used to validate non-cavitation before a run.
    pub fn min_total_depth(&self, sgrid: &SpatialGrid, rho_samples: usize) -> f64 {
        let mut min = f64::INFINITY;
        for s in 0..=rho_samples {
            let t = s as f64 / rho_samples as f64;
            let base = self.eval_hbar(t);
            for &x in sgrid.nodes() {
                min = min.min(base + self.eval_h(x, t, sgrid.length()));
            }
        }
        min
    }
}

fn eval_terms(terms: &[Term], x: f64, t: f64, length: f64) -> f64 {
    terms
        .iter()
        .map(|term| term.coef * term.x.value(x, length) * term.rho.value(t))
        .sum()
}

fn offsets(dgrid: &DensityGrid) -> Vec<f64> {
    dgrid.rho().iter().map(|r| r - dgrid.rho_surf()).collect()
}

/// Pointwise projection: samples the separable sum at `(x_j, ρ_i)`.
pub fn sample_field(terms: &[Term], sgrid: &SpatialGrid, dgrid: &DensityGrid) -> LayerField {
    let ts = offsets(dgrid);
    Array2::from_shape_fn((dgrid.n(), sgrid.points()), |(i, j)| {
        eval_terms(terms, sgrid.nodes()[j], ts[i], sgrid.length())
    })
}

/// Pointwise projection of the analytic x-derivative.
pub fn sample_field_dx(terms: &[Term], sgrid: &SpatialGrid, dgrid: &DensityGrid) -> LayerField {
    let ts = offsets(dgrid);
    Array2::from_shape_fn((dgrid.n(), sgrid.points()), |(i, j)| {
        terms
            .iter()
            .map(|term| {
                term.coef * term.x.deriv(sgrid.nodes()[j], sgrid.length()) * term.rho.value(ts[i])
            })
            .sum()
    })
}

/// Cell-average projection: row `i` holds the mean of the profile over the
/// density cell `[ρ_{i-1/2}, ρ_{i+1/2}]`, evaluated from the closed-form
/// antiderivatives of the vertical shapes.
pub fn average_field(terms: &[Term], sgrid: &SpatialGrid, dgrid: &DensityGrid) -> LayerField {
    let n = dgrid.n();
    let nf = n as f64;
    // per-term cell means of the vertical factor
    let cell_means: Vec<Vec<f64>> = terms
        .iter()
        .map(|term| {
            (0..n)
                .map(|i| {
                    let lo = i as f64 / nf;
                    let hi = (i + 1) as f64 / nf;
                    nf * (term.rho.antiderivative(hi) - term.rho.antiderivative(lo))
                })
                .collect()
        })
        .collect();
    Array2::from_shape_fn((n, sgrid.points()), |(i, j)| {
        terms
            .iter()
            .zip(&cell_means)
            .map(|(term, means)| {
                term.coef * term.x.value(sgrid.nodes()[j], sgrid.length()) * means[i]
            })
            .sum()
    })
}

/// Samples an x-independent background at the layer midpoints.
pub fn sample_background(terms: &[RhoTerm], dgrid: &DensityGrid) -> Vec<f64> {
    offsets(dgrid)
        .iter()
        .map(|&t| terms.iter().map(|b| b.coef * b.rho.value(t)).sum())
        .collect()
}

/// Cell averages of an x-independent background.
pub fn average_background(terms: &[RhoTerm], dgrid: &DensityGrid) -> Vec<f64> {
    let nf = dgrid.n() as f64;
    (0..dgrid.n())
        .map(|i| {
            let lo = i as f64 / nf;
            let hi = (i + 1) as f64 / nf;
            terms
                .iter()
                .map(|b| b.coef * nf * (b.rho.antiderivative(hi) - b.rho.antiderivative(lo)))
                .sum()
        })
        .collect()
}

const MONTGOMERY_TOL: f64 = 1e-12;

/// `∫ min(ϱ, ρ) ψ(ϱ - ρ_surf) dϱ` over the full density interval, split at
/// the kink `ϱ = ρ` where the kernel loses smoothness.
fn min_kernel_integral(shape: &RhoShape, tau: f64, rho_surf: f64) -> Result<f64, Error> {
    let rho = rho_surf + tau;
    let lower = quadrature::integrate(
        |t| (rho_surf + t) * shape.value(t),
        0.0,
        tau,
        MONTGOMERY_TOL,
    )?;
    let upper = quadrature::integrate(|t| shape.value(t), tau, 1.0, MONTGOMERY_TOL)?;
    Ok(lower + rho * upper)
}

/// Horizontal derivative of the continuous coupling (Montgomery) operator
/// applied to the deviation: `(ℳ∂ₓh)(x, ρ) = ∫ min(ϱ, ρ) ∂ₓh(x, ϱ) dϱ`,
/// with `ρ` given in rescaled units.
pub fn montgomery_dx(
    h_terms: &[Term],
    x: f64,
    rho: f64,
    length: f64,
    dgrid: &DensityGrid,
) -> Result<f64, Error> {
    let tau = rho - dgrid.rho_surf();
    let mut total = 0.0;
    for term in h_terms {
        let w = min_kernel_integral(&term.rho, tau, dgrid.rho_surf())?;
        total += term.coef * term.x.deriv(x, length) * w;
    }
    Ok(total)
}

/// Consistency remainder of the layer truncation:
/// `R_N = Γ ∂ₓ P_N h - P_N((1/ρ) ℳ ∂ₓ h)`.
///
/// The horizontal derivative is evaluated in closed form on both sides (the
/// projection commutes with ∂ₓ for these profiles), so the result carries
/// only the vertical midpoint-rule error.
pub fn consistency_remainder(
    h_terms: &[Term],
    sgrid: &SpatialGrid,
    dgrid: &DensityGrid,
) -> Result<LayerField, Error> {
    let n = dgrid.n();
    let m = sgrid.points();
    let dxh = sample_field_dx(h_terms, sgrid, dgrid);
    let discrete = layers::coupling_apply_field(dgrid, &dxh);

    // per-term min-kernel weights at each layer midpoint
    let mut weights = vec![vec![0.0; n]; h_terms.len()];
    for (term, w) in h_terms.iter().zip(weights.iter_mut()) {
        for (i, &rho) in dgrid.rho().iter().enumerate() {
            w[i] = min_kernel_integral(&term.rho, rho - dgrid.rho_surf(), dgrid.rho_surf())?;
        }
    }

    let mut out = Array2::zeros((n, m));
    for (i, &rho_i) in dgrid.rho().iter().enumerate() {
        for j in 0..m {
            let x = sgrid.nodes()[j];
            let continuous: f64 = h_terms
                .iter()
                .zip(&weights)
                .map(|(term, w)| term.coef * term.x.deriv(x, sgrid.length()) * w[i])
                .sum();
            out[[i, j]] = discrete[[i, j]] - continuous / rho_i;
        }
    }
    Ok(out)
}

/// Profile-side norm `(Σ_{j<=k} sup_ρ ‖∂_ρ^j f(·,ρ)‖²_{H^{s-j}_x})^{1/2}`,
/// with the supremum approximated over `rho_samples + 1` equispaced offsets.
pub fn xsk_norm(terms: &[Term], sgrid: &SpatialGrid, s: u32, k: u32, rho_samples: usize) -> f64 {
    assert!(k <= 2 && k <= s);
    let mut total = 0.0;
    for j in 0..=k {
        let mut sup = 0.0f64;
        for sample in 0..=rho_samples {
            let t = sample as f64 / rho_samples as f64;
            let row: Vec<f64> = sgrid
                .nodes()
                .iter()
                .map(|&x| {
                    terms
                        .iter()
                        .map(|term| {
                            let psi = match j {
                                0 => term.rho.value(t),
                                1 => term.rho.d1(t),
                                _ => term.rho.d2(t),
                            };
                            term.coef * term.x.value(x, sgrid.length()) * psi
                        })
                        .sum()
                })
                .collect();
            sup = sup.max(sgrid.sobolev_norm_sq(&row, (s - j) as f64));
        }
        total += sup;
    }
    total.sqrt()
}
