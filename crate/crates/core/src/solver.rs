//! Time integration of the layered system
//!
//! ```text
//! ∂ₜH + (Ū+U)∂ₓH + (H̄+H)∂ₓU = κ∂ₓ²H
//! ∂ₜU + (Ū+U - κ∂ₓH/(H̄+H))∂ₓU + Γ∂ₓH = 0
//! ```
//!
//! The diffusion on `H` is integrated exactly through a Fourier integrating
//! factor applied around explicit third-order Runge–Kutta transport stages,
//! so the time step is restricted by advection only. `U` carries no
//! diffusion.
//!
//! A cavitation guard (`min(H̄+H) >= h_star/2`) and a finiteness check run
//! after every accepted step; violations abort with the failing time and
//! location rather than producing silently bad states.

use serde::Serialize;

use crate::error::Error;
use crate::layers::{self, DensityGrid};
use crate::norms::{self, DissipationIntegrals};
use crate::spectral::SpatialGrid;
use crate::LayerField;

#[derive(Debug, Clone)]
pub struct SolverParams {
    /// Eddy diffusivity; strictly positive.
    pub kappa: f64,
    /// Cavitation floor for initial data; the running guard is `h_star/2`.
    pub h_star: f64,
    /// Courant number in (0, 1).
    pub cfl: f64,
    pub t_end: f64,
    /// Dealias quadratic transport products (2/3 rule). On by default.
    pub dealias: bool,
    /// Sobolev index used by the diagnostic norms.
    pub s: u32,
    /// Spacing of emitted diagnostics rows in time units.
    pub output_interval: f64,
    /// Overrides the adaptive CFL step when set (studies use a shared step).
    pub fixed_dt: Option<f64>,
    /// Reference depths per layer (x-independent).
    pub hbar: Vec<f64>,
    /// Background velocities per layer (x-independent).
    pub ubar: Vec<f64>,
    pub sgrid: SpatialGrid,
    pub dgrid: DensityGrid,
}

impl SolverParams {
    pub fn validate(&self) -> Result<(), Error> {
        let n = self.dgrid.n();
        if !crate::positive_finite(self.kappa) {
            return Err(Error::InvalidParameter(format!(
                "diffusivity must be positive, got {}",
                self.kappa
            )));
        }
        if !crate::positive_finite(self.h_star) {
            return Err(Error::InvalidParameter(
                "cavitation floor must be positive".into(),
            ));
        }
        if !(crate::positive_finite(self.cfl) && self.cfl < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Courant number must lie in (0, 1), got {}",
                self.cfl
            )));
        }
        if !self.t_end.is_finite() || self.t_end < 0.0 {
            return Err(Error::InvalidParameter("bad final time".into()));
        }
        if self.s < 1 {
            return Err(Error::InvalidParameter(
                "diagnostic Sobolev index must be at least 1".into(),
            ));
        }
        if !crate::positive_finite(self.output_interval) {
            return Err(Error::InvalidParameter(
                "output interval must be positive".into(),
            ));
        }
        if let Some(dt) = self.fixed_dt {
            if !crate::positive_finite(dt) {
                return Err(Error::InvalidParameter(
                    "fixed step must be positive".into(),
                ));
            }
        }
        if self.hbar.len() != n || self.ubar.len() != n {
            return Err(Error::InvalidParameter(format!(
                "background vectors must have one entry per layer ({n})"
            )));
        }
        for (i, &v) in self.hbar.iter().enumerate() {
            if v.is_nan() || v < self.h_star {
                return Err(Error::InvalidParameter(format!(
                    "reference depth of layer {i} ({v}) is below the floor {}",
                    self.h_star
                )));
            }
        }
        if self.ubar.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "background velocity must be finite".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolverState {
    pub h: LayerField,
    pub u: LayerField,
    pub t: f64,
    pub steps: usize,
    /// Running integrals feeding the composite solution norm.
    pub diss: DissipationIntegrals,
    /// Midpoint estimate of the energy dissipated by the last step.
    pub last_energy_dissipation: f64,
    /// Size of the last accepted step.
    pub last_dt: f64,
}

impl SolverState {
    pub fn new(h: LayerField, u: LayerField) -> Self {
        assert_eq!(h.dim(), u.dim(), "depth and velocity fields must agree");
        Self {
            h,
            u,
            t: 0.0,
            steps: 0,
            diss: DissipationIntegrals::default(),
            last_energy_dissipation: 0.0,
            last_dt: 0.0,
        }
    }

    /// Composite solution norm at the current time, including the
    /// accumulated dissipation contributions.
    pub fn solution_norm(&self, params: &SolverParams) -> f64 {
        norms::solution_norm(
            &params.sgrid,
            &params.dgrid,
            &self.h,
            &self.u,
            &self.diss,
            params.kappa,
            params.s,
        )
    }
}

/// Per-sample diagnostics emitted by [`simulate`].
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub t: f64,
    pub mass_total: f64,
    pub mass_min: f64,
    pub mass_max: f64,
    /// Max over layers of the drift from the initial per-layer mass.
    pub mass_drift_max: f64,
    pub energy: f64,
    /// Midpoint estimate of `-dE/dt` for the last accepted step.
    pub energy_dissipation_rate: f64,
    pub min_depth: f64,
    pub max_depth: f64,
    pub solution_norm: f64,
}

pub struct SimOutput {
    pub state: SolverState,
    pub series: Vec<Diagnostics>,
}

/// Per-layer masses `Δx Σ_j H_{i,j}`.
pub fn mass_per_layer(sgrid: &SpatialGrid, h: &LayerField) -> Vec<f64> {
    h.outer_iter().map(|row| sgrid.dx() * row.sum()).collect()
}

fn depth_field(params: &SolverParams, h: &LayerField) -> LayerField {
    let mut out = h.clone();
    for (i, mut row) in out.outer_iter_mut().enumerate() {
        row += params.hbar[i];
    }
    out
}

fn velocity_field(params: &SolverParams, u: &LayerField) -> LayerField {
    let mut out = u.clone();
    for (i, mut row) in out.outer_iter_mut().enumerate() {
        row += params.ubar[i];
    }
    out
}

fn min_depth_location(params: &SolverParams, h: &LayerField) -> (f64, usize, usize) {
    let mut min = f64::INFINITY;
    let mut loc = (0, 0);
    for (i, row) in h.outer_iter().enumerate() {
        let base = params.hbar[i];
        for (j, &v) in row.iter().enumerate() {
            let d = base + v;
            if d < min {
                min = d;
                loc = (i, j);
            }
        }
    }
    (min, loc.0, loc.1)
}

/// Transport right-hand side (everything except the exactly integrated
/// diffusion): returns `(dH, dU)`.
pub fn rhs(
    params: &SolverParams,
    h: &LayerField,
    u: &LayerField,
) -> Result<(LayerField, LayerField), Error> {
    let sg = &params.sgrid;
    let depth = depth_field(params, h);
    let (dmin, layer, node) = min_depth_location(params, h);
    if dmin <= 0.0 {
        return Err(Error::Cavitation {
            t: f64::NAN,
            layer,
            node,
            depth: dmin,
            floor: 0.0,
        });
    }
    let vel = velocity_field(params, u);
    let dxh = sg.ddx_field(h);
    let dxu = sg.ddx_field(u);

    let da = |f: LayerField| -> LayerField {
        if params.dealias {
            sg.dealias_field(&f)
        } else {
            f
        }
    };

    let dh = -(da(&vel * &dxh) + da(&depth * &dxu));
    let effective = &vel - &(&dxh * params.kappa / &depth);
    let du = -(da(&effective * &dxu) + layers::coupling_apply_field(&params.dgrid, &dxh));
    Ok((dh, du))
}

/// One third-order integrating-factor Runge–Kutta step of size `dt`: the
/// transport terms are advanced explicitly in the heat-propagated variable,
/// diffusion is applied exactly per stage (`U` carries none), and the
/// dissipation accumulators are updated by the stage-midpoint rule.
///
/// The tableau is the classical one with stage times (0, 1/2, 1); its Lawson
/// transform uses only forward heat propagators, so strong damping never
/// amplifies rounding noise (a Shu–Osher combination would need a backward
/// propagation of the second stage).
pub fn step(state: &mut SolverState, params: &SolverParams, dt: f64) -> Result<(), Error> {
    assert!(dt > 0.0, "step size must be positive");
    let sg = &params.sgrid;
    let kappa = params.kappa;

    let (k1h, k1u) = rhs(params, &state.h, &state.u)?;
    let y2h = sg.heat_propagate_field(&(&state.h + &(&k1h * (0.5 * dt))), kappa, 0.5 * dt);
    let y2u = &state.u + &(&k1u * (0.5 * dt));

    accumulate_dissipation(state, params, &y2h, dt);

    let (k2h, k2u) = rhs(params, &y2h, &y2u)?;
    let k2h_half = sg.heat_propagate_field(&k2h, kappa, 0.5 * dt);
    let y3h =
        sg.heat_propagate_field(&(&state.h - &(&k1h * dt)), kappa, dt) + &k2h_half * (2.0 * dt);
    let y3u = &state.u + &(&(&k2u * 2.0 - &k1u) * dt);

    let (k3h, k3u) = rhs(params, &y3h, &y3u)?;
    let h_new = sg.heat_propagate_field(&(&state.h + &(&k1h * (dt / 6.0))), kappa, dt)
        + &k2h_half * (2.0 * dt / 3.0)
        + &k3h * (dt / 6.0);
    let u_new = &state.u + &(&(k1u + &(&k2u * 4.0) + k3u) * (dt / 6.0));

    state.h = h_new;
    state.u = u_new;
    state.t += dt;
    state.steps += 1;
    state.last_dt = dt;

    if state.h.iter().any(|v| !v.is_finite()) {
        return Err(Error::BlowUp {
            t: state.t,
            field: "depth deviation",
        });
    }
    if state.u.iter().any(|v| !v.is_finite()) {
        return Err(Error::BlowUp {
            t: state.t,
            field: "velocity deviation",
        });
    }
    let floor = 0.5 * params.h_star;
    let (dmin, layer, node) = min_depth_location(params, &state.h);
    if dmin < floor {
        return Err(Error::Cavitation {
            t: state.t,
            layer,
            node,
            depth: dmin,
            floor,
        });
    }
    Ok(())
}

fn accumulate_dissipation(
    state: &mut SolverState,
    params: &SolverParams,
    mid_h: &LayerField,
    dt: f64,
) {
    let sg = &params.sgrid;
    let dg = &params.dgrid;
    let n = dg.n();
    let s = params.s;

    let dxh = sg.ddx_field(mid_h);
    let h_low = norms::hsk_norm(sg, n, &dxh, s - 1, 1.min(s - 1));
    let h_full = norms::hsk_norm(sg, n, &dxh, s, 2.min(s));
    let sh_dx = layers::integrate_field(&dxh);
    let integrated = norms::hsk_norm(sg, n, &sh_dx, s, 2.min(s));
    let tsh_dx = layers::trace_field(&sh_dx);
    let surface = norms::hsk_norm(sg, n, &tsh_dx, s, 0);

    state.diss.h_low += dt * h_low * h_low;
    state.diss.integrated += dt * integrated * integrated;
    state.diss.surface += dt * surface * surface;
    state.diss.h_full += dt * h_full * h_full;

    // energy identity estimate: κ(‖∂ₓ CS H‖² + ρ₁ ‖∂ₓ TS H‖²) dt at the
    // half-step state
    let cs = layers::interior_field(&sh_dx);
    let ts = layers::trace_field(&sh_dx);
    let sq = |f: &LayerField| -> f64 {
        f.outer_iter()
            .map(|row| sg.l2_norm_sq(row.as_slice().unwrap()))
            .sum::<f64>()
            / n as f64
    };
    state.last_energy_dissipation = dt * params.kappa * (sq(&cs) + dg.rho_first() * sq(&ts));
}

/// Advective CFL bound `cfl · Δx / (max|Ū+U| + √(g · max(H̄+H)))` with
/// `g = 1`; the exactly integrated diffusion imposes no restriction.
pub fn cfl_dt(state: &SolverState, params: &SolverParams) -> f64 {
    let vel = velocity_field(params, &state.u);
    let max_vel = vel.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let depth = depth_field(params, &state.h);
    let max_depth = depth.iter().fold(0.0f64, |m, v| m.max(*v));
    let speed = max_vel + max_depth.max(0.0).sqrt();
    params.cfl * params.sgrid.dx() / speed
}

/// Quadratic energy of a deviation pair:
/// `½‖CSH‖² + (ρ₁/2)‖TSH‖² + ½ ∫ <U, ρ(H̄+H)U>`.
pub fn energy(params: &SolverParams, h: &LayerField, u: &LayerField) -> f64 {
    let sg = &params.sgrid;
    let dg = &params.dgrid;
    let n = dg.n();
    let sh = layers::integrate_field(h);
    let cs = layers::interior_field(&sh);
    let ts = layers::trace_field(&sh);
    let sq = |f: &LayerField| -> f64 {
        f.outer_iter()
            .map(|row| sg.l2_norm_sq(row.as_slice().unwrap()))
            .sum::<f64>()
            / n as f64
    };
    let mut kinetic = 0.0;
    for (i, &rho_i) in dg.rho().iter().enumerate() {
        let base = params.hbar[i];
        for (j, &uv) in u.row(i).iter().enumerate() {
            kinetic += rho_i * (base + h[[i, j]]) * uv * uv;
        }
    }
    kinetic *= sg.dx() / n as f64;
    0.5 * sq(&cs) + 0.5 * dg.rho_first() * sq(&ts) + 0.5 * kinetic
}

fn diagnostics(state: &SolverState, params: &SolverParams, initial_mass: &[f64]) -> Diagnostics {
    let masses = mass_per_layer(&params.sgrid, &state.h);
    let mass_total: f64 = masses.iter().sum();
    let mass_min = masses.iter().cloned().fold(f64::INFINITY, f64::min);
    let mass_max = masses.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mass_drift_max = masses
        .iter()
        .zip(initial_mass)
        .map(|(m, m0)| (m - m0).abs())
        .fold(0.0, f64::max);
    let depth = depth_field(params, &state.h);
    let min_depth = depth.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_depth = depth.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Diagnostics {
        t: state.t,
        mass_total,
        mass_min,
        mass_max,
        mass_drift_max,
        energy: energy(params, &state.h, &state.u),
        energy_dissipation_rate: if state.last_dt > 0.0 {
            state.last_energy_dissipation / state.last_dt
        } else {
            0.0
        },
        min_depth,
        max_depth,
        solution_norm: state.solution_norm(params),
    }
}

/// Evolves the initial deviation pair to `t_end`, emitting diagnostics every
/// `output_interval` (plus the initial and final instants).
pub fn simulate(params: &SolverParams, h0: LayerField, u0: LayerField) -> Result<SimOutput, Error> {
    params.validate()?;
    let n = params.dgrid.n();
    let m = params.sgrid.points();
    if h0.dim() != (n, m) || u0.dim() != (n, m) {
        return Err(Error::InvalidParameter(format!(
            "initial fields must be {n}x{m}"
        )));
    }
    if h0.iter().chain(u0.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "initial fields must be finite".into(),
        ));
    }
    let mut state = SolverState::new(h0, u0);
    let (dmin, layer, node) = min_depth_location(params, &state.h);
    if dmin < params.h_star {
        return Err(Error::Cavitation {
            t: 0.0,
            layer,
            node,
            depth: dmin,
            floor: params.h_star,
        });
    }

    let initial_mass = mass_per_layer(&params.sgrid, &state.h);
    let mut series = vec![diagnostics(&state, params, &initial_mass)];
    let mut next_mark = params.output_interval.min(params.t_end);

    while state.t < params.t_end {
        let dt_base = params.fixed_dt.unwrap_or_else(|| cfl_dt(&state, params));
        let target = next_mark.min(params.t_end);
        let dt = dt_base.min(target - state.t).max(0.0);
        if dt <= 0.0 {
            break;
        }
        let clamped = dt < dt_base;
        step(&mut state, params, dt)?;
        if clamped || (target - state.t).abs() <= 1e-12 * target.max(1.0) {
            state.t = target;
        }
        if state.t >= next_mark - 1e-12 * next_mark.max(1.0) {
            series.push(diagnostics(&state, params, &initial_mass));
            next_mark = (next_mark + params.output_interval).min(params.t_end.max(next_mark));
            if next_mark <= state.t {
                next_mark = state.t + params.output_interval;
            }
        }
    }
    if series.last().map(|d| d.t) != Some(state.t) {
        series.push(diagnostics(&state, params, &initial_mass));
    }
    Ok(SimOutput { state, series })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;

    fn base_params(n: usize, m: usize) -> SolverParams {
        let sgrid = SpatialGrid::new(4.0 * std::f64::consts::PI, m).unwrap();
        let dgrid = DensityGrid::new(n, 1.0, 2.0).unwrap();
        SolverParams {
            kappa: 0.05,
            h_star: 0.5,
            cfl: 0.4,
            t_end: 1.0,
            dealias: true,
            s: 3,
            output_interval: 0.25,
            fixed_dt: None,
            hbar: vec![1.0; n],
            ubar: vec![0.0; n],
            sgrid,
            dgrid,
        }
    }

    #[test]
    fn rest_state_is_steady() {
        let p = base_params(3, 32);
        let zero = Array2::zeros((3, 32));
        let (dh, du) = rhs(&p, &zero, &zero).unwrap();
        assert!(dh.iter().all(|v| v.abs() <= 1e-15));
        assert!(du.iter().all(|v| v.abs() <= 1e-15));

        let mut state = SolverState::new(zero.clone(), zero);
        step(&mut state, &p, 0.01).unwrap();
        assert!(state.h.iter().all(|v| v.abs() <= 1e-15));
        assert!(state.u.iter().all(|v| v.abs() <= 1e-15));
    }

    #[test]
    fn x_homogeneous_state_is_fixed_point() {
        let p = base_params(3, 32);
        let h = Array2::from_shape_fn((3, 32), |(i, _)| 0.1 * (i as f64 - 1.0));
        let u = Array2::from_shape_fn((3, 32), |(i, _)| 0.05 * i as f64);
        let mut state = SolverState::new(h.clone(), u.clone());
        step(&mut state, &p, 0.01).unwrap();
        for (a, b) in state.h.iter().zip(h.iter()) {
            assert!((a - b).abs() <= 1e-14);
        }
        for (a, b) in state.u.iter().zip(u.iter()) {
            assert!((a - b).abs() <= 1e-14);
        }
    }

    #[test]
    fn cfl_formula() {
        let mut p = base_params(2, 128);
        // Δx = 0.1 wants L/M = 0.1 → use a dedicated grid
        p.sgrid = SpatialGrid::new(12.8, 128).unwrap();
        let state = SolverState::new(Array2::zeros((2, 128)), Array2::zeros((2, 128)));
        let dt = cfl_dt(&state, &p);
        assert_abs_diff_eq!(dt, 0.4 * 0.1 / 1.0, epsilon = 1e-12);

        // deeper water shortens the step
        let mut deep = p.clone();
        deep.hbar = vec![4.0; 2];
        assert!(cfl_dt(&state, &deep) < dt);

        // doubling the resolution halves the step
        let mut fine = p.clone();
        fine.sgrid = SpatialGrid::new(12.8, 256).unwrap();
        let state_fine = SolverState::new(Array2::zeros((2, 256)), Array2::zeros((2, 256)));
        assert_abs_diff_eq!(cfl_dt(&state_fine, &fine), 0.5 * dt, epsilon = 1e-12);
    }

    #[test]
    fn energy_zero_and_coercive() {
        let p = base_params(2, 32);
        let zero = Array2::zeros((2, 32));
        assert_eq!(energy(&p, &zero, &zero), 0.0);

        let u = Array2::from_shape_fn((2, 32), |(i, j)| 1e-3 * ((i + j) as f64).sin());
        let e = energy(&p, &zero, &u);
        let n = 2.0;
        let u_l2_sq = u
            .outer_iter()
            .map(|row| p.sgrid.l2_norm_sq(row.as_slice().unwrap()))
            .sum::<f64>()
            / n;
        let bound = 0.5 * p.dgrid.rho_first() * p.h_star * u_l2_sq;
        assert!(e >= bound - 1e-18);
    }

    #[test]
    fn mass_is_conserved_to_roundoff() {
        let p = base_params(2, 64);
        let sg = p.sgrid.clone();
        let h0 = Array2::from_shape_fn((2, 64), |(i, j)| {
            1e-2 * (1.0 + i as f64) * (2.0 * std::f64::consts::PI * j as f64 / 64.0).sin()
        });
        let u0 = Array2::zeros((2, 64));
        let m0 = mass_per_layer(&sg, &h0);
        let mut state = SolverState::new(h0, u0);
        for _ in 0..50 {
            let dt = cfl_dt(&state, &p);
            step(&mut state, &p, dt).unwrap();
        }
        let m1 = mass_per_layer(&sg, &state.h);
        for (a, b) in m0.iter().zip(&m1) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn step_halving_shows_third_order() {
        let p = base_params(2, 32);
        let h0 = Array2::from_shape_fn((2, 32), |(i, j)| {
            0.05 * (1.0 + 0.3 * i as f64) * (2.0 * std::f64::consts::PI * j as f64 / 32.0).sin()
        });
        let u0 = Array2::from_shape_fn((2, 32), |(_, j)| {
            0.05 * (2.0 * std::f64::consts::PI * j as f64 / 32.0).cos()
        });

        let advance = |dt: f64, steps: usize| -> (LayerField, LayerField) {
            let mut s = SolverState::new(h0.clone(), u0.clone());
            for _ in 0..steps {
                step(&mut s, &p, dt).unwrap();
            }
            (s.h, s.u)
        };

        let t = 0.2;
        let err = |a: &(LayerField, LayerField), b: &(LayerField, LayerField)| -> f64 {
            a.0.iter()
                .zip(b.0.iter())
                .chain(a.1.iter().zip(b.1.iter()))
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
        };
        let coarse = advance(t / 8.0, 8);
        let mid = advance(t / 16.0, 16);
        let fine = advance(t / 32.0, 32);
        let e1 = err(&coarse, &mid);
        let e2 = err(&mid, &fine);
        let order = (e1 / e2).log2();
        assert!(order >= 2.8, "observed order {order}");
    }

    #[test]
    fn guard_trips_on_cavitation() {
        let mut p = base_params(1, 32);
        p.h_star = 0.9;
        p.hbar = vec![0.95];
        // strong divergent velocity drains the depth quickly
        let h0 = Array2::zeros((1, 32));
        let u0 = Array2::from_shape_fn((1, 32), |(_, j)| {
            2.0 * (2.0 * std::f64::consts::PI * j as f64 / 32.0).sin()
        });
        let mut state = SolverState::new(h0, u0);
        let mut tripped = false;
        for _ in 0..2000 {
            let dt = cfl_dt(&state, &p);
            match step(&mut state, &p, dt) {
                Ok(()) => {}
                Err(Error::Cavitation { depth, floor, .. }) => {
                    assert!(depth < floor);
                    tripped = true;
                    break;
                }
                Err(e) => panic!("unexpected error {e}"),
            }
        }
        assert!(tripped, "expected the guard to trip");
    }

    #[test]
    fn blow_up_is_reported() {
        let p = base_params(1, 32);
        let h0 = Array2::zeros((1, 32));
        let mut u0 = Array2::zeros((1, 32));
        u0[[0, 0]] = f64::INFINITY;
        let mut state = SolverState::new(h0, u0);
        match step(&mut state, &p, 1e-3) {
            Err(Error::BlowUp { .. }) => {}
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn simulate_rest_constant_diagnostics() {
        let mut p = base_params(2, 32);
        p.t_end = 0.5;
        p.output_interval = 0.1;
        let out = simulate(&p, Array2::zeros((2, 32)), Array2::zeros((2, 32))).unwrap();
        assert!(out.series.len() >= 5);
        for d in &out.series {
            assert!(d.mass_total.abs() <= 1e-13);
            assert!(d.energy.abs() <= 1e-18);
            assert!(d.mass_drift_max <= 1e-13);
            assert!(d.solution_norm.abs() <= 1e-13);
            assert_abs_diff_eq!(d.min_depth, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn dissipation_integrals_are_nondecreasing() {
        let p = base_params(3, 32);
        let h0 = Array2::from_shape_fn((3, 32), |(i, j)| {
            1e-2 * (1.0 + i as f64) * (2.0 * std::f64::consts::PI * j as f64 / 32.0).cos()
        });
        let mut state = SolverState::new(h0, Array2::zeros((3, 32)));
        let mut prev = [0.0f64; 4];
        for _ in 0..20 {
            let dt = cfl_dt(&state, &p);
            step(&mut state, &p, dt).unwrap();
            let cur = [
                state.diss.h_low,
                state.diss.integrated,
                state.diss.surface,
                state.diss.h_full,
            ];
            for (c, pr) in cur.iter().zip(&prev) {
                assert!(c >= pr);
            }
            prev = cur;
        }
        assert!(prev.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn small_amplitude_two_layer_run_stays_inside_guard() {
        let sgrid = SpatialGrid::new(4.0 * std::f64::consts::PI, 64).unwrap();
        let dgrid = DensityGrid::new(2, 1.0, 2.0).unwrap();
        let preset = crate::profile::ContinuousProfile::preset_small(sgrid.length());
        let params = SolverParams {
            kappa: 0.05,
            h_star: 0.5,
            cfl: 0.4,
            t_end: 1.0,
            dealias: true,
            s: 3,
            output_interval: 0.5,
            fixed_dt: None,
            hbar: crate::profile::sample_background(&preset.hbar, &dgrid),
            ubar: vec![0.0; 2],
            sgrid: sgrid.clone(),
            dgrid: dgrid.clone(),
        };
        let h0 = crate::profile::sample_field(&preset.h, &sgrid, &dgrid);
        let u0 = crate::profile::sample_field(&preset.u, &sgrid, &dgrid);
        let out = simulate(&params, h0, u0).unwrap();
        assert!(out.state.t >= 1.0 - 1e-12);
    }

    #[test]
    fn simulate_rejects_initial_cavitation() {
        let p = base_params(1, 32);
        let h0 = Array2::from_elem((1, 32), -0.6); // depth 0.4 < h_star
        match simulate(&p, h0, Array2::zeros((1, 32))) {
            Err(Error::Cavitation { t, .. }) => assert_eq!(t, 0.0),
            other => panic!("expected cavitation, got {:?}", other.map(|_| ())),
        }
    }
}
