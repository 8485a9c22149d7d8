//! Verification studies: consistency of the layer truncation, solution
//! self-convergence against a nested fine-layer reference, single-layer
//! dispersion checks, and log-log rate fitting.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::layers::DensityGrid;
use crate::norms;
use crate::profile::{self, ContinuousProfile};
use crate::solver::{self, SolverParams, SolverState};
use crate::spectral::SpatialGrid;
use crate::LayerField;

/// Least-squares power-law fit of errors against layer counts.
#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    /// Slope of `ln err` against `ln N` (a rate of `1/N²` gives -2).
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in log space.
    pub residual: f64,
    pub n_list: Vec<usize>,
    pub errors: Vec<f64>,
}

/// Ordinary least squares on `(ln N, ln err)`; requires at least three
/// strictly positive errors.
pub fn fit_rate(n_list: &[usize], errors: &[f64]) -> Result<RateFit, Error> {
    if n_list.len() != errors.len() {
        return Err(Error::DegenerateFit(
            "layer counts and errors must pair up".into(),
        ));
    }
    if n_list.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least 3 points, got {}",
            n_list.len()
        )));
    }
    if let Some(bad) = errors.iter().find(|e| !crate::positive_finite(**e)) {
        return Err(Error::DegenerateFit(format!(
            "errors must be positive and finite, got {bad:e}"
        )));
    }
    let xs: Vec<f64> = n_list.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit("layer counts must differ".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(RateFit {
        slope,
        intercept,
        residual,
        n_list: n_list.to_vec(),
        errors: errors.to_vec(),
    })
}

/// Per-derivative-level errors and slope of the consistency remainder.
#[derive(Debug, Clone, Serialize)]
pub struct LevelRates {
    pub name: String,
    pub errors: Vec<f64>,
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyReport {
    pub s: u32,
    pub n_list: Vec<usize>,
    /// Full `H^{s,2}` norms of the remainder per layer count.
    pub errors: Vec<f64>,
    pub fit: Option<RateFit>,
    pub degenerate: Option<String>,
    pub levels: Vec<LevelRates>,
}

/// Measures `‖R_N‖_{H^{s,2}}` of the consistency remainder over `n_list` and
/// fits the decay rate; also reports the three derivative levels separately.
pub fn consistency_study(
    h_terms: &[profile::Term],
    sgrid: &SpatialGrid,
    rho_surf: f64,
    rho_bott: f64,
    n_list: &[usize],
    s: u32,
) -> Result<ConsistencyReport, Error> {
    if n_list.len() < 3 {
        return Err(Error::InvalidParameter(
            "consistency study needs at least 3 layer counts".into(),
        ));
    }
    let mut errors = Vec::with_capacity(n_list.len());
    let mut level_errs = vec![Vec::new(), Vec::new(), Vec::new()];
    for &n in n_list {
        let dgrid = DensityGrid::new(n, rho_surf, rho_bott)?;
        let remainder = profile::consistency_remainder(h_terms, sgrid, &dgrid)?;
        errors.push(norms::hsk_norm(sgrid, n, &remainder, s, 2.min(s)));
        level_errs[0].push(norms::l2_sobolev_norm(sgrid, &remainder, s as f64, n));
        if n >= 2 {
            let d1 = crate::layers::derivative_field(n, &remainder);
            level_errs[1].push(norms::l2_sobolev_norm(sgrid, &d1, (s - 1) as f64, n));
            if n >= 3 {
                let d2 = crate::layers::derivative_field(n, &d1);
                level_errs[2].push(norms::l2_sobolev_norm(sgrid, &d2, (s - 2) as f64, n));
            }
        }
    }

    let degenerate = errors
        .iter()
        .all(|e| *e <= 1e-14)
        .then(|| "remainder vanishes for every layer count; no rate to fit".to_string());
    let fit = if degenerate.is_none() {
        Some(fit_rate(n_list, &errors)?)
    } else {
        None
    };
    let names = ["level_s", "level_s1_drho", "level_s2_drho2"];
    let levels = names
        .iter()
        .zip(level_errs)
        .map(|(name, errs)| {
            let slope = (errs.len() == n_list.len() && errs.iter().all(|e| *e > 0.0))
                .then(|| fit_rate(n_list, &errs).ok().map(|f| f.slope))
                .flatten();
            LevelRates {
                name: name.to_string(),
                errors: errs,
                slope,
            }
        })
        .collect();
    Ok(ConsistencyReport {
        s,
        n_list: n_list.to_vec(),
        errors,
        fit,
        degenerate,
        levels,
    })
}

/// How the continuous profile is mapped to layer data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    /// Midpoint sampling (multiplicative).
    Sample,
    /// Density-cell averages.
    CellAverage,
}

/// Difference metric between a run and the restricted reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DifferenceMetric {
    /// Instantaneous composite norm at the final time (default).
    Instantaneous,
    /// Adds the time-integrated dissipation terms, accumulated by the
    /// trapezoid rule over shared snapshots.
    Composite,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeConfig {
    pub n_list: Vec<usize>,
    pub n_ref: usize,
    /// Odd refinement ratio; layer midpoints of every run nest into the
    /// reference exactly.
    pub ratio: usize,
    pub s: u32,
    pub kappa: f64,
    pub h_star: f64,
    pub cfl: f64,
    pub t_end: f64,
    pub dealias: bool,
    pub metric: DifferenceMetric,
    pub projection: Projection,
    pub threads: usize,
}

impl ConvergeConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.n_list.len() < 3 {
            return Err(Error::InvalidParameter(
                "rate fit requires at least 3 layer counts".into(),
            ));
        }
        if self.ratio.is_multiple_of(2) || self.ratio < 3 {
            return Err(Error::InvalidParameter(
                "refinement ratio must be odd and at least 3".into(),
            ));
        }
        let max = *self.n_list.iter().max().unwrap();
        if self.n_ref <= max {
            return Err(Error::InvalidParameter(
                "reference layer count must exceed every run".into(),
            ));
        }
        let mut reach = max;
        while reach < self.n_ref {
            reach *= self.ratio;
        }
        if reach != self.n_ref {
            return Err(Error::InvalidParameter(format!(
                "reference layer count {} must be ratio^m x {max}",
                self.n_ref
            )));
        }
        for &n in &self.n_list {
            if n == 0 || !self.n_ref.is_multiple_of(n) || (self.n_ref / n).is_multiple_of(2) {
                return Err(Error::InvalidParameter(format!(
                    "layer count {n} does not nest oddly into the reference {}",
                    self.n_ref
                )));
            }
        }
        if !crate::positive_finite(self.kappa) {
            return Err(Error::InvalidParameter(
                "diffusivity must be positive".into(),
            ));
        }
        if self.threads == 0 {
            return Err(Error::InvalidParameter(
                "thread count must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub n_list: Vec<usize>,
    pub n_ref: usize,
    pub errors: Vec<f64>,
    pub fit: Option<RateFit>,
    pub degenerate: Option<String>,
    pub metric: DifferenceMetric,
    /// Shared time step used by every run.
    pub dt: f64,
    pub steps: usize,
}

/// Extracts the rows of a fine field that sit on the coarse midpoints; the
/// fine-to-coarse ratio must be odd.
pub fn restrict_rows(fine: &LayerField, coarse_n: usize) -> LayerField {
    let (fine_n, m) = fine.dim();
    assert!(fine_n.is_multiple_of(coarse_n), "layer counts must nest");
    let q = fine_n / coarse_n;
    assert!(q % 2 == 1, "restriction requires an odd ratio");
    let mut out = Array2::zeros((coarse_n, m));
    for i in 0..coarse_n {
        out.row_mut(i).assign(&fine.row(q * i + (q - 1) / 2));
    }
    out
}

struct RunArtifacts {
    h: LayerField,
    u: LayerField,
    snapshots: Vec<(f64, LayerField, LayerField)>,
}

fn run_fixed_dt(
    params: &SolverParams,
    h0: LayerField,
    u0: LayerField,
    dt: f64,
    n_steps: usize,
    snap_every: usize,
) -> Result<RunArtifacts, Error> {
    params.validate()?;
    let mut state = SolverState::new(h0, u0);
    let mut snapshots = vec![(0.0, state.h.clone(), state.u.clone())];
    for k in 0..n_steps {
        let remaining = params.t_end - state.t;
        let step_dt = dt.min(remaining);
        if step_dt <= 0.0 {
            break;
        }
        solver::step(&mut state, params, step_dt)?;
        if (k + 1).is_multiple_of(snap_every) || k + 1 == n_steps {
            snapshots.push((state.t, state.h.clone(), state.u.clone()));
        }
    }
    Ok(RunArtifacts {
        h: state.h.clone(),
        u: state.u.clone(),
        snapshots,
    })
}

fn build_params(
    cfg: &ConvergeConfig,
    profile: &ContinuousProfile,
    sgrid: &SpatialGrid,
    dgrid: &DensityGrid,
) -> (SolverParams, LayerField, LayerField) {
    let (hbar, ubar, h0, u0) = match cfg.projection {
        Projection::Sample => (
            profile::sample_background(&profile.hbar, dgrid),
            profile::sample_background(&profile.ubar, dgrid),
            profile::sample_field(&profile.h, sgrid, dgrid),
            profile::sample_field(&profile.u, sgrid, dgrid),
        ),
        Projection::CellAverage => (
            profile::average_background(&profile.hbar, dgrid),
            profile::average_background(&profile.ubar, dgrid),
            profile::average_field(&profile.h, sgrid, dgrid),
            profile::average_field(&profile.u, sgrid, dgrid),
        ),
    };
    let params = SolverParams {
        kappa: cfg.kappa,
        h_star: cfg.h_star,
        cfl: cfg.cfl,
        t_end: cfg.t_end,
        dealias: cfg.dealias,
        s: cfg.s,
        output_interval: cfg.t_end.max(f64::MIN_POSITIVE),
        fixed_dt: None,
        hbar,
        ubar,
        sgrid: sgrid.clone(),
        dgrid: dgrid.clone(),
    };
    (params, h0, u0)
}

/// Runs the solver at every layer count in `n_list` and at the nested
/// reference count from the same projected initial data, restricts the
/// reference to each coarse density grid, and fits how the difference norm
/// decays with `N`. The spatial grid and the time step are shared by all
/// runs so that the layer error dominates the differences.
pub fn convergence_study(
    cfg: &ConvergeConfig,
    profile: &ContinuousProfile,
    sgrid: &SpatialGrid,
    rho_surf: f64,
    rho_bott: f64,
) -> Result<ConvergenceReport, Error> {
    cfg.validate()?;
    let mut counts = cfg.n_list.clone();
    counts.push(cfg.n_ref);
    let mut jobs = Vec::new();
    for &n in &counts {
        let dgrid = DensityGrid::new(n, rho_surf, rho_bott)?;
        let (params, h0, u0) = build_params(cfg, profile, sgrid, &dgrid);
        jobs.push((params, h0, u0));
    }

    // shared step from the reference run's initial CFL bound
    let (ref_params, ref_h0, ref_u0) = jobs.last().unwrap();
    let probe = SolverState::new(ref_h0.clone(), ref_u0.clone());
    let dt = solver::cfl_dt(&probe, ref_params);
    let n_steps = (cfg.t_end / dt).ceil() as usize;
    let snap_every = match cfg.metric {
        DifferenceMetric::Instantaneous => n_steps.max(1),
        DifferenceMetric::Composite => (n_steps / 32).max(1),
    };

    let mut outputs: Vec<Option<Result<RunArtifacts, Error>>> =
        (0..jobs.len()).map(|_| None).collect();
    for chunk_start in (0..jobs.len()).step_by(cfg.threads) {
        let chunk_end = (chunk_start + cfg.threads).min(jobs.len());
        let results: Vec<Result<RunArtifacts, Error>> = std::thread::scope(|scope| {
            let handles: Vec<_> = jobs[chunk_start..chunk_end]
                .iter()
                .map(|(params, h0, u0)| {
                    scope.spawn(move || {
                        run_fixed_dt(params, h0.clone(), u0.clone(), dt, n_steps, snap_every)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        for (offset, result) in results.into_iter().enumerate() {
            outputs[chunk_start + offset] = Some(result);
        }
    }
    let mut artifacts = Vec::with_capacity(jobs.len());
    for out in outputs {
        artifacts.push(out.unwrap()?);
    }
    let reference = artifacts.pop().unwrap();

    let mut errors = Vec::with_capacity(cfg.n_list.len());
    for ((&n, run), (params, ..)) in cfg.n_list.iter().zip(&artifacts).zip(jobs.iter()) {
        let dgrid = &params.dgrid;
        let dh = &run.h - &restrict_rows(&reference.h, n);
        let du = &run.u - &restrict_rows(&reference.u, n);
        let mut value =
            norms::solution_norm_instantaneous(sgrid, dgrid, &dh, &du, cfg.kappa, cfg.s);
        if cfg.metric == DifferenceMetric::Composite {
            value += composite_dissipation(cfg, sgrid, run, &reference, n);
        }
        errors.push(value);
    }

    let degenerate = errors
        .iter()
        .all(|e| *e <= 1e-13)
        .then(|| "differences vanish for every layer count; no rate to fit".to_string());
    let fit = match (&degenerate, fit_rate(&cfg.n_list, &errors)) {
        (None, Ok(f)) => Some(f),
        (None, Err(e)) => return Err(e),
        (Some(_), _) => None,
    };
    Ok(ConvergenceReport {
        n_list: cfg.n_list.clone(),
        n_ref: cfg.n_ref,
        errors,
        fit,
        degenerate,
        metric: cfg.metric,
        dt,
        steps: n_steps,
    })
}

fn composite_dissipation(
    cfg: &ConvergeConfig,
    sgrid: &SpatialGrid,
    run: &RunArtifacts,
    reference: &RunArtifacts,
    n: usize,
) -> f64 {
    let s = cfg.s;
    let samples: Vec<(f64, [f64; 4])> = run
        .snapshots
        .iter()
        .zip(&reference.snapshots)
        .map(|((t, h, _), (_, rh, _))| {
            let dh = h - &restrict_rows(rh, n);
            let dxh = sgrid.ddx_field(&dh);
            let h_low = norms::hsk_norm(sgrid, n, &dxh, s - 1, 1.min(s - 1));
            let h_full = norms::hsk_norm(sgrid, n, &dxh, s, 2.min(s));
            let sh = crate::layers::integrate_field(&dxh);
            let integrated = norms::hsk_norm(sgrid, n, &sh, s, 2.min(s));
            let ts = crate::layers::trace_field(&sh);
            let surface = norms::hsk_norm(sgrid, n, &ts, s, 0);
            (
                *t,
                [
                    h_low * h_low,
                    integrated * integrated,
                    surface * surface,
                    h_full * h_full,
                ],
            )
        })
        .collect();
    let mut integrals = [0.0f64; 4];
    for pair in samples.windows(2) {
        let w = 0.5 * (pair[1].0 - pair[0].0);
        for (acc, (a, b)) in integrals
            .iter_mut()
            .zip(pair[0].1.iter().zip(pair[1].1.iter()))
        {
            *acc += w * (a + b);
        }
    }
    let sk = cfg.kappa.sqrt();
    sk * (integrals[0].sqrt() + integrals[1].sqrt() + integrals[2].sqrt())
        + cfg.kappa * integrals[3].sqrt()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionConfig {
    /// Fourier mode numbers to probe (full periods over the domain).
    pub modes: Vec<u32>,
    pub kappa: f64,
    /// Uniform reference depth of the single layer.
    pub hbar: f64,
    pub amplitude: f64,
    pub t_end: f64,
    pub length: f64,
    pub points: usize,
    pub cfl: f64,
}

impl DispersionConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.modes.is_empty() {
            return Err(Error::InvalidParameter("no modes requested".into()));
        }
        if !crate::positive_finite(self.kappa) {
            return Err(Error::InvalidParameter(
                "dispersion study requires positive diffusivity".into(),
            ));
        }
        if !(crate::positive_finite(self.hbar)
            && crate::positive_finite(self.amplitude)
            && crate::positive_finite(self.t_end))
        {
            return Err(Error::InvalidParameter(
                "depth, amplitude and duration must be positive".into(),
            ));
        }
        for &m in &self.modes {
            if m == 0 || 3 * m as usize > self.points {
                return Err(Error::InvalidParameter(format!(
                    "mode {m} is not resolved on {} points under dealiasing",
                    self.points
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeReport {
    pub mode: u32,
    pub wavenumber: f64,
    pub oscillatory: bool,
    pub predicted_frequency: f64,
    pub predicted_decay: f64,
    pub measured_frequency: f64,
    pub measured_decay: f64,
    pub frequency_rel_err: f64,
    pub decay_rel_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DispersionReport {
    pub modes: Vec<ModeReport>,
}

/// Single-layer linear dispersion check: evolves a traveling eigenmode of the
/// linearization and compares the measured frequency and decay against the
/// roots of `λ² + κk²λ + H̄k² = 0`.
pub fn dispersion_study(cfg: &DispersionConfig) -> Result<DispersionReport, Error> {
    cfg.validate()?;
    let sgrid = SpatialGrid::new(cfg.length, cfg.points)?;
    let dgrid = DensityGrid::new(1, 1.0, 2.0)?;
    let params = SolverParams {
        kappa: cfg.kappa,
        h_star: 0.5 * cfg.hbar,
        cfl: cfg.cfl,
        t_end: cfg.t_end,
        dealias: true,
        s: 3,
        output_interval: cfg.t_end,
        fixed_dt: None,
        hbar: vec![cfg.hbar],
        ubar: vec![0.0],
        sgrid: sgrid.clone(),
        dgrid,
    };
    params.validate()?;

    let mut reports = Vec::new();
    for &mode in &cfg.modes {
        let k = 2.0 * std::f64::consts::PI * mode as f64 / cfg.length;
        let half_damp = 0.5 * cfg.kappa * k * k;
        let discriminant = cfg.hbar * k * k - half_damp * half_damp;
        let oscillatory = discriminant > 0.0;
        let (freq, decay) = if oscillatory {
            (discriminant.sqrt(), half_damp)
        } else {
            // slowest-decaying real root dominates the measured signal
            (0.0, half_damp - (-discriminant).sqrt())
        };

        // traveling eigenmode: Û = -ik Ĥ / μ with μ = -decay + i freq
        let mu = num_complex(-decay, freq);
        let amp_u = num_div(num_complex(0.0, -k), mu);
        let m = cfg.points;
        let mut h0 = Array2::zeros((1, m));
        let mut u0 = Array2::zeros((1, m));
        for (j, &x) in sgrid.nodes().iter().enumerate() {
            let phase = k * x;
            h0[[0, j]] = cfg.amplitude * phase.cos();
            u0[[0, j]] = cfg.amplitude * (amp_u.0 * phase.cos() - amp_u.1 * phase.sin());
        }

        let mut state = SolverState::new(h0, u0);
        let mut times = vec![0.0];
        let coeff0 = sgrid.mode_coefficient(state.h.row(0).as_slice().unwrap(), mode as i64);
        let mut log_amp = vec![coeff0.norm().ln()];
        let mut phases = vec![coeff0.arg()];
        let mut unwrapped = vec![coeff0.arg()];
        while state.t < cfg.t_end {
            let dt = solver::cfl_dt(&state, &params).min(cfg.t_end - state.t);
            if dt <= 0.0 {
                break;
            }
            solver::step(&mut state, &params, dt)?;
            let c = sgrid.mode_coefficient(state.h.row(0).as_slice().unwrap(), mode as i64);
            times.push(state.t);
            log_amp.push(c.norm().ln());
            let raw = c.arg();
            let prev_raw = *phases.last().unwrap();
            let mut delta = raw - prev_raw;
            while delta > std::f64::consts::PI {
                delta -= 2.0 * std::f64::consts::PI;
            }
            while delta < -std::f64::consts::PI {
                delta += 2.0 * std::f64::consts::PI;
            }
            phases.push(raw);
            unwrapped.push(unwrapped.last().unwrap() + delta);
        }

        let measured_decay = -slope(&times, &log_amp);
        let measured_frequency = slope(&times, &unwrapped).abs();
        let frequency_rel_err = if oscillatory {
            (measured_frequency - freq).abs() / freq
        } else {
            measured_frequency.abs()
        };
        let decay_rel_err = (measured_decay - decay).abs() / decay.abs().max(1e-300);
        reports.push(ModeReport {
            mode,
            wavenumber: k,
            oscillatory,
            predicted_frequency: freq,
            predicted_decay: decay,
            measured_frequency,
            measured_decay,
            frequency_rel_err,
            decay_rel_err,
        });
    }
    Ok(DispersionReport { modes: reports })
}

fn num_complex(re: f64, im: f64) -> (f64, f64) {
    (re, im)
}

fn num_div(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let d = b.0 * b.0 + b.1 * b.1;
    ((a.0 * b.0 + a.1 * b.1) / d, (a.1 * b.0 - a.0 * b.1) / d)
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fit_exact_power_laws() {
        let ns = [8usize, 16, 32, 64];
        let sq: Vec<f64> = ns.iter().map(|&n| 3.0 / (n * n) as f64).collect();
        let fit = fit_rate(&ns, &sq).unwrap();
        assert_abs_diff_eq!(fit.slope, -2.0, epsilon = 1e-12);
        assert!(fit.residual <= 1e-12);
        let lin: Vec<f64> = ns.iter().map(|&n| 0.5 / n as f64).collect();
        assert_abs_diff_eq!(fit_rate(&ns, &lin).unwrap().slope, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn fit_with_multiplicative_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let ns = [8usize, 16, 32, 64, 128];
        let errs: Vec<f64> = ns
            .iter()
            .map(|&n| (1.0 + 0.05 * rng.gen_range(-1.0..1.0)) / (n * n) as f64)
            .collect();
        let fit = fit_rate(&ns, &errs).unwrap();
        assert!(
            fit.slope >= -2.2 && fit.slope <= -1.8,
            "slope {}",
            fit.slope
        );
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(fit_rate(&[8, 16], &[1.0, 0.5]).is_err());
        assert!(fit_rate(&[8, 16, 32], &[1.0, 0.0, 0.5]).is_err());
        assert!(fit_rate(&[8, 16, 32], &[1.0, -0.1, 0.5]).is_err());
    }

    #[test]
    fn restriction_is_row_extraction() {
        let fine = Array2::from_shape_fn((15, 4), |(i, j)| (i * 10 + j) as f64);
        let coarse = restrict_rows(&fine, 5);
        for i in 0..5 {
            for j in 0..4 {
                assert_eq!(coarse[[i, j]], fine[[3 * i + 1, j]]);
            }
        }
        // ratio 1 is the identity, so a run differenced against itself is 0
        let same = restrict_rows(&fine, 15);
        assert_eq!(same, fine);
    }

    #[test]
    fn converge_config_validation() {
        let mut cfg = ConvergeConfig {
            n_list: vec![5, 15, 45],
            n_ref: 135,
            ratio: 3,
            s: 3,
            kappa: 0.05,
            h_star: 0.5,
            cfl: 0.4,
            t_end: 0.5,
            dealias: true,
            metric: DifferenceMetric::Instantaneous,
            projection: Projection::Sample,
            threads: 1,
        };
        assert!(cfg.validate().is_ok());
        cfg.ratio = 2;
        assert!(cfg.validate().is_err());
        cfg.ratio = 3;
        cfg.n_ref = 90;
        assert!(cfg.validate().is_err());
        cfg.n_ref = 135;
        cfg.n_list = vec![5, 15];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn dispersion_overdamped_mode_detected() {
        let cfg = DispersionConfig {
            modes: vec![4],
            kappa: 8.0,
            hbar: 1.0,
            amplitude: 1e-6,
            t_end: 4.0,
            length: 4.0 * std::f64::consts::PI,
            points: 64,
            cfl: 0.3,
        };
        let report = dispersion_study(&cfg).unwrap();
        let m = &report.modes[0];
        // κ² k⁴ / 4 >= H̄ k² here, so no oscillation should be seen
        assert!(!m.oscillatory);
        assert!(m.measured_frequency.abs() <= 0.05 * m.predicted_decay.abs());
    }

    #[test]
    fn dispersion_decay_grows_with_kappa() {
        let base = DispersionConfig {
            modes: vec![2],
            kappa: 0.05,
            hbar: 1.0,
            amplitude: 1e-6,
            t_end: 10.0,
            length: 4.0 * std::f64::consts::PI,
            points: 64,
            cfl: 0.3,
        };
        let slow = dispersion_study(&base).unwrap().modes[0].measured_decay;
        let mut faster = base.clone();
        faster.kappa = 0.2;
        let fast = dispersion_study(&faster).unwrap().modes[0].measured_decay;
        assert!(
            fast > 3.0 * slow,
            "decay should scale like kappa: {slow} vs {fast}"
        );
    }

    #[test]
    fn convergence_degenerates_at_rest() {
        let sgrid = SpatialGrid::new(4.0 * std::f64::consts::PI, 32).unwrap();
        let profile = ContinuousProfile::preset_rest(sgrid.length());
        let cfg = ConvergeConfig {
            n_list: vec![3, 9, 27],
            n_ref: 81,
            ratio: 3,
            s: 3,
            kappa: 0.05,
            h_star: 0.5,
            cfl: 0.4,
            t_end: 0.1,
            dealias: true,
            metric: DifferenceMetric::Instantaneous,
            projection: Projection::Sample,
            threads: 2,
        };
        let report = convergence_study(&cfg, &profile, &sgrid, 1.0, 2.0).unwrap();
        assert!(report.degenerate.is_some());
        assert!(report.fit.is_none());
        for e in &report.errors {
            assert!(*e <= 1e-13);
        }
    }
}
