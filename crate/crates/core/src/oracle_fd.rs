//! Finite-difference reference solvers: leapfrog for the flat wave equation
//! and a variable-step leapfrog for the EdeS equation started at `t0 > 0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{SmoothData, SourceFunction};
use crate::edes::{phi_of_t, solve_on_grid, ProblemSpec};
use crate::error::{domain, invalid, Error, Result};
use crate::grid::{Grid, GridField};
use crate::space::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Periodic,
    ZeroDirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdRunConfig {
    pub t0: f64,
    pub t_end: f64,
    pub cfl: f64,
    pub boundary: Boundary,
}

impl Default for FdRunConfig {
    fn default() -> Self {
        FdRunConfig {
            t0: 1e-2,
            t_end: 1.0,
            cfl: 0.5,
            boundary: Boundary::Periodic,
        }
    }
}

impl FdRunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t0 > 0.0 && self.t0 < self.t_end && self.t_end.is_finite()) {
            return Err(invalid(format!(
                "fd run needs 0 < t0 < t_end (got t0 = {}, t_end = {})",
                self.t0, self.t_end
            )));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(invalid(format!(
                "cfl must lie in (0, 1) (got {})",
                self.cfl
            )));
        }
        Ok(())
    }
}

fn check_cfl(cfl: f64, grid: &Grid) -> Result<()> {
    let limit = 1.0 / grid.dim().as_f64().sqrt();
    if cfl > limit + 1e-12 {
        return Err(Error::CflViolation(format!(
            "cfl = {cfl} exceeds the leapfrog limit 1/sqrt(n) = {limit:.6} in {} dimensions",
            grid.dim()
        )));
    }
    Ok(())
}

fn check_reach(support: f64, reach: f64, grid: &Grid) -> Result<()> {
    if support.is_finite() && support + reach > grid.inner_radius() {
        return Err(invalid(format!(
            "grid too small: data support {support:.4} plus propagation {reach:.4} exceeds the box half-width {:.4}",
            grid.inner_radius()
        )));
    }
    Ok(())
}

fn check_finite(values: &[f64], time: f64) -> Result<()> {
    if values.par_iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::BlowupDetected { time })
    }
}

/// Second-order discrete Laplacian of `v` into `out`.
pub fn discrete_laplacian(grid: &Grid, boundary: Boundary, v: &[f64], out: &mut [f64]) {
    let n = grid.points_per_axis();
    let dim = grid.dim().get();
    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    out.par_chunks_mut(n).enumerate().for_each(|(row, chunk)| {
        let base = row * n;
        let outer = grid.multi_index(base);
        for (j, o) in chunk.iter_mut().enumerate() {
            let i = base + j;
            let c = v[i];
            let mut acc = 0.0;
            let mut stride = 1;
            for axis in (0..dim).rev() {
                let pos = if axis == dim - 1 { j } else { outer[axis] };
                let fwd = if pos + 1 < n {
                    v[i + stride]
                } else {
                    match boundary {
                        Boundary::Periodic => v[i + stride - n * stride],
                        Boundary::ZeroDirichlet => 0.0,
                    }
                };
                let bwd = if pos > 0 {
                    v[i - stride]
                } else {
                    match boundary {
                        Boundary::Periodic => v[i + (n - 1) * stride],
                        Boundary::ZeroDirichlet => 0.0,
                    }
                };
                acc += fwd - 2.0 * c + bwd;
                stride *= n;
            }
            *o = acc * inv_h2;
        }
    });
}

/// Leapfrog state for `v_tt = Δ_h v` with zero initial velocity.
struct FlatStepper {
    grid: Grid,
    boundary: Boundary,
    dt: f64,
    prev: Vec<f64>,
    cur: Vec<f64>,
    lap: Vec<f64>,
}

impl FlatStepper {
    fn new(data: &SmoothData, grid: &Grid, dt: f64, boundary: Boundary) -> Self {
        let v0: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map(|i| data.value(&grid.point(i)))
            .collect();
        let mut lap = vec![0.0; v0.len()];
        discrete_laplacian(grid, boundary, &v0, &mut lap);
        // v¹ = v⁰ + (Δt²/2) Δ_h v⁰, the same as the ghost value v⁻¹ = v¹.
        let half = 0.5 * dt * dt;
        let v1 = v0.par_iter().zip(&lap).map(|(v, l)| v + half * l).collect();
        FlatStepper {
            grid: grid.clone(),
            boundary,
            dt,
            prev: v0,
            cur: v1,
            lap,
        }
    }

    fn step(&mut self) {
        discrete_laplacian(&self.grid, self.boundary, &self.cur, &mut self.lap);
        let dt2 = self.dt * self.dt;
        self.prev
            .par_iter_mut()
            .zip(&self.cur)
            .zip(&self.lap)
            .for_each(|((p, c), l)| *p = 2.0 * c - *p + dt2 * l);
        std::mem::swap(&mut self.prev, &mut self.cur);
    }

    /// `½‖(v^{k+1} - v^k)/Δt‖² + ½⟨-Δ_h v^{k+1}, v^k⟩`, conserved by leapfrog.
    fn energy(&mut self) -> f64 {
        discrete_laplacian(&self.grid, self.boundary, &self.cur, &mut self.lap);
        let dt = self.dt;
        let e: f64 = self
            .cur
            .par_iter()
            .zip(&self.prev)
            .zip(&self.lap)
            .map(|((c, p), l)| {
                let vel = (c - p) / dt;
                0.5 * vel * vel - 0.5 * l * p
            })
            .sum();
        e * self.grid.cell_volume()
    }
}

fn flat_steps(grid: &Grid, t_end: f64, cfl: f64) -> Result<(usize, f64)> {
    check_cfl(cfl, grid)?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(domain(format!("t_end must be positive (got {t_end})")));
    }
    let steps = (t_end / (cfl * grid.spacing())).ceil().max(1.0) as usize;
    Ok((steps, t_end / steps as f64))
}

/// `v(·, t_end)` for `v_tt = Δv`, `v(0) = data`, `v_t(0) = 0`, by leapfrog
/// with `Δt ≤ cfl · h` (periodic box).
pub fn fd_free_wave(data: &SmoothData, grid: &Grid, t_end: f64, cfl: f64) -> Result<GridField> {
    fd_free_wave_with(data, grid, t_end, cfl, Boundary::Periodic)
}

pub fn fd_free_wave_with(
    data: &SmoothData,
    grid: &Grid,
    t_end: f64,
    cfl: f64,
    boundary: Boundary,
) -> Result<GridField> {
    if data.dim() != grid.dim() {
        return Err(invalid("grid and data dimensions differ"));
    }
    let (steps, dt) = flat_steps(grid, t_end, cfl)?;
    check_reach(data.support_radius(), t_end, grid)?;
    let mut s = FlatStepper::new(data, grid, dt, boundary);
    for k in 1..steps {
        s.step();
        if k % 64 == 0 {
            check_finite(&s.cur, k as f64 * dt)?;
        }
    }
    GridField::new(grid.clone(), s.cur, Some(t_end))
}

/// Discrete leapfrog energy after every step of an `fd_free_wave` run.
pub fn fd_free_wave_energy(
    data: &SmoothData,
    grid: &Grid,
    t_end: f64,
    cfl: f64,
) -> Result<Vec<f64>> {
    let (steps, dt) = flat_steps(grid, t_end, cfl)?;
    let mut s = FlatStepper::new(data, grid, dt, Boundary::Periodic);
    let mut out = vec![s.energy()];
    for _ in 1..steps {
        s.step();
        out.push(s.energy());
    }
    Ok(out)
}

/// Precomputed `t f(x, t) = Σ_j t T_j(t) S_j(x)` on the grid.
struct GridSource {
    terms: Vec<(crate::data::TimePower, Vec<f64>)>,
}

impl GridSource {
    fn new(f: Option<&SourceFunction>, grid: &Grid) -> Self {
        let terms = f
            .map(|f| {
                f.terms()
                    .iter()
                    .map(|t| {
                        let vals = (0..grid.len())
                            .into_par_iter()
                            .map(|i| t.space.value(&grid.point(i)))
                            .collect();
                        (t.time, vals)
                    })
                    .collect()
            })
            .unwrap_or_default();
        GridSource { terms }
    }

    /// `acc += scale · t f(·, t)`
    fn add_weighted(&self, t: f64, scale: f64, acc: &mut [f64]) {
        for (time, vals) in &self.terms {
            let c = scale * t * time.at(t);
            acc.par_iter_mut().zip(vals).for_each(|(a, v)| *a += c * v);
        }
    }
}

/// `ψ` at each requested checkpoint (sorted, within `(t0, t_end]`) for the
/// EdeS equation, stepping `u = t ψ` with `u_tt = t^{-4/3} Δ_h u + t f` and
/// `Δt = cfl · h · t^{2/3}`. The state at `t0` comes from the representation
/// formula: the value and a centered difference in time.
pub fn fd_edes_checkpoints(
    spec: &ProblemSpec,
    grid: &Grid,
    run: &FdRunConfig,
    checkpoints: &[f64],
) -> Result<Vec<GridField>> {
    spec.validate()?;
    run.validate()?;
    check_cfl(run.cfl, grid)?;
    if grid.dim() != spec.dim {
        return Err(invalid("grid and problem dimensions differ"));
    }
    if checkpoints.windows(2).any(|w| w[1] <= w[0])
        || checkpoints.iter().any(|&c| !(c > run.t0 && c <= run.t_end))
    {
        return Err(invalid(
            "checkpoints must be increasing and inside (t0, t_end]",
        ));
    }
    check_reach(spec.support_radius(), phi_of_t(run.t_end)?, grid)?;

    let h = grid.spacing();
    let boundary = run.boundary;
    let mut t = run.t0;
    let dt_of = |t: f64| run.cfl * h * t.cbrt() * t.cbrt();
    let delta = (0.25 * t).min(dt_of(t));
    let u_at = |s: f64| -> Result<Vec<f64>> {
        Ok(solve_on_grid(spec, grid, s)?
            .into_values()
            .into_iter()
            .map(|v| s * v)
            .collect())
    };
    let u0 = u_at(t)?;
    let up = u_at(t + delta)?;
    let um = u_at(t - delta)?;
    let source = GridSource::new(spec.source.as_ref(), grid);

    let mut lap = vec![0.0; grid.len()];
    let mut rhs = vec![0.0; grid.len()];
    // rhs = t^{-4/3} Δ_h u + t f
    let eval_rhs = |u: &[f64], t: f64, lap: &mut Vec<f64>, rhs: &mut Vec<f64>| {
        discrete_laplacian(grid, boundary, u, lap);
        let w = 1.0 / (t * t.cbrt());
        rhs.par_iter_mut()
            .zip(lap.par_iter())
            .for_each(|(r, l)| *r = w * l);
        source.add_weighted(t, 1.0, rhs);
    };

    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = 0;
    let t_stop = *checkpoints.last().unwrap_or(&run.t_end);
    let clip = |t: f64, dt: f64, next: usize| -> f64 {
        match checkpoints.get(next) {
            Some(&c) if t + dt >= c - 1e-12 * c => c - t,
            _ => dt,
        }
    };

    // First step by Taylor expansion.
    let dt0 = clip(t, dt_of(t), next);
    eval_rhs(&u0, t, &mut lap, &mut rhs);
    let mut cur: Vec<f64> = u0
        .par_iter()
        .zip(&up)
        .zip(&um)
        .zip(&rhs)
        .map(|(((u, p), m), r)| u + dt0 * (p - m) / (2.0 * delta) + 0.5 * dt0 * dt0 * r)
        .collect();
    let mut prev = u0;
    let mut dt_prev = dt0;
    t += dt0;
    let mut steps = 1usize;

    loop {
        if let Some(&c) = checkpoints.get(next) {
            if (t - c).abs() <= 1e-12 * c {
                check_finite(&cur, t)?;
                let psi = cur.par_iter().map(|u| u / t).collect();
                out.push(GridField::new(grid.clone(), psi, Some(t))?);
                next += 1;
                t = c;
            }
        }
        if next == checkpoints.len() || t >= t_stop {
            break;
        }
        let dt = clip(t, dt_of(t), next);
        eval_rhs(&cur, t, &mut lap, &mut rhs);
        // Three-point second derivative on the uneven stencil (t - Δ₋, t, t + Δ₊).
        let ratio = dt / dt_prev;
        let k = 0.5 * dt * (dt + dt_prev);
        prev.par_iter_mut()
            .zip(&cur)
            .zip(&rhs)
            .for_each(|((p, c), r)| *p = c + ratio * (c - *p) + k * r);
        std::mem::swap(&mut prev, &mut cur);
        dt_prev = dt;
        t += dt;
        steps += 1;
        if steps.is_multiple_of(64) {
            check_finite(&cur, t)?;
        }
    }
    log::debug!("fd_edes: {steps} steps to t = {t}");
    Ok(out)
}

/// `ψ(·, t_end)` from [`fd_edes_checkpoints`].
pub fn fd_edes(spec: &ProblemSpec, grid: &Grid, run: &FdRunConfig) -> Result<GridField> {
    let mut v = fd_edes_checkpoints(spec, grid, run, &[run.t_end])?;
    Ok(v.pop().expect("one checkpoint"))
}

/// Largest `|L_h ψ - f|` over `(x, t)` samples, with `L_h` the central
/// difference form of `ψ_tt - t^{-4/3} Δψ + (2/t) ψ_t`.
pub fn residual_scan<E>(
    evaluator: E,
    f: Option<&SourceFunction>,
    dim: crate::space::SpatialDim,
    points: &[(Point, f64)],
    h: f64,
) -> Result<f64>
where
    E: Fn(&Point, f64) -> Result<f64> + Sync,
{
    if points.iter().any(|&(_, t)| !(t > 2.0 * h)) {
        return Err(domain("residual scan needs t > 2h at every sample"));
    }
    let residuals: Vec<f64> = points
        .par_iter()
        .map(|&(x, t)| -> Result<f64> {
            let c = evaluator(&x, t)?;
            let p = evaluator(&x, t + h)?;
            let m = evaluator(&x, t - h)?;
            let mut lap = 0.0;
            for k in 0..dim.get() {
                let mut xp = x;
                let mut xm = x;
                xp[k] += h;
                xm[k] -= h;
                lap += (evaluator(&xp, t)? - 2.0 * c + evaluator(&xm, t)?) / (h * h);
            }
            let l = (p - 2.0 * c + m) / (h * h) - lap / (t * t.cbrt()) + (p - m) / (t * h);
            let source = f.map_or(0.0, |f| f.value(&x, t));
            Ok((l - source).abs())
        })
        .collect::<Result<_>>()?;
    Ok(residuals.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::SpatialDim;

    #[test]
    fn cfl_limit_depends_on_dimension() {
        let g = Grid::centered(SpatialDim::THREE, 16, 0.5).unwrap();
        let c = SmoothData::constant(SpatialDim::THREE, 1.0);
        assert!(matches!(
            fd_free_wave(&c, &g, 1.0, 0.7),
            Err(Error::CflViolation(_))
        ));
        assert!(fd_free_wave(&c, &g, 1.0, 0.5).is_ok());
    }

    #[test]
    fn constant_data_stays_constant() {
        let g = Grid::centered(SpatialDim::TWO, 16, 0.25).unwrap();
        let c = SmoothData::constant(SpatialDim::TWO, 2.0);
        let f = fd_free_wave(&c, &g, 1.0, 0.5).unwrap();
        assert!(f.values().iter().all(|v| (v - 2.0).abs() < 1e-13));
    }

    #[test]
    fn dirichlet_laplacian_sees_zero_outside() {
        let g = Grid::new(SpatialDim::ONE, 8, 1.0, &[0.0]).unwrap();
        let v = vec![1.0; 8];
        let mut out = vec![0.0; 8];
        discrete_laplacian(&g, Boundary::ZeroDirichlet, &v, &mut out);
        assert_eq!(out[0], -1.0);
        assert_eq!(out[3], 0.0);
        discrete_laplacian(&g, Boundary::Periodic, &v, &mut out);
        assert!(out.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn edes_constants() {
        let dim = SpatialDim::ONE;
        let g = Grid::centered(dim, 32, 0.1).unwrap();
        let run = FdRunConfig::default();
        let spec = ProblemSpec::new(dim).with_phi0(SmoothData::constant(dim, 1.0));
        let f = fd_edes(&spec, &g, &run).unwrap();
        assert!(f.values().iter().all(|v| (v - 1.0).abs() < 1e-9));
        let spec = ProblemSpec::new(dim).with_source(SourceFunction::constant(dim, 6.0));
        let f = fd_edes(&spec, &g, &run).unwrap();
        assert!(
            f.values().iter().all(|v| (v - 1.0).abs() < 1e-3),
            "{:?}",
            &f.values()[..2]
        );
    }

    #[test]
    fn run_config_validation() {
        let mut run = FdRunConfig::default();
        assert!(run.validate().is_ok());
        run.t0 = 2.0;
        assert!(run.validate().is_err());
        run = FdRunConfig {
            cfl: 1.0,
            ..FdRunConfig::default()
        };
        assert!(run.validate().is_err());
    }

    #[test]
    fn residual_of_closed_forms() {
        let dim = SpatialDim::TWO;
        let pts = [([0.1, 0.2, 0.0], 1.0), ([0.0, -1.0, 0.0], 3.0)];
        let r = residual_scan(|_, t| Ok(2.0 / t), None, dim, &pts, 1e-3).unwrap();
        assert!(r < 1e-5);
        let f = SourceFunction::constant(dim, 3.0);
        let r = residual_scan(|_, t| Ok(0.5 * t * t), Some(&f), dim, &pts, 1e-3).unwrap();
        assert!(r < 1e-6);
    }
}
