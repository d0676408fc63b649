//! Grid Lᵖ norms, spectral powers `(-Δ)^{-s}` and empirical decay fits.

use std::f64::consts::PI;
use std::io::{self, Write};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::data::SmoothData;
use crate::edes::{phi_of_t, solve_on_grid, ProblemSpec};
use crate::error::{invalid, Result};
use crate::grid::{fmt17, Grid, GridField};
use crate::quadrature::{integrate_graded_left, QuadratureConfig};
use crate::space::{self, Point, SpatialDim, ORIGIN};

/// `(Σ|v_i|^p hⁿ)^{1/p}`, or the max norm for `p = ∞`.
pub fn grid_lp_norm(field: &GridField, p: f64) -> Result<f64> {
    if p == f64::INFINITY {
        return Ok(field
            .values()
            .par_iter()
            .fold(|| 0.0, |m: f64, v| m.max(v.abs()))
            .reduce(|| 0.0, f64::max));
    }
    if !(p >= 1.0) {
        return Err(invalid(format!("norm exponent must be >= 1 (got {p})")));
    }
    let scale = field
        .values()
        .par_iter()
        .fold(|| 0.0, |m: f64, v| m.max(v.abs()))
        .reduce(|| 0.0, f64::max);
    if scale == 0.0 {
        return Ok(0.0);
    }
    // Scaled sum so that large p cannot overflow.
    let sum: f64 = field
        .values()
        .par_iter()
        .map(|v| (v.abs() / scale).powf(p))
        .sum();
    Ok(scale * (sum * field.grid().cell_volume()).powf(1.0 / p))
}

/// In-place multidimensional FFT over a grid with `n` points per axis;
/// the inverse is normalized.
pub fn fft_nd(data: &mut [Complex64], n: usize, dim: usize, inverse: bool) {
    let total = data.len();
    debug_assert_eq!(total, n.pow(dim as u32));
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let lines = total / n;
    let batch = n * 64.min(lines).max(1);
    let mut buf = vec![Complex64::new(0.0, 0.0); total];
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        // Gather every line along `axis` contiguously, transform, scatter back.
        buf.par_chunks_mut(n).enumerate().for_each(|(l, line)| {
            let (outer, inner) = (l / stride, l % stride);
            let base = outer * n * stride + inner;
            for (j, x) in line.iter_mut().enumerate() {
                *x = data[base + j * stride];
            }
        });
        buf.par_chunks_mut(batch).for_each(|c| fft.process(c));
        let src = &buf;
        data.par_chunks_mut(n * stride)
            .enumerate()
            .for_each(|(outer, block)| {
                for j in 0..n {
                    for inner in 0..stride {
                        block[j * stride + inner] = src[(outer * stride + inner) * n + j];
                    }
                }
            });
    }
    if inverse {
        let inv = 1.0 / total as f64;
        data.par_iter_mut().for_each(|x| *x *= inv);
    }
}

/// Physical wavenumber of FFT index `i` on a box of side `length`.
fn wavenumber(i: usize, n: usize, length: f64) -> f64 {
    let m = if i <= n / 2 {
        i as f64
    } else {
        i as f64 - n as f64
    };
    2.0 * PI * m / length
}

/// Output of [`neg_laplacian_power`].
#[derive(Debug, Clone)]
pub struct SpectralPower {
    pub field: GridField,
    /// Set when `s > 0` and the input mean was not negligible; its value.
    pub nonzero_mean: Option<f64>,
}

/// Relative size of the mean (against the max norm) tolerated for `s > 0`.
pub const MEAN_TOLERANCE: f64 = 1e-10;

/// `(-Δ)^{-s}` on the periodic box: Fourier mode `ξ ≠ 0` is multiplied by
/// `|ξ|^{-2s}` and the zero mode is dropped. `s = 0` is the identity.
pub fn neg_laplacian_power(field: &GridField, s: f64) -> Result<SpectralPower> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(invalid(format!("spectral power needs s >= 0 (got {s})")));
    }
    if s == 0.0 {
        return Ok(SpectralPower {
            field: field.clone(),
            nonzero_mean: None,
        });
    }
    let grid = field.grid();
    let mean = field.mean();
    let max = grid_lp_norm(field, f64::INFINITY)?;
    let nonzero_mean = if mean.abs() > MEAN_TOLERANCE * max.max(f64::MIN_POSITIVE) {
        log::warn!(
            "(-Δ)^(-{s}) applied to a field with nonzero mean {mean:e}; the zero mode is dropped"
        );
        Some(mean)
    } else {
        None
    };
    let values = apply_multiplier(field, |k2| if k2 == 0.0 { 0.0 } else { k2.powf(-s) });
    Ok(SpectralPower {
        field: GridField::new(grid.clone(), values, field.time())?,
        nonzero_mean,
    })
}

/// Applies a real multiplier `m(|ξ|²)` in Fourier space.
fn apply_multiplier<M: Fn(f64) -> f64 + Sync>(field: &GridField, m: M) -> Vec<f64> {
    let grid = field.grid();
    let n = grid.points_per_axis();
    let dim = grid.dim().get();
    let length = grid.box_length();
    let mut data: Vec<Complex64> = field
        .values()
        .par_iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    fft_nd(&mut data, n, dim, false);
    data.par_iter_mut().enumerate().for_each(|(i, c)| {
        let idx = grid.multi_index(i);
        let k2: f64 = (0..dim)
            .map(|a| wavenumber(idx[a], n, length).powi(2))
            .sum();
        *c *= m(k2);
    });
    fft_nd(&mut data, n, dim, true);
    data.into_iter().map(|c| c.re).collect()
}

/// `₁F₁(a; b; -z)` for `z ≥ 0` and `b > a`, `b > 0`.
fn hyp1f1_neg(a: f64, b: f64, z: f64) -> f64 {
    if z <= 40.0 {
        // Kummer: e^{-z} ₁F₁(b - a; b; z) has only positive terms.
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 0.0;
        loop {
            term *= (b - a + k) / (b + k) * z / (k + 1.0);
            sum += term;
            k += 1.0;
            if (k > z && term < 1e-17 * sum) || k > 2000.0 {
                break;
            }
        }
        (-z).exp() * sum
    } else {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 0..30 {
            let k = k as f64;
            let next = term * (a + k) * (1.0 + a - b + k) / ((k + 1.0) * z);
            if next.abs() >= term.abs() {
                break;
            }
            term = next;
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        gamma(b) / gamma(b - a) * z.powf(-a) * sum
    }
}

/// `(-Δ)^{-s} G_σ` at distance `rho` from the center, in ℝⁿ, where
/// `G_σ(x) = (πσ²)^{-n/2} e^{-|x|²/σ²}` has unit mass. Needs `2s < n`.
pub fn riesz_gaussian(dim: SpatialDim, sigma: f64, s: f64, rho: f64) -> f64 {
    let n2 = 0.5 * dim.as_f64();
    let g0 = (PI * sigma * sigma).powf(-n2);
    let z = (rho / sigma).powi(2);
    if s == 0.0 {
        return g0 * (-z).exp();
    }
    gamma(n2 - s) / gamma(n2) * (0.25 * sigma * sigma).powf(s) * g0 * hyp1f1_neg(n2 - s, n2, z)
}

/// `(-Δ)^{-s}` of a field that stands for a function on ℝⁿ. The mass is
/// carried by a unit Gaussian `G_σ` about `center`, whose image is known in
/// closed form; the zero-mean remainder goes through the periodic transform.
pub fn neg_laplacian_power_mass_corrected(
    field: &GridField,
    s: f64,
    sigma: f64,
    center: &Point,
) -> Result<GridField> {
    let grid = field.grid();
    let dim = grid.dim();
    if !(2.0 * s < dim.as_f64()) {
        return Err(invalid(format!(
            "mass-corrected power needs 2s < n (got s = {s})"
        )));
    }
    if s == 0.0 {
        return Ok(field.clone());
    }
    let g0 = (PI * sigma * sigma).powf(-0.5 * dim.as_f64());
    let dist = |i: usize| space::norm(&space::sub(&grid.point(i), center));
    let gauss: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| g0 * (-(dist(i) / sigma).powi(2)).exp())
        .collect();
    let mass = field.values().iter().sum::<f64>() / gauss.iter().sum::<f64>();
    let remainder: Vec<f64> = field
        .values()
        .par_iter()
        .zip(&gauss)
        .map(|(v, g)| v - mass * g)
        .collect();
    let remainder = GridField::new(grid.clone(), remainder, field.time())?;
    let periodic = neg_laplacian_power(&remainder, s)?.field.into_values();
    let values = periodic
        .into_par_iter()
        .enumerate()
        .map(|(i, v)| v + mass * riesz_gaussian(dim, sigma, s, dist(i)))
        .collect();
    GridField::new(grid.clone(), values, field.time())
}

/// Which datum a decay query exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayCase {
    Phi0,
    Phi1,
    Source,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayQuery {
    pub p: f64,
    pub q: f64,
    pub s: f64,
    pub dim: SpatialDim,
    pub times: Vec<f64>,
}

impl DecayQuery {
    /// `1/p - 1/q`
    pub fn delta(&self) -> f64 {
        1.0 / self.p - 1.0 / self.q
    }

    pub fn validate(&self, case: DecayCase) -> Result<()> {
        let eps = 1e-12;
        if !(self.p > 1.0 && self.p <= 2.0) {
            return Err(invalid(format!("p must lie in (1, 2] (got {})", self.p)));
        }
        if (1.0 / self.p + 1.0 / self.q - 1.0).abs() > eps {
            return Err(invalid(format!(
                "p = {} and q = {} are not conjugate",
                self.p, self.q
            )));
        }
        if !(self.s >= 0.0) {
            return Err(invalid(format!("s must be >= 0 (got {})", self.s)));
        }
        let n = self.dim.as_f64();
        let d = self.delta();
        let two_s = 2.0 * self.s;
        if two_s < 0.5 * (n + 1.0) * d - eps || two_s > n * d + eps {
            return Err(invalid(format!(
                "need (n+1)/2 (1/p - 1/q) <= 2s <= n (1/p - 1/q); got 2s = {two_s} with bounds [{}, {}]",
                0.5 * (n + 1.0) * d,
                n * d
            )));
        }
        if case != DecayCase::Phi0 && !(two_s - n * d > -1.0) {
            return Err(invalid("need 2s - n (1/p - 1/q) > -1"));
        }
        if self.times.len() < 2
            || self.times.iter().any(|&t| !(t > 0.0))
            || self.times.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(invalid(
                "decay times must be at least two increasing positive values",
            ));
        }
        Ok(())
    }

    /// Exponent of the power of `t` in front of the data norms.
    pub fn predicted_exponent(&self, case: DecayCase) -> f64 {
        let base = 2.0 * self.s - self.dim.as_f64() * self.delta();
        match case {
            DecayCase::Phi0 => (base - 1.0) / 3.0,
            DecayCase::Phi1 | DecayCase::Source => base / 3.0,
        }
    }
}

/// Grid and resolution settings for [`decay_fit`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayOptions {
    pub spacing: f64,
    /// Box half-width; `None` uses `1.25 (R + φ(t_max))`.
    pub half_width: Option<f64>,
    /// Width of the Gaussian that carries the mass in the spectral step.
    pub mass_width: f64,
    /// Compare against a grid of twice the spacing at the last time.
    pub refinement_check: bool,
    /// Largest relative norm change tolerated by the refinement check.
    pub refinement_tolerance: f64,
}

impl Default for DecayOptions {
    fn default() -> Self {
        DecayOptions {
            spacing: 0.3,
            half_width: None,
            mass_width: 1.0,
            refinement_check: true,
            refinement_tolerance: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub case: DecayCase,
    pub p: f64,
    pub q: f64,
    pub s: f64,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    /// Right-hand side of the estimate without its constant.
    pub envelope: Vec<f64>,
    pub fitted_slope: f64,
    pub predicted_exponent: f64,
    /// `max_t norm(t) / envelope(t)`
    pub bound_constant: f64,
    pub grid_points_per_axis: usize,
    pub spacing: f64,
    /// Relative norm change against the coarse grid, when checked.
    pub refinement_change: Option<f64>,
}

impl DecayReport {
    /// `norm · t^{-predicted_exponent}` at each sample.
    pub fn compensated_norms(&self) -> Vec<f64> {
        self.times
            .iter()
            .zip(&self.norms)
            .map(|(t, n)| n * t.powf(-self.predicted_exponent))
            .collect()
    }

    /// `bound_constant` restricted to samples with `t ≤ t_max`.
    pub fn bound_constant_up_to(&self, t_max: f64) -> f64 {
        self.times
            .iter()
            .zip(self.norms.iter().zip(&self.envelope))
            .filter(|(t, _)| **t <= t_max)
            .map(|(_, (n, e))| n / e)
            .fold(0.0, f64::max)
    }

    /// Fitted slope of `log(norm / envelope)` against `log t`.
    pub fn envelope_slope(&self) -> f64 {
        let ratio: Vec<f64> = self
            .norms
            .iter()
            .zip(&self.envelope)
            .map(|(n, e)| n / e)
            .collect();
        loglog_slope(&self.times, &ratio)
    }

    /// Columns `t, norm, predicted_bound` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,norm,predicted_bound")?;
        for ((t, n), e) in self.times.iter().zip(&self.norms).zip(&self.envelope) {
            writeln!(
                w,
                "{},{},{}",
                fmt17(*t),
                fmt17(*n),
                fmt17(self.bound_constant * e)
            )?;
        }
        Ok(())
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "case": self.case,
            "slope": self.fitted_slope,
            "exponent": self.predicted_exponent,
            "constant": self.bound_constant,
            "p": self.p,
            "q": self.q,
            "s": self.s,
            "grid_points_per_axis": self.grid_points_per_axis,
            "spacing": self.spacing,
            "refinement_change": self.refinement_change,
        })
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn data_norm(d: &SmoothData, grid: &Grid, p: f64) -> Result<f64> {
    grid_lp_norm(&GridField::from_fn(grid.clone(), None, |x| d.value(x))?, p)
}

fn case_of(spec: &ProblemSpec) -> Result<DecayCase> {
    match (&spec.phi0, &spec.phi1, &spec.source) {
        (Some(_), None, None) => Ok(DecayCase::Phi0),
        (None, Some(_), None) => Ok(DecayCase::Phi1),
        (None, None, Some(_)) => Ok(DecayCase::Source),
        _ => Err(invalid("a decay query needs exactly one nonzero datum")),
    }
}

fn decay_grid(spec: &ProblemSpec, spacing: f64, half_width: f64) -> Result<Grid> {
    let mut n = (2.0 * half_width / spacing).ceil() as usize;
    n += n % 2;
    Grid::centered(spec.dim, n.max(8), spacing)
}

fn norm_at(
    spec: &ProblemSpec,
    grid: &Grid,
    t: f64,
    query: &DecayQuery,
    opts: &DecayOptions,
    center: &Point,
) -> Result<f64> {
    let psi = solve_on_grid(spec, grid, t)?;
    let w = neg_laplacian_power_mass_corrected(&psi, query.s, opts.mass_width, center)?;
    grid_lp_norm(&w, query.q)
}

/// Samples `‖(-Δ)^{-s} ψ(·, t)‖_q` over `query.times` and compares with
/// the right-hand side of the matching estimate.
pub fn decay_fit(
    spec: &ProblemSpec,
    query: &DecayQuery,
    opts: &DecayOptions,
) -> Result<DecayReport> {
    spec.validate()?;
    let case = case_of(spec)?;
    query.validate(case)?;
    if query.dim != spec.dim {
        return Err(invalid("query and problem dimensions differ"));
    }
    let support = spec.support_radius();
    let t_max = *query.times.last().expect("validated");
    let half_width = match opts.half_width {
        Some(h) => h,
        None if support.is_finite() => 1.25 * (support + phi_of_t(t_max)?),
        None => {
            return Err(invalid(
                "decay fits need compactly supported data or an explicit half_width",
            ))
        }
    };
    let grid = decay_grid(spec, opts.spacing, half_width)?;
    let center = spec.radial_center().unwrap_or(ORIGIN);

    let norms: Vec<f64> = query
        .times
        .iter()
        .map(|&t| norm_at(spec, &grid, t, query, opts, &center))
        .collect::<Result<_>>()?;
    if norms.iter().any(|&n| !(n > 0.0)) {
        return Err(invalid("decay norms must be positive"));
    }

    let refinement_change = if opts.refinement_check {
        let coarse = decay_grid(spec, 2.0 * opts.spacing, half_width)?;
        let c = norm_at(spec, &coarse, t_max, query, opts, &center)?;
        let fine = *norms.last().expect("validated");
        let change = (c - fine).abs() / fine;
        if change > opts.refinement_tolerance {
            return Err(invalid(format!(
                "decay grid under-resolved: norm changes by {:.3}% between spacing {} and {}",
                100.0 * change,
                opts.spacing,
                2.0 * opts.spacing
            )));
        }
        Some(change)
    } else {
        None
    };

    let e = query.predicted_exponent(case);
    let p = query.p;
    let envelope: Vec<f64> = match case {
        DecayCase::Phi1 => {
            let a = data_norm(spec.phi1.as_ref().expect("case"), &grid, p)?;
            query.times.iter().map(|t| t.powf(e) * a).collect()
        }
        DecayCase::Phi0 => {
            let d = spec.phi0.as_ref().expect("case");
            let a = data_norm(d, &grid, p)?;
            let b = data_norm(&d.laplacian_data()?, &grid, p)?;
            query
                .times
                .iter()
                .map(|t| t.powf(e) * (t.powf(-2.0 / 3.0) * a + b))
                .collect()
        }
        DecayCase::Source => {
            let f = spec.source.as_ref().expect("case");
            let weight = source_weight(f, &grid, p, &query.times)?;
            query
                .times
                .iter()
                .zip(weight)
                .map(|(t, w)| t.powf(e) * w)
                .collect()
        }
    };
    let bound_constant = norms
        .iter()
        .zip(&envelope)
        .map(|(n, e)| n / e)
        .fold(0.0, f64::max);

    Ok(DecayReport {
        case,
        p,
        q: query.q,
        s: query.s,
        fitted_slope: loglog_slope(&query.times, &norms),
        predicted_exponent: e,
        bound_constant,
        times: query.times.clone(),
        norms,
        envelope,
        grid_points_per_axis: grid.points_per_axis(),
        spacing: grid.spacing(),
        refinement_change,
    })
}

/// `∫₀ᵗ τ ‖f(·, τ)‖_p dτ` at each `t`; a single separable power term has
/// the closed form `|c| ‖S‖_p t^{k+2} / (k+2)`.
fn source_weight(
    f: &crate::data::SourceFunction,
    grid: &Grid,
    p: f64,
    times: &[f64],
) -> Result<Vec<f64>> {
    if let [term] = f.terms() {
        let k = term.time.exponent;
        if !(k > -2.0) {
            return Err(invalid(
                "the source weight diverges for time exponents <= -2",
            ));
        }
        let s = data_norm(&term.space, grid, p)?;
        return Ok(times
            .iter()
            .map(|t| term.time.coefficient.abs() * s * t.powf(k + 2.0) / (k + 2.0))
            .collect());
    }
    let slices: Vec<GridField> = f
        .terms()
        .iter()
        .map(|term| GridField::from_fn(grid.clone(), None, |x| term.space.value(x)))
        .collect::<Result<_>>()?;
    let norm_at = |tau: f64| -> f64 {
        let vals: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                f.terms()
                    .iter()
                    .zip(&slices)
                    .map(|(term, sl)| term.time.at(tau) * sl.values()[i])
                    .sum()
            })
            .collect();
        let field = GridField::new(grid.clone(), vals, None).expect("finite source slice");
        grid_lp_norm(&field, p).expect("valid p")
    };
    let cfg = QuadratureConfig::default().with_tolerances(1e-8, 1e-6);
    times
        .iter()
        .map(|&t| Ok(integrate_graded_left(|tau| tau * norm_at(tau), 0.0, t, &cfg)?.value))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;

    #[test]
    fn lp_norm_of_block() {
        let g = Grid::centered(SpatialDim::TWO, 10, 0.5).unwrap();
        let f = GridField::from_fn(g, None, |x| {
            if x[0].abs() < 0.6 && x[1].abs() < 0.1 {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        // 3 cells of area 0.25
        assert!((grid_lp_norm(&f, 2.0).unwrap() - 0.75f64.sqrt()).abs() < 1e-14);
        assert_eq!(grid_lp_norm(&f, f64::INFINITY).unwrap(), 1.0);
        assert!(grid_lp_norm(&f, 0.5).is_err());
    }

    #[test]
    fn fft_round_trip() {
        let n = 12;
        let mut data: Vec<Complex64> = (0..n * n * n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), 0.0))
            .collect();
        let orig = data.clone();
        fft_nd(&mut data, n, 3, false);
        fft_nd(&mut data, n, 3, true);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn fourier_mode_is_an_eigenfunction() {
        let g = Grid::new(SpatialDim::TWO, 16, 2.0 * PI / 16.0, &[0.0, 0.0]).unwrap();
        let f = GridField::from_fn(g, None, |x| (2.0 * x[0] + x[1]).sin()).unwrap();
        let out = neg_laplacian_power(&f, 0.75).unwrap();
        assert!(out.nonzero_mean.is_none());
        let k = 5f64.powf(-0.75);
        for (a, b) in out.field.values().iter().zip(f.values()) {
            assert!((a - k * b).abs() < 1e-13);
        }
    }

    #[test]
    fn nonzero_mean_is_flagged() {
        let g = Grid::centered(SpatialDim::ONE, 16, 0.5).unwrap();
        let f = GridField::from_fn(g, None, |x| 1.0 + x[0].cos()).unwrap();
        assert!(neg_laplacian_power(&f, 0.5).unwrap().nonzero_mean.is_some());
        let same = neg_laplacian_power(&f, 0.0).unwrap();
        assert_eq!(same.field, f);
    }

    #[test]
    fn riesz_gaussian_at_center() {
        // Γ(3/2 - s)/Γ(3/2) (σ²/4)^s (πσ²)^{-3/2}
        let s = 0.75;
        let sigma = 1.3;
        let expect = gamma(0.75) / gamma(1.5)
            * (sigma * sigma / 4.0f64).powf(s)
            * (PI * sigma * sigma).powf(-1.5);
        assert!((riesz_gaussian(SpatialDim::THREE, sigma, s, 0.0) - expect).abs() < 1e-15);
    }

    #[test]
    fn riesz_gaussian_matches_radial_fourier_integral() {
        // 3-D: f(ρ) = (2π² ρ)⁻¹ ∫₀^∞ k^{1-2s} e^{-σ²k²/4} sin(kρ) dk
        let (s, sigma) = (0.75, 1.0);
        let cfg = QuadratureConfig::default().with_tolerances(1e-13, 1e-11);
        for rho in [0.5, 2.0, 6.0, 9.0] {
            let mut total = 0.0;
            let kmax = 14.0;
            let pieces = 64;
            for j in 0..pieces {
                let a = kmax * j as f64 / pieces as f64;
                let b = kmax * (j + 1) as f64 / pieces as f64;
                let f = |k: f64| {
                    k.powf(1.0 - 2.0 * s) * (-0.25 * sigma * sigma * k * k).exp() * (k * rho).sin()
                };
                total += if j == 0 {
                    integrate_graded_left(f, a, b, &cfg).unwrap().value
                } else {
                    integrate(f, a, b, &cfg).unwrap().value
                };
            }
            let direct = total / (2.0 * PI * PI * rho);
            let closed = riesz_gaussian(SpatialDim::THREE, sigma, s, rho);
            assert!(
                (direct - closed).abs() < 1e-9 * closed.abs().max(1e-3),
                "rho={rho}: {direct} vs {closed}"
            );
        }
    }

    #[test]
    fn hypergeometric_branches_agree() {
        for (a, b) in [(0.75, 1.5), (0.25, 1.0), (1.0, 1.5)] {
            let lo = hyp1f1_neg(a, b, 40.0);
            let hi = hyp1f1_neg(a, b, 40.0 + 1e-9);
            assert!((lo - hi).abs() < 1e-10 * lo.abs(), "{a} {b}: {lo} {hi}");
        }
    }

    #[test]
    fn query_validation() {
        let q = DecayQuery {
            p: 1.2,
            q: 6.0,
            s: 0.75,
            dim: SpatialDim::THREE,
            times: vec![1.0, 2.0],
        };
        assert!(q.validate(DecayCase::Phi1).is_ok());
        assert!((q.predicted_exponent(DecayCase::Phi1) + 1.0 / 6.0).abs() < 1e-15);
        assert!((q.predicted_exponent(DecayCase::Phi0) + 0.5).abs() < 1e-15);
        let bad = DecayQuery {
            q: 5.0,
            ..q.clone()
        };
        assert!(bad.validate(DecayCase::Phi1).is_err());
        let bad = DecayQuery {
            s: 0.5,
            ..q.clone()
        };
        assert!(bad.validate(DecayCase::Phi1).is_err());
        let bad = DecayQuery {
            times: vec![2.0, 1.0],
            ..q
        };
        assert!(bad.validate(DecayCase::Phi1).is_err());
    }

    #[test]
    fn constant_phi1_on_torus_does_not_decay() {
        let dim = SpatialDim::ONE;
        let spec = ProblemSpec::new(dim).with_phi1(SmoothData::constant(dim, 2.0));
        let q = DecayQuery {
            p: 2.0,
            q: 2.0,
            s: 0.0,
            dim,
            times: vec![1.0, 10.0, 100.0],
        };
        let opts = DecayOptions {
            half_width: Some(4.0),
            refinement_check: false,
            ..DecayOptions::default()
        };
        let r = decay_fit(&spec, &q, &opts).unwrap();
        assert!(r.fitted_slope.abs() < 1e-12);
        assert!(r.norms.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-12));
    }
}
