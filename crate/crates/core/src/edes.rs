//! Solution of the weighted Cauchy problem
//!
//! ```text
//! ψ_tt - t^{-4/3} Δψ + (2/t) ψ_t = f,
//! t ψ → φ0,   t ψ_t + ψ + 3 t^{-1/3} Δφ0 → φ1   as t → 0,
//! ```
//!
//! assembled from free waves evaluated at the cone radius `φ(t) = 3 t^{1/3}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{SingularityKind, SmoothData, SourceFunction, SourceTerm};
use crate::error::{domain, invalid, Error, Result};
use crate::free_wave::eval_free_wave;
use crate::grid::{Grid, GridField};
use crate::quadrature::{try_integrate, try_integrate_graded_left, QuadratureConfig};
use crate::space::{self, Point, SpatialDim};

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(domain(format!(
            "time must be positive and finite (got {t})"
        )))
    }
}

/// `φ(t) = 3 t^{1/3}`
pub fn phi_of_t(t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(3.0 * t.cbrt())
}

/// `τ(t) = ∫₀ᵗ ln s ds = t ln t - t`
pub fn tau_log(t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(t * t.ln() - t)
}

/// `τ(t) = t^{3-a} / ((3-a)(2-a))` for `a ∈ (2, 8/3)`.
pub fn tau_power(t: f64, a: f64) -> Result<f64> {
    check_time(t)?;
    check_power(a)?;
    Ok(t.powf(3.0 - a) / ((3.0 - a) * (2.0 - a)))
}

fn check_power(a: f64) -> Result<()> {
    if a > 2.0 && a < 8.0 / 3.0 {
        Ok(())
    } else {
        Err(domain(format!(
            "singularity exponent must lie in (2, 8/3) (got {a})"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub gamma: f64,
    pub phi_t: f64,
    pub phi_b: f64,
    pub r: f64,
}

/// Kernel `((φ_t+φ_b)² - r²)^{-γ} F(γ, γ; 1; ζ)` at `γ = -1`, where the
/// hypergeometric factor is `1 + ζ`.
pub fn kernel_e(p: &KernelParams) -> Result<f64> {
    if p.gamma != -1.0 {
        return Err(Error::UnsupportedGamma(p.gamma));
    }
    let base = (p.phi_t + p.phi_b).powi(2) - p.r * p.r;
    if !(base > 0.0) {
        return Err(domain(format!(
            "kernel needs (phi_t + phi_b)^2 - r^2 > 0 (got {base})"
        )));
    }
    let zeta = ((p.phi_t - p.phi_b).powi(2) - p.r * p.r) / base;
    Ok(base * (1.0 + zeta))
}

/// Dimension, data and quadrature settings of one Cauchy problem.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub dim: SpatialDim,
    pub phi0: Option<SmoothData>,
    pub phi1: Option<SmoothData>,
    pub source: Option<SourceFunction>,
    pub quad: QuadratureConfig,
}

impl ProblemSpec {
    pub fn new(dim: SpatialDim) -> Self {
        ProblemSpec {
            dim,
            phi0: None,
            phi1: None,
            source: None,
            quad: QuadratureConfig::default(),
        }
    }

    pub fn with_phi0(mut self, d: SmoothData) -> Self {
        self.phi0 = Some(d);
        self
    }

    pub fn with_phi1(mut self, d: SmoothData) -> Self {
        self.phi1 = Some(d);
        self
    }

    pub fn with_source(mut self, f: SourceFunction) -> Self {
        self.source = Some(f);
        self
    }

    pub fn with_quad(mut self, quad: QuadratureConfig) -> Self {
        self.quad = quad;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.quad.validate()?;
        if self.phi0.is_none() && self.phi1.is_none() && self.source.is_none() {
            return Err(invalid("problem has no data (need phi0, phi1 or a source)"));
        }
        let dims = [
            self.phi0.as_ref().map(|d| d.dim()),
            self.phi1.as_ref().map(|d| d.dim()),
            self.source.as_ref().map(|f| f.dim()),
        ];
        if dims.iter().flatten().any(|&d| d != self.dim) {
            return Err(invalid(format!(
                "all data must be {}-dimensional like the problem",
                self.dim
            )));
        }
        if let Some(f) = &self.source {
            f.class().validate()?;
        }
        Ok(())
    }

    /// Radius of the ball about the origin that holds all data.
    pub fn support_radius(&self) -> f64 {
        [
            self.phi0.as_ref().map(SmoothData::support_radius),
            self.phi1.as_ref().map(SmoothData::support_radius),
            self.source.as_ref().map(SourceFunction::support_radius),
        ]
        .into_iter()
        .flatten()
        .fold(0.0, f64::max)
    }

    fn spatial_data(&self) -> Vec<&SmoothData> {
        let mut out: Vec<&SmoothData> = self.phi0.iter().chain(self.phi1.iter()).collect();
        if let Some(f) = &self.source {
            out.extend(f.terms().iter().map(|t| &t.space));
        }
        out
    }

    /// Common center when every datum is radially symmetric about one point;
    /// the solution is then radial about it as well.
    pub fn radial_center(&self) -> Option<Point> {
        let mut center = None;
        for d in self.spatial_data() {
            if d.is_identically_zero() {
                continue;
            }
            let c = d.field().radial()?.center();
            match center {
                None => center = Some(c),
                Some(prev) if prev == c => {}
                Some(_) => return None,
            }
        }
        center
    }
}

/// `t⁻¹ v_{φ0}(x, φ(t)) - 3 t^{-2/3} ∂_r v_{φ0}(x, φ(t))`
pub fn phi0_part(phi0: &SmoothData, x: &Point, t: f64, quad: &QuadratureConfig) -> Result<f64> {
    let phi = phi_of_t(t)?;
    let s = eval_free_wave(phi0, x, phi, quad)?;
    Ok(s.v / t - 3.0 * s.dv_dr / (t.cbrt() * t.cbrt()))
}

fn outside_cone(support: f64, x: &Point, phi: f64) -> bool {
    support.is_finite() && space::norm(x) > support + phi
}

/// Radii `r` for which `v(x, r)` of data supported in `|y| ≤ support` can be
/// nonzero. In two dimensions the disk keeps covering the support.
fn radius_window(support: f64, dim: SpatialDim, x: &Point) -> (f64, f64) {
    if !support.is_finite() {
        return (0.0, f64::INFINITY);
    }
    let d = space::norm(x);
    let hi = if dim.get() == 2 {
        f64::INFINITY
    } else {
        d + support
    };
    ((d - support).max(0.0), hi)
}

/// `∫_lo^hi` clipped to `[lo', hi']`, zero when the ranges do not meet.
fn integrate_clipped<F>(
    f: F,
    lo: f64,
    hi: f64,
    window: (f64, f64),
    quad: &QuadratureConfig,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (a, b) = (lo.max(window.0), hi.min(window.1));
    if a >= b {
        return Ok(0.0);
    }
    Ok(try_integrate(f, a, b, quad)?.value)
}

/// `(3/2) ∫₀¹ v_{φ1}(x, φ(t) s) (1 - s²) ds`
pub fn phi1_part(phi1: &SmoothData, x: &Point, t: f64, quad: &QuadratureConfig) -> Result<f64> {
    let phi = phi_of_t(t)?;
    if outside_cone(phi1.support_radius(), x, phi) {
        return Ok(0.0);
    }
    let (lo, hi) = radius_window(phi1.support_radius(), phi1.dim(), x);
    let r = integrate_clipped(
        |s| Ok(eval_free_wave(phi1, x, phi * s, quad)?.v * (1.0 - s * s)),
        0.0,
        1.0,
        (lo / phi, hi / phi),
        quad,
    )?;
    Ok(1.5 * r)
}

/// `Σ_j T_j(l) v_{S_j}(x, r)`
fn source_wave(
    terms: &[SourceTerm],
    x: &Point,
    r: f64,
    l: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let mut acc = 0.0;
    for term in terms {
        let c = term.time.at(l);
        if c != 0.0 {
            acc += c * eval_free_wave(&term.space, x, r, quad)?.v;
        }
    }
    Ok(acc)
}

fn require_regular(f: &SourceFunction) -> Result<()> {
    match f.class().kind {
        SingularityKind::Regular { .. } => Ok(()),
        other => Err(Error::SingularityMismatch(format!(
            "the regular source formula does not apply to a {other:?} source"
        ))),
    }
}

/// Source contribution for a regular source,
///
/// ```text
/// (3/2) t² ∫₀¹ db ∫₀^{1-b^{1/3}} ds  b v_f(x, φ(t) s; t b) (1 + b^{2/3} - s²).
/// ```
///
/// Every term `c l^k S(x)` of `f` is separable, so the `b` integral over
/// `[0, (1-s)³]` is done in closed form and one integral in `s` remains.
pub fn source_part(f: &SourceFunction, x: &Point, t: f64, quad: &QuadratureConfig) -> Result<f64> {
    require_regular(f)?;
    let phi = phi_of_t(t)?;
    if outside_cone(f.support_radius(), x, phi) {
        return Ok(0.0);
    }
    let (lo, hi) = radius_window(f.support_radius(), f.dim(), x);
    // σ = 1 - s, graded towards the tip of the cone at σ = 0
    let (a, b) = ((1.0 - hi / phi).max(0.0), (1.0 - lo / phi).min(1.0));
    if a >= b {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for term in f.terms() {
        let k = term.time.exponent;
        let c = term.time.coefficient * t.powf(k);
        if c == 0.0 {
            continue;
        }
        let r = try_integrate_graded_left(
            |sigma| {
                let s = 1.0 - sigma;
                let big_b = sigma * sigma * sigma;
                let w = (1.0 - s * s) * big_b.powf(k + 2.0) / (k + 2.0)
                    + big_b.powf(k + 8.0 / 3.0) / (k + 8.0 / 3.0);
                if w == 0.0 {
                    return Ok(0.0);
                }
                Ok(eval_free_wave(&term.space, x, phi * s, quad)?.v * w)
            },
            a,
            b,
            quad,
        )?;
        total += c * r.value;
    }
    Ok(1.5 * t * t * total)
}

/// `∫₀^L l^p (α ln l + β) dl` for `p > -1`.
fn log_power_moment(p: f64, alpha: f64, beta: f64, big_l: f64) -> f64 {
    if big_l <= 0.0 {
        return 0.0;
    }
    let q = p + 1.0;
    big_l.powf(q) * (alpha * (big_l.ln() / q - 1.0 / (q * q)) + beta / q)
}

/// Time weight `w(l) = c l^p (α ln l + β)` of a separable integrand
/// `w(l) v(x, r)` in the `(l, r)` form.
#[derive(Debug, Clone, Copy)]
struct TimeWeight {
    c: f64,
    p: f64,
    alpha: f64,
    beta: f64,
}

impl TimeWeight {
    fn power(c: f64, p: f64) -> Self {
        TimeWeight {
            c,
            p,
            alpha: 0.0,
            beta: 1.0,
        }
    }

    /// `∫₀^{L(r)} (φ(t)² + φ(l)² - r²) w(l) dl` with `φ(L(r)) = φ(t) - r`.
    fn moment(&self, phi_t: f64, r: f64) -> f64 {
        let big_l = ((phi_t - r) / 3.0).powi(3);
        let m = |p| log_power_moment(p, self.alpha, self.beta, big_l);
        self.c * ((phi_t * phi_t - r * r) * m(self.p) + 9.0 * m(self.p + 2.0 / 3.0))
    }
}

/// `(1/18t) Σ_j ∫₀^{φ(t)} dr v_j(x, r) ∫₀^{L(r)} (φ(t)² + φ(l)² - r²) w_j(l) dl`,
/// the `(l, r)` form with the `l` integrals done in closed form.
fn separable_lr(
    t: f64,
    x: &Point,
    window: (f64, f64),
    quad: &QuadratureConfig,
    parts: &[(TimeWeight, &SmoothData)],
) -> Result<f64> {
    let phi_t = phi_of_t(t)?;
    // ρ = φ(t) - r, graded towards the tip of the cone at ρ = 0
    let (a, b) = ((phi_t - window.1).max(0.0), phi_t - window.0);
    if a >= b {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (w, data) in parts {
        if w.c == 0.0 || data.is_identically_zero() {
            continue;
        }
        let r = try_integrate_graded_left(
            |rho| {
                let r = phi_t - rho;
                let m = w.moment(phi_t, r);
                if m == 0.0 {
                    return Ok(0.0);
                }
                Ok(eval_free_wave(data, x, r, quad)?.v * m)
            },
            a,
            b,
            quad,
        )?;
        total += r.value;
    }
    Ok(total / (18.0 * t))
}

/// `(1/18t) ∫₀ᵗ dl ∫₀^{φ(t)-φ(l)} dr (φ(t)² + φ(l)² - r²) B(l, r)`
fn lr_integral<B>(
    t: f64,
    window: (f64, f64),
    quad: &QuadratureConfig,
    mut bracket: B,
) -> Result<f64>
where
    B: FnMut(f64, f64) -> Result<f64>,
{
    let phi_t = phi_of_t(t)?;
    let inner_quad = quad.nested();
    let outer = try_integrate_graded_left(
        |l| {
            if l == 0.0 {
                return Ok(0.0);
            }
            let phi_l = 3.0 * l.cbrt();
            integrate_clipped(
                |r| Ok((phi_t * phi_t + phi_l * phi_l - r * r) * bracket(l, r)?),
                0.0,
                phi_t - phi_l,
                window,
                &inner_quad,
            )
        },
        0.0,
        t,
        quad,
    )?;
    Ok(outer.value / (18.0 * t))
}

/// The regular source contribution in the `(l, r)` parametrization; equal
/// to [`source_part`] after `l = t b`, `r = φ(t) s`.
pub fn source_part_lr(
    f: &SourceFunction,
    x: &Point,
    t: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    require_regular(f)?;
    if outside_cone(f.support_radius(), x, phi_of_t(t)?) {
        return Ok(0.0);
    }
    let window = radius_window(f.support_radius(), f.dim(), x);
    lr_integral(t, window, quad, |l, r| {
        Ok(l * source_wave(f.terms(), x, r, l, quad)?)
    })
}

/// Time weight of the `Δf0` correction, `τ(l) / l^{4/3}`.
#[derive(Debug, Clone, Copy)]
enum Correction {
    /// `τ(l) = l ln l - l`
    Log,
    /// `τ(l) = l^{3-a} / ((3-a)(2-a))`
    Power(f64),
}

impl Correction {
    fn tau(self, t: f64) -> f64 {
        match self {
            Correction::Log => t * t.ln() - t,
            Correction::Power(a) => t.powf(3.0 - a) / ((3.0 - a) * (2.0 - a)),
        }
    }

    fn weight(self) -> TimeWeight {
        match self {
            Correction::Log => TimeWeight {
                c: 1.0,
                p: -1.0 / 3.0,
                alpha: 1.0,
                beta: -1.0,
            },
            Correction::Power(a) => TimeWeight::power(1.0 / ((3.0 - a) * (2.0 - a)), 5.0 / 3.0 - a),
        }
    }
}

/// Shared body of the singular-source formulas,
///
/// ```text
/// τ(t) f0(x) / t + (1/18t) ∫₀ᵗ dl ∫₀^{φ(t)-φ(l)} dr (φ(t)² + φ(l)² - r²)
///     [l v_g(x, r; l) + τ(l) / l^{4/3} v_{Δf0}(x, r)]
/// ```
///
/// with `g` the regular remainder of `f`. This is `l v_f - l w(l) v_{f0}`
/// without the cancellation near `l = 0`.
fn singular_solve(
    f: &SourceFunction,
    x: &Point,
    t: f64,
    quad: &QuadratureConfig,
    kind: Correction,
) -> Result<f64> {
    let f0 = f
        .class()
        .f0
        .as_ref()
        .ok_or_else(|| Error::SingularityMismatch("singular source without f0".into()))?;
    let lap_f0 = f0.laplacian_data()?;
    let phi_t = phi_of_t(t)?;
    let leading = f0.value(x) * kind.tau(t) / t;
    if outside_cone(f.support_radius(), x, phi_t) {
        return Ok(leading);
    }
    let mut parts: Vec<(TimeWeight, &SmoothData)> = f
        .regular_part()
        .iter()
        .map(|term| {
            (
                TimeWeight::power(term.time.coefficient, term.time.exponent + 1.0),
                &term.space,
            )
        })
        .collect();
    parts.push((kind.weight(), &lap_f0));
    let window = radius_window(f.support_radius(), f.dim(), x);
    Ok(leading + separable_lr(t, x, window, quad, &parts)?)
}

/// Solution for a source `f ~ t^{-2} f0` with `t ψ → 0` and
/// `t ψ_t + ψ - f0 ln t → 0`.
pub fn solve_log_singular(
    f: &SourceFunction,
    x: &Point,
    t: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    match f.class().kind {
        SingularityKind::LogSingular => {}
        other => {
            return Err(Error::SingularityMismatch(format!(
                "expected a log-singular source, got {other:?}"
            )))
        }
    }
    check_time(t)?;
    singular_solve(f, x, t, quad, Correction::Log)
}

/// Solution for a source `f ~ t^{-a} f0`, `a ∈ (2, 8/3)`.
pub fn solve_power_singular(
    f: &SourceFunction,
    x: &Point,
    t: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let a = match f.class().kind {
        SingularityKind::PowerSingular { a } => a,
        other => {
            return Err(Error::SingularityMismatch(format!(
                "expected a power-singular source, got {other:?}"
            )))
        }
    };
    check_time(t)?;
    check_power(a)?;
    singular_solve(f, x, t, quad, Correction::Power(a))
}

/// Source contribution dispatched on the singularity class.
pub fn source_contribution(
    f: &SourceFunction,
    x: &Point,
    t: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    match f.class().kind {
        SingularityKind::Regular { .. } => source_part(f, x, t, quad),
        SingularityKind::LogSingular => solve_log_singular(f, x, t, quad),
        SingularityKind::PowerSingular { .. } => solve_power_singular(f, x, t, quad),
    }
}

/// `ψ(x, t)` as the sum of the contributions of the data present.
pub fn solve(spec: &ProblemSpec, x: &Point, t: f64) -> Result<f64> {
    check_time(t)?;
    let mut psi = 0.0;
    if let Some(d) = &spec.phi0 {
        psi += phi0_part(d, x, t, &spec.quad)?;
    }
    if let Some(d) = &spec.phi1 {
        psi += phi1_part(d, x, t, &spec.quad)?;
    }
    if let Some(f) = &spec.source {
        psi += source_contribution(f, x, t, &spec.quad)?;
    }
    Ok(psi)
}

/// Evaluates `solve` at many points in parallel.
pub fn solve_at_points(spec: &ProblemSpec, points: &[Point], t: f64) -> Result<Vec<f64>> {
    spec.validate()?;
    points.par_iter().map(|x| solve(spec, x, t)).collect()
}

/// `ψ(·, t)` sampled on a grid. When the data share a radial center that
/// sits on a grid node, the solution is evaluated once per distinct
/// distance; nodes outside the influence cone are set to zero.
pub fn solve_on_grid(spec: &ProblemSpec, grid: &Grid, t: f64) -> Result<GridField> {
    spec.validate()?;
    if grid.dim() != spec.dim {
        return Err(invalid("grid and problem dimensions differ"));
    }
    let reach = spec.support_radius() + phi_of_t(t)?;
    let eval = |x: &Point| -> Result<f64> {
        if reach.is_finite() && space::norm(x) > reach {
            Ok(0.0)
        } else {
            solve(spec, x, t)
        }
    };
    let values = match spec.radial_center().and_then(|c| grid.node_index_of(&c)) {
        Some(center) => {
            let keys: Vec<u64> = (0..grid.len())
                .map(|i| grid.squared_index_distance(i, &center))
                .collect();
            let mut distinct = keys.clone();
            distinct.sort_unstable();
            distinct.dedup();
            let c = grid.node_point(&center);
            let h = grid.spacing();
            let samples: Vec<f64> = distinct
                .par_iter()
                .map(|&k| {
                    let mut x = c;
                    x[0] += h * (k as f64).sqrt();
                    eval(&x)
                })
                .collect::<Result<_>>()?;
            keys.iter()
                .map(|k| samples[distinct.binary_search(k).expect("key present")])
                .collect()
        }
        None => (0..grid.len())
            .into_par_iter()
            .map(|i| eval(&grid.point(i)))
            .collect::<Result<Vec<f64>>>()?,
    };
    GridField::new(grid.clone(), values, Some(t))
}

// ---------------------------------------------------------------------------
// Operator identity and finite-difference operators
// ---------------------------------------------------------------------------

fn fd_laplacian(
    psi: &dyn Fn(&Point, f64) -> f64,
    dim: SpatialDim,
    x: &Point,
    t: f64,
    h: f64,
) -> f64 {
    let c = psi(x, t);
    (0..dim.get())
        .map(|k| {
            let mut p = *x;
            let mut m = *x;
            p[k] += h;
            m[k] -= h;
            (psi(&p, t) - 2.0 * c + psi(&m, t)) / (h * h)
        })
        .sum()
}

/// `L ψ = ψ_tt - t^{-4/3} Δψ + (2/t) ψ_t` by second-order central differences.
pub fn apply_l_fd(
    psi: &dyn Fn(&Point, f64) -> f64,
    dim: SpatialDim,
    x: &Point,
    t: f64,
    h: f64,
) -> f64 {
    let (p, c, m) = (psi(x, t + h), psi(x, t), psi(x, t - h));
    (p - 2.0 * c + m) / (h * h) - fd_laplacian(psi, dim, x, t, h) / (t * t.cbrt())
        + (p - m) / (t * h)
}

/// `S u = u_tt - t^{-4/3} Δu` by second-order central differences.
pub fn apply_s_fd(
    u: &dyn Fn(&Point, f64) -> f64,
    dim: SpatialDim,
    x: &Point,
    t: f64,
    h: f64,
) -> f64 {
    let (p, c, m) = (u(x, t + h), u(x, t), u(x, t - h));
    (p - 2.0 * c + m) / (h * h) - fd_laplacian(u, dim, x, t, h) / (t * t.cbrt())
}

/// `|t⁻¹ S(t ψ) - L ψ|` with both sides by central differences of step `h`.
pub fn check_operator_identity(
    psi: &dyn Fn(&Point, f64) -> f64,
    dim: SpatialDim,
    x: &Point,
    t: f64,
    h: f64,
) -> Result<f64> {
    if !(h > 0.0 && t > h) {
        return Err(domain(format!(
            "operator identity needs t > h > 0 (got t = {t}, h = {h})"
        )));
    }
    let u = |y: &Point, s: f64| s * psi(y, s);
    let lhs = apply_s_fd(&u, dim, x, t, h) / t;
    let rhs = apply_l_fd(psi, dim, x, t, h);
    Ok((lhs - rhs).abs())
}

// ---------------------------------------------------------------------------
// Weighted initial conditions
// ---------------------------------------------------------------------------

/// Deviations from the weighted initial conditions along a time sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IcReport {
    pub times: Vec<f64>,
    /// `|t ψ - target₀|`
    pub value_deviation: Vec<f64>,
    /// `|t ψ_t + ψ - target₁|`
    pub velocity_deviation: Vec<f64>,
}

impl IcReport {
    pub fn final_deviations(&self) -> (f64, f64) {
        (
            self.value_deviation.last().copied().unwrap_or(f64::NAN),
            self.velocity_deviation.last().copied().unwrap_or(f64::NAN),
        )
    }

    /// Both sequences non-increasing, allowing `slack` of absolute noise.
    pub fn is_monotone(&self, slack: f64) -> bool {
        let mono = |v: &[f64]| v.windows(2).all(|w| w[1] <= w[0] + slack);
        mono(&self.value_deviation) && mono(&self.velocity_deviation)
    }
}

fn check_sequence(ts: &[f64]) -> Result<()> {
    if ts.is_empty() || ts.iter().any(|&t| !(t > 0.0)) || ts.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid(
            "time sequence must be positive and strictly decreasing",
        ));
    }
    Ok(())
}

/// `(t ψ)_t = t ψ_t + ψ` by a central difference of step `min(t/4, 1e-3 t)`.
fn weighted_pair(psi: &dyn Fn(f64) -> Result<f64>, t: f64) -> Result<(f64, f64)> {
    let dt = (0.25 * t).min(1e-3 * t);
    let u = t * psi(t)?;
    let up = (t + dt) * psi(t + dt)?;
    let um = (t - dt) * psi(t - dt)?;
    Ok((u, (up - um) / (2.0 * dt)))
}

/// Deviations from `t ψ → φ0` and `t ψ_t + ψ + 3 t^{-1/3} Δφ0 → φ1` at `x`.
pub fn check_initial_conditions(spec: &ProblemSpec, x: &Point, ts: &[f64]) -> Result<IcReport> {
    spec.validate()?;
    check_sequence(ts)?;
    let phi0 = spec.phi0.as_ref().map_or(0.0, |d| d.value(x));
    let lap0 = spec.phi0.as_ref().map_or(0.0, |d| d.laplacian(x));
    let phi1 = spec.phi1.as_ref().map_or(0.0, |d| d.value(x));
    let pairs: Vec<(f64, f64)> = ts
        .par_iter()
        .map(|&t| weighted_pair(&|s| solve(spec, x, s), t))
        .collect::<Result<_>>()?;
    Ok(IcReport {
        times: ts.to_vec(),
        value_deviation: pairs.iter().map(|(u, _)| (u - phi0).abs()).collect(),
        velocity_deviation: pairs
            .iter()
            .zip(ts)
            .map(|((_, du), t)| (du + 3.0 * lap0 / t.cbrt() - phi1).abs())
            .collect(),
    })
}

/// Deviations from the weighted limits of a singular-source solution:
/// `t ψ - τ(t) f0 → 0` and `t ψ_t + ψ - τ'(t) f0 → 0`, where `τ' = ln t` in
/// the log case and `t^{2-a}/(2-a)` in the power case. (In the log case
/// the first limit is the same as `t ψ → 0` since `τ(t) → 0`.)
pub fn check_singular_initial_conditions(
    f: &SourceFunction,
    x: &Point,
    ts: &[f64],
    quad: &QuadratureConfig,
) -> Result<IcReport> {
    check_sequence(ts)?;
    let f0 = f
        .class()
        .f0
        .as_ref()
        .ok_or_else(|| Error::SingularityMismatch("regular source has no weighted limits".into()))?
        .value(x);
    type Target = Box<dyn Fn(f64) -> f64 + Sync>;
    let (tau, dtau): (Target, Target) = match f.class().kind {
        SingularityKind::LogSingular => (Box::new(|_| 0.0), Box::new(|t: f64| t.ln())),
        SingularityKind::PowerSingular { a } => (
            Box::new(move |t: f64| t.powf(3.0 - a) / ((3.0 - a) * (2.0 - a))),
            Box::new(move |t: f64| t.powf(2.0 - a) / (2.0 - a)),
        ),
        SingularityKind::Regular { .. } => {
            return Err(Error::SingularityMismatch(
                "regular source has no weighted limits".into(),
            ))
        }
    };
    let pairs: Vec<(f64, f64)> = ts
        .par_iter()
        .map(|&t| weighted_pair(&|s| source_contribution(f, x, s, quad), t))
        .collect::<Result<_>>()?;
    Ok(IcReport {
        times: ts.to_vec(),
        value_deviation: pairs
            .iter()
            .zip(ts)
            .map(|((u, _), &t)| (u - tau(t) * f0).abs())
            .collect(),
        velocity_deviation: pairs
            .iter()
            .zip(ts)
            .map(|((_, du), &t)| (du - dtau(t) * f0).abs())
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::ORIGIN;

    fn quad() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn phi_and_tau_values() {
        assert_eq!(phi_of_t(1.0).unwrap(), 3.0);
        assert!((phi_of_t(1.0 / 27.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((phi_of_t(8.0).unwrap() - 6.0).abs() < 1e-15);
        assert!(phi_of_t(0.0).is_err());
        assert_eq!(tau_log(1.0).unwrap(), -1.0);
        assert!(tau_log(std::f64::consts::E).unwrap().abs() < 1e-15);
        assert!((tau_power(1.0, 2.5).unwrap() + 4.0).abs() < 1e-14);
        assert!((tau_power(16.0, 2.25).unwrap() + 128.0 / 3.0).abs() < 1e-12);
        assert!(tau_power(1.0, 2.7).is_err());
        assert!(tau_log(-1.0).is_err());
    }

    #[test]
    fn kernel_examples() {
        let k = |phi_t, phi_b, r| {
            kernel_e(&KernelParams {
                gamma: -1.0,
                phi_t,
                phi_b,
                r,
            })
            .unwrap()
        };
        assert_eq!(k(1.0, 1.0, 0.0), 4.0);
        assert_eq!(k(2.0, 1.0, 1.0), 8.0);
        assert!(matches!(
            kernel_e(&KernelParams {
                gamma: -0.5,
                phi_t: 1.0,
                phi_b: 1.0,
                r: 0.0
            }),
            Err(Error::UnsupportedGamma(_))
        ));
        assert!(kernel_e(&KernelParams {
            gamma: -1.0,
            phi_t: 1.0,
            phi_b: 0.0,
            r: 2.0
        })
        .is_err());
    }

    #[test]
    fn closed_form_constants() {
        for n in 1..=3 {
            let dim = SpatialDim::new(n).unwrap();
            let spec = ProblemSpec::new(dim)
                .with_phi0(SmoothData::constant(dim, 2.0))
                .with_phi1(SmoothData::constant(dim, -1.5))
                .with_source(SourceFunction::constant(dim, 0.75));
            for t in [0.1, 1.0, 7.5] {
                let psi = solve(&spec, &[0.3, 0.2, -0.1], t).unwrap();
                let exact = 2.0 / t - 1.5 + 0.75 * t * t / 6.0;
                assert!((psi - exact).abs() < 1e-10, "n={n} t={t}: {psi} vs {exact}");
            }
        }
    }

    #[test]
    fn affine_data_in_one_dimension() {
        let dim = SpatialDim::ONE;
        let lin = SmoothData::affine(dim, &[1.0], 0.0).unwrap();
        let x = [1.7, 0.0, 0.0];
        assert!((phi0_part(&lin, &x, 2.0, &quad()).unwrap() - 1.7 / 2.0).abs() < 1e-14);
        assert!((phi1_part(&lin, &x, 2.0, &quad()).unwrap() - 1.7).abs() < 1e-12);
    }

    #[test]
    fn source_forms_agree_for_gaussian() {
        let dim = SpatialDim::THREE;
        let g = SmoothData::gaussian(dim, &[0.0, 0.0, 0.0], 1.0, 1.0).unwrap();
        let f = SourceFunction::separable(g, -1.0).unwrap();
        let x = [0.4, 0.1, 0.0];
        let a = source_part(&f, &x, 1.3, &quad()).unwrap();
        let b = source_part_lr(&f, &x, 1.3, &quad()).unwrap();
        assert!((a - b).abs() <= 1e-8 * a.abs(), "{a} vs {b}");
    }

    #[test]
    fn singular_closed_forms() {
        let dim = SpatialDim::ONE;
        let one = SmoothData::constant(dim, 1.0);
        let log = SourceFunction::log_singular(one.clone(), vec![]).unwrap();
        for t in [0.2, 1.0, 3.0] {
            let psi = solve_log_singular(&log, &ORIGIN, t, &quad()).unwrap();
            assert!((psi - (t.ln() - 1.0)).abs() < 1e-12);
        }
        let pow = SourceFunction::power_singular(2.5, one, vec![]).unwrap();
        let psi = solve_power_singular(&pow, &ORIGIN, 2.0, &quad()).unwrap();
        assert!((psi - 2f64.powf(-0.5) / (0.5 * -0.5)).abs() < 1e-12);
        assert!(matches!(
            source_part(&pow, &ORIGIN, 1.0, &quad()),
            Err(Error::SingularityMismatch(_))
        ));
        assert!(solve_log_singular(&pow, &ORIGIN, 1.0, &quad()).is_err());
    }

    #[test]
    fn operator_identity_is_exact_for_the_stencils() {
        let psi = |x: &Point, t: f64| x[0] * x[0] * t + (x[1] * t).sin() / t;
        let r =
            check_operator_identity(&psi, SpatialDim::TWO, &[0.3, 0.8, 0.0], 1.2, 0.01).unwrap();
        assert!(r < 1e-8, "{r}");
        assert!(check_operator_identity(&psi, SpatialDim::ONE, &ORIGIN, 0.01, 0.02).is_err());
    }

    #[test]
    fn ic_check_is_exact_for_constants() {
        let dim = SpatialDim::THREE;
        let ts: Vec<f64> = (3..8).map(|k| 2f64.powi(-k)).collect();
        let spec = ProblemSpec::new(dim).with_phi0(SmoothData::constant(dim, 1.5));
        let r = check_initial_conditions(&spec, &ORIGIN, &ts).unwrap();
        assert!(r.value_deviation.iter().all(|&d| d < 1e-13));
        assert!(r.velocity_deviation.iter().all(|&d| d < 1e-9));
        let spec = ProblemSpec::new(dim).with_phi1(SmoothData::constant(dim, 1.5));
        let r = check_initial_conditions(&spec, &ORIGIN, &ts).unwrap();
        // ψ = c, so t ψ - 0 = c t vanishes only in the limit.
        let (a, b) = r.final_deviations();
        assert!((a - 1.5 * ts[4]).abs() < 1e-12 && b < 1e-9, "{a} {b}");
        assert!(check_initial_conditions(&spec, &ORIGIN, &[0.1, 0.2]).is_err());
    }

    #[test]
    fn spec_validation() {
        let spec = ProblemSpec::new(SpatialDim::ONE);
        assert!(spec.validate().is_err());
        let spec =
            ProblemSpec::new(SpatialDim::ONE).with_phi0(SmoothData::constant(SpatialDim::TWO, 1.0));
        assert!(spec.validate().is_err());
    }
}
