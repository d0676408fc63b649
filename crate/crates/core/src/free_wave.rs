//! Flat-space free waves `v_rr = Δv`, `v(·,0) = φ`, `v_r(·,0) = 0` for n ≤ 3.
//!
//! Derivatives in `r` are always taken under the integral sign with the
//! analytic gradient and Laplacian of the datum. The second derivative uses
//! `v_r(x, r) = ∫₀ʳ v_{Δφ}(x, s) ds`, which reduces to `r` times the mean of
//! `Δφ` in n = 2, 3.

use std::f64::consts::PI;

use serde::Serialize;

use crate::data::{RadialProfile, SmoothData};
use crate::error::{invalid, Error, Result};
use crate::quadrature::{GaussRule, QuadratureConfig};
use crate::space::{self, Point};

/// Initial polar Gauss order and azimuthal trapezoid count of the angular rules.
pub const SPHERE_POLAR_ORDER: usize = 32;
pub const SPHERE_AZIMUTH_NODES: usize = 64;
/// Number of doublings of both counts before giving up.
const SPHERE_LEVELS: usize = 5;

/// `v(x, r)` and `∂_r v(x, r)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct FreeWaveSample {
    pub v: f64,
    pub dv_dr: f64,
}

impl FreeWaveSample {
    pub const ZERO: FreeWaveSample = FreeWaveSample { v: 0.0, dv_dr: 0.0 };

    fn checked(self) -> Result<Self> {
        if self.v.is_finite() && self.dv_dr.is_finite() {
            Ok(self)
        } else {
            Err(Error::NonFiniteIntegrand {
                at: f64::NAN,
                value: if self.v.is_finite() {
                    self.dv_dr
                } else {
                    self.v
                },
            })
        }
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r >= 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!(
            "free-wave radius must be finite and >= 0 (got {r})"
        )))
    }
}

fn check_dim(data: &SmoothData, n: usize) -> Result<()> {
    if data.dim().get() == n {
        Ok(())
    } else {
        Err(invalid(format!(
            "this formula needs {n}-dimensional data (got dimension {})",
            data.dim()
        )))
    }
}

/// d'Alembert's formula in one dimension.
pub fn eval_dalembert(data: &SmoothData, x: f64, r: f64) -> Result<FreeWaveSample> {
    check_dim(data, 1)?;
    check_radius(r)?;
    if r == 0.0 {
        return Ok(FreeWaveSample {
            v: data.value(&[x, 0.0, 0.0]),
            dv_dr: 0.0,
        });
    }
    let p = [x + r, 0.0, 0.0];
    let m = [x - r, 0.0, 0.0];
    FreeWaveSample {
        v: 0.5 * (data.value(&p) + data.value(&m)),
        dv_dr: 0.5 * (data.gradient(&p)[0] - data.gradient(&m)[0]),
    }
    .checked()
}

/// Angular averages gathered in one sweep over the nodes.
#[derive(Debug, Clone, Copy, Default)]
struct Means {
    value: f64,
    /// mean of `∇φ(x + r y) · y` (the derivative of the value mean in `r`)
    radial: f64,
    laplacian: f64,
}

impl Means {
    fn close_to(&self, other: &Means, r: f64, cfg: &QuadratureConfig) -> bool {
        let v = self.value + r * self.radial;
        let ov = other.value + r * other.radial;
        let d = r * self.laplacian;
        let od = r * other.laplacian;
        (v - ov).abs() <= cfg.tolerance_for(v)
            && (d - od).abs() <= cfg.tolerance_for(d)
            && (self.value - other.value).abs() <= cfg.tolerance_for(self.value)
    }
}

fn sphere_means(data: &SmoothData, x: &Point, r: f64, polar: usize, azimuth: usize) -> Means {
    let rule = GaussRule::cached(polar);
    let mut acc = Means::default();
    let (sin_a, cos_a): (Vec<f64>, Vec<f64>) = (0..azimuth)
        .map(|j| (2.0 * PI * j as f64 / azimuth as f64).sin_cos())
        .unzip();
    for (&mu, &w) in rule.nodes.iter().zip(&rule.weights) {
        let rho = (1.0 - mu * mu).max(0.0).sqrt();
        let mut ring = Means::default();
        for j in 0..azimuth {
            let y = [rho * cos_a[j], rho * sin_a[j], mu];
            let jet = data.jet(&space::axpy(x, r, &y));
            ring.value += jet.value;
            ring.radial += space::dot(&jet.gradient, &y);
            ring.laplacian += jet.laplacian;
        }
        acc.value += w * ring.value;
        acc.radial += w * ring.radial;
        acc.laplacian += w * ring.laplacian;
    }
    let norm = 0.5 / azimuth as f64;
    Means {
        value: acc.value * norm,
        radial: acc.radial * norm,
        laplacian: acc.laplacian * norm,
    }
}

/// Disk averages `(1/2π) ∫_{B₁} φ(x + r y) / √(1-|y|²) dy` after `|y| = sin θ`.
fn disk_means(data: &SmoothData, x: &Point, r: f64, polar: usize, azimuth: usize) -> Means {
    let rule = GaussRule::cached(polar);
    let mut acc = Means::default();
    let (sin_a, cos_a): (Vec<f64>, Vec<f64>) = (0..azimuth)
        .map(|j| (2.0 * PI * j as f64 / azimuth as f64).sin_cos())
        .unzip();
    let quarter = 0.25 * PI;
    for (&node, &w) in rule.nodes.iter().zip(&rule.weights) {
        let theta = quarter * (node + 1.0);
        let s = theta.sin();
        let mut ring = Means::default();
        for j in 0..azimuth {
            let y = [s * cos_a[j], s * sin_a[j], 0.0];
            let jet = data.jet(&space::axpy(x, r, &y));
            ring.value += jet.value;
            ring.radial += space::dot(&jet.gradient, &y);
            ring.laplacian += jet.laplacian;
        }
        let ws = w * s;
        acc.value += ws * ring.value;
        acc.radial += ws * ring.radial;
        acc.laplacian += ws * ring.laplacian;
    }
    let norm = quarter / azimuth as f64;
    Means {
        value: acc.value * norm,
        radial: acc.radial * norm,
        laplacian: acc.laplacian * norm,
    }
}

/// Doubles both angular resolutions until two consecutive levels agree.
fn refine<F>(r: f64, cfg: &QuadratureConfig, mut at_level: F) -> Result<Means>
where
    F: FnMut(usize, usize) -> Means,
{
    let (mut polar, mut azimuth) = (SPHERE_POLAR_ORDER, SPHERE_AZIMUTH_NODES);
    let mut coarse = at_level(polar, azimuth);
    for _ in 0..SPHERE_LEVELS {
        polar *= 2;
        azimuth *= 2;
        let fine = at_level(polar, azimuth);
        if fine.close_to(&coarse, r, cfg) {
            return Ok(fine);
        }
        coarse = fine;
    }
    let fine = at_level(2 * polar, 2 * azimuth);
    let v = fine.value + r * fine.radial;
    Err(Error::QuadratureFailure {
        a: 0.0,
        b: r,
        estimate: (v - (coarse.value + r * coarse.radial)).abs(),
        tolerance: cfg.tolerance_for(v),
        panels: polar * azimuth,
    })
}

/// `(1/4π) ∫_{S²} φ(x + r y) dS_y`
pub fn spherical_mean(
    data: &SmoothData,
    x: &Point,
    r: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    check_dim(data, 3)?;
    check_radius(r)?;
    if r == 0.0 {
        return Ok(data.value(x));
    }
    Ok(refine(r, quad, |p, a| sphere_means(data, x, r, p, a))?.value)
}

/// Kirchhoff's formula `v = ∂_r (r M(r))` in three dimensions by angular
/// quadrature.
pub fn eval_kirchhoff(
    data: &SmoothData,
    x: &Point,
    r: f64,
    quad: &QuadratureConfig,
) -> Result<FreeWaveSample> {
    check_dim(data, 3)?;
    check_radius(r)?;
    if r == 0.0 {
        return Ok(FreeWaveSample {
            v: data.value(x),
            dv_dr: 0.0,
        });
    }
    if sphere_outside_support(data, x, r) {
        return Ok(FreeWaveSample::ZERO);
    }
    let m = refine(r, quad, |p, a| sphere_means(data, x, r, p, a))?;
    FreeWaveSample {
        v: m.value + r * m.radial,
        dv_dr: r * m.laplacian,
    }
    .checked()
}

/// Poisson's formula in two dimensions.
pub fn eval_poisson2d(
    data: &SmoothData,
    x: &Point,
    r: f64,
    quad: &QuadratureConfig,
) -> Result<FreeWaveSample> {
    check_dim(data, 2)?;
    check_radius(r)?;
    if r == 0.0 {
        return Ok(FreeWaveSample {
            v: data.value(x),
            dv_dr: 0.0,
        });
    }
    if data.support_radius().is_finite() && space::norm(x) - r > data.support_radius() {
        return Ok(FreeWaveSample::ZERO);
    }
    let m = refine(r, quad, |p, a| disk_means(data, x, r, p, a))?;
    FreeWaveSample {
        v: m.value + r * m.radial,
        dv_dr: r * m.laplacian,
    }
    .checked()
}

fn sphere_outside_support(data: &SmoothData, x: &Point, r: f64) -> bool {
    let big_r = data.support_radius();
    big_r.is_finite() && (space::norm(x) - r).abs() > big_r
}

/// Closed Kirchhoff form for `φ = g(|x - c|)`: with `G(z) = z g(|z|)` and
/// `d = |x - c|`, `v = [G(d+r) + G(d-r)] / 2d`.
pub fn eval_kirchhoff_radial(profile: &dyn RadialProfile, x: &Point, r: f64) -> FreeWaveSample {
    let d = space::norm(&space::sub(x, &profile.center()));
    // G'(z) = g(|z|) + |z| g'(|z|),  G''(z) = sign(z) (2 g'(|z|) + |z| g''(|z|))
    let g1 = |z: f64| {
        let p = profile.profile(z.abs());
        p[0] + z.abs() * p[1]
    };
    if r == 0.0 {
        return FreeWaveSample {
            v: profile.profile(d)[0],
            dv_dr: 0.0,
        };
    }
    if d <= 1e-5 * (1.0 + r) {
        let p = profile.profile(r);
        return FreeWaveSample {
            v: p[0] + r * p[1],
            dv_dr: 2.0 * p[1] + r * p[2],
        };
    }
    let gg = |z: f64| z * profile.profile(z.abs())[0];
    FreeWaveSample {
        v: (gg(d + r) + gg(d - r)) / (2.0 * d),
        dv_dr: (g1(d + r) - g1(d - r)) / (2.0 * d),
    }
}

/// Dispatches on the dimension of `data`. Harmonic data are constant in `r`;
/// radially symmetric 3-D data use the closed form of [`eval_kirchhoff_radial`].
pub fn eval_free_wave(
    data: &SmoothData,
    x: &Point,
    r: f64,
    quad: &QuadratureConfig,
) -> Result<FreeWaveSample> {
    check_radius(r)?;
    if data.is_identically_zero() {
        return Ok(FreeWaveSample::ZERO);
    }
    if data.field().is_harmonic() {
        return Ok(FreeWaveSample {
            v: data.value(x),
            dv_dr: 0.0,
        });
    }
    match data.dim().get() {
        1 => eval_dalembert(data, x[0], r),
        2 => eval_poisson2d(data, x, r, quad),
        _ => match data.field().radial() {
            Some(profile) => {
                if sphere_outside_support(data, x, r) {
                    Ok(FreeWaveSample::ZERO)
                } else {
                    eval_kirchhoff_radial(profile, x, r).checked()
                }
            }
            None => eval_kirchhoff(data, x, r, quad),
        },
    }
}
