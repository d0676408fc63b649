//! Spatial data bundles (`SmoothData`) and time-dependent sources.
//!
//! Every datum carries its value together with an analytic gradient and
//! Laplacian so that derivatives of spherical means can be taken under the
//! integral sign. The built-in catalog (constants, affine functions and
//! polynomial-times-Gaussian bumps) is closed under the Laplacian, which the
//! singular-source formulas need for `Δ v_{f0} = v_{Δ f0}`.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::space::{self, Point, SpatialDim, ORIGIN};

/// Relative tail level that defines the effective support of Gaussian data.
pub const GAUSSIAN_TAIL: f64 = 1e-13;

/// Value, gradient and Laplacian at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub gradient: Point,
    pub laplacian: f64,
}

pub trait Field: Send + Sync + fmt::Debug {
    fn value(&self, x: &Point) -> f64;
    fn gradient(&self, x: &Point) -> Point;
    fn laplacian(&self, x: &Point) -> f64;

    fn jet(&self, x: &Point) -> Jet {
        Jet {
            value: self.value(x),
            gradient: self.gradient(x),
            laplacian: self.laplacian(x),
        }
    }

    /// Present when the field is `g(|x - c|)` for some profile `g`.
    fn radial(&self) -> Option<&dyn RadialProfile> {
        None
    }

    /// `Δφ` as a field with its own derivatives, when known in closed form.
    fn laplacian_field(&self) -> Option<Arc<dyn Field>> {
        None
    }

    /// True when `Δφ = 0` identically, so every spherical mean equals `φ(x)`.
    fn is_harmonic(&self) -> bool {
        false
    }
}

/// Radial profile `g` of a field `φ(x) = g(|x - c|)`.
pub trait RadialProfile: Send + Sync {
    fn center(&self) -> Point;
    /// `[g(ρ), g'(ρ), g''(ρ)]` for `ρ ≥ 0`.
    fn profile(&self, rho: f64) -> [f64; 3];
}

// ---------------------------------------------------------------------------
// Catalog fields
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl Field for Constant {
    fn value(&self, _x: &Point) -> f64 {
        self.0
    }
    fn gradient(&self, _x: &Point) -> Point {
        ORIGIN
    }
    fn laplacian(&self, _x: &Point) -> f64 {
        0.0
    }
    fn radial(&self) -> Option<&dyn RadialProfile> {
        Some(self)
    }
    fn laplacian_field(&self) -> Option<Arc<dyn Field>> {
        Some(Arc::new(Constant(0.0)))
    }
    fn is_harmonic(&self) -> bool {
        true
    }
}

impl RadialProfile for Constant {
    fn center(&self) -> Point {
        ORIGIN
    }
    fn profile(&self, _rho: f64) -> [f64; 3] {
        [self.0, 0.0, 0.0]
    }
}

/// `a · x + c`
#[derive(Debug, Clone, Copy)]
pub struct Affine {
    pub slope: Point,
    pub offset: f64,
}

impl Field for Affine {
    fn value(&self, x: &Point) -> f64 {
        space::dot(&self.slope, x) + self.offset
    }
    fn gradient(&self, _x: &Point) -> Point {
        self.slope
    }
    fn laplacian(&self, _x: &Point) -> f64 {
        0.0
    }
    fn laplacian_field(&self) -> Option<Arc<dyn Field>> {
        Some(Arc::new(Constant(0.0)))
    }
    fn is_harmonic(&self) -> bool {
        true
    }
}

/// `A · P(u) · exp(-u)` with `u = |x - c|² / w²` and `P` a polynomial in `u`.
///
/// A plain Gaussian bump has `P = 1`; the Laplacian of any member is again a
/// member (with a polynomial of one degree higher), in the given dimension.
#[derive(Debug, Clone)]
pub struct GaussPoly {
    pub dim: SpatialDim,
    pub center: Point,
    pub width: f64,
    pub amplitude: f64,
    /// Coefficients of `P`, lowest degree first.
    pub poly: Vec<f64>,
}

fn poly_eval(c: &[f64], u: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * u + a)
}

fn poly_derivative(c: &[f64]) -> Vec<f64> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &a)| k as f64 * a)
        .collect()
}

impl GaussPoly {
    pub fn gaussian(dim: SpatialDim, center: Point, width: f64, amplitude: f64) -> Self {
        GaussPoly {
            dim,
            center,
            width,
            amplitude,
            poly: vec![1.0],
        }
    }

    /// `(h, h', h'')` of `h(u) = P(u) e^{-u}` with respect to `u`.
    fn h_derivs(&self, u: f64) -> (f64, f64, f64) {
        let e = (-u).exp();
        if e == 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let p = poly_eval(&self.poly, u);
        let d1 = poly_derivative(&self.poly);
        let p1 = poly_eval(&d1, u);
        let p2 = poly_eval(&poly_derivative(&d1), u);
        (p * e, (p1 - p) * e, (p2 - 2.0 * p1 + p) * e)
    }

    fn u_of(&self, x: &Point) -> (Point, f64) {
        let d = space::sub(x, &self.center);
        let w2 = self.width * self.width;
        (d, space::norm_sq(&d) / w2)
    }

    /// Polynomial of `ΔP e^{-u}` in the same representation (without `1/w²`).
    fn laplacian_poly(&self) -> Vec<f64> {
        // Δh = (4u h'' + 2n h') / w²  with  h' = (P'-P)e^{-u},  h'' = (P''-2P'+P)e^{-u}
        let n = self.dim.as_f64();
        let deg = self.poly.len();
        let mut p = self.poly.clone();
        p.resize(deg + 2, 0.0);
        let d1 = {
            let mut d = poly_derivative(&p);
            d.resize(deg + 2, 0.0);
            d
        };
        let d2 = {
            let mut d = poly_derivative(&d1);
            d.resize(deg + 2, 0.0);
            d
        };
        let mut out = vec![0.0; deg + 2];
        for k in 0..deg + 1 {
            // 4u (P'' - 2P' + P): shifts degree by one
            let second = d2[k] - 2.0 * d1[k] + p[k];
            out[k + 1] += 4.0 * second;
            out[k] += 2.0 * n * (d1[k] - p[k]);
        }
        while out.len() > 1 && out.last() == Some(&0.0) {
            out.pop();
        }
        out
    }

    /// Smallest radius about the center beyond which `|A P e^{-u}|` stays below
    /// `GAUSSIAN_TAIL` times its peak.
    pub fn effective_radius(&self) -> f64 {
        let h = |u: f64| (poly_eval(&self.poly, u) * (-u).exp()).abs();
        let du = 0.01;
        let mut peak: f64 = 0.0;
        let mut u = 0.0;
        while u <= 400.0 {
            peak = peak.max(h(u));
            u += du;
        }
        let mut last = 0.0;
        let mut u = 0.0;
        while u <= 400.0 {
            if h(u) > GAUSSIAN_TAIL * peak {
                last = u;
            }
            u += du;
        }
        self.width * (last + du).sqrt()
    }
}

impl Field for GaussPoly {
    fn value(&self, x: &Point) -> f64 {
        let (_, u) = self.u_of(x);
        self.amplitude * poly_eval(&self.poly, u) * (-u).exp()
    }

    fn gradient(&self, x: &Point) -> Point {
        self.jet(x).gradient
    }

    fn laplacian(&self, x: &Point) -> f64 {
        self.jet(x).laplacian
    }

    fn jet(&self, x: &Point) -> Jet {
        let (d, u) = self.u_of(x);
        let (h0, h1, h2) = self.h_derivs(u);
        let w2 = self.width * self.width;
        let a = self.amplitude;
        Jet {
            value: a * h0,
            gradient: space::scale(&d, a * h1 * 2.0 / w2),
            laplacian: a * (4.0 * u * h2 + 2.0 * self.dim.as_f64() * h1) / w2,
        }
    }

    fn radial(&self) -> Option<&dyn RadialProfile> {
        Some(self)
    }

    fn laplacian_field(&self) -> Option<Arc<dyn Field>> {
        Some(Arc::new(GaussPoly {
            dim: self.dim,
            center: self.center,
            width: self.width,
            amplitude: self.amplitude / (self.width * self.width),
            poly: self.laplacian_poly(),
        }))
    }
}

impl RadialProfile for GaussPoly {
    fn center(&self) -> Point {
        self.center
    }

    fn profile(&self, rho: f64) -> [f64; 3] {
        let w2 = self.width * self.width;
        let u = rho * rho / w2;
        let (h0, h1, h2) = self.h_derivs(u);
        let du = 2.0 * rho / w2;
        let a = self.amplitude;
        [a * h0, a * h1 * du, a * (h2 * du * du + h1 * 2.0 / w2)]
    }
}

// ---------------------------------------------------------------------------
// Combinators
// ---------------------------------------------------------------------------

/// `Σ c_i φ_i`
#[derive(Debug, Clone)]
pub struct Combination {
    terms: Vec<(f64, Arc<dyn Field>)>,
    radial_center: Option<Point>,
}

impl Combination {
    pub fn new(terms: Vec<(f64, Arc<dyn Field>)>) -> Self {
        let radial_center = terms
            .iter()
            .map(|(_, f)| f.radial().map(|r| r.center()))
            .try_fold(None::<Point>, |acc, c| match (acc, c) {
                (_, None) => Err(()),
                (None, Some(c)) => Ok(Some(c)),
                (Some(a), Some(c)) if a == c => Ok(Some(a)),
                _ => Err(()),
            })
            .ok()
            .flatten();
        Combination {
            terms,
            radial_center,
        }
    }
}

impl Field for Combination {
    fn value(&self, x: &Point) -> f64 {
        self.terms.iter().map(|(c, f)| c * f.value(x)).sum()
    }
    fn gradient(&self, x: &Point) -> Point {
        self.terms
            .iter()
            .fold(ORIGIN, |acc, (c, f)| space::axpy(&acc, *c, &f.gradient(x)))
    }
    fn laplacian(&self, x: &Point) -> f64 {
        self.terms.iter().map(|(c, f)| c * f.laplacian(x)).sum()
    }
    fn jet(&self, x: &Point) -> Jet {
        let mut out = Jet {
            value: 0.0,
            gradient: ORIGIN,
            laplacian: 0.0,
        };
        for (c, f) in &self.terms {
            let j = f.jet(x);
            out.value += c * j.value;
            out.gradient = space::axpy(&out.gradient, *c, &j.gradient);
            out.laplacian += c * j.laplacian;
        }
        out
    }
    fn radial(&self) -> Option<&dyn RadialProfile> {
        self.radial_center.map(|_| self as &dyn RadialProfile)
    }
    fn laplacian_field(&self) -> Option<Arc<dyn Field>> {
        let terms = self
            .terms
            .iter()
            .map(|(c, f)| f.laplacian_field().map(|l| (*c, l)))
            .collect::<Option<Vec<_>>>()?;
        Some(Arc::new(Combination::new(terms)))
    }
    fn is_harmonic(&self) -> bool {
        self.terms.iter().all(|(_, f)| f.is_harmonic())
    }
}

impl RadialProfile for Combination {
    fn center(&self) -> Point {
        self.radial_center.unwrap_or(ORIGIN)
    }
    fn profile(&self, rho: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (c, f) in &self.terms {
            if let Some(r) = f.radial() {
                let p = r.profile(rho);
                for k in 0..3 {
                    out[k] += c * p[k];
                }
            }
        }
        out
    }
}

/// `φ(x - shift)`
#[derive(Debug, Clone)]
pub struct Translated {
    inner: Arc<dyn Field>,
    shift: Point,
}

impl Field for Translated {
    fn value(&self, x: &Point) -> f64 {
        self.inner.value(&space::sub(x, &self.shift))
    }
    fn gradient(&self, x: &Point) -> Point {
        self.inner.gradient(&space::sub(x, &self.shift))
    }
    fn laplacian(&self, x: &Point) -> f64 {
        self.inner.laplacian(&space::sub(x, &self.shift))
    }
    fn jet(&self, x: &Point) -> Jet {
        self.inner.jet(&space::sub(x, &self.shift))
    }
    fn radial(&self) -> Option<&dyn RadialProfile> {
        self.inner.radial().map(|_| self as &dyn RadialProfile)
    }
    fn laplacian_field(&self) -> Option<Arc<dyn Field>> {
        Some(Arc::new(Translated {
            inner: self.inner.laplacian_field()?,
            shift: self.shift,
        }))
    }
    fn is_harmonic(&self) -> bool {
        self.inner.is_harmonic()
    }
}

impl RadialProfile for Translated {
    fn center(&self) -> Point {
        let c = self.inner.radial().map(|r| r.center()).unwrap_or(ORIGIN);
        space::add(&c, &self.shift)
    }
    fn profile(&self, rho: f64) -> [f64; 3] {
        self.inner
            .radial()
            .map(|r| r.profile(rho))
            .unwrap_or([0.0; 3])
    }
}

/// Hides radial symmetry so that evaluators take the generic quadrature path.
#[derive(Debug, Clone)]
pub struct Opaque(pub Arc<dyn Field>);

impl Field for Opaque {
    fn value(&self, x: &Point) -> f64 {
        self.0.value(x)
    }
    fn gradient(&self, x: &Point) -> Point {
        self.0.gradient(x)
    }
    fn laplacian(&self, x: &Point) -> f64 {
        self.0.laplacian(x)
    }
    fn jet(&self, x: &Point) -> Jet {
        self.0.jet(x)
    }
    fn laplacian_field(&self) -> Option<Arc<dyn Field>> {
        Some(Arc::new(Opaque(self.0.laplacian_field()?)))
    }
}

pub type ValueFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&Point) -> Point + Send + Sync>;

/// Field given by user closures.
#[derive(Clone)]
pub struct FnField {
    value: ValueFn,
    gradient: GradientFn,
    laplacian: ValueFn,
    laplacian_field: Option<Arc<dyn Field>>,
}

impl fmt::Debug for FnField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnField").finish_non_exhaustive()
    }
}

impl Field for FnField {
    fn value(&self, x: &Point) -> f64 {
        (self.value)(x)
    }
    fn gradient(&self, x: &Point) -> Point {
        (self.gradient)(x)
    }
    fn laplacian(&self, x: &Point) -> f64 {
        (self.laplacian)(x)
    }
    fn laplacian_field(&self) -> Option<Arc<dyn Field>> {
        self.laplacian_field.clone()
    }
}

/// Field given by a value closure only; derivatives by fourth-order central
/// differences with a fixed step.
#[derive(Clone)]
pub struct FdField {
    dim: SpatialDim,
    value: ValueFn,
    step: f64,
}

impl fmt::Debug for FdField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FdField")
            .field("dim", &self.dim)
            .field("step", &self.step)
            .finish_non_exhaustive()
    }
}

impl FdField {
    fn shifted(&self, x: &Point, axis: usize, by: f64) -> f64 {
        let mut y = *x;
        y[axis] += by;
        (self.value)(&y)
    }
}

impl Field for FdField {
    fn value(&self, x: &Point) -> f64 {
        (self.value)(x)
    }
    fn gradient(&self, x: &Point) -> Point {
        let h = self.step;
        let mut g = ORIGIN;
        for (axis, gi) in g.iter_mut().enumerate().take(self.dim.get()) {
            let f = |k: f64| self.shifted(x, axis, k * h);
            *gi = (-f(2.0) + 8.0 * f(1.0) - 8.0 * f(-1.0) + f(-2.0)) / (12.0 * h);
        }
        g
    }
    fn laplacian(&self, x: &Point) -> f64 {
        let h = self.step;
        let centre = (self.value)(x);
        (0..self.dim.get())
            .map(|axis| {
                let f = |k: f64| self.shifted(x, axis, k * h);
                (-f(2.0) + 16.0 * f(1.0) - 30.0 * centre + 16.0 * f(-1.0) - f(-2.0))
                    / (12.0 * h * h)
            })
            .sum()
    }
    fn laplacian_field(&self) -> Option<Arc<dyn Field>> {
        let inner = self.clone();
        Some(Arc::new(FdField {
            dim: self.dim,
            value: Arc::new(move |x: &Point| inner.laplacian(x)),
            step: self.step,
        }))
    }
}

// ---------------------------------------------------------------------------
// SmoothData
// ---------------------------------------------------------------------------

/// Spatial datum `φ: ℝⁿ → ℝ` with analytic derivatives and a support radius
/// (`f64::INFINITY` when not compactly supported). The support is the ball
/// of that radius about the origin.
#[derive(Clone, Debug)]
pub struct SmoothData {
    dim: SpatialDim,
    field: Arc<dyn Field>,
    support_radius: f64,
    derivatives_by_fd: bool,
}

/// Worst deviations found by [`SmoothData::check_invariants`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InvariantReport {
    pub gradient_error: f64,
    pub laplacian_error: f64,
    pub support_violation: f64,
}

impl SmoothData {
    pub fn new(dim: SpatialDim, field: Arc<dyn Field>, support_radius: f64) -> Result<Self> {
        if !(support_radius > 0.0) {
            return Err(invalid(format!(
                "support radius must be positive (got {support_radius})"
            )));
        }
        Ok(SmoothData {
            dim,
            field,
            support_radius,
            derivatives_by_fd: false,
        })
    }

    pub fn constant(dim: SpatialDim, c: f64) -> Self {
        SmoothData {
            dim,
            field: Arc::new(Constant(c)),
            support_radius: if c == 0.0 {
                f64::MIN_POSITIVE
            } else {
                f64::INFINITY
            },
            derivatives_by_fd: false,
        }
    }

    pub fn zero(dim: SpatialDim) -> Self {
        Self::constant(dim, 0.0)
    }

    /// `slope · x + offset`
    pub fn affine(dim: SpatialDim, slope: &[f64], offset: f64) -> Result<Self> {
        let slope = dim.point(slope)?;
        Ok(SmoothData {
            dim,
            field: Arc::new(Affine { slope, offset }),
            support_radius: f64::INFINITY,
            derivatives_by_fd: false,
        })
    }

    /// `amplitude · exp(-|x - center|² / width²)`
    pub fn gaussian(dim: SpatialDim, center: &[f64], width: f64, amplitude: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(invalid(format!(
                "gaussian width must be positive (got {width})"
            )));
        }
        let center = dim.point(center)?;
        Ok(Self::from_gauss_poly(GaussPoly::gaussian(
            dim, center, width, amplitude,
        )))
    }

    pub fn from_gauss_poly(g: GaussPoly) -> Self {
        let support = space::norm(&g.center) + g.effective_radius();
        SmoothData {
            dim: g.dim,
            field: Arc::new(g),
            support_radius: support,
            derivatives_by_fd: false,
        }
    }

    /// Datum from closures for the value, gradient and Laplacian.
    pub fn from_fns(
        dim: SpatialDim,
        value: ValueFn,
        gradient: GradientFn,
        laplacian: ValueFn,
        support_radius: f64,
    ) -> Result<Self> {
        Self::new(
            dim,
            Arc::new(FnField {
                value,
                gradient,
                laplacian,
                laplacian_field: None,
            }),
            support_radius,
        )
    }

    /// Datum from a value closure alone; gradient and Laplacian come from
    /// fourth-order central differences with step `step`, and
    /// [`check_invariants`](Self::check_invariants) only warns.
    pub fn from_value_fn(
        dim: SpatialDim,
        value: ValueFn,
        support_radius: f64,
        step: f64,
    ) -> Result<Self> {
        if !(step > 0.0) {
            return Err(invalid("finite-difference step must be positive"));
        }
        let mut d = Self::new(dim, Arc::new(FdField { dim, value, step }), support_radius)?;
        d.derivatives_by_fd = true;
        Ok(d)
    }

    pub fn dim(&self) -> SpatialDim {
        self.dim
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn with_support_radius(mut self, r: f64) -> Self {
        self.support_radius = r;
        self
    }

    pub fn field(&self) -> &dyn Field {
        self.field.as_ref()
    }

    pub fn field_arc(&self) -> Arc<dyn Field> {
        self.field.clone()
    }

    #[inline]
    pub fn value(&self, x: &Point) -> f64 {
        self.field.value(x)
    }

    #[inline]
    pub fn gradient(&self, x: &Point) -> Point {
        self.field.gradient(x)
    }

    #[inline]
    pub fn laplacian(&self, x: &Point) -> f64 {
        self.field.laplacian(x)
    }

    #[inline]
    pub fn jet(&self, x: &Point) -> Jet {
        self.field.jet(x)
    }

    pub fn is_radial(&self) -> bool {
        self.field.radial().is_some()
    }

    pub fn is_identically_zero(&self) -> bool {
        self.support_radius == f64::MIN_POSITIVE
    }

    /// `Δφ` as a datum of its own (same support).
    pub fn laplacian_data(&self) -> Result<SmoothData> {
        let field = self.field.laplacian_field().ok_or_else(|| {
            invalid(
                "datum has no closed-form Laplacian field; build it from the catalog or supply one",
            )
        })?;
        Ok(SmoothData {
            dim: self.dim,
            field,
            support_radius: self.support_radius,
            derivatives_by_fd: self.derivatives_by_fd,
        })
    }

    pub fn scaled(&self, alpha: f64) -> SmoothData {
        SmoothData {
            dim: self.dim,
            field: Arc::new(Combination::new(vec![(alpha, self.field.clone())])),
            support_radius: self.support_radius,
            derivatives_by_fd: self.derivatives_by_fd,
        }
    }

    /// `Σ c_i φ_i`; all data must share the dimension.
    pub fn linear_combination(terms: &[(f64, &SmoothData)]) -> Result<SmoothData> {
        let first = terms
            .first()
            .ok_or_else(|| invalid("empty linear combination"))?;
        let dim = first.1.dim;
        if terms.iter().any(|(_, d)| d.dim != dim) {
            return Err(invalid(
                "linear combination of data with different dimensions",
            ));
        }
        let support = terms
            .iter()
            .map(|(_, d)| d.support_radius)
            .fold(0.0, f64::max);
        Ok(SmoothData {
            dim,
            field: Arc::new(Combination::new(
                terms.iter().map(|(c, d)| (*c, d.field.clone())).collect(),
            )),
            support_radius: support,
            derivatives_by_fd: terms.iter().any(|(_, d)| d.derivatives_by_fd),
        })
    }

    /// `x ↦ φ(x - shift)`
    pub fn translated(&self, shift: &[f64]) -> Result<SmoothData> {
        let shift = self.dim.point(shift)?;
        Ok(SmoothData {
            dim: self.dim,
            field: Arc::new(Translated {
                inner: self.field.clone(),
                shift,
            }),
            support_radius: self.support_radius + space::norm(&shift),
            derivatives_by_fd: self.derivatives_by_fd,
        })
    }

    /// Same datum with its radial symmetry hidden.
    pub fn without_symmetry(&self) -> SmoothData {
        SmoothData {
            dim: self.dim,
            field: Arc::new(Opaque(self.field.clone())),
            support_radius: self.support_radius,
            derivatives_by_fd: self.derivatives_by_fd,
        }
    }

    /// Compares the gradient against central differences of the value, the
    /// Laplacian against the divergence of the gradient, and checks that the
    /// value vanishes outside the support radius (only for sample points
    /// outside it). Errors when a deviation exceeds `tol`, unless the
    /// derivatives are themselves finite-difference based, in which case
    /// the excess is logged as a warning.
    pub fn check_invariants(
        &self,
        samples: &[Point],
        step: f64,
        tol: f64,
    ) -> Result<InvariantReport> {
        let n = self.dim.get();
        let mut report = InvariantReport::default();
        for x in samples {
            let g = self.gradient(x);
            let mut div = 0.0;
            for axis in 0..n {
                let mut xp = *x;
                let mut xm = *x;
                xp[axis] += step;
                xm[axis] -= step;
                let fd = (self.value(&xp) - self.value(&xm)) / (2.0 * step);
                report.gradient_error = report.gradient_error.max((fd - g[axis]).abs());
                div += (self.gradient(&xp)[axis] - self.gradient(&xm)[axis]) / (2.0 * step);
            }
            report.laplacian_error = report.laplacian_error.max((div - self.laplacian(x)).abs());
            if self.support_radius.is_finite() && space::norm(x) > self.support_radius {
                report.support_violation = report.support_violation.max(self.value(x).abs());
            }
        }
        let worst = report
            .gradient_error
            .max(report.laplacian_error)
            .max(report.support_violation);
        if worst > tol {
            if self.derivatives_by_fd {
                log::warn!(
                    "finite-difference datum exceeds invariant tolerance {tol:e}: {report:?}"
                );
            } else {
                return Err(invalid(format!(
                    "datum violates its invariants beyond {tol:e}: {report:?}"
                )));
            }
        }
        Ok(report)
    }
}

// ---------------------------------------------------------------------------
// Sources
// ---------------------------------------------------------------------------

/// `coefficient · t^exponent`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimePower {
    pub coefficient: f64,
    pub exponent: f64,
}

impl TimePower {
    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        if self.exponent == 0.0 {
            self.coefficient
        } else {
            self.coefficient * t.powf(self.exponent)
        }
    }
}

/// One separable piece `T(t) S(x)` of a source.
#[derive(Debug, Clone)]
pub struct SourceTerm {
    pub time: TimePower,
    pub space: SmoothData,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SingularityKind {
    /// `|f| ≤ C t^{ε-2}` near `t = 0`.
    Regular { epsilon: f64 },
    /// `f ~ t^{-2} f0(x)`.
    LogSingular,
    /// `f ~ t^{-a} f0(x)` with `a ∈ (2, 8/3)`.
    PowerSingular { a: f64 },
}

#[derive(Debug, Clone)]
pub struct SingularityClass {
    pub kind: SingularityKind,
    pub f0: Option<SmoothData>,
}

impl SingularityClass {
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            SingularityKind::Regular { epsilon } => {
                if !(epsilon > 0.0) {
                    return Err(invalid(format!(
                        "regular source needs epsilon > 0 (got {epsilon})"
                    )));
                }
            }
            SingularityKind::LogSingular => {
                if self.f0.is_none() {
                    return Err(invalid("log-singular source needs its limit f0"));
                }
            }
            SingularityKind::PowerSingular { a } => {
                if !(a > 2.0 && a < 8.0 / 3.0) {
                    return Err(invalid(format!(
                        "power-singular source needs a in (2, 8/3) (got {a})"
                    )));
                }
                if self.f0.is_none() {
                    return Err(invalid("power-singular source needs its limit f0"));
                }
            }
        }
        Ok(())
    }

    /// Exponent `k` such that `|f| t^k` must stay bounded as `t → 0`.
    fn bound_exponent(&self) -> f64 {
        match self.kind {
            SingularityKind::Regular { epsilon } => 2.0 - epsilon,
            SingularityKind::LogSingular => 2.0,
            SingularityKind::PowerSingular { a } => a,
        }
    }
}

/// Source `f(x, t) = Σ_j T_j(t) S_j(x)` with its singularity class.
#[derive(Debug, Clone)]
pub struct SourceFunction {
    dim: SpatialDim,
    terms: Vec<SourceTerm>,
    class: SingularityClass,
}

impl SourceFunction {
    pub fn new(dim: SpatialDim, terms: Vec<SourceTerm>, class: SingularityClass) -> Result<Self> {
        class.validate()?;
        if terms.iter().any(|t| t.space.dim() != dim)
            || class.f0.as_ref().is_some_and(|f| f.dim() != dim)
        {
            return Err(invalid("source terms must share the source dimension"));
        }
        Ok(SourceFunction { dim, terms, class })
    }

    /// Regular source from separable terms; `ε` is derived from the most
    /// singular time power (`ε = 2 + min exponent`).
    pub fn regular(dim: SpatialDim, terms: Vec<SourceTerm>) -> Result<Self> {
        let worst = terms
            .iter()
            .map(|t| t.time.exponent)
            .fold(f64::INFINITY, f64::min);
        let epsilon = if worst.is_finite() {
            (2.0 + worst).min(2.0)
        } else {
            2.0
        };
        Self::new(
            dim,
            terms,
            SingularityClass {
                kind: SingularityKind::Regular { epsilon },
                f0: None,
            },
        )
    }

    /// `f ≡ c`
    pub fn constant(dim: SpatialDim, c: f64) -> Self {
        Self::regular(
            dim,
            vec![SourceTerm {
                time: TimePower {
                    coefficient: c,
                    exponent: 0.0,
                },
                space: SmoothData::constant(dim, 1.0),
            }],
        )
        .expect("constant source is regular")
    }

    /// `S(x) t^exponent`, regular for `exponent > -2`.
    pub fn separable(space: SmoothData, exponent: f64) -> Result<Self> {
        if !(exponent > -2.0) {
            return Err(invalid(format!(
                "a regular separable source needs exponent > -2 (got {exponent})"
            )));
        }
        Self::regular(
            space.dim(),
            vec![SourceTerm {
                time: TimePower {
                    coefficient: 1.0,
                    exponent,
                },
                space,
            }],
        )
    }

    /// `f = t^{-2} f0(x) + remainder`, with a regular remainder.
    pub fn log_singular(f0: SmoothData, remainder: Vec<SourceTerm>) -> Result<Self> {
        Self::singular_with(f0, 2.0, remainder, SingularityKind::LogSingular)
    }

    /// `f = t^{-a} f0(x) + remainder`, with a regular remainder.
    pub fn power_singular(a: f64, f0: SmoothData, remainder: Vec<SourceTerm>) -> Result<Self> {
        Self::singular_with(f0, a, remainder, SingularityKind::PowerSingular { a })
    }

    fn singular_with(
        f0: SmoothData,
        a: f64,
        remainder: Vec<SourceTerm>,
        kind: SingularityKind,
    ) -> Result<Self> {
        if remainder.iter().any(|t| !(t.time.exponent > -2.0)) {
            return Err(invalid(
                "the remainder of a singular source must be regular (exponents > -2)",
            ));
        }
        let dim = f0.dim();
        let mut terms = vec![SourceTerm {
            time: TimePower {
                coefficient: 1.0,
                exponent: -a,
            },
            space: f0.clone(),
        }];
        terms.extend(remainder);
        Self::new(dim, terms, SingularityClass { kind, f0: Some(f0) })
    }

    pub fn dim(&self) -> SpatialDim {
        self.dim
    }

    pub fn terms(&self) -> &[SourceTerm] {
        &self.terms
    }

    pub fn class(&self) -> &SingularityClass {
        &self.class
    }

    pub fn support_radius(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.space.support_radius())
            .fold(0.0, f64::max)
    }

    pub fn value(&self, x: &Point, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|s| s.time.at(t) * s.space.value(x))
            .sum()
    }

    pub fn gradient(&self, x: &Point, t: f64) -> Point {
        self.terms.iter().fold(ORIGIN, |acc, s| {
            space::axpy(&acc, s.time.at(t), &s.space.gradient(x))
        })
    }

    pub fn laplacian(&self, x: &Point, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|s| s.time.at(t) * s.space.laplacian(x))
            .sum()
    }

    /// Terms without the `t^{-2} f0` / `t^{-a} f0` leading piece.
    pub fn regular_part(&self) -> &[SourceTerm] {
        match self.class.kind {
            SingularityKind::Regular { .. } => &self.terms,
            _ => &self.terms[1..],
        }
    }

    /// Largest `|f(x, t)| t^k` over the samples, `k` set by the singularity
    /// class; stays bounded as the sampled times shrink for a well-classified
    /// source.
    pub fn check_growth_bound(&self, points: &[Point], times: &[f64]) -> Result<f64> {
        let k = self.class.bound_exponent();
        let mut worst: f64 = 0.0;
        for &t in times {
            if !(t > 0.0) {
                return Err(Error::Domain(format!("growth bound needs t > 0 (got {t})")));
            }
            for x in points {
                worst = worst.max(self.value(x, t).abs() * t.powf(k));
            }
        }
        Ok(worst)
    }
}
