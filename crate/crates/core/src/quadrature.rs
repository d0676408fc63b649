//! Adaptive one-dimensional Gauss–Legendre integration.
//!
//! Each panel is integrated with an order-`k` and an order-`2k` rule; the
//! difference is the panel error estimate. Panels are refined globally,
//! always bisecting the panel with the largest estimate, until the summed
//! estimate meets `max(abs_tol, rel_tol * |value|)`.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Hard cap on the number of live panels, independent of `max_depth`.
const MAX_PANELS: usize = 1 << 14;
/// Split point of endpoint panels, as a fraction of the panel width.
const ENDPOINT_RATIO: f64 = 0.15;
const NESTED_FACTOR: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: usize,
    /// Gauss–Legendre nodes per panel for the low-order rule.
    pub base_order: usize,
    /// Exponent of the endpoint substitution used by [`integrate_graded_left`].
    pub grading_exponent: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_depth: 20,
            base_order: 16,
            grading_exponent: 3.0,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(invalid(format!(
                "abs_tol must be positive (got {})",
                self.abs_tol
            )));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(invalid(format!(
                "rel_tol must be positive (got {})",
                self.rel_tol
            )));
        }
        if self.max_depth < 1 {
            return Err(invalid("max_depth must be at least 1"));
        }
        if self.base_order < 2 {
            return Err(invalid(format!(
                "base_order must be at least 2 (got {})",
                self.base_order
            )));
        }
        if !(self.grading_exponent >= 1.0 && self.grading_exponent.is_finite()) {
            return Err(invalid(format!(
                "grading_exponent must be >= 1 (got {})",
                self.grading_exponent
            )));
        }
        Ok(())
    }

    /// Tolerance that a result of magnitude `value` has to meet.
    #[inline]
    pub fn tolerance_for(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }

    /// Settings for the inner integral of a nested rule. The inner error
    /// shows up as noise in the outer integrand, so it is kept well below
    /// the outer tolerance.
    pub fn nested(&self) -> Self {
        self.with_tolerances(self.abs_tol / NESTED_FACTOR, self.rel_tol / NESTED_FACTOR)
    }

    pub fn with_tolerances(mut self, abs_tol: f64, rel_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self.rel_tol = rel_tol;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub panels_used: usize,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Computes an `n`-point rule by Newton iteration on `P_n`.
    pub fn compute(n: usize) -> GaussRule {
        assert!(n >= 1, "Gauss rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi's initial guess for the i-th largest root.
            let theta = std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5);
            let mut x = (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf)) * theta.cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d.is_finite() {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussRule { nodes, weights }
    }

    /// Shared, cached rule of order `n`.
    pub fn cached(n: usize) -> Arc<GaussRule> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussRule>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard
            .entry(n)
            .or_insert_with(|| Arc::new(GaussRule::compute(n)))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Applies the rule on `[a, b]` to a fallible integrand.
    pub fn apply<F>(&self, a: f64, b: f64, f: &mut F) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut sum = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            let at = mid + half * x;
            let y = f(at)?;
            if !y.is_finite() {
                return Err(Error::NonFiniteIntegrand { at, value: y });
            }
            sum += w * y;
        }
        Ok(sum * half)
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let pn = if n == 0 { 1.0 } else { p1 };
    let pnm1 = if n == 0 { 0.0 } else { p0 };
    let d = n as f64 * (x * pn - pnm1) / (x * x - 1.0);
    (pn, d)
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    depth: usize,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

struct PanelRules {
    low: Arc<GaussRule>,
    high: Arc<GaussRule>,
}

impl PanelRules {
    fn new(order: usize) -> Self {
        PanelRules {
            low: GaussRule::cached(order),
            high: GaussRule::cached(2 * order),
        }
    }

    fn panel<F>(&self, a: f64, b: f64, depth: usize, f: &mut F) -> Result<Panel>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let low = self.low.apply(a, b, f)?;
        let high = self.high.apply(a, b, f)?;
        Ok(Panel {
            a,
            b,
            value: high,
            error: (high - low).abs(),
            depth,
        })
    }
}

/// Adaptive integration of a fallible integrand over `[a, b]`.
///
/// On failure the reported estimate is the smallest total estimate reached
/// during refinement, so it never increases when `max_depth` grows.
pub fn try_integrate<F>(
    mut f: F,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(invalid(format!(
            "integration limits must be finite ([{a}, {b}])"
        )));
    }
    if a > b {
        return Err(invalid(format!(
            "integration requires a <= b (got [{a}, {b}])"
        )));
    }
    if a == b {
        return Ok(QuadratureResult {
            value: 0.0,
            error_estimate: 0.0,
            panels_used: 0,
        });
    }

    let rules = PanelRules::new(cfg.base_order);
    let first = rules.panel(a, b, 0, &mut f)?;
    let mut total = first.value;
    let mut total_err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);

    let mut best = (total_err, total);
    loop {
        let tol = cfg.tolerance_for(total);
        if total_err <= tol {
            return Ok(QuadratureResult {
                value: total,
                error_estimate: total_err,
                panels_used: heap.len(),
            });
        }
        let worst = match heap.peek() {
            Some(p) if p.depth < cfg.max_depth && heap.len() < MAX_PANELS => heap.pop().unwrap(),
            _ => {
                return Err(Error::QuadratureFailure {
                    a,
                    b,
                    estimate: best.0,
                    tolerance: cfg.tolerance_for(best.1),
                    panels: heap.len(),
                })
            }
        };
        // Panels touching an end of [a, b] are cut geometrically towards
        // that end so endpoint singularities are resolved within max_depth.
        let width = worst.b - worst.a;
        let mid = match (worst.a == a, worst.b == b) {
            (true, false) => worst.a + ENDPOINT_RATIO * width,
            (false, true) => worst.b - ENDPOINT_RATIO * width,
            _ => worst.a + 0.5 * width,
        };
        let left = rules.panel(worst.a, mid, worst.depth + 1, &mut f)?;
        let right = rules.panel(mid, worst.b, worst.depth + 1, &mut f)?;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        // Rebuild the sums now and then so cancellation cannot drift them.
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|p| p.value).sum::<f64>() + left.value + right.value;
            total_err = heap.iter().map(|p| p.error).sum::<f64>() + left.error + right.error;
        }
        heap.push(left);
        heap.push(right);
        if total_err < best.0 {
            best = (total_err, total);
        }
    }
}

/// Adaptive integration of an infallible integrand over `[a, b]`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<QuadratureResult>
where
    F: FnMut(f64) -> f64,
{
    try_integrate(|x| Ok(f(x)), a, b, cfg)
}

/// Like [`try_integrate`], after substituting `x = a + (b - a) u^g` with
/// `g = cfg.grading_exponent`, which clusters nodes at the left endpoint.
pub fn try_integrate_graded_left<F>(
    mut f: F,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if a > b {
        return Err(invalid(format!(
            "integration requires a <= b (got [{a}, {b}])"
        )));
    }
    let g = cfg.grading_exponent;
    let width = b - a;
    try_integrate(
        |u| {
            let ug1 = u.powf(g - 1.0);
            let x = a + width * ug1 * u;
            Ok(f(x)? * width * g * ug1)
        },
        0.0,
        1.0,
        cfg,
    )
}

pub fn integrate_graded_left<F>(
    mut f: F,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult>
where
    F: FnMut(f64) -> f64,
{
    try_integrate_graded_left(|x| Ok(f(x)), a, b, cfg)
}
