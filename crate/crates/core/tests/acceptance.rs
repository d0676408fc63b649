//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line and then
//! asserts the criterion with its pinned tolerance.

use std::io::Write;
use std::time::Instant;

use edes_wave_core::data::{SingularityKind, SmoothData, SourceFunction, SourceTerm, TimePower};
use edes_wave_core::edes::{
    check_initial_conditions, check_operator_identity, check_singular_initial_conditions, kernel_e,
    solve, solve_log_singular, solve_on_grid, solve_power_singular, source_part, source_part_lr,
    KernelParams, ProblemSpec,
};
use edes_wave_core::free_wave::{eval_dalembert, eval_free_wave, eval_kirchhoff, eval_poisson2d};
use edes_wave_core::grid::{Grid, GridField};
use edes_wave_core::norm_lab::{decay_fit, DecayOptions, DecayQuery, DecayReport};
use edes_wave_core::oracle_fd::{fd_edes_checkpoints, fd_free_wave, FdRunConfig};
use edes_wave_core::quadrature::QuadratureConfig;
use edes_wave_core::space::{Point, SpatialDim, ORIGIN};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Exact `ψ(t)` at a fixed point.
type Exact = Box<dyn Fn(f64) -> f64>;

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    // straight to the stderr handle so the line survives output capture
    let tag = if pass { "PASS" } else { "FAIL" };
    let line = format!("{tag} criterion {id} ({name}): {detail}\n");
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn dim(n: usize) -> SpatialDim {
    SpatialDim::new(n).unwrap()
}

fn unit_gaussian(n: usize) -> SmoothData {
    SmoothData::gaussian(dim(n), &vec![0.0; n], 1.0, 1.0).unwrap()
}

fn random_point(rng: &mut StdRng, n: usize, scale: f64) -> Point {
    let mut p = ORIGIN;
    for c in p.iter_mut().take(n) {
        *c = rng.random_range(-scale..scale);
    }
    p
}

#[test]
fn criterion_01_closed_form_exactness() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for n in 1..=3 {
        let d = dim(n);
        let (c0, c1, c2) = (1.7, -0.6, 2.3);
        let cases: Vec<(ProblemSpec, Exact)> = vec![
            (
                ProblemSpec::new(d).with_phi0(SmoothData::constant(d, c0)),
                Box::new(move |t| c0 / t),
            ),
            (
                ProblemSpec::new(d).with_phi1(SmoothData::constant(d, c1)),
                Box::new(move |_| c1),
            ),
            (
                ProblemSpec::new(d).with_source(SourceFunction::constant(d, c2)),
                Box::new(move |t| c2 * t * t / 6.0),
            ),
            (
                ProblemSpec::new(d)
                    .with_phi0(SmoothData::constant(d, c0))
                    .with_phi1(SmoothData::constant(d, c1))
                    .with_source(SourceFunction::constant(d, c2)),
                Box::new(move |t| c0 / t + c1 + c2 * t * t / 6.0),
            ),
        ];
        for (spec, exact) in &cases {
            for _ in 0..20 {
                let x = random_point(&mut rng, n, 5.0);
                let t = rng.random_range(0.1..10.0);
                worst = worst.max((solve(spec, &x, t).unwrap() - exact(t)).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-9 && secs < 1.0;
    report(
        1,
        "closed-form exactness",
        pass,
        &format!("max abs error {worst:.3e} (<= 1e-9), {secs:.3} s (< 1 s)"),
    );
    assert!(pass);
}

#[test]
fn criterion_02_kernel_specialization() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    while count < 10_000 {
        let phi_t = rng.random_range(0.0..10.0);
        let phi_b = rng.random_range(0.0..10.0);
        let r = rng.random_range(0.0..20.0);
        if (phi_t + phi_b) * (phi_t + phi_b) - r * r <= 0.0 {
            continue;
        }
        let k = kernel_e(&KernelParams {
            gamma: -1.0,
            phi_t,
            phi_b,
            r,
        })
        .unwrap();
        let expect = 2.0 * (phi_t * phi_t + phi_b * phi_b - r * r);
        // relative to the magnitude of the terms, which reach a few hundred
        let scale = (phi_t * phi_t + phi_b * phi_b + r * r).max(1.0);
        worst = worst.max((k - expect).abs() / scale);
        count += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-12 && secs < 1.0;
    report(
        2,
        "kernel specialization",
        pass,
        &format!("max scaled deviation {worst:.3e} over {count} samples (<= 1e-12), {secs:.3} s"),
    );
    assert!(pass);
}

/// Polynomial field with hand-derived `ψ_t`, `ψ_tt` and `Δψ`.
struct PolyField {
    n: usize,
    psi: fn(&Point, f64) -> f64,
    psi_t: fn(&Point, f64) -> f64,
    psi_tt: fn(&Point, f64) -> f64,
    lap: fn(&Point, f64) -> f64,
}

impl PolyField {
    fn exact_l(&self, x: &Point, t: f64) -> f64 {
        (self.psi_tt)(x, t) - (self.lap)(x, t) / (t * t.cbrt()) + 2.0 / t * (self.psi_t)(x, t)
    }
}

fn poly_fields() -> Vec<PolyField> {
    vec![
        PolyField {
            n: 1,
            psi: |x, t| x[0].powi(4) * t.powi(3),
            psi_t: |x, t| 3.0 * x[0].powi(4) * t * t,
            psi_tt: |x, t| 6.0 * x[0].powi(4) * t,
            lap: |x, t| 12.0 * x[0] * x[0] * t.powi(3),
        },
        PolyField {
            n: 2,
            psi: |x, t| x[0] * x[0] * x[1] * x[1] * t.powi(4) + t.powi(3),
            psi_t: |x, t| 4.0 * x[0] * x[0] * x[1] * x[1] * t.powi(3) + 3.0 * t * t,
            psi_tt: |x, t| 12.0 * x[0] * x[0] * x[1] * x[1] * t * t + 6.0 * t,
            lap: |x, t| 2.0 * (x[0] * x[0] + x[1] * x[1]) * t.powi(4),
        },
        PolyField {
            n: 3,
            psi: |x, t| (x[0].powi(4) + x[1].powi(4) + x[2].powi(4)) * t,
            psi_t: |x, _| x[0].powi(4) + x[1].powi(4) + x[2].powi(4),
            psi_tt: |_, _| 0.0,
            lap: |x, t| 12.0 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) * t,
        },
        PolyField {
            n: 1,
            psi: |x, t| x[0].powi(3) * t.powi(5) - 2.0 * x[0] * t.powi(3) + 1.0,
            psi_t: |x, t| 5.0 * x[0].powi(3) * t.powi(4) - 6.0 * x[0] * t * t,
            psi_tt: |x, t| 20.0 * x[0].powi(3) * t.powi(3) - 12.0 * x[0] * t,
            lap: |x, t| 6.0 * x[0] * t.powi(5),
        },
        PolyField {
            n: 2,
            psi: |x, t| x[0].powi(4) * x[1] * t * t + x[1] * t.powi(4),
            psi_t: |x, t| 2.0 * x[0].powi(4) * x[1] * t + 4.0 * x[1] * t.powi(3),
            psi_tt: |x, t| 2.0 * x[0].powi(4) * x[1] + 12.0 * x[1] * t * t,
            lap: |x, t| 12.0 * x[0] * x[0] * x[1] * t * t,
        },
    ]
}

#[test]
fn criterion_03_operator_identity() {
    let start = Instant::now();
    let x = [0.7, -0.4, 0.3];
    let t = 1.0;
    let hs = [0.1, 0.05, 0.025, 0.0125];
    let mut orders = Vec::new();
    let mut discrete_identity: f64 = 0.0;
    for field in poly_fields() {
        let d = dim(field.n);
        let exact = field.exact_l(&x, t);
        let errs: Vec<f64> = hs
            .iter()
            .map(|&h| {
                let u = |y: &Point, s: f64| s * (field.psi)(y, s);
                let lhs = edes_wave_core::edes::apply_s_fd(&u, d, &x, t, h) / t;
                discrete_identity = discrete_identity
                    .max(check_operator_identity(&field.psi, d, &x, t, h).unwrap());
                (lhs - exact).abs()
            })
            .collect();
        for w in errs.windows(2) {
            orders.push((w[0] / w[1]).log2());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let worst = orders.iter().map(|o| (o - 2.0).abs()).fold(0.0, f64::max);
    let pass = worst <= 0.2 && discrete_identity <= 1e-8 && secs < 5.0;
    report(
        3,
        "operator identity",
        pass,
        &format!(
            "observed orders in [{:.3}, {:.3}] (2.0 +- 0.2); discrete t^-1 S(t psi) - L psi <= {discrete_identity:.2e}; {secs:.3} s",
            orders.iter().cloned().fold(f64::INFINITY, f64::min),
            orders.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        ),
    );
    assert!(pass);
}

/// Relative L² distance between an FD field and an evaluator on every
/// `stride`-th node per axis.
fn sampled_distance(fd: &GridField, stride: usize, exact: impl Fn(&Point) -> f64 + Sync) -> f64 {
    use rayon::prelude::*;
    let g = fd.grid();
    let (num, den) = (0..g.len())
        .into_par_iter()
        .filter(|&i| {
            g.multi_index(i)
                .iter()
                .take(g.dim().get())
                .all(|k| k % stride == 0)
        })
        .map(|i| {
            let e = exact(&g.point(i));
            let a = fd.values()[i];
            ((a - e) * (a - e), e * e)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    (num / den).sqrt()
}

#[test]
fn criterion_04_free_wave_oracle() {
    let start = Instant::now();
    let quad = QuadratureConfig::default();
    let cfl = 0.5;
    let mut lines = Vec::new();
    let mut pass = true;

    // n = 1, d'Alembert at r = 1
    let g1 = unit_gaussian(1);
    let errs1: Vec<f64> = [0.02, 0.01, 0.005]
        .iter()
        .map(|&h| {
            let n = (16.0 / h) as usize;
            let grid = Grid::centered(dim(1), n, h).unwrap();
            let fd = fd_free_wave(&g1, &grid, 1.0, cfl).unwrap();
            sampled_distance(&fd, 1, |x| eval_dalembert(&g1, x[0], 1.0).unwrap().v)
        })
        .collect();

    // n = 2, Poisson at r = 0.5, compared on a sub-lattice
    let g2 = unit_gaussian(2);
    let errs2: Vec<f64> = [0.1, 0.05]
        .iter()
        .map(|&h| {
            let n = (13.0 / h) as usize;
            let grid = Grid::centered(dim(2), n, h).unwrap();
            let fd = fd_free_wave(&g2, &grid, 0.5, cfl).unwrap();
            let stride = (0.2 / h).round() as usize;
            sampled_distance(&fd, stride, |x| {
                eval_poisson2d(&g2, x, 0.5, &quad).unwrap().v
            })
        })
        .collect();

    // n = 3, Kirchhoff at r = 0.5 (closed radial form on all nodes)
    let g3 = unit_gaussian(3);
    let opaque = g3.without_symmetry();
    let mut generic_gap: f64 = 0.0;
    let errs3: Vec<f64> = [0.1, 0.05]
        .iter()
        .map(|&h| {
            let n = (12.4 / h) as usize;
            let grid = Grid::centered(dim(3), n, h).unwrap();
            let fd = fd_free_wave(&g3, &grid, 0.5, cfl).unwrap();
            let e = sampled_distance(&fd, 1, |x| eval_free_wave(&g3, x, 0.5, &quad).unwrap().v);
            // the generic angular quadrature agrees with the closed form
            for i in (0..grid.len()).step_by(grid.len() / 97) {
                let x = grid.point(i);
                let a = eval_kirchhoff(&opaque, &x, 0.5, &quad).unwrap().v;
                let b = eval_free_wave(&g3, &x, 0.5, &quad).unwrap().v;
                generic_gap = generic_gap.max((a - b).abs());
            }
            e
        })
        .collect();

    for (name, errs) in [("n=1", &errs1), ("n=2", &errs2), ("n=3", &errs3)] {
        let finest = *errs.last().unwrap();
        let order = errs
            .windows(2)
            .map(|w| (w[0] / w[1]).log2())
            .fold(f64::INFINITY, f64::min);
        let ok = finest <= 1e-3 && order >= 1.9;
        pass &= ok;
        lines.push(format!("{name}: rel L2 {finest:.2e}, order {order:.3}"));
    }
    pass &= generic_gap <= 1e-9;
    let secs = start.elapsed().as_secs_f64();
    pass &= secs <= 120.0;
    report(
        4,
        "free-wave oracle",
        pass,
        &format!(
            "{}; generic vs closed Kirchhoff {generic_gap:.1e}; {secs:.1} s (<= 120 s)",
            lines.join("; ")
        ),
    );
    assert!(pass);
}

fn edes_case(spec: &ProblemSpec, grid: &Grid) -> (Vec<f64>, f64) {
    let run = FdRunConfig {
        t0: 1e-2,
        t_end: 1.0,
        cfl: 0.5,
        ..FdRunConfig::default()
    };
    let checkpoints = [0.2, 0.5, 1.0];
    let start = Instant::now();
    let fields = fd_edes_checkpoints(spec, grid, &run, &checkpoints).unwrap();
    let dists = fields
        .iter()
        .zip(checkpoints)
        .map(|(fd, t)| {
            fd.relative_l2_distance(&solve_on_grid(spec, grid, t).unwrap())
                .unwrap()
        })
        .collect();
    (dists, start.elapsed().as_secs_f64())
}

#[test]
fn criterion_05_edes_oracle() {
    let mut pass = true;
    let mut lines = Vec::new();
    let cases = [
        (
            "n=1 phi1",
            ProblemSpec::new(dim(1)).with_phi1(unit_gaussian(1)),
            Grid::centered(dim(1), 1800, 0.01).unwrap(),
        ),
        (
            "n=3 phi1",
            ProblemSpec::new(dim(3)).with_phi1(unit_gaussian(3)),
            Grid::centered(dim(3), 214, 0.08).unwrap(),
        ),
        (
            "n=3 source e^-|x|^2/t",
            ProblemSpec::new(dim(3))
                .with_source(SourceFunction::separable(unit_gaussian(3), -1.0).unwrap()),
            Grid::centered(dim(3), 214, 0.08).unwrap(),
        ),
    ];
    for (name, spec, grid) in &cases {
        let (d, secs) = edes_case(spec, grid);
        let ok = d.iter().all(|&x| x <= 0.01) && secs <= 300.0;
        pass &= ok;
        lines.push(format!(
            "{name}: rel L2 at t=0.2,0.5,1 = {:.2e},{:.2e},{:.2e} ({secs:.1} s)",
            d[0], d[1], d[2]
        ));
    }
    report(
        5,
        "EdeS oracle",
        pass,
        &format!("{} (<= 1%, <= 300 s each)", lines.join("; ")),
    );
    assert!(pass);
}

#[test]
fn criterion_06_weighted_initial_conditions() {
    let start = Instant::now();
    let ts: Vec<f64> = (3..=10).map(|k| 2f64.powi(-k)).collect();
    let mut pass = true;
    let mut lines = Vec::new();
    for n in [1, 3] {
        let d = dim(n);
        let phi1 = SmoothData::gaussian(d, &vec![0.0; n], 1.0, 0.5).unwrap();
        let spec = ProblemSpec::new(d)
            .with_phi0(unit_gaussian(n))
            .with_phi1(phi1);
        let r = check_initial_conditions(&spec, &ORIGIN, &ts).unwrap();
        let (a, b) = r.final_deviations();
        let mono = r.is_monotone(0.0);
        pass &= mono && a <= 1e-3 && b <= 1e-3;
        let rate = |v: &[f64]| (v[v.len() - 2] / v[v.len() - 1]).log2();
        lines.push(format!(
            "n={n}: monotone {mono}, final deviations {a:.3e}, {b:.3e}, last-step decay t^{:.2}, t^{:.2}",
            rate(&r.value_deviation),
            rate(&r.velocity_deviation)
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs <= 120.0;
    report(
        6,
        "weighted initial conditions",
        pass,
        &format!("{} (final <= 1e-3); {secs:.2} s", lines.join("; ")),
    );
    assert!(pass);
}

#[test]
fn criterion_07_singular_sources() {
    let start = Instant::now();
    let quad = QuadratureConfig::default();
    let d = dim(1);
    let one = SmoothData::constant(d, 1.0);
    let mut worst: f64 = 0.0;
    let log = SourceFunction::log_singular(one.clone(), vec![]).unwrap();
    for t in [0.05, 0.3, 1.0, 2.5, 10.0] {
        worst = worst
            .max((solve_log_singular(&log, &ORIGIN, t, &quad).unwrap() - (t.ln() - 1.0)).abs());
    }
    let powers: Vec<SourceFunction> = [2.25, 2.5]
        .iter()
        .map(|&a| SourceFunction::power_singular(a, one.clone(), vec![]).unwrap())
        .collect();
    for (f, a) in powers.iter().zip([2.25, 2.5]) {
        for t in [0.05, 0.3, 1.0, 2.5, 10.0] {
            let exact = f64::powf(t, 2.0 - a) / ((3.0 - a) * (2.0 - a));
            worst = worst.max((solve_power_singular(f, &ORIGIN, t, &quad).unwrap() - exact).abs());
        }
    }

    // Weighted limits, for constant and Gaussian f0. The log case checks both
    // limits; its velocity deviation decays like t^(2/3)|ln t|, so the
    // sequence runs to k = 30. The power case checks t psi - tau f0, the
    // velocity deviation (which decays only like t^(8/3-a)) is reported.
    let ts: Vec<f64> = (3..=30).map(|k| 2f64.powi(-k)).collect();
    let g = unit_gaussian(1);
    let rest = vec![SourceTerm {
        time: TimePower {
            coefficient: 1.0,
            exponent: -1.0,
        },
        space: g.clone(),
    }];
    let sources = vec![
        ("log f0=1", log),
        (
            "log f0=gauss",
            SourceFunction::log_singular(g.clone(), rest.clone()).unwrap(),
        ),
        ("a=2.25 f0=1", powers[0].clone()),
        ("a=2.5 f0=1", powers[1].clone()),
        (
            "a=2.25 f0=gauss",
            SourceFunction::power_singular(2.25, g.clone(), rest.clone()).unwrap(),
        ),
        (
            "a=2.5 f0=gauss",
            SourceFunction::power_singular(2.5, g, rest).unwrap(),
        ),
    ];
    let mut limits = Vec::new();
    let mut worst_limit: f64 = 0.0;
    for (name, f) in &sources {
        let r = check_singular_initial_conditions(f, &ORIGIN, &ts, &quad).unwrap();
        let (a, b) = r.final_deviations();
        match f.class().kind {
            SingularityKind::LogSingular => {
                worst_limit = worst_limit.max(a).max(b);
                limits.push(format!("{name} {a:.1e}/{b:.1e}"));
            }
            _ => {
                worst_limit = worst_limit.max(a);
                limits.push(format!("{name} {a:.1e} (velocity {b:.1e})"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-8 && worst_limit <= 1e-3 && secs <= 120.0;
    report(
        7,
        "singular sources",
        pass,
        &format!(
            "closed forms max error {worst:.2e} (<= 1e-8); weighted limits at t=2^-30: {} (<= 1e-3); {secs:.2} s",
            limits.join(", ")
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_08_huygens_dichotomy() {
    let start = Instant::now();
    let d = dim(3);
    let g = SmoothData::gaussian(d, &[0.0, 0.0, 0.0], 0.5, 1.0).unwrap();
    let big_r = g.support_radius();
    let phi0 = ProblemSpec::new(d).with_phi0(g.clone());
    let phi1 = ProblemSpec::new(d).with_phi1(g);
    let mut worst_outside: f64 = 0.0;
    let mut samples = 0;
    for &t in &[0.5, 2.0, 8.0, 27.0] {
        let cone = 3.0 * f64::cbrt(t);
        for k in 0..60 {
            let rho = 0.25 * k as f64;
            let inside_shell = rho - big_r <= cone && cone <= rho + big_r;
            if inside_shell {
                continue;
            }
            let x = [rho * 0.6, rho * 0.8, 0.0];
            worst_outside = worst_outside.max(solve(&phi0, &x, t).unwrap().abs());
            samples += 1;
        }
    }
    // φ1 inside the lacuna of the φ0 part: no Huygens principle
    let t = 27.0;
    let interior = solve(&phi1, &[0.5, 0.0, 0.0], t).unwrap().abs();
    let secs = start.elapsed().as_secs_f64();
    let pass = worst_outside <= 1e-8 && interior > 1e-6 && secs < 60.0;
    report(
        8,
        "Huygens dichotomy",
        pass,
        &format!(
            "phi0 max |psi| off the shell {worst_outside:.2e} over {samples} samples (<= 1e-8); phi1 |psi| at interior point {interior:.3e} (> 1e-6); {secs:.2} s"
        ),
    );
    assert!(pass);
}

fn decay_times(t_max: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| t_max.powf(k as f64 / (count - 1) as f64))
        .collect()
}

/// `max_{t ≤ 100} / max_{t ≤ 50}` of the bound constant.
fn constant_growth(r: &DecayReport) -> f64 {
    r.bound_constant_up_to(100.0) / r.bound_constant_up_to(50.0)
}

#[test]
fn criterion_09_decay() {
    let start = Instant::now();
    let d = dim(3);
    let query = DecayQuery {
        p: 1.2,
        q: 6.0,
        s: 0.75,
        dim: d,
        times: decay_times(100.0, 13),
    };
    let opts = DecayOptions::default();

    let phi1 = decay_fit(
        &ProblemSpec::new(d).with_phi1(unit_gaussian(3)),
        &query,
        &opts,
    )
    .unwrap();
    let comp = phi1.compensated_norms();
    let band = comp.iter().cloned().fold(0.0, f64::max)
        / comp.iter().cloned().fold(f64::INFINITY, f64::min);
    let ok1 = phi1.fitted_slope <= -1.0 / 6.0 + 0.1 && band <= 2.0;

    let phi0 = decay_fit(
        &ProblemSpec::new(d).with_phi0(unit_gaussian(3)),
        &query,
        &opts,
    )
    .unwrap();
    let ok0 = phi0.envelope_slope() <= 0.1 && constant_growth(&phi0) <= 1.2;

    let source = SourceFunction::separable(unit_gaussian(3), -1.0).unwrap();
    let src = decay_fit(&ProblemSpec::new(d).with_source(source), &query, &opts).unwrap();
    let ok2 = src.envelope_slope() <= 0.1 && constant_growth(&src) <= 1.2;

    let secs = start.elapsed().as_secs_f64();
    let pass = ok1 && ok0 && ok2 && secs <= 600.0;
    report(
        9,
        "decay estimates",
        pass,
        &format!(
            "phi1: slope {:.4} (<= {:.4}), max/min of norm t^(1/6) {band:.3} (<= 2); phi0: slope of norm/envelope {:.4} (<= 0.1), constant growth {:.3} (<= 1.2); source: slope of norm/envelope {:.4} (<= 0.1), constant growth {:.3} (<= 1.2); {secs:.1} s",
            phi1.fitted_slope,
            -1.0 / 6.0 + 0.1,
            phi0.envelope_slope(),
            constant_growth(&phi0),
            src.envelope_slope(),
            constant_growth(&src),
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_10_parametrization_equivalence() {
    let start = Instant::now();
    let quad = QuadratureConfig::default();
    let mut rng = StdRng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for case in 0..3 {
        let n = 1 + case % 3;
        let d = dim(n);
        let terms: Vec<SourceTerm> = (0..2)
            .map(|_| {
                let c = random_point(&mut rng, n, 1.0);
                SourceTerm {
                    time: TimePower {
                        coefficient: rng.random_range(0.5..2.0),
                        exponent: rng.random_range(-1.5..1.0),
                    },
                    space: SmoothData::gaussian(d, &c[..n], rng.random_range(0.6..1.5), 1.0)
                        .unwrap(),
                }
            })
            .collect();
        let f = SourceFunction::regular(d, terms).unwrap();
        for _ in 0..2 {
            let x = random_point(&mut rng, n, 1.5);
            let t = rng.random_range(0.2..3.0);
            let a = source_part(&f, &x, t, &quad).unwrap();
            let b = source_part_lr(&f, &x, t, &quad).unwrap();
            worst = worst.max((a - b).abs() / a.abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-6 && secs < 60.0;
    report(
        10,
        "(b,s) vs (l,r) forms",
        pass,
        &format!("max relative deviation {worst:.2e} (<= 1e-6); {secs:.2} s"),
    );
    assert!(pass);
}
