//! One function per command. Each returns the CSV body, the command-specific
//! part of the JSON summary and the checks that decide the exit status.

use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use edes_wave_core::edes::{
    check_initial_conditions, check_singular_initial_conditions, kernel_e, phi_of_t, solve_on_grid,
    KernelParams,
};
use edes_wave_core::grid::fmt17;
use edes_wave_core::norm_lab::{decay_fit, DecayOptions, DecayQuery};
use edes_wave_core::oracle_fd::fd_edes_checkpoints;
use edes_wave_core::{solve, Grid, Point, ProblemSpec, SingularityKind, SpatialDim};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    IcCheck,
    OracleCompare,
    Huygens,
    KernelId,
    Decay,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::IcCheck => "ic-check",
            Command::OracleCompare => "oracle-compare",
            Command::Huygens => "huygens",
            Command::KernelId => "kernel-id",
            Command::Decay => "decay",
        }
    }
}

/// A named comparison against a tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    /// `true` when the value must stay at or below the tolerance, `false`
    /// when it must exceed it.
    pub upper: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance,
            upper: true,
        }
    }

    pub fn above(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance,
            upper: false,
        }
    }

    pub fn pass(&self) -> bool {
        if self.upper {
            self.value <= self.tolerance
        } else {
            self.value > self.tolerance
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "value": self.value,
            "tolerance": self.tolerance,
            "relation": if self.upper { "<=" } else { ">" },
            "pass": self.pass(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub csv: String,
    pub results: Value,
    pub tolerances: Value,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(Check::pass)
    }
}

pub fn execute(command: Command, cfg: &RunConfig) -> Result<Outcome> {
    match command {
        Command::Solve => run_solve(cfg),
        Command::IcCheck => run_ic_check(cfg),
        Command::OracleCompare => run_oracle_compare(cfg),
        Command::Huygens => run_huygens(cfg),
        Command::KernelId => run_kernel_id(cfg),
        Command::Decay => run_decay(cfg),
    }
}

fn coord_header(dim: SpatialDim) -> &'static str {
    ["x", "x,y", "x,y,z"][dim.get() - 1]
}

fn coords(x: &Point, dim: SpatialDim) -> String {
    x[..dim.get()]
        .iter()
        .map(|v| fmt17(*v))
        .collect::<Vec<_>>()
        .join(",")
}

fn random_point(rng: &mut ChaCha8Rng, dim: SpatialDim, half_width: f64) -> Point {
    let mut p = [0.0; 3];
    for c in p.iter_mut().take(dim.get()) {
        *c = rng.random_range(-half_width..=half_width);
    }
    p
}

/// Explicit points followed by seeded random ones; the origin when neither
/// is configured.
fn sample_points(cfg: &RunConfig) -> Vec<Point> {
    let mut pts = cfg.eval.points.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.eval.random_points {
        pts.push(random_point(&mut rng, cfg.dim(), cfg.eval.box_half_width));
    }
    if pts.is_empty() {
        pts.push([0.0; 3]);
    }
    pts
}

fn require_data(spec: &ProblemSpec) -> Result<()> {
    if spec.phi0.is_none() && spec.phi1.is_none() && spec.source.is_none() {
        bail!("the problem has no data: set phi0.kind, phi1.kind or source.kind");
    }
    Ok(())
}

fn run_solve(cfg: &RunConfig) -> Result<Outcome> {
    require_data(&cfg.spec)?;
    let points = sample_points(cfg);
    let jobs: Vec<(f64, Point)> = cfg
        .eval
        .times
        .iter()
        .flat_map(|&t| points.iter().map(move |p| (t, *p)))
        .collect();
    let values: Vec<f64> = jobs
        .par_iter()
        .map(|(t, x)| {
            solve(&cfg.spec, x, *t).with_context(|| {
                format!(
                    "edes_core::solve at x = {:?}, t = {t}",
                    &x[..cfg.dim().get()]
                )
            })
        })
        .collect::<Result<_>>()?;

    let dim = cfg.dim();
    let mut csv = format!("t,{},value\n", coord_header(dim));
    for ((t, x), v) in jobs.iter().zip(&values) {
        writeln!(csv, "{},{},{}", fmt17(*t), coords(x, dim), fmt17(*v))?;
    }
    let nonfinite = values.iter().filter(|v| !v.is_finite()).count();
    Ok(Outcome {
        csv,
        results: json!({ "samples": values.len(), "points": points.len(), "times": cfg.eval.times }),
        tolerances: json!({}),
        checks: vec![Check::at_most("non-finite values", nonfinite as f64, 0.0)],
    })
}

fn run_ic_check(cfg: &RunConfig) -> Result<Outcome> {
    require_data(&cfg.spec)?;
    let ts: Vec<f64> = (cfg.ic.k_min..=cfg.ic.k_max)
        .map(|k| 2f64.powi(-k))
        .collect();
    let singular = match &cfg.spec.source {
        Some(f) => !matches!(f.class().kind, SingularityKind::Regular { .. }),
        None => false,
    };
    if singular && (cfg.spec.phi0.is_some() || cfg.spec.phi1.is_some()) {
        bail!("ic-check of a singular source takes the source alone (set phi0.kind = phi1.kind = none)");
    }
    // In the power-singular case only `t ψ - τ f0 → 0` is a limit to check;
    // the velocity deviation is reported.
    let check_velocity = match &cfg.spec.source {
        Some(f) => !matches!(f.class().kind, SingularityKind::PowerSingular { .. }),
        None => true,
    };

    let dim = cfg.dim();
    let mut csv = format!(
        "{},k,t,value_deviation,velocity_deviation\n",
        coord_header(dim)
    );
    let mut checks = Vec::new();
    let mut finals = Vec::new();
    for x in sample_points(cfg) {
        let report = if singular {
            let f = cfg.spec.source.as_ref().expect("singular source");
            check_singular_initial_conditions(f, &x, &ts, &cfg.quad)
        } else {
            check_initial_conditions(&cfg.spec, &x, &ts)
        }
        .context("edes_core::check_initial_conditions")?;
        for (i, t) in ts.iter().enumerate() {
            writeln!(
                csv,
                "{},{},{},{},{}",
                coords(&x, dim),
                cfg.ic.k_min + i as i32,
                fmt17(*t),
                fmt17(report.value_deviation[i]),
                fmt17(report.velocity_deviation[i])
            )?;
        }
        let label = format!("x = {:?}", &x[..dim.get()]);
        let (a, b) = report.final_deviations();
        let mono = |v: &[f64]| v.windows(2).filter(|w| w[1] > w[0]).count() as f64;
        checks.push(Check::at_most(
            format!("{label}: value deviation increases"),
            mono(&report.value_deviation),
            0.0,
        ));
        checks.push(Check::at_most(
            format!("{label}: final value deviation"),
            a,
            cfg.ic.tolerance,
        ));
        if check_velocity {
            checks.push(Check::at_most(
                format!("{label}: velocity deviation increases"),
                mono(&report.velocity_deviation),
                0.0,
            ));
            checks.push(Check::at_most(
                format!("{label}: final velocity deviation"),
                b,
                cfg.ic.tolerance,
            ));
        }
        finals.push(json!({ "x": &x[..dim.get()], "value_deviation": a, "velocity_deviation": b }));
    }
    Ok(Outcome {
        csv,
        results: json!({ "k_min": cfg.ic.k_min, "k_max": cfg.ic.k_max, "final": finals, "singular": singular }),
        tolerances: json!({ "final_deviation": cfg.ic.tolerance }),
        checks,
    })
}

/// A centered grid holding the data support plus the cone at `t_end`.
fn oracle_grid(cfg: &RunConfig) -> Result<Grid> {
    let h = cfg.oracle.spacing;
    let n = match cfg.oracle.points {
        Some(n) => n,
        None => {
            let support = cfg.spec.support_radius();
            if !support.is_finite() {
                bail!("oracle-compare needs compactly supported data or fd.points");
            }
            let half = support + phi_of_t(cfg.oracle.run.t_end)? + 2.0 * h;
            let n = (2.0 * half / h).ceil() as usize;
            n + n % 2
        }
    };
    Grid::centered(cfg.dim(), n, h).context("edes_core::grid")
}

fn run_oracle_compare(cfg: &RunConfig) -> Result<Outcome> {
    require_data(&cfg.spec)?;
    let grid = oracle_grid(cfg)?;
    let fields = fd_edes_checkpoints(&cfg.spec, &grid, &cfg.oracle.run, &cfg.oracle.checkpoints)
        .context("oracle_fd::fd_edes")?;
    let mut csv = String::from("t,relative_l2\n");
    let mut checks = Vec::new();
    for (fd, &t) in fields.iter().zip(&cfg.oracle.checkpoints) {
        let exact = solve_on_grid(&cfg.spec, &grid, t)
            .with_context(|| format!("edes_core::solve_on_grid at t = {t}"))?;
        let d = fd.relative_l2_distance(&exact).context("edes_core::grid")?;
        writeln!(csv, "{},{}", fmt17(t), fmt17(d))?;
        checks.push(Check::at_most(
            format!("relative L2 at t = {t}"),
            d,
            cfg.oracle.tolerance,
        ));
    }
    Ok(Outcome {
        csv,
        results: json!({
            "points_per_axis": grid.points_per_axis(),
            "spacing": grid.spacing(),
            "run": cfg.oracle.run,
            "checkpoints": cfg.oracle.checkpoints,
        }),
        tolerances: json!({ "relative_l2": cfg.oracle.tolerance }),
        checks,
    })
}

/// Point at distance `rho` in a random direction.
fn random_direction(rng: &mut ChaCha8Rng, rho: f64) -> Point {
    loop {
        let p = random_point(rng, SpatialDim::THREE, 1.0);
        let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        if n > 1e-3 && n <= 1.0 {
            return [rho * p[0] / n, rho * p[1] / n, rho * p[2] / n];
        }
    }
}

fn run_huygens(cfg: &RunConfig) -> Result<Outcome> {
    if cfg.dim() != SpatialDim::THREE {
        bail!("huygens needs problem.dim = 3");
    }
    let phi0 = cfg.spec.phi0.clone().context("huygens needs phi0 data")?;
    let big_r = phi0.support_radius();
    if !big_r.is_finite() {
        bail!("huygens needs compactly supported phi0 data");
    }
    let only_phi0 = ProblemSpec::new(SpatialDim::THREE)
        .with_quad(cfg.quad)
        .with_phi0(phi0);
    let only_phi1 = cfg.spec.phi1.clone().map(|d| {
        ProblemSpec::new(SpatialDim::THREE)
            .with_quad(cfg.quad)
            .with_phi1(d)
    });

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut jobs: Vec<(f64, Point, &'static str)> = Vec::new();
    for &t in &cfg.huygens.times {
        let cone = phi_of_t(t)?;
        for k in 0..cfg.huygens.samples {
            // alternate between the lacuna (when there is one) and the exterior
            let rho = if k % 2 == 0 && cone > big_r {
                rng.random_range(0.0..(cone - big_r))
            } else {
                rng.random_range((cone + big_r)..(cone + big_r + 3.0))
            };
            let x = random_direction(&mut rng, rho);
            jobs.push((t, x, if rho < cone { "lacuna" } else { "exterior" }));
            if only_phi1.is_some() && rho < cone - big_r {
                jobs.push((t, x, "phi1-lacuna"));
            }
        }
    }
    let values: Vec<f64> = jobs
        .par_iter()
        .map(|(t, x, region)| {
            let spec = if *region == "phi1-lacuna" {
                only_phi1.as_ref().expect("phi1")
            } else {
                &only_phi0
            };
            solve(spec, x, *t).with_context(|| format!("edes_core::solve at x = {x:?}, t = {t}"))
        })
        .collect::<Result<_>>()?;

    let mut csv = String::from("t,x,y,z,region,value\n");
    let mut off_shell: f64 = 0.0;
    let mut phi1_inside: f64 = 0.0;
    for ((t, x, region), v) in jobs.iter().zip(&values) {
        writeln!(
            csv,
            "{},{},{region},{}",
            fmt17(*t),
            coords(x, SpatialDim::THREE),
            fmt17(*v)
        )?;
        if *region == "phi1-lacuna" {
            phi1_inside = phi1_inside.max(v.abs());
        } else {
            off_shell = off_shell.max(v.abs());
        }
    }
    let mut checks = vec![Check::at_most(
        "phi0 max |psi| off the shell",
        off_shell,
        cfg.huygens.tolerance,
    )];
    if only_phi1.is_some() {
        checks.push(Check::above(
            "phi1 max |psi| inside the lacuna",
            phi1_inside,
            cfg.huygens.interior_threshold,
        ));
    }
    Ok(Outcome {
        csv,
        results: json!({ "support_radius": big_r, "samples": jobs.len(), "times": cfg.huygens.times }),
        tolerances: json!({
            "off_shell": cfg.huygens.tolerance,
            "interior_threshold": cfg.huygens.interior_threshold,
        }),
        checks,
    })
}

fn run_kernel_id(cfg: &RunConfig) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let m = cfg.kernel.max_phi;
    let mut csv = String::from("phi_t,phi_b,r,kernel,closed_form,scaled_deviation\n");
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.kernel.samples {
        let phi_t = rng.random_range(0.0..m);
        let phi_b = rng.random_range(0.0..m);
        let r = rng.random_range(0.0..1.0) * (phi_t + phi_b);
        let p = KernelParams {
            gamma: -1.0,
            phi_t,
            phi_b,
            r,
        };
        let k = kernel_e(&p).context("edes_core::kernel_e")?;
        let closed = 2.0 * (phi_t * phi_t + phi_b * phi_b - r * r);
        let dev = (k - closed).abs() / (phi_t * phi_t + phi_b * phi_b + r * r).max(1.0);
        worst = worst.max(dev);
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            fmt17(phi_t),
            fmt17(phi_b),
            fmt17(r),
            fmt17(k),
            fmt17(closed),
            fmt17(dev)
        )?;
    }
    Ok(Outcome {
        csv,
        results: json!({ "samples": cfg.kernel.samples, "max_phi": m }),
        tolerances: json!({ "scaled_deviation": cfg.kernel.tolerance }),
        checks: vec![Check::at_most(
            "max scaled deviation",
            worst,
            cfg.kernel.tolerance,
        )],
    })
}

fn run_decay(cfg: &RunConfig) -> Result<Outcome> {
    let d = &cfg.decay;
    let count = d.samples;
    let times: Vec<f64> = (0..count)
        .map(|k| d.t_min * (d.t_max / d.t_min).powf(k as f64 / (count - 1) as f64))
        .collect();
    let query = DecayQuery {
        p: d.p,
        q: d.q,
        s: d.s,
        dim: cfg.dim(),
        times,
    };
    let opts = DecayOptions {
        spacing: d.spacing,
        half_width: d.half_width,
        mass_width: d.mass_width,
        refinement_check: d.refinement_check,
        ..DecayOptions::default()
    };
    let report = decay_fit(&cfg.spec, &query, &opts).context("norm_lab::decay_fit")?;
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;

    let mut checks = Vec::new();
    match report.case {
        edes_wave_core::norm_lab::DecayCase::Phi1 => {
            checks.push(Check::at_most(
                "fitted slope",
                report.fitted_slope,
                report.predicted_exponent + d.slope_margin,
            ));
            let comp = report.compensated_norms();
            let band = comp.iter().cloned().fold(0.0, f64::max)
                / comp.iter().cloned().fold(f64::INFINITY, f64::min);
            checks.push(Check::at_most("max/min of compensated norm", band, d.band));
        }
        _ => checks.push(Check::at_most(
            "slope of norm/envelope",
            report.envelope_slope(),
            d.slope_margin,
        )),
    }
    Ok(Outcome {
        csv: String::from_utf8(buf)?,
        results: report.summary_json(),
        tolerances: json!({
            "slope_margin": d.slope_margin,
            "band": d.band,
            "refinement_tolerance": opts.refinement_tolerance,
        }),
        checks,
    })
}
