//! One function per subcommand: resolve settings, compute, write the report.

use std::path::PathBuf;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use tongues::farey::{self, FareyInterval, FareyStop, Omega, Rational};
use tongues::gauss::{check_identities, coprime_labels};
use tongues::islands::{area_perturbative, f_of_lambda, fit_factor, IslandConfig};
use tongues::map::{MapParams, OrbitLabel};
use tongues::orbit::{
    find_orbit, find_stable_orbit, island_area, scan_tongue, seed_points, GridAxis, OrbitConfig, PeriodicOrbit,
    ScanConfig,
};
use tongues::perturbation::{inside_margin, lambda_of, on_ray, tongue_margin};
use tongues::spectroscopy::{ep_linear, mode_candidates, ApproxSide, Arm, DEFAULT_BORDER, DEFAULT_KICK};

use crate::config::{ConfigFile, FloatList, GridSpec, LabelSpec, Span};
use crate::output::{num, opt_num, Report, Table};
use crate::{CliError, Command, CommonArgs, FareyArgs, GaussArgs, IslandArgs, ModesArgs, OrbitArgs, Outcome, ScanArgs};

const COMMON_KEYS: &[&str] = &["out", "threads", "seed"];

/// Settings echoed into every output header. The thread count is left out
/// since it does not change results.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig<T: Serialize> {
    pub command: &'static str,
    pub seed: u64,
    #[serde(flatten)]
    pub params: T,
}

struct Context {
    out: PathBuf,
    seed: u64,
}

impl Context {
    fn new(command: &str, keys: &[&str], common: &CommonArgs, file: &ConfigFile) -> Result<Self, CliError> {
        let allowed: Vec<&str> = COMMON_KEYS.iter().chain(keys).copied().collect();
        file.check_keys(&allowed)?;
        Ok(Self {
            out: file.pick_or(common.out.clone(), "out", PathBuf::from(format!("tongues-{command}")))?,
            seed: file.pick_or(common.seed, "seed", 0)?,
        })
    }

    fn finish<T: Serialize>(
        &self,
        command: &'static str,
        params: T,
        table: &Table,
        summary: serde_json::Value,
        failures: Vec<String>,
    ) -> Result<Outcome, CliError> {
        let config = RunConfig {
            command,
            seed: self.seed,
            params,
        };
        let files = Report {
            command,
            config: &config,
            table,
            summary,
            failures: &failures,
        }
        .write(&self.out)?;
        Ok(Outcome { files, failures })
    }
}

pub fn dispatch(command: &Command, common: &CommonArgs, file: &ConfigFile) -> Result<Outcome, CliError> {
    match command {
        Command::Scan(a) => scan(a, common, file),
        Command::Orbit(a) => orbit(a, common, file),
        Command::Island(a) => island(a, common, file),
        Command::Gauss(a) => gauss(a, common, file),
        Command::Farey(a) => farey_cmd(a, common, file),
        Command::Modes(a) => modes(a, common, file),
    }
}

fn flag(set: bool) -> Option<bool> {
    set.then_some(true)
}

fn fraction(r: &Rational) -> String {
    r.to_string()
}

#[derive(Debug, Clone, Serialize)]
struct ScanRun {
    label: LabelSpec,
    omega_range: Span,
    ktilde_range: Span,
    grid: GridSpec,
    area: bool,
    tol: f64,
}

fn axis(name: &str, span: Span, cells: usize) -> Result<GridAxis, CliError> {
    if cells < 2 || !(span.hi > span.lo) {
        return Err(CliError::EmptyGrid(format!(
            "{name} axis [{}, {}] with {cells} cells",
            span.lo, span.hi
        )));
    }
    Ok(GridAxis::new(span.lo, span.hi, cells)?)
}

pub fn scan(args: &ScanArgs, common: &CommonArgs, file: &ConfigFile) -> Result<Outcome, CliError> {
    let keys = ["label", "omega-range", "ktilde-range", "grid", "area", "tol"];
    let ctx = Context::new("scan", &keys, common, file)?;
    let label: LabelSpec = file.require(args.label, "label")?;
    let center = label.0.ratio();
    let run = ScanRun {
        label,
        omega_range: file.pick_or(
            args.omega_range,
            "omega-range",
            Span {
                lo: center - 0.05,
                hi: center + 0.05,
            },
        )?,
        ktilde_range: file.pick_or(args.ktilde_range, "ktilde-range", Span { lo: 0.0, hi: 0.3 })?,
        grid: file.pick_or(
            args.grid,
            "grid",
            GridSpec {
                omega: 200,
                ktilde: 200,
            },
        )?,
        area: file.pick_or(flag(args.area), "area", false)?,
        tol: file.pick_or(args.tol, "tol", OrbitConfig::default().tol)?,
    };
    let omega_axis = axis("omega", run.omega_range, run.grid.omega)?;
    let ktilde_axis = axis("ktilde", run.ktilde_range, run.grid.ktilde)?;
    let config = ScanConfig {
        orbit: OrbitConfig {
            tol: run.tol,
            ..OrbitConfig::default()
        },
        island: run.area.then(IslandConfig::default),
    };
    let result = scan_tongue(label.0, omega_axis, ktilde_axis, &config);

    let mut table = Table::new(&["omega", "ktilde", "stable", "trace", "area"]);
    for c in &result.cells {
        table.push(vec![
            num(c.omega),
            num(c.ktilde),
            u8::from(c.stable).to_string(),
            opt_num(c.trace),
            opt_num(c.area),
        ]);
    }
    let summary = json!({
        "cells": result.cells.len(),
        "stable_cells": result.stable_count(),
        "margin_per_ktilde": tongue_margin(label.0, 1.0),
    });
    ctx.finish("scan", run, &table, summary, Vec::new())
}

#[derive(Debug, Clone, Serialize)]
struct OrbitRun {
    label: LabelSpec,
    omega: Omega,
    ktilde: f64,
    tol: f64,
}

fn any_orbit(params: &MapParams, label: OrbitLabel, config: &OrbitConfig) -> Result<Option<PeriodicOrbit>, CliError> {
    if let Some(o) = find_stable_orbit(params, label, config, &[])? {
        return Ok(Some(o));
    }
    for seed in seed_points(params, label, config) {
        if let Ok(Some(o)) = find_orbit(params, label, seed, config.tol, config.max_iter) {
            return Ok(Some(o));
        }
    }
    Ok(None)
}

pub fn orbit(args: &OrbitArgs, common: &CommonArgs, file: &ConfigFile) -> Result<Outcome, CliError> {
    let ctx = Context::new("orbit", &["label", "omega", "ktilde", "tol"], common, file)?;
    let run = OrbitRun {
        label: file.require(args.label, "label")?,
        omega: file.require(args.omega.clone(), "omega")?,
        ktilde: file.require(args.ktilde, "ktilde")?,
        tol: file.pick_or(args.tol, "tol", OrbitConfig::default().tol)?,
    };
    let label = run.label.0;
    let params = MapParams::new(run.omega.to_f64(), run.ktilde);
    let config = OrbitConfig {
        tol: run.tol,
        ..OrbitConfig::default()
    };
    let mut table = Table::new(&["n", "j", "theta"]);
    let mut failures = Vec::new();
    let summary = match any_orbit(&params, label, &config)? {
        Some(o) => {
            for (n, pt) in o.points.iter().enumerate() {
                table.push(vec![n.to_string(), num(pt.j), num(pt.theta)]);
            }
            json!({
                "found": true,
                "stable": o.stable,
                "trace": o.trace,
                "residual": o.residual,
                "iterations": o.iterations,
                "start": {"l": o.start.l, "theta": o.start.theta},
                "lambda": lambda_of(&params, label),
                "inside_margin": inside_margin(&params, label),
            })
        }
        None => {
            failures.push(format!(
                "no periodic orbit with label {},{} found",
                label.p(),
                label.m()
            ));
            json!({ "found": false, "lambda": lambda_of(&params, label) })
        }
    };
    ctx.finish("orbit", run, &table, summary, failures)
}

#[derive(Debug, Clone, Serialize)]
struct IslandRun {
    label: LabelSpec,
    ktilde: f64,
    lambda: FloatList,
    grid: usize,
    iterations: usize,
    tol: f64,
}

type IslandMeasurement = Result<Option<(PeriodicOrbit, f64)>, tongues::Error>;

/// Default tilts for `--sweep-lambda`.
pub fn lambda_sweep() -> Vec<f64> {
    let mut out: Vec<f64> = (1..=18).map(|i| i as f64 * 0.05).collect();
    out.extend([0.95, 0.98, 0.99]);
    out
}

pub fn island(args: &IslandArgs, common: &CommonArgs, file: &ConfigFile) -> Result<Outcome, CliError> {
    let keys = ["label", "ktilde", "lambda", "sweep-lambda", "grid", "iterations", "tol"];
    let ctx = Context::new("island", &keys, common, file)?;
    let sweep = file.pick_or(flag(args.sweep_lambda), "sweep-lambda", false)?;
    let lambda = match file.pick(args.lambda.clone(), "lambda")? {
        Some(l) => l,
        None if sweep => FloatList(lambda_sweep()),
        None => return Err(CliError::Missing("lambda (or sweep-lambda)".into())),
    };
    let defaults = IslandConfig::default();
    let run = IslandRun {
        label: file.require(args.label, "label")?,
        ktilde: file.require(args.ktilde, "ktilde")?,
        lambda,
        grid: file.pick_or(args.grid, "grid", defaults.grid)?,
        iterations: file.pick_or(args.iterations, "iterations", defaults.iterations)?,
        tol: file.pick_or(args.tol, "tol", OrbitConfig::default().tol)?,
    };
    let label = run.label.0;
    let icfg = IslandConfig {
        grid: run.grid,
        iterations: run.iterations,
        ..defaults
    };
    let ocfg = OrbitConfig {
        tol: run.tol,
        ..OrbitConfig::default()
    };
    // validates ktilde and every tilt before the expensive part
    let models = run
        .lambda
        .0
        .iter()
        .map(|&l| area_perturbative(label, run.ktilde, l, 1.0))
        .collect::<Result<Vec<_>, _>>()?;
    let measured: Vec<(f64, IslandMeasurement)> = run
        .lambda
        .0
        .par_iter()
        .map(|&l| {
            let params = on_ray(label, l, run.ktilde, true);
            (params.omega, island_area(&params, label, &ocfg, &icfg))
        })
        .collect();

    let mut table = Table::new(&["lambda", "omega", "area", "model_unit", "f", "ratio"]);
    let mut failures = Vec::new();
    let mut pairs = Vec::new();
    for ((&l, model), (omega, res)) in run.lambda.0.iter().zip(&models).zip(&measured) {
        let area = match res {
            Ok(Some((_, a))) => Some(*a),
            Ok(None) => {
                failures.push(format!("lambda {l}: no stable orbit"));
                None
            }
            Err(e) => {
                failures.push(format!("lambda {l}: {e}"));
                None
            }
        };
        if let Some(a) = area {
            pairs.push((a, *model));
        }
        table.push(vec![
            num(l),
            num(*omega),
            opt_num(area),
            num(*model),
            num(f_of_lambda(l)?),
            opt_num(area.map(|a| a / model)),
        ]);
    }
    let c = fit_factor(&pairs);
    let worst = c.map(|c| pairs.iter().map(|(a, m)| (a / (c * m) - 1.0).abs()).fold(0.0, f64::max));
    let summary = json!({
        "measured": pairs.len(),
        "fitted_c": c,
        "max_relative_deviation": worst,
    });
    ctx.finish("island", run, &table, summary, failures)
}

#[derive(Debug, Clone, Serialize)]
struct GaussRun {
    pmax: u64,
}

pub fn gauss(args: &GaussArgs, common: &CommonArgs, file: &ConfigFile) -> Result<Outcome, CliError> {
    let ctx = Context::new("gauss", &["pmax"], common, file)?;
    let run = GaussRun {
        pmax: file.pick_or(args.pmax, "pmax", 50)?,
    };
    if run.pmax == 0 {
        return Err(tongues::Error::ZeroPeriod.into());
    }
    let reports = coprime_labels(run.pmax)
        .par_iter()
        .map(|l| check_identities(l.p(), l.m()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&["p", "m", "shift", "derivative_odd", "derivative_even", "modulus"]);
    for r in &reports {
        table.push(vec![
            r.p.to_string(),
            r.m.to_string(),
            num(r.shift),
            num(r.derivative_odd),
            num(r.derivative_even),
            num(r.modulus),
        ]);
    }
    let worst = reports
        .iter()
        .max_by(|a, b| a.max_residual().total_cmp(&b.max_residual()))
        .expect("p = 1 is always present");
    let summary = json!({
        "labels": reports.len(),
        "max_residual": worst.max_residual(),
        "worst_label": [worst.p, worst.m],
    });
    ctx.finish("gauss", run, &table, summary, Vec::new())
}

#[derive(Debug, Clone, Serialize)]
struct FareyRun {
    omega: Omega,
    pmax: u64,
    random: usize,
    depth: usize,
}

fn random_targets(n: usize, seed: u64) -> Vec<Omega> {
    const BITS: usize = 192;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let bytes: Vec<u8> = (0..BITS / 8).map(|_| rng.gen()).collect();
        let num = BigUint::from_bytes_le(&bytes);
        if num.bits() == 0 {
            continue;
        }
        out.push(Omega::Rational(
            Rational::new(num, BigUint::from(1u8) << BITS).expect("nonzero denominator"),
        ));
    }
    out
}

pub fn farey_cmd(args: &FareyArgs, common: &CommonArgs, file: &ConfigFile) -> Result<Outcome, CliError> {
    let ctx = Context::new("farey", &["omega", "pmax", "random", "depth"], common, file)?;
    let run = FareyRun {
        omega: file.require(args.omega.clone(), "omega")?,
        pmax: file.pick_or(args.pmax, "pmax", 144)?,
        random: file.pick_or(args.random, "random", 0)?,
        depth: file.pick_or(args.depth, "depth", 40)?,
    };
    if run.pmax == 0 {
        return Err(tongues::Error::ZeroPeriod.into());
    }
    let steps = farey::farey_algorithm(&run.omega, &FareyStop::MaxDenominator(BigUint::from(run.pmax)))?;
    let mut table = Table::new(&["n", "left", "right", "closer"]);
    for (n, iv) in steps.iter().enumerate() {
        let (l, r) = iv.endpoints();
        table.push(vec![
            n.to_string(),
            fraction(l),
            fraction(r),
            fraction(&farey::closer_endpoint(iv, &run.omega)),
        ]);
    }
    let list = |v: Vec<Rational>| v.iter().map(fraction).collect::<Vec<_>>();
    let mut summary = json!({
        "terminated": steps.last().is_some_and(FareyInterval::is_point),
        "endpoints": list(farey::farey_endpoints(&run.omega, run.pmax)?),
        "principal_convergents": list(farey::principal_convergents(&run.omega, run.pmax)?),
        "d_best_approximants": list(farey::d_best_approximants(&run.omega, run.pmax)?),
    });
    let mut failures = Vec::new();
    if run.random > 0 {
        let report = farey::check_theorems(&random_targets(run.random, ctx.seed), run.depth)?;
        if report.exact_failures() > 0 {
            failures.push(format!("{} exact property violations", report.exact_failures()));
        }
        summary["random_check"] = serde_json::to_value(&report)?;
    }
    ctx.finish("farey", run, &table, summary, failures)
}

#[derive(Debug, Clone, Serialize)]
struct ModesRun {
    omega: Omega,
    #[serde(serialize_with = "finite_or_text")]
    alpha: f64,
    b: f64,
    pmax: u64,
    kick: f64,
}

// JSON has no infinity
fn finite_or_text<S: serde::Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.collect_str(x)
    }
}

fn side(a: ApproxSide) -> &'static str {
    a.as_str()
}

pub fn modes(args: &ModesArgs, common: &CommonArgs, file: &ConfigFile) -> Result<Outcome, CliError> {
    let ctx = Context::new("modes", &["omega", "alpha", "b", "pmax", "kick"], common, file)?;
    let run = ModesRun {
        omega: file.require(args.omega.clone(), "omega")?,
        alpha: file.pick_or(args.alpha, "alpha", f64::INFINITY)?,
        b: file.pick_or(args.b, "b", DEFAULT_BORDER)?,
        pmax: file.pick_or(args.pmax, "pmax", 144)?,
        kick: file.pick_or(args.kick, "kick", DEFAULT_KICK)?,
    };
    let ep = ep_linear(run.omega.clone(), run.alpha)?.with_kick(run.kick)?;
    let candidates = mode_candidates(&ep, run.pmax, run.b)?;

    let mut table = Table::new(&[
        "m",
        "p",
        "approximant",
        "arm",
        "ktilde_lo",
        "ktilde_hi",
        "eps_lo",
        "eps_hi",
        "epsilon",
        "acceleration",
        "jumping_index",
        "passes_approximation",
        "meets_tongue",
        "observable",
    ]);
    let mut observed = Vec::new();
    let mut rejected = Vec::new();
    for c in &candidates {
        let (m, p) = (c.label.m(), c.label.p());
        let head = || vec![m.to_string(), p.to_string(), side(c.approximant).to_string()];
        let flags = |obs: bool| {
            vec![
                u8::from(c.passes_approximation).to_string(),
                u8::from(c.meets_tongue()).to_string(),
                u8::from(obs).to_string(),
            ]
        };
        let observable = c.passes_approximation && c.meets_tongue();
        if observable {
            observed.push(format!("{m}/{p}"));
        } else {
            rejected.push(format!("{m}/{p}"));
        }
        let mut any = false;
        for arm in [Arm::Left, Arm::Right] {
            let Some(w) = c.intersection.arm(arm) else {
                continue;
            };
            any = true;
            let eps = w.representative_epsilon();
            let omega_map = ep.omega_at(eps * ep.kick);
            let a = tongues::spectroscopy::mode_acceleration(omega_map, c.label, eps)?;
            let mut row = head();
            row.extend([
                arm.as_str().to_string(),
                num(w.ktilde.0),
                num(w.ktilde.1),
                num(w.epsilon.0),
                num(w.epsilon.1),
                num(eps),
                num(a),
                tongues::spectroscopy::jumping_index(c.label, eps).to_string(),
            ]);
            row.extend(flags(observable));
            table.push(row);
        }
        if !any {
            let mut row = head();
            row.extend(std::iter::repeat_n(String::new(), 8));
            row.extend(flags(false));
            table.push(row);
        }
    }
    let summary = json!({
        "observed": observed,
        "rejected": rejected,
    });
    ctx.finish("modes", run, &table, summary, Vec::new())
}
