//! Named experiments: each turns a resolved config into data files and a
//! JSON summary.

use std::f64::consts::PI;

use dcat_core::analysis::{
    appendix_rates, classical_energy, energy_surface, gate_time_x, husimi_q, x_fidelity_trace, x_speed_scan,
    z_error_trace, z_gate_numeric, Axis, Column, FidelityBasis, PhaseGrid, Provenance, SweepResult,
};
use dcat_core::cnot::{fidelity_vs_t, geometric_phase_extract, instantaneous_trace, Basis, CnotOptions, TwoModeParams};
use dcat_core::fockspace::{coherent_state, default_cutoff};
use dcat_core::states::{beta_of, cat_state, gamma1_of, CatParams, Parity};
use dcat_core::{DcatError, StateVector, C64};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{ConfigError, Experiment, ExperimentConfig};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{experiment}: invalid parameters: {source}")]
    Invalid { experiment: Experiment, source: DcatError },
    #[error("{experiment}: simulation failed: {source}")]
    Simulation { experiment: Experiment, source: DcatError },
    #[error("cannot write output: {0}")]
    Output(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Invalid { .. } => 2,
            RunError::Simulation { .. } | RunError::Output(_) => 3,
        }
    }
}

/// A named file and its contents.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    pub summary: Value,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    artifacts: Vec<Artifact>,
}

impl Ctx<'_> {
    fn sim<T>(&self, r: dcat_core::Result<T>) -> Result<T, RunError> {
        r.map_err(|e| {
            let experiment = self.cfg.experiment;
            match e {
                DcatError::InvalidArgument(_) | DcatError::Domain(_) | DcatError::InvalidDimension { .. } => {
                    RunError::Invalid { experiment, source: e }
                }
                _ => RunError::Simulation { experiment, source: e },
            }
        })
    }

    fn csv(&mut self, name: String, sweep: &SweepResult) {
        if self.cfg.wants("csv") {
            self.artifacts.push(Artifact {
                name,
                bytes: sweep.to_csv().into_bytes(),
            });
        }
    }

    fn finish(mut self, summary: Value) -> RunOutput {
        if self.cfg.wants("json") {
            let text = serde_json::to_string_pretty(&summary).expect("summary is plain JSON");
            self.artifacts.push(Artifact {
                name: "summary.json".into(),
                bytes: (text + "\n").into_bytes(),
            });
        }
        RunOutput {
            artifacts: self.artifacts,
            summary,
        }
    }
}

fn tag(x: f64) -> String {
    format!("{x}")
}

fn column(name: &str, unit: &str, values: Vec<f64>) -> Column {
    Column {
        name: name.into(),
        unit: unit.into(),
        values,
    }
}

fn axis(name: &str, unit: &str, values: Vec<f64>) -> Axis {
    Axis {
        name: name.into(),
        unit: unit.into(),
        values,
    }
}

fn params_json(cfg: &ExperimentConfig) -> Value {
    json!(cfg.resolved())
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![a];
    }
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

/// Phase-space map as (re, im, value) triples.
fn phase_map(
    ctx: &Ctx<'_>,
    grid: &PhaseGrid,
    name: &str,
    unit: &str,
    m: &DMatrix<f64>,
    dims: Vec<usize>,
) -> Result<SweepResult, RunError> {
    let mut values = Vec::with_capacity(grid.re.len() * grid.im.len());
    for j in 0..grid.re.len() {
        for i in 0..grid.im.len() {
            values.push(m[(i, j)]);
        }
    }
    ctx.sim(SweepResult::new(
        vec![
            axis("re", "dimensionless", grid.re.clone()),
            axis("im", "dimensionless", grid.im.clone()),
        ],
        vec![column(name, unit, values)],
        params_json(ctx.cfg),
        Provenance::new(dims, 0.0),
    ))
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput, RunError> {
    let mut ctx = Ctx {
        cfg,
        artifacts: Vec::new(),
    };
    let summary = match cfg.experiment {
        Experiment::Fig1 => fig1(&mut ctx)?,
        Experiment::Fig2 => fig2(&mut ctx)?,
        Experiment::Fig3 => fig3(&mut ctx)?,
        Experiment::Fig4 => fig4(&mut ctx)?,
        Experiment::FigA1 => fig_a1(&mut ctx)?,
        Experiment::Custom => custom(&mut ctx)?,
    };
    Ok(ctx.finish(summary))
}

fn fig1(ctx: &mut Ctx<'_>) -> Result<Value, RunError> {
    let cfg = ctx.cfg;
    let kerr = cfg.kerr()?;
    let alpha = cfg.get_positive("alpha")?;
    let panels = cfg.get_list("r_panels")?;
    let lines = cfg.get_list("r_line")?;
    let n = cfg.get_count("grid_points")?.max(2);
    let dim_override = cfg.get_dim("dim")?;

    let mut beta_max = alpha;
    for &r in panels.iter().chain(lines.iter()) {
        beta_max = beta_max.max(ctx.sim(beta_of(alpha, r))?);
    }
    let grid = PhaseGrid::square(1.8 * beta_max, n);

    let base = ctx.sim(CatParams::new(kerr, 0.0, alpha))?;
    let surface = energy_surface(&base, &grid).map(|e| e * kerr);
    let sweep = phase_map(ctx, &grid, "energy", "rad/s", &surface, vec![])?;
    ctx.csv("energy_surface.csv".into(), &sweep);

    let xs = linspace(-1.8 * beta_max, 1.8 * beta_max, 2 * n - 1);
    let mut line_vals = Vec::with_capacity(lines.len() * xs.len());
    let mut line_summary = Vec::new();
    for &r in &lines {
        let p = ctx.sim(CatParams::new(kerr, r, alpha))?;
        let vals: Vec<f64> = xs
            .iter()
            .map(|&x| classical_energy(&p, C64::new(x, 0.0)) * kerr)
            .collect();
        let (imax, _) =
            vals.iter()
                .enumerate()
                .filter(|(i, _)| xs[*i] > 0.0)
                .fold(
                    (0, f64::NEG_INFINITY),
                    |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc },
                );
        line_summary.push(json!({"r": r, "beta": ctx.sim(beta_of(alpha, r))?, "grid_extremum": xs[imax]}));
        line_vals.extend(vals);
    }
    let sweep = ctx.sim(SweepResult::new(
        vec![
            axis("r", "dimensionless", lines.clone()),
            axis("x", "dimensionless", xs),
        ],
        vec![column("energy", "rad/s", line_vals)],
        params_json(cfg),
        Provenance::new(vec![], 0.0),
    ))?;
    ctx.csv("energy_line.csv".into(), &sweep);

    let mut panel_summary = Vec::new();
    for &r in &panels {
        let beta = ctx.sim(beta_of(alpha, r))?;
        let dim = dim_override.unwrap_or_else(|| default_cutoff(beta, false));
        let state = ctx.sim(cat_state(beta, Parity::Even, 0.0, dim))?;
        let q = ctx.sim(husimi_q(&state, &grid))?;
        let sweep = phase_map(ctx, &grid, "q", "dimensionless", &q, vec![dim])?;
        ctx.csv(format!("husimi_R{}.csv", tag(r)), &sweep);
        panel_summary.push(json!({"r": r, "beta": beta, "dim": dim}));
    }
    Ok(json!({
        "experiment": "fig1",
        "kerr_rad_s": kerr,
        "alpha": alpha,
        "energy_lines": line_summary,
        "husimi_panels": panel_summary,
    }))
}

fn fig2(ctx: &mut Ctx<'_>) -> Result<Value, RunError> {
    let cfg = ctx.cfg;
    let kerr = cfg.kerr()?;
    let alpha = cfg.get_positive("alpha")?;
    let r_grid = cfg.get_list("r_grid")?;
    let t_max = cfg.get_positive("t_max")?;
    let times = linspace(0.0, t_max, cfg.get_count("t_points")?.max(2));
    let traces_r = cfg.get_list("trace_r")?;
    let dim = cfg.get_dim("dim")?;

    let params: Vec<CatParams> = r_grid
        .iter()
        .map(|&r| ctx.sim(CatParams::new(kerr, r, alpha)))
        .collect::<Result<_, _>>()?;
    let surface: Vec<dcat_core::Result<Vec<f64>>> = params
        .par_iter()
        .map(|p| {
            x_fidelity_trace(p, &times, dim, FidelityBasis::Raw).map(|t| t.fidelity.iter().map(|f| 1.0 - f).collect())
        })
        .collect();
    let mut errors = Vec::with_capacity(r_grid.len() * times.len());
    for row in surface {
        errors.extend(ctx.sim(row)?);
    }
    let sweep = ctx.sim(SweepResult::new(
        vec![
            axis("r", "dimensionless", r_grid.clone()),
            axis("t", "s", times.clone()),
        ],
        vec![column("error", "dimensionless", errors)],
        params_json(cfg),
        Provenance::new(dim.into_iter().collect(), 0.0),
    ))?;
    ctx.csv("error_surface.csv".into(), &sweep);

    let gates: Vec<dcat_core::Result<dcat_core::analysis::XGate>> =
        params.par_iter().map(|p| gate_time_x(p, dim)).collect();
    let gates = gates.into_iter().map(|g| ctx.sim(g)).collect::<Result<Vec<_>, _>>()?;
    let sweep = ctx.sim(SweepResult::new(
        vec![axis("r", "dimensionless", r_grid.clone())],
        vec![
            column("gate_time", "s", gates.iter().map(|g| g.gate_time).collect()),
            column("error", "dimensionless", gates.iter().map(|g| 1.0 - g.f_max).collect()),
            column("speed", "dimensionless", gates.iter().map(|g| g.speed).collect()),
        ],
        params_json(cfg),
        Provenance::new(gates.iter().map(|g| g.dim).take(1).collect(), 0.0),
    ))?;
    ctx.csv("gates.csv".into(), &sweep);

    let mut trace_summary = Vec::new();
    for &r in &traces_r {
        let p = ctx.sim(CatParams::new(kerr, r, alpha))?;
        let tr = ctx.sim(x_fidelity_trace(&p, &times, dim, FidelityBasis::Raw))?;
        let gate = ctx.sim(gate_time_x(&p, dim))?;
        let sweep = ctx.sim(SweepResult::new(
            vec![axis("t", "s", times.clone())],
            vec![
                column("fidelity", "dimensionless", tr.fidelity),
                column("fidelity_ideal", "dimensionless", tr.fidelity_ideal),
                column("p_cs", "dimensionless", tr.p_cs),
                column("code_population", "dimensionless", tr.code_population),
            ],
            params_json(cfg),
            Provenance::new(vec![gate.dim], 0.0),
        ))?;
        ctx.csv(format!("trace_R{}.csv", tag(r)), &sweep);
        trace_summary.push(json!({
            "r": r,
            "gate_time_s": gate.gate_time,
            "error": 1.0 - gate.f_max,
            "direction": gate.direction_sign,
        }));
    }
    Ok(json!({
        "experiment": "fig2",
        "kerr_rad_s": kerr,
        "alpha": alpha,
        "traces": trace_summary,
    }))
}

fn fig3(ctx: &mut Ctx<'_>) -> Result<Value, RunError> {
    let cfg = ctx.cfg;
    let kerr = cfg.kerr()?;
    let alpha = cfg.get_positive("alpha")?;
    let r_grid = cfg.get_list("r_grid")?;
    let traces_r = cfg.get_list("trace_r")?;
    let n_periods = cfg.get_positive("n_periods")?;
    let n_points = cfg.get_count("n_points")?;
    let husimi_r = cfg.get_f64("husimi_r")?;
    let n = cfg.get_count("grid_points")?.max(2);
    let dim = cfg.get_dim("dim")?;

    let params: Vec<CatParams> = r_grid
        .iter()
        .map(|&r| ctx.sim(CatParams::lambda_matched(kerr, r, alpha)))
        .collect::<Result<_, _>>()?;
    let gates: Vec<dcat_core::Result<dcat_core::analysis::ZGate>> =
        params.par_iter().map(|p| z_gate_numeric(p, dim)).collect();
    let gates = gates.into_iter().map(|g| ctx.sim(g)).collect::<Result<Vec<_>, _>>()?;
    let sweep = ctx.sim(SweepResult::new(
        vec![axis("r", "dimensionless", r_grid.clone())],
        vec![
            column(
                "omega_analytic",
                "rad/s",
                gates.iter().map(|g| g.omega_analytic).collect(),
            ),
            column(
                "omega_numeric",
                "rad/s",
                gates.iter().map(|g| g.omega_numeric).collect(),
            ),
            column("t_pi", "s", gates.iter().map(|g| g.t_pi).collect()),
            column("t_pi_numeric", "s", gates.iter().map(|g| g.t_pi_numeric).collect()),
            column("fidelity", "dimensionless", gates.iter().map(|g| g.fidelity).collect()),
            column(
                "code_population",
                "dimensionless",
                gates.iter().map(|g| g.code_population).collect(),
            ),
        ],
        params_json(cfg),
        Provenance::new(gates.iter().map(|g| g.dim).take(1).collect(), 0.0),
    ))?;
    ctx.csv("z_gate.csv".into(), &sweep);

    for &r in &traces_r {
        let p = ctx.sim(CatParams::lambda_matched(kerr, r, alpha))?;
        let tr = ctx.sim(z_error_trace(&p, n_periods, n_points, dim))?;
        let sweep = ctx.sim(SweepResult::new(
            vec![axis("t", "s", tr.times)],
            vec![
                column("normalized_time", "dimensionless", tr.normalized_time),
                column("error", "dimensionless", tr.error),
                column("min_error_bound", "dimensionless", tr.min_error_bound),
            ],
            params_json(cfg),
            Provenance::new(dim.into_iter().collect(), 0.0),
        ))?;
        ctx.csv(format!("z_error_R{}.csv", tag(r)), &sweep);
    }

    let gamma1 = ctx.sim(gamma1_of(alpha, husimi_r))?;
    let reach = alpha.max(gamma1.abs());
    let hdim = dim.unwrap_or_else(|| default_cutoff(reach, false));
    let grid = PhaseGrid::square(1.8 * reach, n);
    let cat = ctx.sim(cat_state(alpha, Parity::Even, 0.0, hdim))?;
    let q = ctx.sim(husimi_q(&cat, &grid))?;
    let sweep = phase_map(ctx, &grid, "q", "dimensionless", &q, vec![hdim])?;
    ctx.csv("husimi_cat.csv".into(), &sweep);
    let plus = ctx.sim(coherent_state(C64::new(alpha, 0.0), hdim))?;
    let left = ctx.sim(coherent_state(C64::new(gamma1, 0.0), hdim))?;
    let pair: StateVector = plus.combine(C64::new(1.0, 0.0), &left, C64::new(1.0, 0.0)).normalized();
    let q = ctx.sim(husimi_q(&pair, &grid))?;
    let sweep = phase_map(ctx, &grid, "q", "dimensionless", &q, vec![hdim])?;
    ctx.csv(format!("husimi_deformed_R{}.csv", tag(husimi_r)), &sweep);

    let rows: Vec<Value> = r_grid
        .iter()
        .zip(gates.iter())
        .map(|(r, g)| {
            json!({
                "r": r,
                "t_pi_s": g.t_pi,
                "fidelity": g.fidelity,
                "omega_analytic_rad_s": g.omega_analytic,
                "omega_numeric_rad_s": g.omega_numeric,
                "omega_relative_difference": (g.omega_numeric - g.omega_analytic) / g.omega_analytic,
            })
        })
        .collect();
    Ok(json!({
        "experiment": "fig3",
        "kerr_rad_s": kerr,
        "alpha": alpha,
        "z_gates": rows,
        "husimi_gamma1": gamma1,
    }))
}

fn fig4(ctx: &mut Ctx<'_>) -> Result<Value, RunError> {
    let cfg = ctx.cfg;
    let kerr = cfg.kerr()?;
    let beta_c = cfg.get_positive("beta_c")?;
    let beta_t = cfg.get_positive("beta_t")?;
    let t_grid = cfg.get_list("t_grid")?;
    if t_grid.iter().any(|t| !(*t > 0.0)) {
        return Err(cfg.invalid("t_grid", "gate times must be positive").into());
    }
    let samples = cfg.get_count("trace_samples")?;
    let mut template = ctx.sim(TwoModeParams::new(kerr, beta_c, beta_t, t_grid[0], false))?;
    if let Some(d) = cfg.get_dim("dim_c")? {
        template.dim_c = d;
    }
    if let Some(d) = cfg.get_dim("dim_t")? {
        template.dim_t = d;
    }
    ctx.sim(template.validate())?;
    let mut opts = CnotOptions::default();
    opts.stepper.tol = cfg.tol()?;

    let sweep = ctx.sim(fidelity_vs_t(&template, &t_grid, &opts))?;
    ctx.csv("fidelity_vs_T.csv".into(), &sweep);

    let mut rows = Vec::new();
    for (k, &t) in t_grid.iter().enumerate() {
        let mut row = serde_json::Map::new();
        row.insert("gate_time_s".into(), json!(t));
        for col in &sweep.columns {
            row.insert(col.name.clone(), json!(col.values[k]));
        }
        if cfg.get_bool("geometric_phase") {
            for corr in [false, true] {
                let mut p = template.clone();
                p.gate_time = t;
                p.with_correction = corr;
                let g = ctx.sim(geometric_phase_extract(&p, &opts))?;
                let key = if corr {
                    "geometric_phase_corrected"
                } else {
                    "geometric_phase_plain"
                };
                row.insert(key.into(), serde_json::to_value(&g).expect("plain struct"));
            }
        }
        if samples > 0 {
            for corr in [false, true] {
                let mut p = template.clone();
                p.gate_time = t;
                p.with_correction = corr;
                let tr = ctx.sim(instantaneous_trace(&p, Basis::B10, samples, &opts))?;
                let sweep = ctx.sim(SweepResult::new(
                    vec![axis("t", "s", tr.times)],
                    vec![
                        column("phi", "dimensionless", tr.phi),
                        column("fidelity", "dimensionless", tr.fidelity),
                    ],
                    params_json(cfg),
                    Provenance::new(vec![p.dim_c, p.dim_t], opts.stepper.tol),
                ))?;
                let variant = if corr { "corrected" } else { "plain" };
                ctx.csv(format!("trace_10_T{}_{variant}.csv", tag(t)), &sweep);
            }
        }
        rows.push(Value::Object(row));
    }
    Ok(json!({
        "experiment": "fig4",
        "kerr_rad_s": kerr,
        "beta_c": beta_c,
        "beta_t": beta_t,
        "dims": [template.dim_c, template.dim_t],
        "rows": rows,
    }))
}

fn fig_a1(ctx: &mut Ctx<'_>) -> Result<Value, RunError> {
    let cfg = ctx.cfg;
    let kerr = cfg.kerr()?;
    let alphas = cfg.get_list("alpha")?;
    let r_grid = cfg.get_list("r_grid")?;
    let dim = cfg.get_dim("dim")?;
    let mut per_alpha = Vec::new();
    for &alpha in &alphas {
        let scan = ctx.sim(x_speed_scan(alpha, &r_grid, dim))?;
        let rates = r_grid
            .iter()
            .map(|&r| ctx.sim(appendix_rates(alpha, r, alpha * alpha)))
            .collect::<Result<Vec<_>, _>>()?;
        let to_time = |rate: f64| 1.0 / (kerr * rate);
        let mut sweep = scan.sweep.clone();
        sweep.columns.extend([
            column(
                "rate_small_alpha",
                "dimensionless",
                rates.iter().map(|r| r.small_alpha_rate).collect(),
            ),
            column(
                "rate_small_beta",
                "dimensionless",
                rates.iter().map(|r| r.small_beta_rate).collect(),
            ),
            column(
                "rate_extended",
                "dimensionless",
                rates.iter().map(|r| r.ext_rate).collect(),
            ),
            column(
                "t_alpha",
                "s",
                rates.iter().map(|r| to_time(r.small_alpha_rate)).collect(),
            ),
            column(
                "t_beta",
                "s",
                rates.iter().map(|r| to_time(r.small_beta_rate)).collect(),
            ),
        ]);
        ctx.csv(format!("speed_alpha{}.csv", tag(alpha)), &sweep);
        per_alpha.push(json!({
            "alpha": alpha,
            "zero_crossings": scan.zero_crossings,
        }));
    }
    Ok(json!({
        "experiment": "figA1",
        "kerr_rad_s": kerr,
        "scans": per_alpha,
    }))
}

fn custom(ctx: &mut Ctx<'_>) -> Result<Value, RunError> {
    let cfg = ctx.cfg;
    let kerr = cfg.kerr()?;
    let alpha = cfg.get_positive("alpha")?;
    let r = cfg.get_f64("r")?;
    let dim = cfg.get_dim("dim")?;
    let n = cfg.get_count("t_points")?.max(2);
    let p = ctx.sim(CatParams::new(kerr, r, alpha))?;
    let gate = ctx.sim(gate_time_x(&p, dim))?;
    let t_end = if gate.diverged || !gate.gate_time.is_finite() {
        20.0 * PI / (kerr * r.abs().max(0.05))
    } else {
        1.5 * gate.gate_time
    };
    let times = linspace(0.0, t_end, n);
    let tr = ctx.sim(x_fidelity_trace(&p, &times, dim, FidelityBasis::Raw))?;
    let sweep = ctx.sim(SweepResult::new(
        vec![axis("t", "s", times)],
        vec![
            column("fidelity", "dimensionless", tr.fidelity),
            column("p_cs", "dimensionless", tr.p_cs),
            column("code_population", "dimensionless", tr.code_population),
        ],
        params_json(cfg),
        Provenance::new(vec![gate.dim], 0.0),
    ))?;
    ctx.csv("x_trace.csv".into(), &sweep);

    let mut summary = json!({
        "experiment": "custom",
        "kerr_rad_s": kerr,
        "alpha": alpha,
        "r": r,
        "x_gate": {
            "gate_time_s": gate.gate_time,
            "f_max": gate.f_max,
            "error": 1.0 - gate.f_max,
            "direction": gate.direction_sign,
            "speed": gate.speed,
            "diverged": gate.diverged,
            "dim": gate.dim,
        },
    });
    if cfg.get_str("eps_z_mode") == "matched" {
        let pz = ctx.sim(CatParams::lambda_matched(kerr, r, alpha))?;
        let z = ctx.sim(z_gate_numeric(&pz, dim))?;
        summary["z_gate"] = serde_json::to_value(&z).expect("plain struct");
    }
    Ok(summary)
}
