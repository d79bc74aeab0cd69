//! Subcommand implementations.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use cogmac_core::analytic::{
    cross_layer_tau, solve_fixed_point, sweep as run_sweep, sweep_curves, CurveRow, SweepRow,
};
use cogmac_core::chain::{
    build_transition_matrix, stationary_distribution_with, transmission_probability_full,
    SolverOptions, StateSpace,
};
use cogmac_core::model::ModelParams;
use cogmac_core::report::fmt_f64;
use cogmac_core::sim::{derive_seed, run_simulation, SimConfig, SimReport};
use cogmac_core::validate::{validate as run_validate, ValidationRow};
use cogmac_core::Execution;
use serde_json::json;

use crate::config::{PartialSim, RunConfigFile};
use crate::{
    AnalyzeArgs, ChainArgs, CliError, Format, ModelArgs, SimArgs, SimulateArgs,
    SweepArgs, ValidateArgs, EXIT_THRESHOLD,
};

pub const ANALYZE_CSV_HEADER: &str = "tau,p_c,q,pf,iterations,residual";
const DEFAULT_SLOTS: u64 = 1_000_000;
const DEFAULT_SEED: u64 = 1;

fn load_config(model: &ModelArgs) -> Result<RunConfigFile, CliError> {
    match &model.config {
        Some(path) => RunConfigFile::load(path).map_err(CliError::usage),
        None => Ok(RunConfigFile::default()),
    }
}

fn resolve_params(model: &ModelArgs, file: &RunConfigFile) -> Result<ModelParams, CliError> {
    Ok(file.model.overlay(&model.partial()).resolve()?)
}

fn resolve_sim(params: ModelParams, sim: &SimArgs, file: &RunConfigFile) -> Result<SimConfig, CliError> {
    let s: PartialSim = file.sim.overlay(&sim.partial());
    let base = SimConfig::new(params, s.slots.unwrap_or(DEFAULT_SLOTS), s.seed.unwrap_or(DEFAULT_SEED));
    let config = SimConfig {
        warmup_slots: s.warmup.unwrap_or(base.warmup_slots),
        sensing_scope: s.sensing_scope.unwrap_or(base.sensing_scope),
        collision_rule: s.collision_rule.unwrap_or(base.collision_rule),
        pu_hits_collide: s.pu_hits_collide.unwrap_or(base.pu_hits_collide),
        batches: s.batches.unwrap_or(base.batches),
        ..base
    };
    config.validate()?;
    Ok(config)
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    let io_err = |e: std::io::Error| CliError::usage(format!("cannot write output: {e}"));
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout().lock().write_all(text.as_bytes()).map_err(io_err),
    }
}

fn unix_secs() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub fn analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let file = load_config(&args.model)?;
    let params = resolve_params(&args.model, &file)?;
    let pf = params.pf()?;
    let op = solve_fixed_point(&params)?;
    let text = match args.format {
        Format::Table => {
            let source = if params.detection.is_derived() { "derived" } else { "given" };
            format!(
                "q           {}\npf          {} ({source})\ntau         {}\np_c         {}\niterations  {}\nresidual    {}\n",
                fmt_f64(op.q),
                fmt_f64(pf),
                fmt_f64(op.tau),
                fmt_f64(op.p),
                op.iterations,
                fmt_f64(op.residual),
            )
        }
        Format::Csv => format!(
            "{ANALYZE_CSV_HEADER}\n{},{},{},{},{},{}\n",
            fmt_f64(op.tau),
            fmt_f64(op.p),
            fmt_f64(op.q),
            fmt_f64(pf),
            op.iterations,
            fmt_f64(op.residual)
        ),
        Format::Json => {
            let value = json!({
                "params": params,
                "pf": pf,
                "pf_derived": params.detection.is_derived(),
                "q": op.q,
                "tau": op.tau,
                "p_c": op.p,
                "iterations": op.iterations,
                "residual": op.residual,
            });
            serde_json::to_string_pretty(&value).expect("value serializes") + "\n"
        }
    };
    write_output(None, &text)
}

/// Inclusive range `from, from+step, ..` up to `to`, tolerant of float drift.
fn range_values(from: f64, to: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(step.is_finite() && step > 0.0) {
        return Err(CliError::usage(format!("invalid value for `step`: must be positive, got {step}")));
    }
    if !(from.is_finite() && to.is_finite() && to >= from) {
        return Err(CliError::usage(format!("invalid range: `to` ({to}) must not precede `from` ({from})")));
    }
    let count = ((to - from) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| from + i as f64 * step).collect())
}

pub fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    let format = args.format.unwrap_or_else(|| {
        match args.out.as_deref().and_then(Path::extension).and_then(|e| e.to_str()) {
            Some("json") => Format::Json,
            _ => Format::Csv,
        }
    });
    if format == Format::Table {
        return Err(CliError::usage("sweep writes csv or json"));
    }
    let exec = Execution::Parallel;
    let (text, total, ok) = if let Some(preset) = args.preset {
        let rows = sweep_curves(&preset.curves(), preset.axis(), &preset.axis_values(), exec);
        report_failures(rows.iter().map(|r| (Some(r.curve.as_str()), &r.row)));
        let ok = rows.iter().filter(|r| r.row.is_ok()).count();
        let text = match format {
            Format::Json => CurveRow::render_json(&rows),
            _ => CurveRow::render_csv(&rows),
        };
        (text, rows.len(), ok)
    } else {
        let axis = args.axis.expect("clap requires axis without preset");
        let file = load_config(&args.model)?;
        let params = resolve_params(&args.model, &file)?;
        let values = match (args.from, args.to) {
            (Some(from), Some(to)) => range_values(from, to, args.step)?,
            _ if !args.values.is_empty() => args.values.clone(),
            _ => return Err(CliError::usage("give --values or --from/--to")),
        };
        let rows = run_sweep(&params, axis, &values, exec);
        report_failures(rows.iter().map(|r| (None, r)));
        let ok = rows.iter().filter(|r| r.is_ok()).count();
        let text = match format {
            Format::Json => SweepRow::render_json(&rows),
            _ => SweepRow::render_csv(&rows),
        };
        (text, rows.len(), ok)
    };
    write_output(args.out.as_deref(), &text)?;
    eprintln!("{total} rows, {} failed", total - ok);
    if ok == 0 {
        return Err(CliError::solver("no sweep point could be solved"));
    }
    Ok(())
}

fn report_failures<'a>(rows: impl Iterator<Item = (Option<&'a str>, &'a SweepRow)>) {
    for (curve, row) in rows {
        if let Err(e) = &row.result {
            let prefix = curve.map(|c| format!("{c}: ")).unwrap_or_default();
            eprintln!("warning: {prefix}{}={}: {e}", row.axis.name(), row.value);
        }
    }
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let file = load_config(&args.model)?;
    let params = resolve_params(&args.model, &file)?;
    let config = resolve_sim(params, &args.sim, &file)?;
    let stats = run_simulation(&config)?;
    let report = SimReport::new(config, stats)?;
    let value = json!({
        "payload": report,
        "metadata": { "generated_unix_secs": unix_secs() },
    });
    let text = serde_json::to_string_pretty(&value).expect("report serializes") + "\n";
    write_output(args.out.as_deref(), &text)
}

fn grid_params(args: &ValidateArgs, base: ModelParams) -> Result<Vec<ModelParams>, CliError> {
    if let Some(preset) = args.preset {
        let values = preset.axis_values();
        let mut out = Vec::new();
        for curve in preset.curves() {
            for &v in &values {
                out.push(preset.axis().apply(&curve.params, v)?);
            }
        }
        return Ok(out);
    }
    let or_base = |v: Vec<f64>, b: f64| if v.is_empty() { vec![b] } else { v };
    let stations = if args.n_values.is_empty() { vec![base.stations] } else { args.n_values.clone() };
    let channels = if args.c_values.is_empty() { vec![base.channels] } else { args.c_values.clone() };
    let pds = or_base(args.pd_values.clone(), base.pd());
    let activities = or_base(args.a_values.clone(), base.activity);
    let mut out = Vec::new();
    for &channels in &channels {
        for &activity in &activities {
            for &stations in &stations {
                for &pd in &pds {
                    let p = ModelParams {
                        stations,
                        channels,
                        activity,
                        detection: base.detection.with_pd(pd),
                        ..base
                    };
                    p.validate()?;
                    out.push(p);
                }
            }
        }
    }
    Ok(out)
}

pub fn validate(args: &ValidateArgs) -> Result<(), CliError> {
    if !(args.threshold.is_finite() && args.threshold > 0.0) {
        return Err(CliError::usage(format!(
            "invalid value for `threshold`: must be positive, got {}",
            args.threshold
        )));
    }
    let file = load_config(&args.model)?;
    let base_params = resolve_params(&args.model, &file)?;
    let base = resolve_sim(base_params, &args.sim, &file)?;
    let configs: Vec<SimConfig> = grid_params(args, base_params)?
        .into_iter()
        .enumerate()
        .map(|(i, params)| SimConfig { params, seed: derive_seed(base.seed, i as u64), ..base })
        .collect();
    let rows = run_validate(&configs, args.threshold, Execution::Parallel)?;
    write_output(args.out.as_deref(), &ValidationRow::render_csv(&rows))?;
    let checked = rows.iter().filter(|r| r.pass.is_some()).count();
    let failed: Vec<&ValidationRow> = rows.iter().filter(|r| r.failed()).collect();
    eprintln!(
        "{} points, {}/{checked} thresholded checks within {}",
        configs.len(),
        checked - failed.len(),
        args.threshold
    );
    for row in &failed {
        eprintln!("fail: {} rel_err={}", row.metric, fmt_f64(row.rel_err));
    }
    if !failed.is_empty() {
        return Err(CliError {
            code: EXIT_THRESHOLD,
            message: format!("{} checks exceeded the threshold", failed.len()),
        });
    }
    Ok(())
}

pub fn chain(args: &ChainArgs) -> Result<(), CliError> {
    let file = load_config(&args.model)?;
    let params = resolve_params(&args.model, &file)?;
    let q = params.busy_probability()?;
    let p_cond = match args.p_cond {
        Some(p) if (0.0..=1.0).contains(&p) => p,
        Some(p) => {
            return Err(CliError::usage(format!("invalid value for `p_cond`: must lie in [0, 1], got {p}")))
        }
        None => solve_fixed_point(&params)?.p,
    };
    let space = StateSpace::with_cap(params.min_window, params.max_stage, params.channels, args.max_states)?;
    let matrix = build_transition_matrix(&space, q, p_cond, params.dynamics)?;
    if let Some(path) = &args.dump {
        let f = File::create(path)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?;
        let mut w = BufWriter::new(f);
        matrix
            .write_coordinate(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?;
    }
    let opts = SolverOptions { execution: Execution::Parallel, ..SolverOptions::default() };
    let pi = stationary_distribution_with(&matrix, &opts)?;
    let tau_full = transmission_probability_full(&pi, &space);
    let tau_closed = cross_layer_tau(p_cond, params.min_window, params.max_stage, params.channels, q)?;
    let text = format!(
        "states           {}\nnonzeros         {}\niterations       {}\nresidual         {}\nq                {}\np_cond           {}\ntau_chain        {}\ntau_closed_form  {}\nabs_diff         {}\nfactorization    {}\n",
        space.len(),
        matrix.nnz(),
        pi.iterations,
        fmt_f64(pi.residual),
        fmt_f64(q),
        fmt_f64(p_cond),
        fmt_f64(tau_full),
        fmt_f64(tau_closed),
        fmt_f64((tau_full - tau_closed).abs()),
        fmt_f64(pi.factorization_error(&space)),
    );
    write_output(None, &text)
}
