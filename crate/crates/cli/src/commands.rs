//! Subcommand drivers: resolve flags against config files, call the
//! library, print the report, and translate outcomes into exit signals.

use crate::args::{SimulateArgs, SolveArgs, SweepArgs, ValidateArgs};
use crate::config::{require, resolve, ConfigFile};
use crate::report::{self, MeasuresJson, SimulationJson, SolveReportJson};
use crate::sweep::{self, FixedParams, SweepSpec, SweptParameter};
use crate::{validate, CliError, ExitSignal};
use blockq::matgeom::SolveError;
use blockq::model::stability;
use blockq::sim::{simulate, SimConfig};
use blockq::{measures, MatGeomSolution, QueueParameters, SolverOptions};

pub const DEFAULT_TAIL_EPS: f64 = 1e-10;
const DEFAULT_SEED: u64 = 1;
const DEFAULT_HORIZON: u64 = 200_000;
const DEFAULT_BATCHES: u32 = 32;

fn queue_params(
    cfg: &ConfigFile,
    flags: &crate::args::ParamFlags,
) -> Result<QueueParameters, CliError> {
    QueueParameters::new(
        require(flags.arrival_rate, cfg.f64("arrival_rate")?, "arrival-rate")?,
        require(flags.build_rate, cfg.f64("build_rate")?, "build-rate")?,
        require(flags.generate_rate, cfg.f64("generate_rate")?, "generate-rate")?,
        require(flags.block_size, cfg.usize("block_size")?, "block-size")?,
    )
    .map_err(|e| CliError::Usage(e.to_string()))
}

fn solver_options(flag_tol: Option<f64>, cfg: &ConfigFile) -> Result<SolverOptions, CliError> {
    let mut options = SolverOptions::default();
    options.tol = resolve(flag_tol, cfg.f64("tol")?, options.tol);
    // Negated comparison so NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(options.tol > 0.0) {
        return Err(CliError::Usage(format!("--tol must be positive, got {}", options.tol)));
    }
    Ok(options)
}

fn tail_eps(flag: Option<f64>, cfg: &ConfigFile) -> Result<f64, CliError> {
    let eps = resolve(flag, cfg.f64("tail_eps")?, DEFAULT_TAIL_EPS);
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(eps > 0.0) {
        return Err(CliError::Usage(format!("--tail-eps must be positive, got {eps}")));
    }
    Ok(eps)
}

fn sim_config(
    params: QueueParameters,
    seed: Option<u64>,
    horizon: Option<u64>,
    warmup: Option<u64>,
    batches: Option<u32>,
    cfg: &ConfigFile,
) -> Result<SimConfig, CliError> {
    let horizon_events = resolve(horizon, cfg.u64("horizon")?, DEFAULT_HORIZON);
    let config = SimConfig {
        params,
        seed: resolve(seed, cfg.u64("seed")?, DEFAULT_SEED),
        horizon_events,
        warmup_events: resolve(warmup, cfg.u64("warmup")?, horizon_events / 10),
        batch_count: resolve(batches, cfg.u32("batches")?, DEFAULT_BATCHES),
    };
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(config)
}

pub fn cmd_solve(args: &SolveArgs) -> Result<ExitSignal, CliError> {
    let cfg = ConfigFile::load(args.params.config.as_deref())?;
    let params = queue_params(&cfg, &args.params)?;
    let options = solver_options(args.tol, &cfg)?;
    let eps = tail_eps(args.tail_eps, &cfg)?;

    match MatGeomSolution::solve(&params, &options) {
        Ok(solution) => {
            let r = measures::evaluate(&solution, eps);
            report::print_json(&SolveReportJson {
                parameters: (&params).into(),
                stability: (&r.stability).into(),
                solver: Some((&solution).into()),
                measures: Some(MeasuresJson::from(&r)),
            });
            Ok(ExitSignal::Success)
        }
        Err(SolveError::Unstable { .. }) => {
            // Still a report: the caller asked what this point looks like,
            // and "unstable, utilization 1.3" is the answer.
            report::print_json(&SolveReportJson {
                parameters: (&params).into(),
                stability: (&stability(&params)).into(),
                solver: None,
                measures: None,
            });
            Ok(ExitSignal::Unstable)
        }
        Err(e) => Err(CliError::Solver(e.to_string())),
    }
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<ExitSignal, CliError> {
    let cfg = ConfigFile::load(args.params.config.as_deref())?;
    let swept = SweptParameter::parse(&require(
        args.sweep_parameter.clone(),
        cfg.get("sweep_parameter").map(String::from),
        "sweep-parameter",
    )?)?;

    let values = match resolve(
        args.sweep_values.clone(),
        cfg.get("sweep_values").map(String::from),
        String::new(),
    ) {
        list if !list.is_empty() => sweep::parse_value_list(&list)?,
        _ => {
            let from = require(args.sweep_from, cfg.f64("sweep_from")?, "sweep-from")?;
            let to = require(args.sweep_to, cfg.f64("sweep_to")?, "sweep-to")?;
            let step = require(args.sweep_step, cfg.f64("sweep_step")?, "sweep-step")?;
            sweep::arithmetic_grid(from, to, step)?
        }
    };

    let fixed = FixedParams {
        arrival_rate: args.params.arrival_rate.or(cfg.f64("arrival_rate")?),
        build_rate: args.params.build_rate.or(cfg.f64("build_rate")?),
        generate_rate: args.params.generate_rate.or(cfg.f64("generate_rate")?),
        block_size: args.params.block_size.or(cfg.usize("block_size")?),
    };
    let spec = SweepSpec::build(swept, values, &fixed)?;
    let options = solver_options(args.tol, &cfg)?;
    let eps = tail_eps(args.tail_eps, &cfg)?;

    let output = args
        .output
        .clone()
        .or_else(|| cfg.get("output").map(std::path::PathBuf::from));
    match output {
        Some(path) => {
            let file = std::fs::File::create(&path).map_err(|e| {
                CliError::Usage(format!("cannot create output file {}: {e}", path.display()))
            })?;
            let mut writer = std::io::BufWriter::new(file);
            sweep::run(&spec, &options, eps, &mut writer)
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            sweep::run(&spec, &options, eps, &mut lock)
        }
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<ExitSignal, CliError> {
    let cfg = ConfigFile::load(args.params.config.as_deref())?;
    let params = queue_params(&cfg, &args.params)?;
    let config = sim_config(params, args.seed, args.horizon, args.warmup, args.batches, &cfg)?;
    let result = simulate(&config);
    report::print_json(&SimulationJson::new(
        &params,
        config.horizon_events,
        config.warmup_events,
        config.batch_count,
        &result,
    ));
    // The estimates are printed either way; unstable parameters only make
    // them meaningless, which the `unstable` flag already says.
    Ok(ExitSignal::Success)
}

pub fn cmd_validate(args: &ValidateArgs) -> Result<ExitSignal, CliError> {
    let cfg = ConfigFile::load(args.params.config.as_deref())?;
    let params = queue_params(&cfg, &args.params)?;
    let options = solver_options(args.tol, &cfg)?;

    if args.paper_literal_r {
        let (report, admissible) = validate::run_paper_literal(&params, &options)?;
        report::print_json(&report);
        return Ok(if admissible { ExitSignal::Success } else { ExitSignal::Breach });
    }

    let inputs = validate::ValidateInputs {
        params,
        level_cap: resolve(
            args.level_cap,
            cfg.usize("level_cap")?,
            validate::default_level_cap(params.max_block_size),
        ),
        sim: sim_config(params, args.seed, args.horizon, args.warmup, args.batches, &cfg)?,
        options,
        tail_eps: tail_eps(args.tail_eps, &cfg)?,
    };
    let (report, all_ok) = validate::run(&inputs)?;
    report::print_json(&report);
    Ok(if all_ok { ExitSignal::Success } else { ExitSignal::Breach })
}
