//! The validation triangle: analytic pipeline vs truncated-chain oracle vs
//! simulator, plus the single-server closed form when b = 1, compared at
//! fixed declared tolerances.

use crate::report::{
    CheckJson, MeasureRowJson, PaperLiteralReportJson, SimulationJson, ValidateReportJson,
};
use crate::CliError;
use blockq::matgeom::{self, RateMatrixVariant, SolveError};
use blockq::model::{build_block_matrices, stability};
use blockq::oracle::{self, OracleError};
use blockq::sim::{simulate, SimConfig};
use blockq::{measures, MatGeomSolution, QueueParameters, SolverOptions};

/// Deterministic-oracle tolerances. The truncated chain carries its own
/// truncation bias, hence the looser bound; the b=1 closed form is exact,
/// bounded only by solver accuracy.
pub const TRUNCATED_TOL: f64 = 1e-6;
pub const ORACLE_B1_TOL: f64 = 1e-8;
pub const LITTLE_TOL: f64 = 1e-8;
pub const SERIES_TOL: f64 = 1e-8;
/// Simulator agreement in units of batch-means half-widths.
pub const SIM_SIGMA: f64 = 3.0;

pub struct ValidateInputs {
    pub params: QueueParameters,
    pub level_cap: usize,
    pub sim: SimConfig,
    pub options: SolverOptions,
    pub tail_eps: f64,
}

/// Largest level cap the truncated oracle accepts for this block size,
/// bounded at 400 levels (far past where tail mass hits the 1e-10 gate for
/// any parameter set worth validating).
pub fn default_level_cap(block_size: usize) -> usize {
    (oracle::MAX_TRUNCATED_STATES / (block_size + 1)).saturating_sub(1).min(400)
}

pub fn run(inputs: &ValidateInputs) -> Result<(ValidateReportJson, bool), CliError> {
    let params = &inputs.params;
    let solution = match MatGeomSolution::solve(params, &inputs.options) {
        Ok(s) => s,
        Err(SolveError::Unstable { .. }) => return Err(CliError::Unstable),
        Err(e) => return Err(CliError::Solver(e.to_string())),
    };
    let analytic = measures::evaluate(&solution, inputs.tail_eps);

    let truncated = oracle::truncated_measures(params, inputs.level_cap).map_err(|e| match e {
        OracleError::Unstable { .. } => CliError::Unstable,
        other => CliError::Solver(other.to_string()),
    })?;

    let sim_result = simulate(&inputs.sim);

    let oracle_b1 = if params.max_block_size == 1 {
        let (ej, ei, et) =
            oracle::mg1_erlang_oracle(params).map_err(|e| CliError::Solver(e.to_string()))?;
        Some((ej, ei, et))
    } else {
        None
    };

    let mut rows = Vec::new();
    let mut all_ok = true;
    let mut push_row = |measure: &'static str,
                        analytic_value: f64,
                        truncated_value: f64,
                        sim_value: f64,
                        sim_half_width: f64,
                        oracle_value: Option<f64>| {
        let truncated_gap = (analytic_value - truncated_value).abs();
        let oracle_gap = oracle_value.map(|o| (analytic_value - o).abs());
        let sim_gap = (analytic_value - sim_value).abs();
        let within = truncated_gap < TRUNCATED_TOL
            && oracle_gap.is_none_or(|g| g < ORACLE_B1_TOL)
            && sim_gap <= SIM_SIGMA * sim_half_width;
        all_ok &= within;
        rows.push(MeasureRowJson {
            measure,
            analytic: analytic_value,
            truncated: truncated_value,
            simulated: sim_value,
            sim_half_width,
            oracle_b1: oracle_value,
            max_discrepancy: truncated_gap.max(oracle_gap.unwrap_or(0.0)),
            within_tolerance: within,
        });
    };

    push_row(
        "mean_queue",
        analytic.mean_queue,
        truncated.mean_queue,
        sim_result.est_queue,
        sim_result.half_width_queue,
        oracle_b1.map(|o| o.0),
    );
    push_row(
        "mean_block",
        analytic.mean_block,
        truncated.mean_block,
        sim_result.est_block,
        sim_result.half_width_block,
        oracle_b1.map(|o| o.1),
    );
    push_row(
        "mean_confirmation",
        analytic.mean_confirmation_closed,
        truncated.mean_confirmation,
        sim_result.est_confirmation,
        sim_result.half_width_confirmation,
        oracle_b1.map(|o| o.2),
    );

    let mut checks = Vec::new();
    let mut push_check = |name: &'static str, ok: bool, detail: String| {
        all_ok &= ok;
        checks.push(CheckJson { name, ok, detail });
    };
    let series_gap = (analytic.mean_confirmation_closed - analytic.mean_confirmation_series).abs();
    let series_allow = SERIES_TOL + analytic.series_tail_bound;
    push_check(
        "series_vs_closed",
        series_gap <= series_allow,
        format!("|closed - series| = {series_gap:e}, allowed {series_allow:e}"),
    );
    push_check(
        "littles_law",
        analytic.littles_residual < LITTLE_TOL,
        format!("|EJ + EI - lambda*ET| = {:e}", analytic.littles_residual),
    );
    push_check(
        "truncation_tail",
        truncated.tail_mass < oracle::TAIL_MASS_THRESHOLD,
        format!("tail mass {:e}", truncated.tail_mass),
    );
    push_check(
        "spectral_radius",
        solution.spectral_radius() < 1.0 - 1e-9,
        format!("sp(R) = {}", solution.spectral_radius()),
    );

    let report = ValidateReportJson {
        parameters: params.into(),
        stability: (&analytic.stability).into(),
        solver: (&solution).into(),
        level_cap: inputs.level_cap,
        truncated_tail_mass: truncated.tail_mass,
        simulation: SimulationJson::new(
            params,
            inputs.sim.horizon_events,
            inputs.sim.warmup_events,
            inputs.sim.batch_count,
            &sim_result,
        ),
        rows,
        checks,
        all_within_tolerance: all_ok,
    };
    Ok((report, all_ok))
}

/// Diagnostic mode: solve with the uncorrected exponent and document the
/// inadmissibility (stochastic R, non-conservative boundary generator).
pub fn run_paper_literal(
    params: &QueueParameters,
    options: &SolverOptions,
) -> Result<(PaperLiteralReportJson, bool), CliError> {
    if !stability(params).is_stable {
        return Err(CliError::Unstable);
    }
    let matrices = build_block_matrices(params);
    let literal = SolverOptions { variant: RateMatrixVariant::PaperLiteral, ..*options };
    let solved = matgeom::solve_rate_matrix(&matrices, &literal)
        .map_err(|e| CliError::Solver(e.to_string()))?;

    let n = params.phase_count();
    let row_sums: Vec<f64> =
        (0..n).map(|i| solved.rate_matrix.row(i).iter().sum()).collect();
    let max_dev = row_sums.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);

    let boundary = matgeom::boundary_vector(&matrices, &solved.rate_matrix);
    let boundary_consistent = boundary.is_ok();
    let boundary_error = boundary.err().map(|e| e.to_string());

    // Admissible would mean sp(R) strictly below 1 *and* a conservative
    // boundary generator; the uncorrected exponent delivers neither.
    let admissible = solved.spectral_radius < 1.0 - 1e-9 && boundary_consistent;
    let report = PaperLiteralReportJson {
        parameters: params.into(),
        variant: "paper_literal",
        iterations: solved.iterations,
        residual: solved.residual,
        spectral_radius: solved.spectral_radius,
        row_sums,
        max_row_sum_deviation_from_one: max_dev,
        boundary_consistent,
        boundary_error,
        admissible,
    };
    Ok((report, admissible))
}
