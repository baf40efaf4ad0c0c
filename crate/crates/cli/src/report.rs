//! JSON shapes for everything the CLI prints. The core crate stays
//! serialization-free; field names here are the output contract.

use blockq::model::StabilityReport;
use blockq::{MatGeomSolution, PerformanceReport, QueueParameters, SimulationResult};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct ParametersJson {
    pub arrival_rate: f64,
    pub build_rate: f64,
    pub generate_rate: f64,
    pub block_size: usize,
}

impl From<&QueueParameters> for ParametersJson {
    fn from(p: &QueueParameters) -> Self {
        ParametersJson {
            arrival_rate: p.arrival_rate,
            build_rate: p.build_rate,
            generate_rate: p.generate_rate,
            block_size: p.max_block_size,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct StabilityJson {
    pub drift_up: f64,
    pub drift_down: f64,
    pub is_stable: bool,
    pub utilization: f64,
}

impl From<&StabilityReport> for StabilityJson {
    fn from(s: &StabilityReport) -> Self {
        StabilityJson {
            drift_up: s.drift_up,
            drift_down: s.drift_down,
            is_stable: s.is_stable,
            utilization: s.utilization,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SolverJson {
    pub iterations: usize,
    pub residual: f64,
    pub spectral_radius: f64,
}

impl From<&MatGeomSolution> for SolverJson {
    fn from(s: &MatGeomSolution) -> Self {
        SolverJson {
            iterations: s.iterations(),
            residual: s.residual(),
            spectral_radius: s.spectral_radius(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct MeasuresJson {
    pub mean_queue: f64,
    pub mean_block: f64,
    pub mean_confirmation_closed: f64,
    pub mean_confirmation_series: f64,
    pub littles_residual: f64,
    pub series_truncation_k: usize,
    pub series_tail_bound: f64,
    pub closed_first_term: f64,
    pub closed_second_term: f64,
}

impl From<&PerformanceReport> for MeasuresJson {
    fn from(r: &PerformanceReport) -> Self {
        MeasuresJson {
            mean_queue: r.mean_queue,
            mean_block: r.mean_block,
            mean_confirmation_closed: r.mean_confirmation_closed,
            mean_confirmation_series: r.mean_confirmation_series,
            littles_residual: r.littles_residual,
            series_truncation_k: r.series_truncation_k,
            series_tail_bound: r.series_tail_bound,
            closed_first_term: r.closed_first_term,
            closed_second_term: r.closed_second_term,
        }
    }
}

/// `solve` output. `solver` and `measures` are null when the point is
/// unstable — the stability block is then the report.
#[derive(Debug, Serialize)]
pub struct SolveReportJson {
    pub parameters: ParametersJson,
    pub stability: StabilityJson,
    pub solver: Option<SolverJson>,
    pub measures: Option<MeasuresJson>,
}

/// `simulate` output: the run recipe followed by the estimates.
#[derive(Debug, Serialize)]
pub struct SimulationJson {
    pub parameters: ParametersJson,
    pub seed_used: u64,
    pub horizon_events: u64,
    pub warmup_events: u64,
    pub batch_count: u32,
    pub est_queue: f64,
    pub half_width_queue: f64,
    pub est_block: f64,
    pub half_width_block: f64,
    pub est_confirmation: f64,
    pub half_width_confirmation: f64,
    pub confirmed_count: u64,
    pub arrived_count: u64,
    pub total_confirmed: u64,
    pub final_queue_len: u64,
    pub final_block_content: u64,
    pub unstable: bool,
    pub degenerate_variance: bool,
}

impl SimulationJson {
    pub fn new(
        params: &QueueParameters,
        horizon_events: u64,
        warmup_events: u64,
        batch_count: u32,
        r: &SimulationResult,
    ) -> Self {
        SimulationJson {
            parameters: params.into(),
            seed_used: r.seed_used,
            horizon_events,
            warmup_events,
            batch_count,
            est_queue: r.est_queue,
            half_width_queue: r.half_width_queue,
            est_block: r.est_block,
            half_width_block: r.half_width_block,
            est_confirmation: r.est_confirmation,
            half_width_confirmation: r.half_width_confirmation,
            confirmed_count: r.confirmed_count,
            arrived_count: r.arrived_count,
            total_confirmed: r.total_confirmed,
            final_queue_len: r.final_queue_len,
            final_block_content: r.final_block_content,
            unstable: r.unstable,
            degenerate_variance: r.degenerate_variance,
        }
    }
}

/// One measure row of the `validate` table: the analytic value against
/// every independent estimate that applies at these parameters.
#[derive(Debug, Serialize)]
pub struct MeasureRowJson {
    pub measure: &'static str,
    pub analytic: f64,
    pub truncated: f64,
    pub simulated: f64,
    pub sim_half_width: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_b1: Option<f64>,
    /// Largest absolute deviation from the analytic value among the
    /// deterministic estimates (truncated chain, closed-form oracle).
    pub max_discrepancy: f64,
    pub within_tolerance: bool,
}

#[derive(Debug, Serialize)]
pub struct CheckJson {
    pub name: &'static str,
    pub ok: bool,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct ValidateReportJson {
    pub parameters: ParametersJson,
    pub stability: StabilityJson,
    pub solver: SolverJson,
    pub level_cap: usize,
    pub truncated_tail_mass: f64,
    pub simulation: SimulationJson,
    pub rows: Vec<MeasureRowJson>,
    pub checks: Vec<CheckJson>,
    pub all_within_tolerance: bool,
}

/// `validate --paper-literal-r` output: evidence that the uncorrected
/// rate-matrix exponent yields an inadmissible R.
#[derive(Debug, Serialize)]
pub struct PaperLiteralReportJson {
    pub parameters: ParametersJson,
    pub variant: &'static str,
    pub iterations: usize,
    pub residual: f64,
    pub spectral_radius: f64,
    pub row_sums: Vec<f64>,
    pub max_row_sum_deviation_from_one: f64,
    pub boundary_consistent: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_error: Option<String>,
    pub admissible: bool,
}

pub fn print_json<T: Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("report types serialize infallibly")
    );
}
