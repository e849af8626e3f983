//! Single-instance experiment execution: draw, synthesize, solve, localize,
//! recover, score.

use dbd_core::localize::{grid_scan, locate_supports, LocalizeSettings, NormGrid, SupportEstimate};
use dbd_core::model::{draw_scenario, synth_measurement, Measurement, Scenario, ScenarioSpec, Variant};
use dbd_core::operators::{Basis, PolyKind};
use dbd_core::recover::{recover, score, Estimate, Metrics};
use dbd_core::sdp::{build_dual_sdp, ConicProblem, SdpOptions};
use dbd_core::solver::{solve, ConicSolution, SolverSettings};

/// Everything a single run produces, before artifact writing.
pub struct RunOutcome {
    pub scenario: Scenario,
    pub measurement: Measurement,
    pub problem: ConicProblem,
    pub solution: ConicSolution,
    pub radar_supports: Vec<SupportEstimate>,
    pub comms_supports: Vec<SupportEstimate>,
    pub radar_grids: Vec<NormGrid>,
    pub comms_grids: Vec<NormGrid>,
    /// Sup of each polynomial norm over its scan grid, across emitters.
    pub cert_sup_radar: f64,
    pub cert_sup_comms: f64,
    pub estimate: Option<Estimate>,
    pub metrics: Option<Metrics>,
    /// Recovery failure (localization found nothing usable, ill-posed fit...)
    /// kept as a message: the solve itself still counts as a success.
    pub recover_error: Option<String>,
}

/// Run one full pipeline instance.
pub fn run_instance(
    spec: &ScenarioSpec,
    solver_settings: &SolverSettings,
    localize_settings: &LocalizeSettings,
    mu: Option<f64>,
) -> anyhow::Result<RunOutcome> {
    run_instance_with(spec, solver_settings, localize_settings, mu, false)
}

/// [`run_instance`] with the option of capping localization at the model
/// order carried by the scenario dimensions.
pub fn run_instance_with(
    spec: &ScenarioSpec,
    solver_settings: &SolverSettings,
    localize_settings: &LocalizeSettings,
    mu: Option<f64>,
    cap_to_model_order: bool,
) -> anyhow::Result<RunOutcome> {
    let scenario = draw_scenario(spec)?;
    let measurement = synth_measurement(&scenario);
    let problem = build_dual_sdp(&measurement, &scenario, &SdpOptions { mu })?;
    let solution = solve(&problem, solver_settings)?;

    let grid = scenario.grid();
    let radar_peak_level = match scenario.variant {
        Variant::Unsync { rho, .. } => rho,
        _ => 1.0,
    };

    let mut radar_supports = Vec::new();
    let mut radar_grids = Vec::new();
    let mut cert_sup_radar: f64 = 0.0;
    for emitter in &scenario.radars {
        let basis = Basis::radar(&emitter.b);
        let mut settings =
            LocalizeSettings { peak_level: radar_peak_level, ..localize_settings.clone() };
        if cap_to_model_order {
            settings.max_supports = Some(scenario.dims.l());
        }
        let est = locate_supports(&solution.q, basis, &grid, PolyKind::Radar, &settings)?;
        let ng = grid_scan(&solution.q, basis, &grid, settings.grid.0, settings.grid.1)?;
        cert_sup_radar = cert_sup_radar.max(ng.max());
        radar_supports.push(est);
        radar_grids.push(ng);
    }
    let mut comms_supports = Vec::new();
    let mut comms_grids = Vec::new();
    let mut cert_sup_comms: f64 = 0.0;
    for emitter in &scenario.comms {
        let basis = Basis::comms(&emitter.d);
        let mut settings = localize_settings.clone();
        if cap_to_model_order {
            settings.max_supports = Some(scenario.dims.q());
        }
        let est = locate_supports(&solution.q, basis, &grid, PolyKind::Comms, &settings)?;
        let ng = grid_scan(&solution.q, basis, &grid, settings.grid.0, settings.grid.1)?;
        cert_sup_comms = cert_sup_comms.max(ng.max());
        comms_supports.push(est);
        comms_grids.push(ng);
    }

    let (estimate, metrics, recover_error) = match recover(
        &scenario,
        &measurement.y,
        &radar_supports,
        &comms_supports,
        &solution,
        cert_sup_radar,
        cert_sup_comms,
    ) {
        Ok(est) => {
            let m = score(&est, &scenario);
            (Some(est), Some(m), None)
        }
        Err(e) => (None, None, Some(e.to_string())),
    };

    Ok(RunOutcome {
        scenario,
        measurement,
        problem,
        solution,
        radar_supports,
        comms_supports,
        radar_grids,
        comms_grids,
        cert_sup_radar,
        cert_sup_comms,
        estimate,
        metrics,
        recover_error,
    })
}

/// Re-run localization only, from a previously solved dual vector.
pub fn relocalize(
    scenario: &Scenario,
    q: &[dbd_core::util::C64],
    localize_settings: &LocalizeSettings,
) -> anyhow::Result<(Vec<SupportEstimate>, Vec<SupportEstimate>, Vec<NormGrid>, Vec<NormGrid>)> {
    let grid = scenario.grid();
    let radar_peak_level = match scenario.variant {
        Variant::Unsync { rho, .. } => rho,
        _ => 1.0,
    };
    let mut rs = Vec::new();
    let mut rg = Vec::new();
    for emitter in &scenario.radars {
        let basis = Basis::radar(&emitter.b);
        let settings =
            LocalizeSettings { peak_level: radar_peak_level, ..localize_settings.clone() };
        rs.push(locate_supports(q, basis, &grid, PolyKind::Radar, &settings)?);
        rg.push(grid_scan(q, basis, &grid, settings.grid.0, settings.grid.1)?);
    }
    let mut cs = Vec::new();
    let mut cg = Vec::new();
    for emitter in &scenario.comms {
        let basis = Basis::comms(&emitter.d);
        cs.push(locate_supports(q, basis, &grid, PolyKind::Comms, localize_settings)?);
        cg.push(grid_scan(
            q,
            basis,
            &grid,
            localize_settings.grid.0,
            localize_settings.grid.1,
        )?);
    }
    Ok((rs, cs, rg, cg))
}

pub use dbd_core::model::Variant as ScenarioVariant;
pub use dbd_core::model::VariantSpec;

/// Serializable view of a solved dual vector (the `solution.json` artifact).
#[derive(serde::Serialize, serde::Deserialize)]
pub struct SolutionArtifact {
    #[serde(with = "dbd_core::util::serde_cvec")]
    pub q: Vec<dbd_core::util::C64>,
    pub status: dbd_core::solver::SolverStatus,
    pub iterations: usize,
    pub objective: f64,
    pub residuals: dbd_core::solver::Residuals,
    pub history: Vec<dbd_core::solver::ResidualSample>,
}

impl From<&ConicSolution> for SolutionArtifact {
    fn from(s: &ConicSolution) -> Self {
        Self {
            q: s.q.clone(),
            status: s.status,
            iterations: s.iterations,
            objective: s.objective,
            residuals: s.residuals,
            history: s.history.clone(),
        }
    }
}
