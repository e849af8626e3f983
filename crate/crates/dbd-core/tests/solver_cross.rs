//! Cross-validation of the first-order solver: against the dense barrier
//! reference on a small instance, and against itself through the real
//! symmetric embedding.

use dbd_core::model::{draw_scenario, synth_measurement, Dimensions, ScenarioSpec, SupportSpec, VariantSpec};
use dbd_core::operators::{poly_norm_grid, Basis};
use dbd_core::sdp::{build_dual_sdp, real_embedding, SdpOptions};
use dbd_core::solver::{solve, solve_reference, SolverSettings, SolverStatus};

fn small_problem(seed: u64) -> (dbd_core::model::Scenario, dbd_core::sdp::ConicProblem) {
    let dims = Dimensions::new(5, 3, 2, 1, 1).unwrap();
    let scen = draw_scenario(&ScenarioSpec {
        dims,
        variant: VariantSpec::Baseline,
        supports: SupportSpec::RandomMinSep,
        seed,
    })
    .unwrap();
    let meas = synth_measurement(&scen);
    let prob = build_dual_sdp(&meas, &scen, &SdpOptions::default()).unwrap();
    (scen, prob)
}

#[test]
fn admm_matches_barrier_reference_on_small_dbd() {
    let (_, prob) = small_problem(42);
    let settings = SolverSettings {
        max_iters: 40_000,
        eps_primal: 1e-8,
        eps_dual: 1e-8,
        eps_gap: 1e-9,
        over_relaxation: 1.8,
        ..Default::default()
    };
    let sol = solve(&prob, &settings).unwrap();
    assert_eq!(sol.status, SolverStatus::Optimal);
    let (ref_obj, _) = solve_reference(&prob, 1e-9).unwrap();
    let rel = (sol.objective - ref_obj).abs() / ref_obj.abs().max(1.0);
    assert!(rel < 1e-5, "admm {} vs barrier {ref_obj}", sol.objective);
}

#[test]
fn hermitian_and_embedded_solves_agree() {
    // the lag-relaxed variant's objective is strongly convex in q, so the
    // optimizer is unique and the two solution paths must agree vectorwise
    let dims = Dimensions::new(5, 3, 2, 1, 1).unwrap();
    let scen = draw_scenario(&ScenarioSpec {
        dims,
        variant: VariantSpec::Unsync { tau_e: 0.2, rho: 1.0 },
        supports: SupportSpec::RandomMinSep,
        seed: 7,
    })
    .unwrap();
    let meas = synth_measurement(&scen);
    let prob = build_dual_sdp(&meas, &scen, &SdpOptions::default()).unwrap();
    let emb = real_embedding(&prob);
    let settings = SolverSettings {
        max_iters: 40_000,
        eps_primal: 1e-8,
        eps_dual: 1e-8,
        eps_gap: 1e-9,
        over_relaxation: 1.8,
        ..Default::default()
    };
    let a = solve(&prob, &settings).unwrap();
    let b = solve(&emb, &settings).unwrap();
    assert!((a.objective - b.objective).abs() < 1e-5 * a.objective.abs().max(1.0));
    let qdiff: f64 = a.q.iter().zip(&b.q).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    let qnorm: f64 = a.q.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    assert!(qdiff <= 1e-4 * qnorm.max(1e-6), "q mismatch {qdiff} vs norm {qnorm}");
    // extraction through the embedding is the identity on the Gram layout
    assert_eq!(prob.vars, emb.vars);
}

#[test]
fn feasible_duals_have_sound_certificates() {
    // any solved baseline instance keeps both polynomial norms within the
    // unit ball up to grid tolerance
    let (scen, prob) = small_problem(11);
    let settings = SolverSettings {
        max_iters: 20_000,
        eps_primal: 1e-7,
        eps_dual: 1e-7,
        eps_gap: 1e-8,
        over_relaxation: 1.8,
        ..Default::default()
    };
    let sol = solve(&prob, &settings).unwrap();
    let grid = scen.grid();
    for basis in [Basis::radar(&scen.radar().b), Basis::comms(&scen.comms().d)] {
        let norms = poly_norm_grid(&sol.q, basis, &grid, 128, 128).unwrap();
        let max = norms.iter().cloned().fold(0.0f64, f64::max);
        assert!(max <= 1.0 + 1e-3, "certificate sup {max}");
    }
}
