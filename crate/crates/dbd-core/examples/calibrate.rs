// Calibration of sweep-scale solve cost across the acceptance criteria dims.
use dbd_core::localize::*;
use dbd_core::model::*;
use dbd_core::operators::{Basis, PolyKind};
use dbd_core::recover;
use dbd_core::sdp::*;
use dbd_core::solver::*;
use std::time::Instant;

fn trial(label: &str, dims: Dimensions, variant: VariantSpec, seed: u64, eps: f64, cap: usize, grid: usize) {
    let spec = ScenarioSpec { dims, variant, supports: SupportSpec::RandomMinSep, seed };
    let scen = draw_scenario(&spec).unwrap();
    let meas = synth_measurement(&scen);
    let prob = build_dual_sdp(&meas, &scen, &SdpOptions::default()).unwrap();
    let settings = SolverSettings {
        max_iters: cap, eps_primal: eps, eps_dual: eps, eps_gap: eps,
        over_relaxation: 1.8, ..Default::default()
    };
    let t = Instant::now();
    let sol = solve(&prob, &settings).unwrap();
    let t_solve = t.elapsed();
    let ls = LocalizeSettings { grid: (grid, grid), ..Default::default() };
    let t = Instant::now();
    let rs = locate_supports(&sol.q, Basis::radar(&scen.radar().b), &scen.grid(), PolyKind::Radar, &ls).unwrap();
    let cs = locate_supports(&sol.q, Basis::comms(&scen.comms().d), &scen.grid(), PolyKind::Comms, &ls).unwrap();
    let t_loc = t.elapsed();
    let result = recover::recover(&scen, &meas.y, &[rs], &[cs], &sol, 0.0, 0.0)
        .map(|est| recover::score(&est, &scen));
    match result {
        Ok(m) => println!("{label:34} {:>9?} {:5} it  solve {:6.1?} loc {:5.1?}  r={:.1e} g={:.1e} ok={}",
            sol.status, sol.iterations, t_solve, t_loc, m.r_err, m.g_err, m.success),
        Err(e) => println!("{label:34} {:>9?} {:5} it  solve {:6.1?} loc {:5.1?}  recover-err: {e}",
            sol.status, sol.iterations, t_solve, t_loc),
    }
}

fn main() {
    let d = |m, p, j, l, q| Dimensions::new(m, p, j, l, q).unwrap();
    // criterion 6 cells (M=13, P=9): easy, mid, hard
    for (l, j) in [(1, 1), (3, 3), (4, 4), (6, 6)] {
        trial(&format!("c6 L=Q={l} J={j} eps=1e-5"), d(13, 9, j, l, l),
            VariantSpec::Baseline, 100 + l as u64, 1e-5, 4000, 128);
    }
    // criterion 7 (M=11, P=9, J=3, L=Q=2, unsync)
    for tau_e in [0.0, 0.3] {
        trial(&format!("c7 tau_e={tau_e} eps=1e-5"), d(11, 9, 3, 2, 2),
            VariantSpec::Unsync { tau_e, rho: 1.0 }, 200, 1e-5, 4000, 128);
    }
    // criterion 8 (M=17, P=13, J=3, L=Q=4, noisy)
    for snr in [0.0, 30.0] {
        trial(&format!("c8 snr={snr} eps=1e-5"), d(17, 13, 3, 4, 4),
            VariantSpec::Noisy { snr_db: snr }, 300, 1e-5, 4000, 128);
    }
}
