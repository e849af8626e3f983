use dbd_core::localize::*;
use dbd_core::model::*;
use dbd_core::operators::{Basis, PolyKind};
use dbd_core::recover;
use dbd_core::sdp::*;
use dbd_core::solver::*;

fn main() {
    let eps: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1e-6);
    let dims = Dimensions::new(13, 9, 3, 3, 3).unwrap();
    let spec = ScenarioSpec {
        dims,
        variant: VariantSpec::Baseline,
        supports: SupportSpec::Fixed {
            radar: vec![vec![(0.23, 0.45), (0.68, 0.42), (0.87, 0.71)]],
            comms: vec![vec![(0.12, 0.09), (0.21, 0.25), (0.95, 0.87)]],
        },
        seed: 7,
    };
    let scen = draw_scenario(&spec).unwrap();
    let meas = synth_measurement(&scen);
    let prob = build_dual_sdp(&meas, &scen, &SdpOptions::default()).unwrap();
    let settings = SolverSettings {
        max_iters: 30000, eps_primal: eps, eps_dual: eps, eps_gap: eps,
        over_relaxation: 1.8, ..Default::default()
    };
    let sol = solve(&prob, &settings).unwrap();
    println!("solver: {:?} {} iters obj {:.4}", sol.status, sol.iterations, sol.objective);

    let grid = scen.grid();
    let ls = LocalizeSettings::default();
    let rs = locate_supports(&sol.q, Basis::radar(&scen.radar().b), &grid, PolyKind::Radar, &ls).unwrap();
    let cs = locate_supports(&sol.q, Basis::comms(&scen.comms().d), &grid, PolyKind::Comms, &ls).unwrap();
    println!("radar supports ({}): {:?}", rs.supports.len(),
        rs.supports.iter().map(|s| (format!("{:.5}", s.0), format!("{:.5}", s.1))).collect::<Vec<_>>());
    println!("   peaks: {:?}", rs.peak_norms.iter().map(|n| format!("{n:.5}")).collect::<Vec<_>>());
    println!("comms supports ({}): {:?}", cs.supports.len(),
        cs.supports.iter().map(|s| (format!("{:.5}", s.0), format!("{:.5}", s.1))).collect::<Vec<_>>());
    println!("   peaks: {:?}", cs.peak_norms.iter().map(|n| format!("{n:.5}")).collect::<Vec<_>>());

    match recover::recover(&scen, &meas.y, &[rs], &[cs], &sol, 0.0, 0.0) {
        Ok(est) => {
            let m = recover::score(&est, &scen);
            println!("residual = {:.3e}", est.residual);
            println!("r_err = {:.3e}  c_err = {:.3e}  g_err = {:.3e}  s_err = {:.3e}",
                m.r_err, m.c_err, m.g_err, m.s_err);
            println!("radar max_err = {:.3e}  comms max_err = {:.3e}",
                m.radar_supports[0].max_err, m.comms_supports[0].max_err);
            println!("success = {}  <q,y> = {:.4}", m.success, m.duality_value);
        }
        Err(e) => println!("recover error: {e}"),
    }
}
