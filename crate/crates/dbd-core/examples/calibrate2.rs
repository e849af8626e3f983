use dbd_core::localize::*;
use dbd_core::model::*;
use dbd_core::operators::{Basis, PolyKind};
use dbd_core::recover;
use dbd_core::sdp::*;
use dbd_core::solver::*;
use std::time::Instant;

fn main() {
    if false {
    // rho0 sensitivity on a mid-difficulty cell
    let dims = Dimensions::new(13, 9, 4, 4, 4).unwrap();
    let spec = ScenarioSpec { dims, variant: VariantSpec::Baseline, supports: SupportSpec::RandomMinSep, seed: 104 };
    let scen = draw_scenario(&spec).unwrap();
    let meas = synth_measurement(&scen);
    let prob = build_dual_sdp(&meas, &scen, &SdpOptions::default()).unwrap();
    for rho0 in [0.3, 1.0, 3.0, 10.0] {
        let settings = SolverSettings { max_iters: 6000, eps_primal: 1e-5, eps_dual: 1e-5, eps_gap: 1e-5,
            over_relaxation: 1.8, rho0, ..Default::default() };
        let t = Instant::now();
        let sol = solve(&prob, &settings).unwrap();
        println!("rho0={rho0:5}: {:?} {} it ({:?}) obj={:.4}", sol.status, sol.iterations, t.elapsed(), sol.objective);
    }

    }
    // mu study for the noisy variant at high and low SNR
    for snr in [30.0, 10.0, 0.0] {
        let dims = Dimensions::new(17, 13, 3, 4, 4).unwrap();
        let spec = ScenarioSpec { dims, variant: VariantSpec::Noisy { snr_db: snr }, supports: SupportSpec::RandomMinSep, seed: 300 };
        let scen = draw_scenario(&spec).unwrap();
        let meas = synth_measurement(&scen);
        let wnorm = meas.noise_norm();
        for frac in [10.0, 3.0, 1.0] {
            let mu = wnorm * frac;
            let prob = build_dual_sdp(&meas, &scen, &SdpOptions { mu: Some(mu) }).unwrap();
            let settings = SolverSettings { max_iters: 3000, eps_primal: 1e-5, eps_dual: 1e-5, eps_gap: 1e-5,
                over_relaxation: 1.8, ..Default::default() };
            let sol = solve(&prob, &settings).unwrap();
            let ls = LocalizeSettings { grid: (128, 128), max_supports: Some(4), ..Default::default() };
            let rs = locate_supports(&sol.q, Basis::radar(&scen.radar().b), &scen.grid(), PolyKind::Radar, &ls).unwrap();
            let cs = locate_supports(&sol.q, Basis::comms(&scen.comms().d), &scen.grid(), PolyKind::Comms, &ls).unwrap();
            let tag = match recover::recover(&scen, &meas.y, &[rs.clone()], &[cs.clone()], &sol, 0.0, 0.0) {
                Ok(est) => { let m = recover::score(&est, &scen); format!("r={:.2e} g={:.2e} ok={}", m.r_err, m.g_err, m.success) }
                Err(e) => format!("ERR {e}"),
            };
            println!("snr={snr} mu={frac}*w ({mu:.2}): {} it, supports {}+{} (peaks {}), {tag}", sol.iterations, rs.supports.len(), cs.supports.len(), tag2(&rs));
        }
    }
}
fn tag2(rs: &SupportEstimate) -> String {
    rs.peak_norms.iter().map(|n| format!("{n:.3}")).collect::<Vec<_>>().join(" ")
}
