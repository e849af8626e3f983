use dbd_core::model::*;
use dbd_core::sdp::*;
use dbd_core::solver::*;
use std::time::Instant;

fn main() {
    for (label, dims, variant) in [
        ("c8 size (M=17,P=13)", Dimensions::new(17, 13, 3, 4, 4).unwrap(), VariantSpec::Noisy { snr_db: 20.0 }),
        ("c6 size (M=13,P=9)", Dimensions::new(13, 9, 3, 3, 3).unwrap(), VariantSpec::Baseline),
        ("c7 size (M=11,P=9)", Dimensions::new(11, 9, 3, 2, 2).unwrap(), VariantSpec::Unsync { tau_e: 0.24, rho: 1.0 }),
    ] {
        let spec = ScenarioSpec { dims, variant, supports: SupportSpec::RandomMinSep, seed: 77 };
        let scen = draw_scenario(&spec).unwrap();
        let meas = synth_measurement(&scen);
        let prob = build_dual_sdp(&meas, &scen, &SdpOptions::default()).unwrap();
        let settings = SolverSettings {
            max_iters: 4000, eps_primal: 2e-5, eps_dual: 2e-5, eps_gap: 2e-5,
            over_relaxation: 1.8, ..Default::default()
        };
        let t = Instant::now();
        let sol = solve(&prob, &settings).unwrap();
        let dt = t.elapsed();
        println!("{label}: {:?} {} it in {:?} ({:.1} ms/it) obj={:.4}",
            sol.status, sol.iterations, dt, dt.as_secs_f64()*1e3/sol.iterations as f64, sol.objective);
    }
}
