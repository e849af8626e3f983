//! Oracle equivalences that must hold before any figure-level experiment is
//! attempted: adjoint identities, synthesis against the naive formula,
//! constraint censuses, least-squares against normal equations, and the
//! kernel/coefficient round trips.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use dbd_core::kernels::{coeff_expansion, fejer_1d, fejer_coeffs, FejerSpec};
use dbd_core::model::{
    draw_scenario, synth_measurement, Dimensions, SampleGrid, ScenarioSpec, SupportSpec,
    VariantSpec,
};
use dbd_core::operators::{adjoint, forward, inner_re, Basis};
use dbd_core::recover::{build_design_matrix, solve_waveforms};
use dbd_core::sdp::enumerate_trace_constraints;
use dbd_core::util::{cis, stream_rng};
use rand::Rng as _;

fn rand_cvec(rng: &mut impl rand::Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
}

#[test]
fn adjoint_identity_to_1e10() {
    let mut rng = stream_rng(1, "oracle-adjoint", 0);
    for trial in 0..100 {
        let (m, p, j) = [(5usize, 2usize, 2usize), (7, 3, 3), (9, 4, 2), (13, 3, 4)]
            [trial % 4];
        let dims = Dimensions::new(m, p, j, 1, 1).unwrap();
        let scen = draw_scenario(&ScenarioSpec {
            dims,
            variant: VariantSpec::Baseline,
            supports: SupportSpec::Random,
            seed: 1000 + trial as u64,
        })
        .unwrap();
        let grid = scen.grid();
        let q = rand_cvec(&mut rng, grid.len());
        for basis in [Basis::radar(&scen.radar().b), Basis::comms(&scen.comms().d)] {
            let z = DMatrix::from_fn(basis.width(), grid.len(), |_, _| {
                C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            });
            let fz = forward(&z, basis, &grid).unwrap();
            let aq = adjoint(&q, basis, &grid).unwrap();
            let lhs = inner_re(&fz, &q);
            let rhs: f64 = z.iter().zip(aq.iter()).map(|(a, b)| (a * b.conj()).re).sum();
            let zf = z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let qn = q.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            assert!((lhs - rhs).abs() <= 1e-10 * (zf * qn).max(1.0));
        }
    }
}

#[test]
fn synthesis_matches_naive_formula_to_1e12() {
    // direct per-sample evaluation of the measurement sum, written
    // independently of the synthesizer's precomputation structure
    for seed in [3u64, 4, 5] {
        let dims = Dimensions::new(9, 4, 2, 2, 2).unwrap();
        let scen = draw_scenario(&ScenarioSpec {
            dims,
            variant: VariantSpec::Baseline,
            supports: SupportSpec::Random,
            seed,
        })
        .unwrap();
        let meas = synth_measurement(&scen);
        let grid = SampleGrid::new(&dims, 1);
        let mut err: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for s in grid.iter() {
            let mut want = C64::new(0.0, 0.0);
            let r = scen.radar();
            for k in 0..r.channel.len() {
                let mut bu = C64::new(0.0, 0.0);
                for j in 0..r.u.len() {
                    bu += r.b[((s.n + 4) as usize, j)] * r.u[j];
                }
                want += r.channel.gains()[k]
                    * bu
                    * cis(-(s.n as f64 * r.channel.delays()[k]
                        + s.pulse as f64 * r.channel.dopplers()[k]));
            }
            let c = scen.comms();
            for k in 0..c.channel.len() {
                let mut dv = C64::new(0.0, 0.0);
                for j in 0..c.v.len() {
                    dv += c.d[(s.ntilde, j)] * c.v[j];
                }
                want += c.channel.gains()[k]
                    * dv
                    * cis(-(s.n as f64 * c.channel.delays()[k]
                        + s.pulse as f64 * c.channel.dopplers()[k]));
            }
            err += (meas.y[s.ntilde] - want).norm_sqr();
            scale += want.norm_sqr();
        }
        assert!(err.sqrt() <= 1e-12 * scale.sqrt().max(1.0));
    }
}

#[test]
fn trace_constraint_count_is_213_for_fig2_dims() {
    assert_eq!(enumerate_trace_constraints(13, 9).len(), 213);
    // combinatorial oracle: brute-force enumeration of distinct offset
    // classes of a 13x9 two-level Hermitian Toeplitz structure
    let mut classes = std::collections::BTreeSet::new();
    for n1 in -12i64..=12 {
        for n2 in -8i64..=8 {
            let (a, b) = if n1 > 0 || (n1 == 0 && n2 >= 0) { (n1, n2) } else { (-n1, -n2) };
            classes.insert((a, b));
        }
    }
    assert_eq!(classes.len(), 213);
}

#[test]
fn least_squares_matches_normal_equations_to_1e8() {
    let scen = draw_scenario(&ScenarioSpec {
        dims: Dimensions::new(11, 5, 3, 2, 2).unwrap(),
        variant: VariantSpec::Baseline,
        supports: SupportSpec::RandomMinSep,
        seed: 8,
    })
    .unwrap();
    let meas = synth_measurement(&scen);
    let rs = vec![dbd_core::localize::SupportEstimate {
        supports: scen.radar().channel.supports(),
        peak_norms: vec![1.0; 2],
        kind: "radar".into(),
    }];
    let cs = vec![dbd_core::localize::SupportEstimate {
        supports: scen.comms().channel.supports(),
        peak_norms: vec![1.0; 2],
        kind: "comms".into(),
    }];
    let w = build_design_matrix(&scen, &rs, &cs).unwrap();
    let (z, _) = solve_waveforms(&meas.y, &w, &[]).unwrap();
    let wh = w.adjoint();
    let a = &wh * &w;
    let rhs = &wh * DMatrix::from_fn(meas.y.len(), 1, |i, _| meas.y[i]);
    let z_oracle = a.lu().solve(&rhs).unwrap();
    for (i, zi) in z.iter().enumerate() {
        assert!((zi - z_oracle[(i, 0)]).norm() < 1e-8);
    }
}

#[test]
fn fejer_round_trip_to_1e10() {
    for n in [2usize, 4, 6, 8] {
        let spec = FejerSpec::new(n).unwrap();
        let coeffs = fejer_coeffs(spec);
        for i in 0..512 {
            let tau = i as f64 / 512.0;
            assert!((fejer_1d(spec, tau) - coeff_expansion(&coeffs, tau)).abs() < 1e-10);
        }
    }
}

#[test]
fn kernel_weight_identity_to_1e10() {
    // separable coefficient expansion of the 2-D product kernel
    let (nh, p) = (4usize, 6usize);
    let gn = fejer_coeffs(FejerSpec::new(nh).unwrap());
    let gp = fejer_coeffs(FejerSpec::new(p).unwrap());
    for i in 0..17 {
        for k in 0..13 {
            let (tau, nu) = (i as f64 / 17.0, k as f64 / 13.0);
            let mut acc = 0.0;
            for (a, gn_v) in gn.iter().enumerate() {
                let n = a as i64 - nh as i64;
                for (b, gp_v) in gp.iter().enumerate() {
                    let pp = b as i64 - p as i64;
                    acc += gn_v * gp_v * (cis(n as f64 * tau) * cis(pp as f64 * nu)).re;
                }
            }
            let want = fejer_1d(FejerSpec::new(nh).unwrap(), tau)
                * fejer_1d(FejerSpec::new(p).unwrap(), nu);
            assert!((acc - want).abs() < 1e-10);
        }
    }
}
