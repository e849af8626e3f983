//! Squared Fejér interpolation kernels, their Fourier coefficients, the
//! per-sample certificate weights, and wrap-around (torus) metrics.
//!
//! Nothing here sits on the recovery path: these utilities power property
//! tests (kernel/coefficient round trips, weighted-kernel identities) and the
//! minimum-separation reporting done by scenario generation.

use crate::model::{ChannelParams, Dimensions};
use crate::util::cis;
use crate::{DbdError, Result};

/// Order of a 1-D squared Fejér kernel.
///
/// `phi_n(tau) = (sin(T pi tau) / (T sin(pi tau)))^4` with `T = n/2 + 1`.
/// For even `n` this is a trigonometric polynomial of degree `n` and
/// [`fejer_coeffs`] returns its exact Fourier coefficients; odd orders are
/// accepted (they occur inside [`weights`]) but the coefficient expansion is
/// then only the positive symmetric surrogate obtained from the same
/// triangular convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FejerSpec {
    n: usize,
}

impl FejerSpec {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(DbdError::Domain("Fejér order must be >= 1".into()));
        }
        Ok(Self { n })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    /// Half-degree parameter `T = n/2 + 1`.
    pub fn t(&self) -> f64 {
        self.n as f64 / 2.0 + 1.0
    }
}

/// Evaluate the squared Fejér kernel at `tau` (periodic for even order).
///
/// The removable singularity at `tau = 0` (and at integers, for even order)
/// takes its limit value 1.
pub fn fejer_1d(spec: FejerSpec, tau: f64) -> f64 {
    let t = spec.t();
    let denom = (std::f64::consts::PI * tau).sin();
    if denom == 0.0 {
        let num = (t * std::f64::consts::PI * tau).sin();
        // At tau = 0 the ratio tends to 1 for any T; at nonzero integers it
        // is removable only when T is an integer (even order).
        return if num.abs() < 1e-9 || tau == 0.0 {
            1.0
        } else {
            f64::INFINITY
        };
    }
    let ratio = (t * std::f64::consts::PI * tau).sin() / (t * denom);
    ratio.powi(4)
}

/// Fourier coefficients `g(-n) ..= g(n)` of the squared Fejér kernel.
///
/// The kernel is the square of a triangular-coefficient polynomial, so its
/// coefficients are the autocorrelation of the triangle `(T - |k|)/T^2`.
pub fn fejer_coeffs(spec: FejerSpec) -> Vec<f64> {
    let n = spec.n as i64;
    let t = spec.t();
    let kmax = (t.ceil() as i64) - 1;
    let tri = |k: i64| -> f64 {
        let v = t - (k.abs() as f64);
        if v > 0.0 {
            v / (t * t)
        } else {
            0.0
        }
    };
    (-n..=n)
        .map(|m| {
            let mut acc = 0.0;
            for k in -kmax..=kmax {
                acc += tri(k) * tri(m - k);
            }
            acc
        })
        .collect()
}

/// Evaluate `sum_n g(n) e^{j2pi n tau}` for coefficients from [`fejer_coeffs`].
pub fn coeff_expansion(coeffs: &[f64], tau: f64) -> f64 {
    let n = (coeffs.len() as i64 - 1) / 2;
    let mut acc = 0.0;
    for (i, g) in coeffs.iter().enumerate() {
        let k = i as i64 - n;
        acc += g * cis(k as f64 * tau).re;
    }
    acc
}

/// Certificate weights `w(n, p) = sqrt(N / g_N(n)) * sqrt(P / g_P(p))`,
/// returned in measurement order `ntilde = (n + N) + M p`.
pub fn weights(dims: &Dimensions) -> Result<Vec<f64>> {
    let nh = dims.n_half();
    if nh == 0 {
        return Err(DbdError::Domain(
            "weights need M >= 3 so the delay-axis kernel order is positive".into(),
        ));
    }
    let gn = fejer_coeffs(FejerSpec::new(nh)?);
    let gp = fejer_coeffs(FejerSpec::new(dims.p())?);
    let mut w = Vec::with_capacity(dims.mp());
    for p in 0..dims.p() {
        for n in -(nh as i64)..=(nh as i64) {
            let gn_v = gn[(n + nh as i64) as usize];
            let gp_v = gp[p + dims.p()];
            if gn_v <= 0.0 || gp_v <= 0.0 {
                return Err(DbdError::Domain("kernel coefficient not positive".into()));
            }
            w.push((nh as f64 / gn_v).sqrt() * (dims.p() as f64 / gp_v).sqrt());
        }
    }
    Ok(w)
}

/// Distance on the unit torus: `min(|a-b|, 1-|a-b|)`.
pub fn wraparound_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    d.min(1.0 - d)
}

/// Reduce a real number to `[0, 1)` on the torus.
pub fn wrap_unit(x: f64) -> f64 {
    let y = x.rem_euclid(1.0);
    if y == 1.0 {
        0.0
    } else {
        y
    }
}

/// Smallest pairwise wrap-around distance within one axis of one channel set.
fn min_sep_axis(values: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..values.len() {
        for j in (i + 1)..values.len() {
            best = best.min(wraparound_dist(values[i], values[j]));
        }
    }
    best
}

/// Minimum delay and Doppler separations over the radar and communications
/// channel sets (pairs are taken within each set, not across the two).
///
/// Returns `(delta_tau, delta_nu)`; axes with fewer than two points report
/// `f64::INFINITY`.
pub fn min_separation(radar: &ChannelParams, comms: &ChannelParams) -> (f64, f64) {
    let dt = min_sep_axis(radar.delays()).min(min_sep_axis(comms.delays()));
    let dv = min_sep_axis(radar.dopplers()).min(min_sep_axis(comms.dopplers()));
    (dt, dv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::C64;

    /// Independent oracle: exact Fourier coefficients of a degree-`n` trig
    /// polynomial from equispaced samples (a plain DFT, no shared code path).
    fn dft_coeffs(spec: FejerSpec, n: usize) -> Vec<f64> {
        let k = 4 * n + 8;
        (-(n as i64)..=(n as i64))
            .map(|m| {
                let mut acc = C64::new(0.0, 0.0);
                for s in 0..k {
                    let tau = s as f64 / k as f64;
                    acc += fejer_1d(spec, tau) * cis(-(m as f64) * tau);
                }
                acc.re / k as f64
            })
            .collect()
    }

    #[test]
    fn value_one_at_origin() {
        for n in [1, 2, 4, 6, 9] {
            assert_eq!(fejer_1d(FejerSpec::new(n).unwrap(), 0.0), 1.0);
        }
    }

    #[test]
    fn maximum_attained_at_origin_on_dense_grid() {
        let spec = FejerSpec::new(6).unwrap();
        let mut best = (f64::NEG_INFINITY, 0.0);
        for i in 0..10_000 {
            let tau = i as f64 / 10_000.0;
            let v = fejer_1d(spec, tau);
            if v > best.0 {
                best = (v, tau);
            }
        }
        assert_eq!(best.1, 0.0);
        assert!((best.0 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn bounded_and_strictly_decayed() {
        let spec = FejerSpec::new(8).unwrap();
        for i in 0..5_000 {
            let v = fejer_1d(spec, i as f64 / 5_000.0);
            assert!((0.0..=1.0 + 1e-14).contains(&v));
        }
        let half_lobe = fejer_1d(spec, 1.0 / (2.0 * 8.0));
        assert!(half_lobe < 1.0);
    }

    #[test]
    fn coefficients_match_transform_oracle() {
        // Even orders: the expansion must reproduce the kernel exactly.
        for n in [2usize, 4, 6, 10] {
            let spec = FejerSpec::new(n).unwrap();
            let coeffs = fejer_coeffs(spec);
            let oracle = dft_coeffs(spec, n);
            for (a, b) in coeffs.iter().zip(oracle.iter()) {
                assert!((a - b).abs() < 1e-12, "order {n}: {a} vs {b}");
            }
            for i in 0..256 {
                let tau = i as f64 / 256.0;
                let direct = fejer_1d(spec, tau);
                let via_coeffs = coeff_expansion(&coeffs, tau);
                assert!((direct - via_coeffs).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn coefficients_symmetric() {
        let coeffs = fejer_coeffs(FejerSpec::new(6).unwrap());
        let n = coeffs.len();
        for i in 0..n {
            assert_eq!(coeffs[i], coeffs[n - 1 - i]);
        }
    }

    #[test]
    fn weighted_kernel_identity_2d() {
        // Full-support separable expansion equals the 2-D product kernel.
        let (nh, p) = (4usize, 6usize);
        let gn = fejer_coeffs(FejerSpec::new(nh).unwrap());
        let gp = fejer_coeffs(FejerSpec::new(p).unwrap());
        for (tau, nu) in [(0.0, 0.0), (0.13, 0.71), (0.5, 0.25), (0.9, 0.9)] {
            let mut acc = 0.0;
            for (i, gn_v) in gn.iter().enumerate() {
                let n = i as i64 - nh as i64;
                for (k, gp_v) in gp.iter().enumerate() {
                    let pp = k as i64 - p as i64;
                    acc += gn_v * gp_v * (cis(n as f64 * tau) * cis(pp as f64 * nu)).re;
                }
            }
            let want = fejer_1d(FejerSpec::new(nh).unwrap(), tau)
                * fejer_1d(FejerSpec::new(p).unwrap(), nu);
            assert!((acc - want).abs() < 1e-10, "({tau},{nu}): {acc} vs {want}");
        }
    }

    #[test]
    fn weights_positive_for_fig2_dims() {
        let dims = Dimensions::new(13, 9, 3, 3, 3).unwrap();
        let w = weights(&dims).unwrap();
        assert_eq!(w.len(), 117);
        assert!(w.iter().all(|x| x.is_finite() && *x > 0.0));
    }

    #[test]
    fn wraparound_examples() {
        assert!((wraparound_dist(0.8, 0.1) - 0.3).abs() < 1e-15);
        assert!((wraparound_dist(0.2, 0.1) - 0.1).abs() < 1e-15);
        assert_eq!(wraparound_dist(0.37, 0.37), 0.0);
    }
}
