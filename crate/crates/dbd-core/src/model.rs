//! Domain types, random scenario generation, steering atoms, and synthesis of
//! the overlaid radar-communications measurement for every scenario variant.
//!
//! Geometry and indexing conventions, shared by every module in this crate:
//! frequency samples run `n = -N ..= N` with `M = 2N + 1`, pulses run
//! `p = 0 .. P`, and the linear measurement index is `ntilde = n + N + M p`
//! (pulse-major, sample-minor). With unequal pulse/symbol durations a pulse
//! contains `p_tilde` messages and the message index runs faster than the
//! pulse index; the Doppler phase always advances with the *pulse* index.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::kernels;
use crate::util::{cis, serde_cmat, serde_cvec, stream_rng, C64};
use crate::{DbdError, Result};

/// Problem dimensions.
///
/// `M` frequency samples per pulse (odd, `M = 2N + 1`), `P` pulses (equal to
/// the number of messages in the baseline model), subspace dimension `J`,
/// `L` radar targets and `Q` communications paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimensions {
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "P")]
    p: usize,
    #[serde(rename = "J")]
    j: usize,
    #[serde(rename = "L")]
    l: usize,
    #[serde(rename = "Q")]
    q: usize,
}

impl Dimensions {
    pub fn new(m: usize, p: usize, j: usize, l: usize, q: usize) -> Result<Self> {
        if m == 0 || m % 2 == 0 {
            return Err(DbdError::Domain(format!("M must be odd and positive, got {m}")));
        }
        if p == 0 {
            return Err(DbdError::Domain("P must be positive".into()));
        }
        if j == 0 || j > m {
            return Err(DbdError::Domain(format!("J must satisfy 1 <= J <= M, got J={j}, M={m}")));
        }
        Ok(Self { m, n: (m - 1) / 2, p, j, l, q })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `N = (M - 1) / 2`.
    pub fn n_half(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn mp(&self) -> usize {
        self.m * self.p
    }

    /// Linear index `ntilde = n + N + M p` of sample `n` in pulse `p`.
    pub fn index_of(&self, n: i64, p: usize) -> usize {
        debug_assert!(n.unsigned_abs() as usize <= self.n && p < self.p);
        (n + self.n as i64) as usize + self.m * p
    }

    /// Inverse of [`Dimensions::index_of`].
    pub fn decode(&self, ntilde: usize) -> (i64, usize) {
        let p = ntilde / self.m;
        let n = (ntilde % self.m) as i64 - self.n as i64;
        (n, p)
    }

    fn validated(self) -> Result<Self> {
        let rebuilt = Self::new(self.m, self.p, self.j, self.l, self.q)?;
        if rebuilt.n != self.n {
            return Err(DbdError::Domain(format!(
                "inconsistent dimensions: N={} but M={} requires N={}",
                self.n, self.m, rebuilt.n
            )));
        }
        Ok(self)
    }
}

/// Enumeration of measurement samples for a given geometry.
///
/// `msg` is the message (symbol) index, `pulse = msg / p_tilde` the radar
/// pulse index that drives the Doppler phase. For the baseline geometry
/// (`p_tilde = 1`) the two coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleGrid {
    m: usize,
    n_half: usize,
    pulses: usize,
    p_tilde: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct Sample {
    pub ntilde: usize,
    pub n: i64,
    pub pulse: usize,
    pub msg: usize,
}

impl SampleGrid {
    pub fn new(dims: &Dimensions, p_tilde: usize) -> Self {
        Self { m: dims.m(), n_half: dims.n_half(), pulses: dims.p(), p_tilde }
    }

    pub fn len(&self) -> usize {
        self.m * self.pulses * self.p_tilde
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn msgs(&self) -> usize {
        self.pulses * self.p_tilde
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn pulses(&self) -> usize {
        self.pulses
    }

    pub fn p_tilde(&self) -> usize {
        self.p_tilde
    }

    pub fn iter(&self) -> impl Iterator<Item = Sample> + '_ {
        let m = self.m;
        let nh = self.n_half as i64;
        let pt = self.p_tilde;
        (0..self.len()).map(move |ntilde| {
            let msg = ntilde / m;
            Sample { ntilde, n: (ntilde % m) as i64 - nh, pulse: msg / pt, msg }
        })
    }

    /// Steering-atom entry at one sample: `e^{j2pi(n tau + pulse nu)}`.
    #[inline]
    pub fn atom_entry(&self, s: &Sample, tau: f64, nu: f64) -> C64 {
        cis(s.n as f64 * tau + s.pulse as f64 * nu)
    }
}

/// A sparse delay-Doppler channel: unit-modulus gains with normalized delays
/// and Dopplers in `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    #[serde(with = "serde_cvec")]
    gains: Vec<C64>,
    delays: Vec<f64>,
    dopplers: Vec<f64>,
}

impl ChannelParams {
    pub fn new(gains: Vec<C64>, delays: Vec<f64>, dopplers: Vec<f64>) -> Result<Self> {
        if gains.len() != delays.len() || gains.len() != dopplers.len() {
            return Err(DbdError::Dimension(
                "gains, delays and dopplers must have equal length".into(),
            ));
        }
        for g in &gains {
            if (g.norm() - 1.0).abs() > 1e-9 {
                return Err(DbdError::Domain(format!("gain modulus must be 1, got {}", g.norm())));
            }
        }
        for x in delays.iter().chain(dopplers.iter()) {
            if !(0.0..1.0).contains(x) {
                return Err(DbdError::Domain(format!("delay/Doppler {x} outside [0,1)")));
            }
        }
        Ok(Self { gains, delays, dopplers })
    }

    pub fn empty() -> Self {
        Self { gains: vec![], delays: vec![], dopplers: vec![] }
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    pub fn gains(&self) -> &[C64] {
        &self.gains
    }

    pub fn delays(&self) -> &[f64] {
        &self.delays
    }

    pub fn dopplers(&self) -> &[f64] {
        &self.dopplers
    }

    pub fn supports(&self) -> Vec<(f64, f64)> {
        self.delays.iter().zip(&self.dopplers).map(|(&t, &v)| (t, v)).collect()
    }
}

/// Known random subspace bases.
///
/// `b` has `M` rows (one per frequency sample, the conjugated subspace
/// vector) and `J` columns (`p_tilde * J` with unequal durations). `d`
/// stacks one independent `M x J` block per pulse, so it has one length-`J`
/// row per measurement sample; the shared coefficient vector `v` then keeps
/// the comms Doppler identifiable. With unequal durations `d` is instead
/// block-diagonal over symbols, one coefficient block per message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceBases {
    #[serde(rename = "B", with = "serde_cmat")]
    pub b: DMatrix<C64>,
    #[serde(rename = "D", with = "serde_cmat")]
    pub d: DMatrix<C64>,
}

/// One radar emitter: subspace, channel, and unit-norm waveform coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarEmitter {
    #[serde(rename = "B", with = "serde_cmat")]
    pub b: DMatrix<C64>,
    pub channel: ChannelParams,
    #[serde(with = "serde_cvec")]
    pub u: Vec<C64>,
}

/// One communications emitter: subspace, channel, and unit-norm coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommsEmitter {
    #[serde(rename = "D", with = "serde_cmat")]
    pub d: DMatrix<C64>,
    pub channel: ChannelParams,
    #[serde(with = "serde_cvec")]
    pub v: Vec<C64>,
}

/// Scenario variant with its realized parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Variant {
    Baseline,
    Noisy {
        snr_db: f64,
    },
    /// Radar transmission lags the communications clock by `tau_e` PRIs; the
    /// dual program relaxes the radar polynomial bound to `rho`.
    Unsync {
        tau_e: f64,
        rho: f64,
    },
    /// Additional emitters beyond the first radar/comms pair held at the top
    /// level of the scenario.
    MultiEmitter {
        extra_radars: Vec<RadarEmitter>,
        extra_comms: Vec<CommsEmitter>,
    },
    /// Pulse repetition interval equals `p_tilde` message durations.
    UnequalPri {
        p_tilde: usize,
    },
}

impl Variant {
    pub fn p_tilde(&self) -> usize {
        match self {
            Variant::UnequalPri { p_tilde } => *p_tilde,
            _ => 1,
        }
    }
}

/// A full problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub dims: Dimensions,
    pub variant: Variant,
    pub rng_seed: u64,
    /// All radar emitters; element 0 is the scenario's primary emitter.
    pub radars: Vec<RadarEmitter>,
    /// All communications emitters; element 0 is primary.
    pub comms: Vec<CommsEmitter>,
}

/// The length-`MP` frequency-domain observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    #[serde(with = "serde_cvec")]
    pub y: Vec<C64>,
    pub dims: Dimensions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_realization: Option<SerializedNoise>,
}

/// Stored noise vector so noisy experiments replay exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerializedNoise(#[serde(with = "serde_cvec")] pub Vec<C64>);

impl Measurement {
    pub fn noise(&self) -> Option<&[C64]> {
        self.noise_realization.as_ref().map(|n| n.0.as_slice())
    }

    /// Euclidean norm of the stored noise realization (0 when noiseless).
    pub fn noise_norm(&self) -> f64 {
        self.noise().map_or(0.0, |w| w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
    }
}

impl Scenario {
    pub fn grid(&self) -> SampleGrid {
        SampleGrid::new(&self.dims, self.variant.p_tilde())
    }

    pub fn len_y(&self) -> usize {
        self.grid().len()
    }

    /// Primary radar emitter.
    pub fn radar(&self) -> &RadarEmitter {
        &self.radars[0]
    }

    /// Primary communications emitter.
    pub fn comms(&self) -> &CommsEmitter {
        &self.comms[0]
    }

    pub fn bases(&self) -> SubspaceBases {
        SubspaceBases { b: self.radars[0].b.clone(), d: self.comms[0].d.clone() }
    }

    /// Smallest pairwise wrap-around separations `(delta_tau, delta_nu)` over
    /// all emitters' channels (reported, never enforced).
    pub fn min_separation(&self) -> (f64, f64) {
        let mut dt = f64::INFINITY;
        let mut dv = f64::INFINITY;
        for r in &self.radars {
            let (a, b) = kernels::min_separation(&r.channel, &ChannelParams::empty());
            dt = dt.min(a);
            dv = dv.min(b);
        }
        for c in &self.comms {
            let (a, b) = kernels::min_separation(&ChannelParams::empty(), &c.channel);
            dt = dt.min(a);
            dv = dv.min(b);
        }
        (dt, dv)
    }

    pub fn from_parts(
        dims: Dimensions,
        variant: Variant,
        rng_seed: u64,
        radars: Vec<RadarEmitter>,
        comms: Vec<CommsEmitter>,
    ) -> Result<Self> {
        let s = Self { dims, variant, rng_seed, radars, comms };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if self.radars.is_empty() || self.comms.is_empty() {
            return Err(DbdError::Dimension("scenario needs at least one emitter per side".into()));
        }
        if matches!(self.variant, Variant::Unsync { tau_e, .. } if !(0.0..=1.0).contains(&tau_e)) {
            return Err(DbdError::Domain("tau_e must lie in [0, 1]".into()));
        }
        if matches!(self.variant, Variant::Unsync { rho, .. } if rho <= 0.0) {
            return Err(DbdError::Domain("rho must be positive".into()));
        }
        if matches!(self.variant, Variant::UnequalPri { p_tilde } if p_tilde == 0) {
            return Err(DbdError::Domain("p_tilde must be >= 1".into()));
        }
        let grid = self.grid();
        let (m, j) = (self.dims.m(), self.dims.j());
        let ju = j * grid.p_tilde();
        let vlen = comms_coeff_len(&grid, j);
        for r in &self.radars {
            if r.b.nrows() != m || r.b.ncols() != ju {
                return Err(DbdError::Dimension(format!(
                    "radar basis must be {m}x{ju}, got {}x{}",
                    r.b.nrows(),
                    r.b.ncols()
                )));
            }
            if r.u.len() != ju {
                return Err(DbdError::Dimension(format!("u must have length {ju}")));
            }
        }
        for c in &self.comms {
            if c.d.nrows() != grid.len() || c.d.ncols() != vlen {
                return Err(DbdError::Dimension(format!(
                    "comms basis must be {}x{}, got {}x{}",
                    grid.len(),
                    vlen,
                    c.d.nrows(),
                    c.d.ncols()
                )));
            }
            if c.v.len() != vlen {
                return Err(DbdError::Dimension(format!("v must have length {vlen}")));
            }
        }
        Ok(())
    }
}

/// Steering atom `a(tau, nu)` with entries `e^{j2pi(n tau + p nu)}` in linear
/// measurement order (baseline geometry).
pub fn steering_atom(tau: f64, nu: f64, dims: &Dimensions) -> Result<Vec<C64>> {
    check_unit_interval(tau, "tau")?;
    check_unit_interval(nu, "nu")?;
    let grid = SampleGrid::new(dims, 1);
    Ok(grid.iter().map(|s| grid.atom_entry(&s, tau, nu)).collect())
}

/// Steering atom on an arbitrary sample grid (unequal-PRI geometry included).
pub fn steering_atom_on(grid: &SampleGrid, tau: f64, nu: f64) -> Result<Vec<C64>> {
    check_unit_interval(tau, "tau")?;
    check_unit_interval(nu, "nu")?;
    Ok(grid.iter().map(|s| grid.atom_entry(&s, tau, nu)).collect())
}

fn check_unit_interval(x: f64, name: &str) -> Result<()> {
    if !(0.0..1.0).contains(&x) {
        return Err(DbdError::Domain(format!("{name} = {x} outside [0,1)")));
    }
    Ok(())
}

fn geometric_row(rng: &mut impl Rng, width: usize) -> Vec<C64> {
    let sigma: f64 = rng.sample(StandardNormal);
    // Conjugated row of the unit-modulus subspace vector [1, e^{j2pi s}, ...].
    (0..width).map(|k| cis(-(k as f64) * sigma)).collect()
}

/// Comms subspace rows carry an extra random global phase so the radar and
/// comms dictionaries stay distinguishable even at J = 1 (the geometric
/// progression alone would give both sides the same all-ones component).
fn geometric_row_phased(rng: &mut impl Rng, width: usize) -> Vec<C64> {
    let mut row = geometric_row(rng, width);
    let phase = cis(rng.random::<f64>());
    for z in &mut row {
        *z *= phase;
    }
    row
}

fn draw_b(dims: &Dimensions, p_tilde: usize, rng: &mut impl Rng) -> DMatrix<C64> {
    let width = dims.j() * p_tilde;
    let rows: Vec<Vec<C64>> = (0..dims.m()).map(|_| geometric_row(rng, width)).collect();
    DMatrix::from_fn(dims.m(), width, |i, j| rows[i][j])
}

/// Number of comms coefficients for a geometry: one shared length-`J`
/// vector normally; one length-`J` block per symbol with unequal durations.
fn comms_coeff_len(grid: &SampleGrid, j: usize) -> usize {
    if grid.p_tilde() > 1 {
        grid.msgs() * j
    } else {
        j
    }
}

fn draw_d(grid: &SampleGrid, j: usize, rng: &mut impl Rng) -> DMatrix<C64> {
    if grid.p_tilde() > 1 {
        // per-symbol subspaces: one M x J block per message
        let width = grid.msgs() * j;
        let mut m = DMatrix::from_element(grid.len(), width, C64::new(0.0, 0.0));
        for s in grid.iter() {
            let row = geometric_row_phased(rng, j);
            for (k, v) in row.iter().enumerate() {
                m[(s.ntilde, s.msg * j + k)] = *v;
            }
        }
        m
    } else {
        // stacked per-pulse blocks: fresh length-J row for every sample
        let rows: Vec<Vec<C64>> = (0..grid.len()).map(|_| geometric_row_phased(rng, j)).collect();
        DMatrix::from_fn(grid.len(), j, |i, jj| rows[i][jj])
    }
}

/// Draw the subspace bases for the baseline geometry (deterministic in seed).
pub fn draw_bases(dims: &Dimensions, seed: u64) -> SubspaceBases {
    let grid = SampleGrid::new(dims, 1);
    let mut rb = stream_rng(seed, "bases-b", 0);
    let mut rd = stream_rng(seed, "bases-d", 0);
    SubspaceBases { b: draw_b(dims, 1, &mut rb), d: draw_d(&grid, dims.j(), &mut rd) }
}

fn draw_unit_gains(count: usize, rng: &mut impl Rng) -> Vec<C64> {
    (0..count).map(|_| cis(rng.random::<f64>())).collect()
}

fn draw_coeffs(len: usize, rng: &mut impl Rng) -> Vec<C64> {
    let mut v: Vec<C64> =
        (0..len).map(|_| C64::new(rng.random::<f64>(), rng.random::<f64>())).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        for z in &mut v {
            *z /= norm;
        }
    }
    v
}

fn draw_supports(
    count: usize,
    min_sep: Option<(f64, f64)>,
    rng: &mut impl Rng,
) -> Result<(Vec<f64>, Vec<f64>)> {
    const ATTEMPTS: usize = 200_000;
    for _ in 0..ATTEMPTS {
        let taus: Vec<f64> = (0..count).map(|_| rng.random::<f64>()).collect();
        let nus: Vec<f64> = (0..count).map(|_| rng.random::<f64>()).collect();
        match min_sep {
            None => return Ok((taus, nus)),
            Some((dt, dv)) => {
                let ok_t = (0..count).all(|i| {
                    (i + 1..count).all(|k| kernels::wraparound_dist(taus[i], taus[k]) >= dt)
                });
                let ok_v = (0..count).all(|i| {
                    (i + 1..count).all(|k| kernels::wraparound_dist(nus[i], nus[k]) >= dv)
                });
                if ok_t && ok_v {
                    return Ok((taus, nus));
                }
            }
        }
    }
    Err(DbdError::Domain(format!(
        "could not draw {count} supports at separation {min_sep:?} after {ATTEMPTS} attempts"
    )))
}

/// How supports are chosen by [`draw_scenario`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SupportSpec {
    /// Uniform on `[0,1)^2`.
    #[default]
    Random,
    /// Uniform with rejection until each channel set is pairwise separated by
    /// at least `1/M` in delay and `1/P` in Doppler.
    RandomMinSep,
    /// Explicit supports; outer index is the emitter, inner the target/path.
    Fixed {
        radar: Vec<Vec<(f64, f64)>>,
        comms: Vec<Vec<(f64, f64)>>,
    },
}

/// Declarative input to [`draw_scenario`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub dims: Dimensions,
    pub variant: VariantSpec,
    #[serde(default)]
    pub supports: SupportSpec,
    pub seed: u64,
}

/// Variant selector (counts and knobs only; realized data lives in
/// [`Variant`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VariantSpec {
    Baseline,
    Noisy { snr_db: f64 },
    Unsync { tau_e: f64, rho: f64 },
    MultiEmitter { n_radar: usize, n_comms: usize },
    UnequalPri { p_tilde: usize },
}

impl VariantSpec {
    fn emitter_counts(&self) -> (usize, usize) {
        match self {
            VariantSpec::MultiEmitter { n_radar, n_comms } => (*n_radar, *n_comms),
            _ => (1, 1),
        }
    }

    fn p_tilde(&self) -> usize {
        match self {
            VariantSpec::UnequalPri { p_tilde } => *p_tilde,
            _ => 1,
        }
    }
}

/// Draw a complete scenario: bases, channels and coefficients for every
/// emitter. Deterministic in `spec.seed`.
pub fn draw_scenario(spec: &ScenarioSpec) -> Result<Scenario> {
    let dims = spec.dims.validated()?;
    let (n_radar, n_comms) = spec.variant.emitter_counts();
    if n_radar == 0 || n_comms == 0 {
        return Err(DbdError::Domain("emitter counts must be >= 1".into()));
    }
    let p_tilde = spec.variant.p_tilde();
    if p_tilde == 0 {
        return Err(DbdError::Domain("p_tilde must be >= 1".into()));
    }
    let grid = SampleGrid::new(&dims, p_tilde);
    let min_sep = match spec.supports {
        SupportSpec::RandomMinSep => {
            Some((1.0 / dims.m() as f64, 1.0 / dims.p() as f64))
        }
        _ => None,
    };

    let fixed = |which: &Vec<Vec<(f64, f64)>>, em: usize, count: usize| -> Result<(Vec<f64>, Vec<f64>)> {
        let list = which.get(em).ok_or_else(|| {
            DbdError::Domain(format!("fixed supports missing for emitter {em}"))
        })?;
        if list.len() != count {
            return Err(DbdError::Domain(format!(
                "fixed supports for emitter {em} must have length {count}, got {}",
                list.len()
            )));
        }
        for &(t, v) in list {
            check_unit_interval(t, "tau")?;
            check_unit_interval(v, "nu")?;
        }
        Ok((list.iter().map(|s| s.0).collect(), list.iter().map(|s| s.1).collect()))
    };

    let mut radars = Vec::with_capacity(n_radar);
    for em in 0..n_radar {
        let mut rng_b = stream_rng(spec.seed, "radar-bases", em as u64);
        let mut rng_ch = stream_rng(spec.seed, "radar-channel", em as u64);
        let mut rng_u = stream_rng(spec.seed, "radar-coeffs", em as u64);
        let (taus, nus) = match &spec.supports {
            SupportSpec::Fixed { radar, .. } => fixed(radar, em, dims.l())?,
            _ => draw_supports(dims.l(), min_sep, &mut rng_ch)?,
        };
        let gains = draw_unit_gains(dims.l(), &mut rng_ch);
        radars.push(RadarEmitter {
            b: draw_b(&dims, p_tilde, &mut rng_b),
            channel: ChannelParams::new(gains, taus, nus)?,
            u: draw_coeffs(dims.j() * p_tilde, &mut rng_u),
        });
    }

    let mut comms = Vec::with_capacity(n_comms);
    for em in 0..n_comms {
        let mut rng_d = stream_rng(spec.seed, "comms-bases", em as u64);
        let mut rng_ch = stream_rng(spec.seed, "comms-channel", em as u64);
        let mut rng_v = stream_rng(spec.seed, "comms-coeffs", em as u64);
        let (taus, nus) = match &spec.supports {
            SupportSpec::Fixed { comms, .. } => fixed(comms, em, dims.q())?,
            _ => draw_supports(dims.q(), min_sep, &mut rng_ch)?,
        };
        let gains = draw_unit_gains(dims.q(), &mut rng_ch);
        comms.push(CommsEmitter {
            d: draw_d(&grid, dims.j(), &mut rng_d),
            channel: ChannelParams::new(gains, taus, nus)?,
            v: draw_coeffs(comms_coeff_len(&grid, dims.j()), &mut rng_v),
        });
    }

    let variant = match spec.variant {
        VariantSpec::Baseline => Variant::Baseline,
        VariantSpec::Noisy { snr_db } => Variant::Noisy { snr_db },
        VariantSpec::Unsync { tau_e, rho } => Variant::Unsync { tau_e, rho },
        VariantSpec::UnequalPri { p_tilde } => Variant::UnequalPri { p_tilde },
        VariantSpec::MultiEmitter { .. } => Variant::MultiEmitter {
            extra_radars: radars[1..].to_vec(),
            extra_comms: comms[1..].to_vec(),
        },
    };

    Scenario::from_parts(dims, variant, spec.seed, radars, comms)
}

/// Synthesize the overlaid measurement for a scenario.
///
/// The clean signal is assembled exactly per the variant's model; for the
/// noisy variant the realization is scaled so the expected sample SNR matches
/// `snr_db` and is stored on the measurement for replay.
pub fn synth_measurement(scen: &Scenario) -> Measurement {
    let grid = scen.grid();
    let mut y = vec![C64::new(0.0, 0.0); grid.len()];
    let tau_e = match scen.variant {
        Variant::Unsync { tau_e, .. } => tau_e,
        _ => 0.0,
    };

    for r in &scen.radars {
        // bu[n + N] = b_n^H u
        let bu: Vec<C64> = (0..grid.m())
            .map(|row| (0..r.u.len()).map(|j| r.b[(row, j)] * r.u[j]).sum())
            .collect();
        for (&g, (&t, &v)) in r
            .channel
            .gains()
            .iter()
            .zip(r.channel.delays().iter().zip(r.channel.dopplers()))
        {
            for s in grid.iter() {
                let phase = cis(-(s.n as f64 * (t + tau_e) + s.pulse as f64 * v));
                y[s.ntilde] += g * bu[(s.n + grid.n_half as i64) as usize] * phase;
            }
        }
    }

    for c in &scen.comms {
        // dv[ntilde] = d_ntilde^H v
        let dv: Vec<C64> = (0..grid.len())
            .map(|row| (0..c.v.len()).map(|j| c.d[(row, j)] * c.v[j]).sum())
            .collect();
        for (&g, (&t, &v)) in
            c.channel.gains().iter().zip(c.channel.delays().iter().zip(c.channel.dopplers()))
        {
            for s in grid.iter() {
                let phase = cis(-(s.n as f64 * t + s.pulse as f64 * v));
                y[s.ntilde] += g * dv[s.ntilde] * phase;
            }
        }
    }

    let noise_realization = match scen.variant {
        Variant::Noisy { snr_db } => {
            let clean_energy: f64 = y.iter().map(|z| z.norm_sqr()).sum();
            let sigma2 = clean_energy * 10f64.powf(-snr_db / 10.0) / grid.len() as f64;
            let sd = (sigma2 / 2.0).sqrt();
            let mut rng = stream_rng(scen.rng_seed, "noise", 0);
            let w: Vec<C64> = (0..grid.len())
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    C64::new(sd * re, sd * im)
                })
                .collect();
            for (yi, wi) in y.iter_mut().zip(&w) {
                *yi += *wi;
            }
            Some(SerializedNoise(w))
        }
        _ => None,
    };

    Measurement { y, dims: scen.dims, noise_realization }
}

// Serde for Scenario follows the documented schema: the primary emitter's
// pieces appear as top-level `bases`/`radar`/`comms`/`u`/`v` fields and the
// variant carries whatever else its realization needs.
#[derive(Serialize, Deserialize)]
struct ScenarioWire {
    dims: Dimensions,
    bases: SubspaceBases,
    radar: ChannelParams,
    comms: ChannelParams,
    #[serde(with = "serde_cvec")]
    u: Vec<C64>,
    #[serde(with = "serde_cvec")]
    v: Vec<C64>,
    variant: Variant,
    rng_seed: u64,
}

impl Serialize for Scenario {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ScenarioWire {
            dims: self.dims,
            bases: self.bases(),
            radar: self.radars[0].channel.clone(),
            comms: self.comms[0].channel.clone(),
            u: self.radars[0].u.clone(),
            v: self.comms[0].v.clone(),
            variant: self.variant.clone(),
            rng_seed: self.rng_seed,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Scenario {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = ScenarioWire::deserialize(d)?;
        let mut radars =
            vec![RadarEmitter { b: w.bases.b, channel: w.radar, u: w.u }];
        let mut comms = vec![CommsEmitter { d: w.bases.d, channel: w.comms, v: w.v }];
        if let Variant::MultiEmitter { extra_radars, extra_comms } = &w.variant {
            radars.extend(extra_radars.iter().cloned());
            comms.extend(extra_comms.iter().cloned());
        }
        Scenario::from_parts(w.dims, w.variant, w.rng_seed, radars, comms)
            .map_err(D::Error::custom)
    }
}
