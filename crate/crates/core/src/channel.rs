//! Channel drops and the per-BS local-CSI view.
//!
//! Entry convention: every real and imaginary component of a fading
//! coefficient is an independent standard normal, so `E‖h‖² = 2·N_T` and
//! `|hᴴw|²` for a unit `w` independent of `h` is chi-square with 2 degrees of
//! freedom. Transmit power is 1 per beam; SNR is `1/N₀`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::numerics::ComplexVec;
use crate::{Error, Result};

/// A user, addressed by its serving cell and its slot within the cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UserId {
    pub cell: usize,
    pub slot: usize,
}

impl UserId {
    pub const fn new(cell: usize, slot: usize) -> Self {
        Self { cell, slot }
    }

    /// The single user of `cell` in a one-user-per-cell network.
    pub const fn cell(cell: usize) -> Self {
        Self { cell, slot: 0 }
    }
}

impl std::fmt::Display for UserId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}_{}", self.cell + 1, self.slot + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    /// Antennas per BS.
    pub n_t: usize,
    /// Number of cells (one BS each).
    pub n_c: usize,
    /// Users per cell.
    #[serde(default = "one")]
    pub n_u: usize,
    /// Noise variance (linear).
    pub n0: f64,
}

fn one() -> usize {
    1
}

impl NetworkConfig {
    pub fn new(n_t: usize, n_c: usize, n_u: usize, n0: f64) -> Result<Self> {
        let cfg = Self { n_t, n_c, n_u, n0 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_snr_db(n_t: usize, n_c: usize, n_u: usize, snr_db: f64) -> Result<Self> {
        Self::new(n_t, n_c, n_u, snr_db_to_n0(snr_db))
    }

    /// Checks the invariants every module relies on. Single-cell networks are
    /// allowed here so baselines can be exercised in isolation.
    pub fn validate(&self) -> Result<()> {
        if self.n_t < 2 {
            return Err(Error::InvalidConfig(format!("n_t = {} (need ≥ 2)", self.n_t)));
        }
        if self.n_c < 1 || self.n_u < 1 {
            return Err(Error::InvalidConfig("n_c and n_u must be positive".into()));
        }
        if !(self.n0 > 0.0) || !self.n0.is_finite() {
            return Err(Error::InvalidConfig(format!("n0 = {} (need finite > 0)", self.n0)));
        }
        Ok(())
    }

    /// Additional requirements of the interference-free-user scheme.
    pub fn require_selection_scheme(&self) -> Result<()> {
        self.validate()?;
        if self.n_c < 2 {
            return Err(Error::InvalidConfig("selection scheme needs n_c ≥ 2".into()));
        }
        if self.n_t >= self.n_c * self.n_u {
            return Err(Error::InvalidConfig(format!(
                "selection scheme needs n_t < n_c·n_u ({} ≥ {})",
                self.n_t,
                self.n_c * self.n_u
            )));
        }
        Ok(())
    }

    pub fn snr_db(&self) -> f64 {
        -10.0 * self.n0.log10()
    }

    pub fn with_n0(mut self, n0: f64) -> Self {
        self.n0 = n0;
        self
    }

    pub fn n_users(&self) -> usize {
        self.n_c * self.n_u
    }

    pub fn user_index(&self, user: UserId) -> usize {
        user.cell * self.n_u + user.slot
    }

    pub fn user_at(&self, index: usize) -> UserId {
        UserId::new(index / self.n_u, index % self.n_u)
    }

    pub fn users(&self) -> impl Iterator<Item = UserId> + '_ {
        (0..self.n_users()).map(|k| self.user_at(k))
    }

    pub fn users_of(&self, cell: usize) -> impl Iterator<Item = UserId> {
        (0..self.n_u).map(move |slot| UserId::new(cell, slot))
    }

    pub fn contains(&self, user: UserId) -> bool {
        user.cell < self.n_c && user.slot < self.n_u
    }
}

pub fn snr_db_to_n0(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Geometry for distance-attenuated drops (a simplified small-cell layout:
/// BSs on a hexagonal lattice, each user uniform in its own cell disk).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DropParams {
    pub cell_radius_m: f64,
    pub pathloss_exponent: f64,
    pub min_dist_m: f64,
    /// Transmit power per beam; received powers are in mW, so `n0` is in mW too.
    pub tx_power_dbm: f64,
    /// Loss at 1 m; the default puts the curve near `140.7 + 36.7·log₁₀(d/km)` dB.
    #[serde(default = "default_reference_loss")]
    pub reference_loss_db: f64,
}

fn default_reference_loss() -> f64 {
    30.6
}

impl Default for DropParams {
    fn default() -> Self {
        Self {
            cell_radius_m: 40.0,
            pathloss_exponent: 3.7,
            min_dist_m: 3.0,
            tx_power_dbm: 24.0,
            reference_loss_db: default_reference_loss(),
        }
    }
}

impl DropParams {
    fn validate(&self) -> Result<()> {
        let ok = self.cell_radius_m > 0.0
            && self.min_dist_m > 0.0
            && self.min_dist_m < self.cell_radius_m
            && self.pathloss_exponent >= 0.0
            && self.pathloss_exponent.is_finite()
            && self.tx_power_dbm.is_finite()
            && self.reference_loss_db.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid drop geometry {self:?}")))
        }
    }
}

/// One drop: the channel from every BS to every user.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    config: NetworkConfig,
    seed: Option<u64>,
    // index: bs * n_users + user_index
    h: Vec<ComplexVec>,
}

impl ChannelRealization {
    /// Builds a realization from explicit channels indexed `[bs][user_index]`.
    pub fn from_channels(config: NetworkConfig, channels: Vec<Vec<ComplexVec>>) -> Result<Self> {
        config.validate()?;
        if channels.len() != config.n_c || channels.iter().any(|r| r.len() != config.n_users()) {
            return Err(Error::DimensionMismatch(
                "channel map must cover every (bs, user) pair".into(),
            ));
        }
        let h: Vec<ComplexVec> = channels.into_iter().flatten().collect();
        for v in &h {
            if v.len() != config.n_t {
                return Err(Error::DimensionMismatch(format!(
                    "channel of length {} with n_t = {}",
                    v.len(),
                    config.n_t
                )));
            }
            v.check_finite("channel")?;
        }
        Ok(Self { config, seed: None, h })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Same channels evaluated at a different noise level.
    pub fn with_n0(&self, n0: f64) -> Result<Self> {
        let config = self.config.with_n0(n0);
        config.validate()?;
        Ok(Self { config, ..self.clone() })
    }

    /// `h_{bs, user}`.
    pub fn channel(&self, bs: usize, user: UserId) -> &ComplexVec {
        &self.h[bs * self.config.n_users() + self.config.user_index(user)]
    }

    /// The view BS `bs` is allowed to use.
    pub fn local_csi(&self, bs: usize) -> Result<LocalCsi<'_>> {
        if bs >= self.config.n_c {
            return Err(Error::IndexOutOfRange { index: bs, limit: self.config.n_c });
        }
        let n = self.config.n_users();
        Ok(LocalCsi {
            bs,
            config: &self.config,
            rows: &self.h[bs * n..(bs + 1) * n],
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let dump = RealizationDump {
            config: self.config,
            seed: self.seed,
            h: self
                .h
                .iter()
                .flat_map(|v| v.as_slice().iter().map(|z| [z.re, z.im]))
                .collect(),
        };
        Ok(serde_json::to_string(&dump)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dump: RealizationDump = serde_json::from_str(text)?;
        let cfg = dump.config;
        cfg.validate()?;
        let n_t = cfg.n_t;
        if dump.h.len() != cfg.n_c * cfg.n_users() * n_t {
            return Err(Error::Parse(format!(
                "expected {} coefficients, found {}",
                cfg.n_c * cfg.n_users() * n_t,
                dump.h.len()
            )));
        }
        let h: Vec<ComplexVec> = dump
            .h
            .chunks(n_t)
            .map(|c| ComplexVec::new(c.iter().map(|&[re, im]| Complex64::new(re, im)).collect()))
            .collect();
        for v in &h {
            v.check_finite("channel")?;
        }
        Ok(Self { config: cfg, seed: dump.seed, h })
    }
}

/// Serialized form: `h` lists `[re, im]` pairs ordered by BS, then user
/// (`cell·n_u + slot`), then antenna.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RealizationDump {
    config: NetworkConfig,
    seed: Option<u64>,
    h: Vec<[f64; 2]>,
}

/// Channels rooted at one BS.
///
/// The view holds only `h_{i,·}` for its own BS `i`; there is no way to reach
/// another BS's channels through it:
///
/// ```compile_fail
/// # use coordbeam::channel::*;
/// let cfg = NetworkConfig::new(2, 3, 1, 1.0).unwrap();
/// let drop = generate_rayleigh(&cfg, 1).unwrap();
/// let csi = drop.local_csi(0).unwrap();
/// let _ = csi.channel_from(1, UserId::cell(0));
/// ```
#[derive(Debug, Clone, Copy)]
pub struct LocalCsi<'a> {
    bs: usize,
    config: &'a NetworkConfig,
    rows: &'a [ComplexVec],
}

impl<'a> LocalCsi<'a> {
    pub fn bs_index(&self) -> usize {
        self.bs
    }

    pub fn config(&self) -> &'a NetworkConfig {
        self.config
    }

    /// `h_{bs, user}`.
    pub fn channel(&self, user: UserId) -> &'a ComplexVec {
        &self.rows[self.config.user_index(user)]
    }

    /// All channels from this BS, ordered by user index.
    pub fn rows(&self) -> &'a [ComplexVec] {
        self.rows
    }

    /// Users served by this BS.
    pub fn own_users(&self) -> impl Iterator<Item = UserId> {
        self.config.users_of(self.bs)
    }
}

fn link_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> ComplexVec {
    ComplexVec::new(
        (0..n)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect(),
    )
}

fn fading(config: &NetworkConfig, seed: u64) -> Vec<ComplexVec> {
    let n_users = config.n_users();
    (0..config.n_c * n_users)
        .map(|link| gaussian_vector(&mut link_rng(seed, link as u64), config.n_t))
        .collect()
}

/// I.i.d. Rayleigh drop. Each (BS, user) link draws from its own ChaCha stream
/// of `seed`, so the result does not depend on generation order.
pub fn generate_rayleigh(config: &NetworkConfig, seed: u64) -> Result<ChannelRealization> {
    config.validate()?;
    Ok(ChannelRealization {
        config: *config,
        seed: Some(seed),
        h: fading(config, seed),
    })
}

/// Hexagonal-lattice BS positions, center first then ring by ring.
pub fn bs_positions(n_c: usize, inter_site_distance: f64) -> Vec<(f64, f64)> {
    const DIRS: [(i64, i64); 6] = [(1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)];
    let mut axial = vec![(0i64, 0i64)];
    let mut ring = 1i64;
    while axial.len() < n_c {
        let (mut q, mut r) = (DIRS[4].0 * ring, DIRS[4].1 * ring);
        for dir in DIRS {
            for _ in 0..ring {
                axial.push((q, r));
                q += dir.0;
                r += dir.1;
            }
        }
        ring += 1;
    }
    axial
        .into_iter()
        .take(n_c)
        .map(|(q, r)| {
            let (q, r) = (q as f64, r as f64);
            (
                inter_site_distance * (q + 0.5 * r),
                inter_site_distance * r * 3f64.sqrt() / 2.0,
            )
        })
        .collect()
}

/// Distance-attenuated Rayleigh drop: `h = sqrt(P_tx · L₀⁻¹ · d^(−exponent)) · g`.
pub fn generate_pathloss(
    config: &NetworkConfig,
    params: &DropParams,
    seed: u64,
) -> Result<ChannelRealization> {
    config.validate()?;
    params.validate()?;
    let n_users = config.n_users();
    let bs = bs_positions(config.n_c, 2.0 * params.cell_radius_m);
    let users: Vec<(f64, f64)> = (0..n_users)
        .map(|k| {
            let home = bs[config.user_at(k).cell];
            let mut rng = link_rng(seed, u64::MAX - k as u64);
            let (r0, r1) = (params.min_dist_m, params.cell_radius_m);
            let u: f64 = rng.random();
            let radius = (u * (r1 * r1 - r0 * r0) + r0 * r0).sqrt();
            let theta = 2.0 * std::f64::consts::PI * rng.random::<f64>();
            (home.0 + radius * theta.cos(), home.1 + radius * theta.sin())
        })
        .collect();
    let p_tx = 10f64.powf((params.tx_power_dbm - params.reference_loss_db) / 10.0);
    let mut h = fading(config, seed);
    for (i, &(bx, by)) in bs.iter().enumerate() {
        for (k, &(ux, uy)) in users.iter().enumerate() {
            let d = ((ux - bx).powi(2) + (uy - by).powi(2)).sqrt().max(params.min_dist_m);
            let amp = (p_tx * d.powf(-params.pathloss_exponent)).sqrt();
            let v = &mut h[i * n_users + k];
            *v = v.scale_real(amp);
        }
    }
    Ok(ChannelRealization { config: *config, seed: Some(seed), h })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> NetworkConfig {
        NetworkConfig::new(4, 7, 1, 1.0).unwrap()
    }

    #[test]
    fn seed_determinism() {
        let a = generate_rayleigh(&cfg(), 42).unwrap();
        let b = generate_rayleigh(&cfg(), 42).unwrap();
        assert_eq!(a, b);
        let c = generate_rayleigh(&cfg(), 43).unwrap();
        assert_ne!(a, c);
        let p = generate_pathloss(&cfg(), &DropParams::default(), 9).unwrap();
        assert_eq!(p, generate_pathloss(&cfg(), &DropParams::default(), 9).unwrap());
    }

    #[test]
    fn local_view_is_projection() {
        let r = generate_rayleigh(&cfg(), 5).unwrap();
        for i in 0..7 {
            let csi = r.local_csi(i).unwrap();
            assert_eq!(csi.bs_index(), i);
            assert_eq!(csi.rows().len(), 7);
            for u in r.config().users() {
                assert_eq!(csi.channel(u), r.channel(i, u));
            }
        }
        assert_eq!(r, generate_rayleigh(&cfg(), 5).unwrap());
        assert!(matches!(r.local_csi(7), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn config_validation() {
        assert!(NetworkConfig::new(1, 3, 1, 1.0).is_err());
        assert!(NetworkConfig::new(2, 3, 1, 0.0).is_err());
        assert!(NetworkConfig::new(2, 3, 0, 1.0).is_err());
        assert!(NetworkConfig::new(4, 4, 1, 1.0).unwrap().require_selection_scheme().is_err());
        assert!(NetworkConfig::new(3, 4, 1, 1.0).unwrap().require_selection_scheme().is_ok());
        let c = NetworkConfig::from_snr_db(2, 3, 1, 20.0).unwrap();
        assert!((c.n0 - 0.01).abs() < 1e-15);
        assert!((c.snr_db() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let c = NetworkConfig::new(2, 3, 2, 0.5).unwrap();
        let r = generate_rayleigh(&c, 11).unwrap();
        let text = r.to_json().unwrap();
        assert_eq!(ChannelRealization::from_json(&text).unwrap(), r);
        assert!(ChannelRealization::from_json(r#"{"config":{"n_t":2,"n_c":1,"n0":1.0},"seed":null,"h":[[1,0]]}"#).is_err());
    }

    #[test]
    fn hex_layout_spacing() {
        let p = bs_positions(7, 80.0);
        assert_eq!(p[0], (0.0, 0.0));
        for q in &p[1..] {
            let d = (q.0 * q.0 + q.1 * q.1).sqrt();
            assert!((d - 80.0).abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_geometry() {
        let bad = DropParams { min_dist_m: 50.0, ..DropParams::default() };
        assert!(generate_pathloss(&cfg(), &bad, 1).is_err());
    }
}
