use serde::{Deserialize, Serialize};

use crate::baselines::{GlobalConfig, WmmseConfig};
use crate::channel::{DropParams, NetworkConfig};
use crate::{Error, Result};

pub const SPEC_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// I.i.d. unit fading; sweep points are SNR in dB.
    Rayleigh,
    /// Hexagonal small cells; sweep points are transmit powers in dBm.
    Pathloss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkShape {
    pub n_t: usize,
    pub n_c: usize,
    #[serde(default = "one")]
    pub n_u: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathlossSpec {
    pub cell_radius_m: f64,
    pub pathloss_exponent: f64,
    pub min_dist_m: f64,
    pub reference_loss_db: f64,
    pub noise_dbm: f64,
}

impl Default for PathlossSpec {
    fn default() -> Self {
        let d = DropParams::default();
        Self {
            cell_radius_m: d.cell_radius_m,
            pathloss_exponent: d.pathloss_exponent,
            min_dist_m: d.min_dist_m,
            reference_loss_db: d.reference_loss_db,
            noise_dbm: -95.0,
        }
    }
}

impl PathlossSpec {
    pub fn drop_params(&self, tx_power_dbm: f64) -> DropParams {
        DropParams {
            cell_radius_m: self.cell_radius_m,
            pathloss_exponent: self.pathloss_exponent,
            min_dist_m: self.min_dist_m,
            tx_power_dbm,
            reference_loss_db: self.reference_loss_db,
        }
    }

    pub fn n0_mw(&self) -> f64 {
        10f64.powf(self.noise_dbm / 10.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    #[default]
    Central,
    Decentral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SchemeSpec {
    MaxSnr {
        label: Option<String>,
    },
    MinGi {
        label: Option<String>,
    },
    MaxSlnr {
        label: Option<String>,
    },
    Random {
        label: Option<String>,
    },
    Zf {
        label: Option<String>,
    },
    Wmmse {
        label: Option<String>,
        #[serde(default = "default_kappa")]
        kappa: usize,
        /// Bits per exchanged scalar, for the accounting column only.
        n_f: Option<u64>,
    },
    Global {
        label: Option<String>,
        #[serde(default = "default_restarts")]
        restarts: usize,
        #[serde(default = "default_steps")]
        steps: usize,
        n_f: Option<u64>,
    },
    /// The selection scheme; `n_f` absent means unquantized exchange.
    Proposed {
        label: Option<String>,
        alphas: Vec<usize>,
        n_f: Option<u32>,
        #[serde(default)]
        protocol: ProtocolKind,
    },
    /// Chosen `α`, but a uniformly random `F` of that size.
    ProposedRandom1 {
        label: Option<String>,
        alphas: Vec<usize>,
    },
    /// Uniformly random `α ∈ A` and `F`.
    ProposedRandom2 {
        label: Option<String>,
        alphas: Vec<usize>,
    },
}

fn default_kappa() -> usize {
    WmmseConfig::default().max_iterations
}

fn default_restarts() -> usize {
    GlobalConfig::default().restarts
}

fn default_steps() -> usize {
    GlobalConfig::default().steps
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

impl SchemeSpec {
    pub fn label(&self) -> String {
        use SchemeSpec::*;
        let given = match self {
            MaxSnr { label } | MinGi { label } | MaxSlnr { label } | Random { label } | Zf { label } => label,
            Wmmse { label, .. } | Global { label, .. } | Proposed { label, .. } => label,
            ProposedRandom1 { label, .. } | ProposedRandom2 { label, .. } => label,
        };
        if let Some(l) = given {
            return l.clone();
        }
        match self {
            MaxSnr { .. } => "max_snr".into(),
            MinGi { .. } => "min_gi".into(),
            MaxSlnr { .. } => "max_slnr".into(),
            Random { .. } => "random".into(),
            Zf { .. } => "zf".into(),
            Wmmse { kappa, .. } => format!("wmmse(kappa={kappa})"),
            Global { .. } => "global".into(),
            Proposed { alphas, n_f, protocol, .. } => {
                let q = n_f.map_or("unquantized".to_string(), |b| format!("n_f={b}"));
                let p = if *protocol == ProtocolKind::Decentral { ",decentral" } else { "" };
                format!("proposed(A={};{q}{p})", join(alphas))
            }
            ProposedRandom1 { alphas, .. } => format!("proposed_random1(A={})", join(alphas)),
            ProposedRandom2 { alphas, .. } => format!("proposed_random2(A={})", join(alphas)),
        }
    }

    /// Parameter checks that do not depend on the network.
    fn validate(&self) -> Result<()> {
        match self {
            SchemeSpec::Wmmse { kappa: 0, .. } => Err(Error::InvalidConfig("wmmse kappa must be ≥ 1".into())),
            SchemeSpec::Global { steps: 0, .. } => Err(Error::InvalidConfig("global steps must be ≥ 1".into())),
            SchemeSpec::Proposed { alphas, .. }
            | SchemeSpec::ProposedRandom1 { alphas, .. }
            | SchemeSpec::ProposedRandom2 { alphas, .. }
                if alphas.is_empty() =>
            {
                Err(Error::InvalidConfig(format!("{}: empty alpha set", self.label())))
            }
            SchemeSpec::Proposed { n_f: Some(b), .. } if *b == 0 || *b > crate::quantization::MAX_BITS => {
                Err(Error::InvalidConfig(format!("{}: n_f outside 1..=12", self.label())))
            }
            _ => Ok(()),
        }
    }
}

/// A complete, versioned experiment description (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub version: u32,
    #[serde(default)]
    pub name: String,
    pub scenario: Scenario,
    pub seed: u64,
    pub drops: usize,
    pub network: NetworkShape,
    /// SNR points (dB) for `rayleigh`, transmit powers (dBm) for `pathloss`.
    pub sweep: Vec<f64>,
    #[serde(default)]
    pub pathloss: Option<PathlossSpec>,
    pub schemes: Vec<SchemeSpec>,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != SPEC_VERSION {
            return Err(Error::InvalidConfig(format!(
                "spec version {} (supported: {SPEC_VERSION})",
                self.version
            )));
        }
        if self.drops == 0 {
            return Err(Error::InvalidConfig("drops must be ≥ 1".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::InvalidConfig("no schemes".into()));
        }
        if self.sweep.is_empty() || self.sweep.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig("sweep must list finite points".into()));
        }
        if self.scenario == Scenario::Rayleigh && self.pathloss.is_some() {
            return Err(Error::InvalidConfig("pathloss parameters in a rayleigh spec".into()));
        }
        self.point_config(0)?;
        for s in &self.schemes {
            s.validate()?;
        }
        Ok(())
    }

    pub fn pathloss_or_default(&self) -> PathlossSpec {
        self.pathloss.unwrap_or_default()
    }

    /// Network configuration (noise level included) at sweep point `i`.
    pub fn point_config(&self, i: usize) -> Result<NetworkConfig> {
        let x = *self
            .sweep
            .get(i)
            .ok_or(Error::IndexOutOfRange { index: i, limit: self.sweep.len() })?;
        let NetworkShape { n_t, n_c, n_u } = self.network;
        match self.scenario {
            Scenario::Rayleigh => NetworkConfig::from_snr_db(n_t, n_c, n_u, x),
            Scenario::Pathloss => NetworkConfig::new(n_t, n_c, n_u, self.pathloss_or_default().n0_mw()),
        }
    }

    /// Transmit SNR in dB at sweep point `i` (before any distance loss).
    pub fn point_snr_db(&self, i: usize) -> f64 {
        match self.scenario {
            Scenario::Rayleigh => self.sweep[i],
            Scenario::Pathloss => self.sweep[i] - self.pathloss_or_default().noise_dbm,
        }
    }
}
