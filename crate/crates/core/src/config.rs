//! Run configuration as flat `dotted.key = value` text.
//!
//! Lines starting with `#` are comments. Every key has a default, so an empty
//! file is a complete configuration. One master `seed` feeds every module
//! through [`derive_seed`]:
//!
//! ```text
//! module_seed = splitmix64(master + stream * 0x9E3779B97F4A7C15)
//! ```
//!
//! with stream 1 for synthetic fixtures, 2 for the colony and 3 for
//! evolution.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::colony::{default_ants, default_side, ColonyConfig};
use crate::error::{Error, Result};
use crate::lgp::{EvolutionConfig, Opcode};
use crate::mining::Column;
use crate::swarm::{AntParams, VoteRule};

pub const STREAM_SYNTH: u64 = 1;
pub const STREAM_COLONY: u64 = 2;
pub const STREAM_EVOLUTION: u64 = 3;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColonySettings {
    /// `None` sizes the grid from the item count.
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub n_ants: Option<usize>,
    pub t_max: u64,
    pub snapshot_every: Option<u64>,
    pub entropy_block: usize,
    pub link_radius: usize,
    pub conservation_every: u64,
    pub params: AntParams,
}

impl Default for ColonySettings {
    fn default() -> Self {
        Self {
            width: None,
            height: None,
            n_ants: None,
            t_max: 1_000_000,
            snapshot_every: None,
            entropy_block: 3,
            link_radius: 1,
            conservation_every: 10_000,
            params: AntParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiningSettings {
    pub cluster_columns: Vec<Column>,
    pub horizon: usize,
    pub train_fraction: f64,
    /// Tail of the training period held out for model selection.
    pub validation_fraction: f64,
    pub use_clusters: bool,
}

impl Default for MiningSettings {
    fn default() -> Self {
        Self {
            cluster_columns: vec![Column::Requests, Column::Bytes],
            horizon: 1,
            train_fraction: 0.8,
            validation_fraction: 0.1,
            use_clusters: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[derive(Default)]
pub struct RunConfig {
    pub seed: u64,
    pub colony: ColonySettings,
    pub evolution: EvolutionConfig,
    pub mining: MiningSettings,
}


fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse `{value}`")))
}

/// `0` or `auto` disables an optional value.
fn parse_opt<T: FromStr + PartialEq + Default>(key: &str, value: &str) -> Result<Option<T>> {
    if value == "auto" || value == "off" {
        return Ok(None);
    }
    let v: T = parse(key, value)?;
    Ok((v != T::default()).then_some(v))
}

fn opt_str<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_else(|| "auto".into())
}

fn list<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let c = &mut self.colony;
        let p = &mut c.params;
        let e = &mut self.evolution;
        let m = &mut self.mining;
        match key {
            "seed" => self.seed = parse(key, v)?,
            "colony.width" => c.width = parse_opt(key, v)?,
            "colony.height" => c.height = parse_opt(key, v)?,
            "colony.n_ants" => c.n_ants = if v == "auto" { None } else { Some(parse(key, v)?) },
            "colony.t_max" => c.t_max = parse(key, v)?,
            "colony.snapshot_every" => c.snapshot_every = parse_opt(key, v)?,
            "colony.entropy_block" => c.entropy_block = parse(key, v)?,
            "colony.link_radius" => c.link_radius = parse(key, v)?,
            "colony.conservation_every" => c.conservation_every = parse(key, v)?,
            "colony.beta" => p.beta = parse(key, v)?,
            "colony.delta" => p.delta = parse(key, v)?,
            "colony.eta" => p.eta = parse(key, v)?,
            "colony.evaporation" => p.evaporation = parse(key, v)?,
            "colony.a" => p.a = parse(key, v)?,
            "colony.k1" => p.k1 = parse(key, v)?,
            "colony.k2" => p.k2 = parse(key, v)?,
            "colony.theta_items" => p.theta_items = parse(key, v)?,
            "colony.resp_exponent" => p.resp_exponent = parse(key, v)?,
            "colony.d_max" => p.d_max = parse(key, v)?,
            "colony.dir_weights" => {
                let w: Vec<f64> = v.split(',').map(|s| parse(key, s.trim())).collect::<Result<_>>()?;
                p.dir_weights = w
                    .try_into()
                    .map_err(|_| Error::Config(format!("{key}: expected 5 weights")))?;
            }
            "colony.vote_rule" => {
                p.vote_rule = match v {
                    "at_least_half" => VoteRule::AtLeastHalf,
                    "more_than_half" => VoteRule::MoreThanHalf,
                    _ => return Err(Error::Config(format!("{key}: unknown rule `{v}`"))),
                }
            }
            "evolution.population_size" => e.population_size = parse(key, v)?,
            "evolution.tournament_size" => e.tournament_size = parse(key, v)?,
            "evolution.max_tournaments" => e.max_tournaments = parse(key, v)?,
            "evolution.mutation_freq" => e.mutation_freq = parse(key, v)?,
            "evolution.crossover_freq" => e.crossover_freq = parse(key, v)?,
            "evolution.n_demes" => e.n_demes = parse(key, v)?,
            "evolution.max_size" => e.max_size = parse(key, v)?,
            "evolution.min_init" => e.min_init = parse(key, v)?,
            "evolution.max_init" => e.max_init = parse(key, v)?,
            "evolution.subset_size" => e.subset_size = parse(key, v)?,
            "evolution.n_calc_registers" => e.n_calc_registers = parse(key, v)?,
            "evolution.n_constants" => e.n_constants = parse(key, v)?,
            "evolution.constant_min" => e.constant_range.0 = parse(key, v)?,
            "evolution.constant_max" => e.constant_range.1 = parse(key, v)?,
            "evolution.constant_sigma" => e.constant_sigma = parse(key, v)?,
            "evolution.opcodes" => {
                e.opcodes = v
                    .split(',')
                    .map(|s| s.trim().parse::<Opcode>().map_err(|err| Error::Config(format!("{key}: {err}"))))
                    .collect::<Result<_>>()?
            }
            "evolution.migration_interval" => e.migration_interval = parse(key, v)?,
            "evolution.migration_count" => e.migration_count = parse(key, v)?,
            "evolution.checkpoint_interval" => e.checkpoint_interval = parse(key, v)?,
            "mining.cluster_columns" => {
                m.cluster_columns = v.split(',').map(|s| s.trim().parse()).collect::<Result<_>>()?
            }
            "mining.horizon" => m.horizon = parse(key, v)?,
            "mining.train_fraction" => m.train_fraction = parse(key, v)?,
            "mining.validation_fraction" => m.validation_fraction = parse(key, v)?,
            "mining.use_clusters" => m.use_clusters = parse(key, v)?,
            _ => return Err(Error::Config(format!("unknown configuration key `{key}`"))),
        }
        Ok(())
    }

    /// Canonical dump; [`RunConfig::parse`] reads it back to an equal value.
    pub fn to_text(&self) -> String {
        let c = &self.colony;
        let p = &c.params;
        let e = &self.evolution;
        let m = &self.mining;
        let entries: Vec<(&str, String)> = vec![
            ("seed", self.seed.to_string()),
            ("colony.width", opt_str(&c.width)),
            ("colony.height", opt_str(&c.height)),
            ("colony.n_ants", opt_str(&c.n_ants)),
            ("colony.t_max", c.t_max.to_string()),
            ("colony.snapshot_every", c.snapshot_every.map_or("off".into(), |s| s.to_string())),
            ("colony.entropy_block", c.entropy_block.to_string()),
            ("colony.link_radius", c.link_radius.to_string()),
            ("colony.conservation_every", c.conservation_every.to_string()),
            ("colony.beta", p.beta.to_string()),
            ("colony.delta", p.delta.to_string()),
            ("colony.eta", p.eta.to_string()),
            ("colony.evaporation", p.evaporation.to_string()),
            ("colony.a", p.a.to_string()),
            ("colony.k1", p.k1.to_string()),
            ("colony.k2", p.k2.to_string()),
            ("colony.theta_items", p.theta_items.to_string()),
            ("colony.resp_exponent", p.resp_exponent.to_string()),
            ("colony.d_max", p.d_max.to_string()),
            ("colony.dir_weights", list(&p.dir_weights)),
            (
                "colony.vote_rule",
                match p.vote_rule {
                    VoteRule::AtLeastHalf => "at_least_half".into(),
                    VoteRule::MoreThanHalf => "more_than_half".into(),
                },
            ),
            ("evolution.population_size", e.population_size.to_string()),
            ("evolution.tournament_size", e.tournament_size.to_string()),
            ("evolution.max_tournaments", e.max_tournaments.to_string()),
            ("evolution.mutation_freq", e.mutation_freq.to_string()),
            ("evolution.crossover_freq", e.crossover_freq.to_string()),
            ("evolution.n_demes", e.n_demes.to_string()),
            ("evolution.max_size", e.max_size.to_string()),
            ("evolution.min_init", e.min_init.to_string()),
            ("evolution.max_init", e.max_init.to_string()),
            ("evolution.subset_size", e.subset_size.to_string()),
            ("evolution.n_calc_registers", e.n_calc_registers.to_string()),
            ("evolution.n_constants", e.n_constants.to_string()),
            ("evolution.constant_min", e.constant_range.0.to_string()),
            ("evolution.constant_max", e.constant_range.1.to_string()),
            ("evolution.constant_sigma", e.constant_sigma.to_string()),
            (
                "evolution.opcodes",
                e.opcodes.iter().map(|o| o.mnemonic()).collect::<Vec<_>>().join(","),
            ),
            ("evolution.migration_interval", e.migration_interval.to_string()),
            ("evolution.migration_count", e.migration_count.to_string()),
            ("evolution.checkpoint_interval", e.checkpoint_interval.to_string()),
            ("mining.cluster_columns", list(&m.cluster_columns)),
            ("mining.horizon", m.horizon.to_string()),
            ("mining.train_fraction", m.train_fraction.to_string()),
            ("mining.validation_fraction", m.validation_fraction.to_string()),
            ("mining.use_clusters", m.use_clusters.to_string()),
        ];
        let mut out = String::new();
        for (k, v) in entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// First 16 hex digits of the SHA-256 of the canonical dump.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.to_text().as_bytes());
        hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn colony_config(&self, n_items: usize) -> ColonyConfig {
        let side = default_side(n_items);
        let width = self.colony.width.unwrap_or(side);
        let height = self.colony.height.unwrap_or(side);
        ColonyConfig {
            width,
            height,
            n_ants: self.colony.n_ants.unwrap_or_else(|| default_ants(width * height)),
            t_max: self.colony.t_max,
            params: self.colony.params.clone(),
            seed: derive_seed(self.seed, STREAM_COLONY),
            snapshot_every: self.colony.snapshot_every,
            snapshot_at: Vec::new(),
            entropy_block: self.colony.entropy_block,
            conservation_every: self.colony.conservation_every,
        }
    }

    pub fn evolution_config(&self) -> EvolutionConfig {
        EvolutionConfig {
            seed: derive_seed(self.seed, STREAM_EVOLUTION),
            ..self.evolution.clone()
        }
    }

    pub fn synth_seed(&self) -> u64 {
        derive_seed(self.seed, STREAM_SYNTH)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_carry_published_constants() {
        let c = RunConfig::default();
        let p = &c.colony.params;
        assert_eq!((p.k1, p.k2, p.evaporation, p.eta, p.a, p.beta, p.delta), (0.1, 0.3, 0.015, 0.07, 400.0, 3.5, 0.2));
        assert_eq!(c.colony.t_max, 1_000_000);
        let e = &c.evolution;
        assert_eq!((e.population_size, e.tournament_size, e.max_tournaments, e.n_demes, e.max_size, e.subset_size), (500, 4, 120_000, 10, 512, 100));
        assert_eq!((e.mutation_freq, e.crossover_freq), (0.9, 0.8));
    }

    #[test]
    fn dump_round_trips() {
        let mut c = RunConfig::default();
        c.seed = 42;
        c.colony.width = Some(25);
        c.colony.snapshot_every = Some(100);
        c.evolution.opcodes = Opcode::ALL.to_vec();
        c.mining.use_clusters = false;
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
        assert_eq!(RunConfig::parse(&RunConfig::default().to_text()).unwrap(), RunConfig::default());
    }

    #[test]
    fn parse_errors() {
        assert!(RunConfig::parse("colony.bogus = 1").is_err());
        assert!(RunConfig::parse("colony.t_max = ten").is_err());
        assert!(RunConfig::parse("just text").is_err());
        assert!(RunConfig::parse("colony.dir_weights = 1,2").is_err());
        let c = RunConfig::parse("# comment\n\ncolony.t_max=1000000\nseed = 7\n").unwrap();
        assert_eq!(c.seed, 7);
    }

    #[test]
    fn seeds_split_per_stream() {
        let a = derive_seed(1, STREAM_COLONY);
        assert_ne!(a, derive_seed(1, STREAM_EVOLUTION));
        assert_ne!(a, derive_seed(2, STREAM_COLONY));
        assert_eq!(a, derive_seed(1, STREAM_COLONY));
        // Reference value of splitmix64 for input 0.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
    }

    #[test]
    fn digest_tracks_config() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.seed = 1;
        assert_eq!(a.digest().len(), 16);
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn colony_sizing() {
        let c = RunConfig::default().colony_config(800);
        assert_eq!((c.width, c.height, c.n_ants), (57, 57, 75));
    }
}
