//! TOML run configuration.
//!
//! Every key is optional. An empty document yields the default scenario:
//! ten devices, the four-server roster, four enhancement algorithms,
//! `ς = 0.5`, `L_max = 4 s`, `W = 5` and 20 Mbps links.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camq::{self, QualityParams};
use crate::sched::{GaConfig, DEFAULT_ORACLE_LIMIT};
use crate::sim::{SchedulerChoice, SimSettings, SynthSpec};
use crate::sysmodel::{
    self, default_servers, AlgorithmKind, EdgeServer, EnhancementProfile, ModelConstants, SystemModel,
    DEFAULT_ALGORITHMS, DEFAULT_SERVICE_SHARE,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config: {0}")]
    Emit(#[from] toml::ser::Error),
    #[error("config: `{field}` = {value} violates bound {bound}")]
    Range { field: String, value: String, bound: &'static str },
    #[error("config: {0}")]
    Invalid(String),
}

fn range(field: impl Into<String>, value: impl ToString, bound: &'static str) -> ConfigError {
    ConfigError::Range {
        field: field.into(),
        value: value.to_string(),
        bound,
    }
}

fn non_negative(field: impl Into<String>, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(range(field, v, ">= 0 and finite"))
    }
}

fn positive(field: impl Into<String>, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(range(field, v, "> 0 and finite"))
    }
}

fn unit(field: impl Into<String>, v: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(range(field, v, "in [0, 1]"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub devices: usize,
    pub latency_weight: f64,
    pub max_latency_s: f64,
    pub overhead_s: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let c = ModelConstants::default();
        Self {
            devices: sysmodel::DEFAULT_DEVICES,
            latency_weight: c.latency_weight,
            max_latency_s: c.max_latency_s,
            overhead_s: c.overhead_s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QualitySection {
    pub threshold: f64,
    pub window: usize,
    pub denom_floor: f64,
    pub q_cap: f64,
    pub default_accuracy: f64,
}

impl Default for QualitySection {
    fn default() -> Self {
        let p = QualityParams::default();
        Self {
            threshold: camq::DEFAULT_THRESHOLD,
            window: p.window,
            denom_floor: p.denom_floor,
            q_cap: p.q_cap,
            default_accuracy: p.default_accuracy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaSection {
    pub population: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub penalty_capacity: f64,
    pub penalty_latency: f64,
}

impl Default for GaSection {
    fn default() -> Self {
        let g = GaConfig::default();
        Self {
            population: g.population,
            generations: g.generations,
            crossover_prob: g.crossover_prob,
            mutation_prob: g.mutation_prob,
            penalty_capacity: g.penalty_capacity,
            penalty_latency: g.penalty_latency,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServerEntry {
    pub name: String,
    #[serde(default)]
    pub gpu_capacity: f64,
    #[serde(default)]
    pub cpu_capacity: f64,
}

/// A scalar broadcast to every server, or one value per server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerServer {
    All(f64),
    Each(Vec<f64>),
}

impl PerServer {
    fn expand(&self, field: &str, servers: usize) -> Result<Vec<f64>, ConfigError> {
        match self {
            PerServer::All(v) => Ok(vec![*v; servers]),
            PerServer::Each(v) if v.len() == servers => Ok(v.clone()),
            PerServer::Each(v) => Err(ConfigError::Invalid(format!(
                "`{field}` has {} entries for {servers} servers",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmEntry {
    pub name: String,
    pub kind: AlgorithmKind,
    /// Compute units per bit.
    pub demand: PerServer,
    /// Defaults to a quarter of the matching pool on each server.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub service_rate: Option<PerServer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSection {
    pub slots: usize,
    pub datasize_bits: [f64; 2],
    pub bandwidth_bps: [f64; 2],
    pub cam_rows: usize,
    pub cam_cols: usize,
    pub lowlight_peak: f64,
    pub drift: f64,
    pub cam_noise: f64,
    /// One per algorithm; the default offsets repeat when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offsets: Option<Vec<f64>>,
    pub enhance_noise: f64,
    pub accuracy_base: f64,
    pub accuracy_gain: f64,
    pub accuracy_noise: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        let s = SynthSpec::default();
        Self {
            slots: s.slots,
            datasize_bits: s.datasize_bits,
            bandwidth_bps: s.bandwidth_bps,
            cam_rows: s.cam_rows,
            cam_cols: s.cam_cols,
            lowlight_peak: s.lowlight_peak,
            drift: s.drift,
            cam_noise: s.cam_noise,
            offsets: None,
            enhance_noise: s.enhance_noise,
            accuracy_base: s.accuracy_base,
            accuracy_gain: s.accuracy_gain,
            accuracy_noise: s.accuracy_noise,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub scheduler: SchedulerChoice,
    pub oracle_limit: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub model: ModelSection,
    pub quality: QualitySection,
    pub ga: GaSection,
    pub synth: SynthSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub servers: Option<Vec<ServerEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub algorithms: Option<Vec<AlgorithmEntry>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            scheduler: SchedulerChoice::Ga,
            oracle_limit: DEFAULT_ORACLE_LIMIT,
            trace: None,
            out: None,
            model: ModelSection::default(),
            quality: QualitySection::default(),
            ga: GaSection::default(),
            synth: SynthSection::default(),
            servers: None,
            algorithms: None,
        }
    }
}

/// Parses and validates a config document, filling every absent key.
///
/// The result is normalized: the server roster, algorithm tables and
/// synthetic offsets are spelled out in full.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RunConfig = toml::from_str(text)?;
    raw.normalize()
}

pub fn emit_config(config: &RunConfig) -> Result<String, ConfigError> {
    Ok(toml::to_string(config)?)
}

impl RunConfig {
    fn normalize(mut self) -> Result<Self, ConfigError> {
        let servers = self.servers.take().unwrap_or_else(|| {
            default_servers()
                .into_iter()
                .map(|s| ServerEntry {
                    name: s.name,
                    gpu_capacity: s.gpu_capacity,
                    cpu_capacity: s.cpu_capacity,
                })
                .collect()
        });
        if servers.is_empty() {
            return Err(ConfigError::Invalid("`servers` must list at least one server".into()));
        }
        for (i, s) in servers.iter().enumerate() {
            non_negative(format!("servers[{i}].gpu_capacity"), s.gpu_capacity)?;
            non_negative(format!("servers[{i}].cpu_capacity"), s.cpu_capacity)?;
            if s.gpu_capacity == 0.0 && s.cpu_capacity == 0.0 {
                return Err(ConfigError::Invalid(format!("server `{}` has no compute capacity", s.name)));
            }
        }
        let n = servers.len();
        let algorithms = self.algorithms.take().unwrap_or_else(|| {
            DEFAULT_ALGORITHMS
                .iter()
                .map(|&(name, kind, demand)| AlgorithmEntry {
                    name: name.to_string(),
                    kind,
                    demand: PerServer::All(demand),
                    service_rate: None,
                })
                .collect()
        });
        let mut resolved = Vec::with_capacity(algorithms.len());
        for (i, a) in algorithms.into_iter().enumerate() {
            let demand = a.demand.expand(&format!("algorithms[{i}].demand"), n)?;
            let rate = match &a.service_rate {
                Some(r) => r.expand(&format!("algorithms[{i}].service_rate"), n)?,
                None => servers
                    .iter()
                    .map(|s| match a.kind.pool() {
                        sysmodel::Pool::Gpu => s.gpu_capacity * DEFAULT_SERVICE_SHARE,
                        sysmodel::Pool::Cpu => s.cpu_capacity * DEFAULT_SERVICE_SHARE,
                    })
                    .collect(),
            };
            for &d in &demand {
                non_negative(format!("algorithms[{i}].demand"), d)?;
            }
            for &r in &rate {
                non_negative(format!("algorithms[{i}].service_rate"), r)?;
            }
            resolved.push(AlgorithmEntry {
                name: a.name,
                kind: a.kind,
                demand: PerServer::Each(demand),
                service_rate: Some(PerServer::Each(rate)),
            });
        }
        let k = resolved.len();
        let offsets = match self.synth.offsets.take() {
            Some(o) if o.len() != k => {
                return Err(ConfigError::Invalid(format!(
                    "`synth.offsets` has {} entries for {k} algorithms",
                    o.len()
                )))
            }
            Some(o) => o,
            None => {
                let base = SynthSpec::default().offsets;
                (0..k).map(|i| base[i % base.len()]).collect()
            }
        };
        self.servers = Some(servers);
        self.algorithms = Some(resolved);
        self.synth.offsets = Some(offsets);
        self.check_ranges()?;
        self.model()?;
        self.synth_spec().validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(self)
    }

    fn check_ranges(&self) -> Result<(), ConfigError> {
        if self.model.devices == 0 {
            return Err(range("model.devices", 0, ">= 1"));
        }
        non_negative("model.latency_weight", self.model.latency_weight)?;
        positive("model.max_latency_s", self.model.max_latency_s)?;
        non_negative("model.overhead_s", self.model.overhead_s)?;

        let q = &self.quality;
        non_negative("quality.threshold", q.threshold)?;
        if q.window == 0 {
            return Err(range("quality.window", 0, ">= 1"));
        }
        positive("quality.denom_floor", q.denom_floor)?;
        positive("quality.q_cap", q.q_cap)?;
        unit("quality.default_accuracy", q.default_accuracy)?;

        let g = &self.ga;
        if g.population < 2 {
            return Err(range("ga.population", g.population, ">= 2"));
        }
        if g.generations == 0 {
            return Err(range("ga.generations", 0, ">= 1"));
        }
        unit("ga.crossover_prob", g.crossover_prob)?;
        unit("ga.mutation_prob", g.mutation_prob)?;
        non_negative("ga.penalty_capacity", g.penalty_capacity)?;
        non_negative("ga.penalty_latency", g.penalty_latency)?;

        if self.oracle_limit == 0 {
            return Err(range("oracle_limit", 0, ">= 1"));
        }
        let s = &self.synth;
        if s.cam_rows == 0 {
            return Err(range("synth.cam_rows", 0, ">= 1"));
        }
        if s.cam_cols == 0 {
            return Err(range("synth.cam_cols", 0, ">= 1"));
        }
        for (name, r) in [("synth.datasize_bits", s.datasize_bits), ("synth.bandwidth_bps", s.bandwidth_bps)] {
            non_negative(format!("{name}[0]"), r[0])?;
            non_negative(format!("{name}[1]"), r[1])?;
            if r[0] > r[1] {
                return Err(range(name, format!("[{}, {}]", r[0], r[1]), "lower <= upper"));
            }
        }
        non_negative("synth.lowlight_peak", s.lowlight_peak)?;
        non_negative("synth.drift", s.drift)?;
        non_negative("synth.cam_noise", s.cam_noise)?;
        non_negative("synth.enhance_noise", s.enhance_noise)?;
        unit("synth.accuracy_base", s.accuracy_base)?;
        non_negative("synth.accuracy_noise", s.accuracy_noise)?;
        Ok(())
    }

    pub fn model(&self) -> Result<SystemModel, ConfigError> {
        let servers: Vec<EdgeServer> = self
            .servers
            .as_deref()
            .unwrap_or_default()
            .iter()
            .map(|s| EdgeServer::new(s.name.clone(), s.gpu_capacity, s.cpu_capacity))
            .collect();
        let n = servers.len();
        let profiles = self
            .algorithms
            .as_deref()
            .unwrap_or_default()
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let rate = a
                    .service_rate
                    .as_ref()
                    .ok_or_else(|| ConfigError::Invalid(format!("algorithms[{i}].service_rate unresolved")))?;
                Ok(EnhancementProfile {
                    name: a.name.clone(),
                    kind: a.kind,
                    demand: a.demand.expand(&format!("algorithms[{i}].demand"), n)?,
                    service_rate: rate.expand(&format!("algorithms[{i}].service_rate"), n)?,
                })
            })
            .collect::<Result<Vec<_>, ConfigError>>()?;
        SystemModel::new(
            self.model.devices,
            servers,
            profiles,
            ModelConstants {
                overhead_s: self.model.overhead_s,
                latency_weight: self.model.latency_weight,
                max_latency_s: self.model.max_latency_s,
            },
        )
        .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn ga_config(&self) -> GaConfig {
        let g = &self.ga;
        GaConfig {
            population: g.population,
            generations: g.generations,
            crossover_prob: g.crossover_prob,
            mutation_prob: g.mutation_prob,
            penalty_capacity: g.penalty_capacity,
            penalty_latency: g.penalty_latency,
            seed: self.seed,
        }
    }

    pub fn quality_params(&self) -> QualityParams {
        let q = &self.quality;
        QualityParams {
            window: q.window,
            default_accuracy: q.default_accuracy,
            denom_floor: q.denom_floor,
            q_cap: q.q_cap,
        }
    }

    pub fn settings(&self) -> Result<SimSettings, ConfigError> {
        Ok(SimSettings {
            model: self.model()?,
            quality: self.quality_params(),
            threshold: self.quality.threshold,
            ga: self.ga_config(),
            scheduler: self.scheduler,
            oracle_limit: self.oracle_limit,
        })
    }

    pub fn synth_spec(&self) -> SynthSpec {
        let s = &self.synth;
        SynthSpec {
            devices: self.model.devices,
            servers: self.servers.as_ref().map_or(0, Vec::len),
            algorithms: self.algorithms.as_ref().map_or(0, Vec::len),
            slots: s.slots,
            datasize_bits: s.datasize_bits,
            bandwidth_bps: s.bandwidth_bps,
            cam_rows: s.cam_rows,
            cam_cols: s.cam_cols,
            lowlight_peak: s.lowlight_peak,
            drift: s.drift,
            cam_noise: s.cam_noise,
            offsets: s.offsets.clone().unwrap_or_default(),
            enhance_noise: s.enhance_noise,
            accuracy_base: s.accuracy_base,
            accuracy_gain: s.accuracy_gain,
            accuracy_noise: s.accuracy_noise,
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_default_scenario() {
        let c = parse_config("").unwrap();
        let model = c.model().unwrap();
        assert_eq!(model.devices, 10);
        assert_eq!(model.num_servers(), 4);
        assert_eq!(model.num_algorithms(), 4);
        assert_eq!(model.constants.latency_weight, 0.5);
        assert_eq!(model.constants.max_latency_s, 4.0);
        assert_eq!(c.quality.window, 5);
        assert_eq!(c.synth.bandwidth_bps, [20e6, 20e6]);
        assert_eq!(model, SystemModel::default());
        assert_eq!(c.ga_config(), GaConfig::default());
        assert_eq!(c.scheduler, SchedulerChoice::Ga);
    }

    #[test]
    fn negative_latency_weight_is_a_range_error() {
        let err = parse_config("[model]\nlatency_weight = -1.0\n").unwrap_err();
        match err {
            ConfigError::Range { field, bound, .. } => {
                assert_eq!(field, "model.latency_weight");
                assert_eq!(bound, ">= 0 and finite");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_config("[ga]\npopulaton = 10\n").unwrap_err();
        assert!(err.to_string().contains("populaton"), "{err}");
        let err = parse_config("colour = 1\n").unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
    }

    #[test]
    fn named_bounds() {
        for (doc, field) in [
            ("[ga]\npopulation = 1\n", "ga.population"),
            ("[ga]\nmutation_prob = 1.5\n", "ga.mutation_prob"),
            ("[quality]\nwindow = 0\n", "quality.window"),
            ("[quality]\ndenom_floor = 0.0\n", "quality.denom_floor"),
            ("[model]\ndevices = 0\n", "model.devices"),
            ("[model]\nmax_latency_s = 0.0\n", "model.max_latency_s"),
            ("oracle_limit = 0\n", "oracle_limit"),
            ("[synth]\ndatasize_bits = [5.0, 1.0]\n", "synth.datasize_bits"),
        ] {
            match parse_config(doc) {
                Err(ConfigError::Range { field: f, .. }) => assert_eq!(f, field, "{doc}"),
                other => panic!("{doc}: {other:?}"),
            }
        }
    }

    #[test]
    fn broadcast_and_explicit_tables() {
        let doc = r#"
            [[servers]]
            name = "a"
            gpu_capacity = 8.0
            cpu_capacity = 4.0

            [[servers]]
            name = "b"
            cpu_capacity = 2.0

            [[algorithms]]
            name = "x"
            kind = "theory_based"
            demand = 3.0

            [[algorithms]]
            name = "y"
            kind = "learning_based"
            demand = [1.0, 2.0]
            service_rate = [4.0, 0.0]
        "#;
        let c = parse_config(doc).unwrap();
        let m = c.model().unwrap();
        assert_eq!(m.profiles[0].demand, vec![3.0, 3.0]);
        assert_eq!(m.profiles[0].service_rate, vec![1.0, 0.5]);
        assert_eq!(m.profiles[1].service_rate, vec![4.0, 0.0]);
        assert_eq!(c.synth.offsets, Some(vec![0.05, -0.05]));

        let bad = doc.replace("[1.0, 2.0]", "[1.0]");
        assert!(matches!(parse_config(&bad), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn round_trip() {
        for doc in [
            "",
            "seed = 9\nscheduler = \"oracle\"\n[ga]\npopulation = 20\n",
            "[[servers]]\nname = \"solo\"\ncpu_capacity = 1e9\n[[algorithms]]\nname = \"he\"\nkind = \"theory_based\"\ndemand = 20.0\n",
        ] {
            let parsed = parse_config(doc).unwrap();
            let emitted = emit_config(&parsed).unwrap();
            let reparsed = parse_config(&emitted).unwrap();
            assert_eq!(parsed, reparsed);
            assert_eq!(emit_config(&reparsed).unwrap(), emitted);
        }
    }

    #[test]
    fn seed_feeds_ga_and_synth() {
        let c = parse_config("seed = 77\n").unwrap();
        assert_eq!(c.ga_config().seed, 77);
        assert_eq!(c.synth_spec().seed, 77);
        assert_eq!(c.synth_spec().offsets, SynthSpec::default().offsets);
    }
}
