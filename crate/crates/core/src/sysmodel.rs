//! Edge servers, enhancement profiles, and the per-slot latency, utility and
//! constraint arithmetic.
//!
//! Servers are indexed `0..N` here; user-facing output shows them as `1..=N`
//! because index 0 is reserved for the schedule controller. Algorithm 0 is the
//! no-enhancement pseudo-algorithm and profiles cover algorithms `1..=K`.
//!
//! Unreachable servers (zero bandwidth) and incapable servers (zero service
//! rate) produce `f64::INFINITY` latency rather than errors, so a search can
//! still visit them and reject them through the latency bound.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_DEVICES: usize = 10;
pub const DEFAULT_LATENCY_WEIGHT: f64 = 0.5;
pub const DEFAULT_MAX_LATENCY_S: f64 = 4.0;
pub const DEFAULT_OVERHEAD_S: f64 = 0.05;
pub const DEFAULT_BANDWIDTH_BPS: f64 = 20e6;
/// Fraction of a server pool one task reserves when no explicit service rate
/// is configured.
pub const DEFAULT_SERVICE_SHARE: f64 = 0.25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{field} must be non-negative, got {value}")]
    Negative { field: &'static str, value: f64 },
    #[error("{field} must be finite, got {value}")]
    NonFinite { field: &'static str, value: f64 },
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("unknown device {device} (model has {devices})")]
    UnknownDevice { device: usize, devices: usize },
    #[error("unknown server {server} (model has {servers})")]
    UnknownServer { server: usize, servers: usize },
    #[error("unknown algorithm {algorithm} (valid range 0..={algorithms})")]
    UnknownAlgorithm { algorithm: usize, algorithms: usize },
    #[error("slot input does not match model: {0}")]
    InputShape(String),
}

/// Compute pool an algorithm draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pool {
    Gpu,
    Cpu,
}

impl Pool {
    pub const ALL: [Pool; 2] = [Pool::Gpu, Pool::Cpu];

    pub fn as_str(self) -> &'static str {
        match self {
            Pool::Gpu => "gpu",
            Pool::Cpu => "cpu",
        }
    }
}

/// Learning-based algorithms run on GPUs; theory-based ones on CPUs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmKind {
    LearningBased,
    TheoryBased,
}

impl AlgorithmKind {
    pub fn pool(self) -> Pool {
        match self {
            AlgorithmKind::LearningBased => Pool::Gpu,
            AlgorithmKind::TheoryBased => Pool::Cpu,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeServer {
    pub name: String,
    pub gpu_capacity: f64,
    pub cpu_capacity: f64,
}

impl EdgeServer {
    pub fn new(name: impl Into<String>, gpu_capacity: f64, cpu_capacity: f64) -> Self {
        Self {
            name: name.into(),
            gpu_capacity,
            cpu_capacity,
        }
    }

    pub fn capacity(&self, pool: Pool) -> f64 {
        match pool {
            Pool::Gpu => self.gpu_capacity,
            Pool::Cpu => self.cpu_capacity,
        }
    }
}

/// Cost profile of one enhancement algorithm across all servers.
///
/// `demand[n]` is compute units per bit on server `n`; `service_rate[n]` is
/// the compute rate (units/s) the task gets there. A zero rate means the
/// server cannot run the algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct EnhancementProfile {
    pub name: String,
    pub kind: AlgorithmKind,
    pub demand: Vec<f64>,
    pub service_rate: Vec<f64>,
}

impl EnhancementProfile {
    pub fn pool(&self) -> Pool {
        self.kind.pool()
    }

    /// Enhancement latency of `bits` on `server`.
    pub fn latency(&self, server: usize, bits: f64) -> Result<f64, ModelError> {
        non_negative("datasize", bits)?;
        let demand = self.demand[server];
        let rate = self.service_rate[server];
        if rate == 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(demand * bits / rate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConstants {
    /// Schedule plus inference overhead (s).
    pub overhead_s: f64,
    /// Utility weight on latency (quality per second).
    pub latency_weight: f64,
    pub max_latency_s: f64,
}

impl Default for ModelConstants {
    fn default() -> Self {
        Self {
            overhead_s: DEFAULT_OVERHEAD_S,
            latency_weight: DEFAULT_LATENCY_WEIGHT,
            max_latency_s: DEFAULT_MAX_LATENCY_S,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    pub devices: usize,
    pub servers: Vec<EdgeServer>,
    pub profiles: Vec<EnhancementProfile>,
    pub constants: ModelConstants,
}

fn non_negative(field: &'static str, value: f64) -> Result<f64, ModelError> {
    if value.is_nan() {
        return Err(ModelError::NonFinite { field, value });
    }
    if value < 0.0 {
        return Err(ModelError::Negative { field, value });
    }
    Ok(value)
}

fn finite_non_negative(field: &'static str, value: f64) -> Result<f64, ModelError> {
    if !value.is_finite() {
        return Err(ModelError::NonFinite { field, value });
    }
    non_negative(field, value)
}

/// Four-server roster: two GPU+CPU machines and two CPU-only machines.
/// GPU capacity in FLOP/s, CPU capacity in cycles/s.
pub fn default_servers() -> Vec<EdgeServer> {
    vec![
        EdgeServer::new("edge-1", 34.1e12, 3.5e9),
        EdgeServer::new("edge-2", 1.5e12, 854e6),
        EdgeServer::new("edge-3", 0.0, 2e9),
        EdgeServer::new("edge-4", 0.0, 1e9),
    ]
}

/// `(name, kind, demand per bit)` for the four default algorithms.
pub const DEFAULT_ALGORITHMS: [(&str, AlgorithmKind, f64); 4] = [
    ("HE", AlgorithmKind::TheoryBased, 20.0),
    ("LIME", AlgorithmKind::TheoryBased, 150.0),
    ("Zero-DCE", AlgorithmKind::LearningBased, 4.0e5),
    ("EnlightenGAN", AlgorithmKind::LearningBased, 1.2e6),
];

/// Service rate table where each task reserves `share` of the matching pool.
pub fn shared_service_rates(servers: &[EdgeServer], kind: AlgorithmKind, share: f64) -> Vec<f64> {
    servers
        .iter()
        .map(|s| s.capacity(kind.pool()) * share)
        .collect()
}

pub fn default_profiles(servers: &[EdgeServer]) -> Vec<EnhancementProfile> {
    DEFAULT_ALGORITHMS
        .iter()
        .map(|&(name, kind, demand)| EnhancementProfile {
            name: name.to_string(),
            kind,
            demand: vec![demand; servers.len()],
            service_rate: shared_service_rates(servers, kind, DEFAULT_SERVICE_SHARE),
        })
        .collect()
}

impl Default for SystemModel {
    fn default() -> Self {
        let servers = default_servers();
        let profiles = default_profiles(&servers);
        Self {
            devices: DEFAULT_DEVICES,
            servers,
            profiles,
            constants: ModelConstants::default(),
        }
    }
}

impl SystemModel {
    pub fn new(
        devices: usize,
        servers: Vec<EdgeServer>,
        profiles: Vec<EnhancementProfile>,
        constants: ModelConstants,
    ) -> Result<Self, ModelError> {
        let model = Self {
            devices,
            servers,
            profiles,
            constants,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.devices == 0 {
            return Err(ModelError::Invalid("at least one device is required".into()));
        }
        if self.servers.is_empty() {
            return Err(ModelError::Invalid("at least one server is required".into()));
        }
        for server in &self.servers {
            finite_non_negative("gpu_capacity", server.gpu_capacity)?;
            finite_non_negative("cpu_capacity", server.cpu_capacity)?;
            if server.gpu_capacity == 0.0 && server.cpu_capacity == 0.0 {
                return Err(ModelError::Invalid(format!(
                    "server {} has no compute capacity",
                    server.name
                )));
            }
        }
        let n = self.servers.len();
        for profile in &self.profiles {
            if profile.demand.len() != n || profile.service_rate.len() != n {
                return Err(ModelError::Invalid(format!(
                    "algorithm {} needs {n} demand and service-rate entries",
                    profile.name
                )));
            }
            for &d in &profile.demand {
                finite_non_negative("demand", d)?;
            }
            for &s in &profile.service_rate {
                finite_non_negative("service_rate", s)?;
            }
        }
        let c = &self.constants;
        finite_non_negative("overhead_s", c.overhead_s)?;
        finite_non_negative("latency_weight", c.latency_weight)?;
        if !(c.max_latency_s.is_finite() && c.max_latency_s > 0.0) {
            return Err(ModelError::Invalid(format!(
                "max_latency_s must be finite and > 0, got {}",
                c.max_latency_s
            )));
        }
        Ok(())
    }

    pub fn num_servers(&self) -> usize {
        self.servers.len()
    }

    /// Number of enhancing algorithms `K` (algorithm ids run `0..=K`).
    pub fn num_algorithms(&self) -> usize {
        self.profiles.len()
    }

    /// Size of the structurally valid decision space, `(N(K+1))^M`, or `None`
    /// on overflow.
    pub fn decision_space(&self) -> Option<u128> {
        let per_device = (self.num_servers() * (self.num_algorithms() + 1)) as u128;
        per_device.checked_pow(u32::try_from(self.devices).ok()?)
    }

    pub fn profile(&self, algorithm: usize) -> Result<Option<&EnhancementProfile>, ModelError> {
        match algorithm {
            0 => Ok(None),
            k if k <= self.profiles.len() => Ok(Some(&self.profiles[k - 1])),
            _ => Err(ModelError::UnknownAlgorithm {
                algorithm,
                algorithms: self.profiles.len(),
            }),
        }
    }

    fn check_server(&self, server: usize) -> Result<(), ModelError> {
        if server >= self.servers.len() {
            return Err(ModelError::UnknownServer {
                server,
                servers: self.servers.len(),
            });
        }
        Ok(())
    }

    pub fn enhancement_latency(
        &self,
        server: usize,
        algorithm: usize,
        bits: f64,
    ) -> Result<f64, ModelError> {
        self.check_server(server)?;
        match self.profile(algorithm)? {
            None => {
                non_negative("datasize", bits)?;
                Ok(0.0)
            }
            Some(profile) => profile.latency(server, bits),
        }
    }

    /// Rate reserved on `server` by one task of `algorithm`, with its pool.
    pub fn reservation(&self, server: usize, algorithm: usize) -> Result<Option<(Pool, f64)>, ModelError> {
        self.check_server(server)?;
        Ok(self
            .profile(algorithm)?
            .map(|p| (p.pool(), p.service_rate[server])))
    }

    /// Latency of device `device` served by `(server, algorithm)`.
    pub fn pair_latency(
        &self,
        input: &SlotInput,
        device: usize,
        server: usize,
        algorithm: usize,
    ) -> Result<f64, ModelError> {
        if device >= self.devices {
            return Err(ModelError::UnknownDevice {
                device,
                devices: self.devices,
            });
        }
        self.check_server(server)?;
        let bits = input.datasize[device];
        let transmit = transmission_latency(bits, input.bandwidth[device][server])?;
        let enhance = self.enhancement_latency(server, algorithm, bits)?;
        Ok(transmit + enhance + self.constants.overhead_s)
    }
}

/// Per-slot exogenous inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotInput {
    /// Bits per device.
    pub datasize: Vec<f64>,
    /// `bandwidth[m][n]` in bits/s.
    pub bandwidth: Vec<Vec<f64>>,
    /// `quality[m][k]` for `k` in `0..=K`; column 0 is always 0.
    pub quality: Vec<Vec<f64>>,
}

impl SlotInput {
    pub fn validate(&self, model: &SystemModel) -> Result<(), ModelError> {
        let (m, n, k) = (model.devices, model.num_servers(), model.num_algorithms());
        if self.datasize.len() != m || self.bandwidth.len() != m || self.quality.len() != m {
            return Err(ModelError::InputShape(format!("expected {m} devices")));
        }
        for &d in &self.datasize {
            finite_non_negative("datasize", d)?;
        }
        for row in &self.bandwidth {
            if row.len() != n {
                return Err(ModelError::InputShape(format!("expected {n} bandwidth entries per device")));
            }
            for &b in row {
                non_negative("bandwidth", b)?;
            }
        }
        for row in &self.quality {
            if row.len() != k + 1 {
                return Err(ModelError::InputShape(format!(
                    "expected {} quality entries per device",
                    k + 1
                )));
            }
            for &q in row {
                if !q.is_finite() {
                    return Err(ModelError::NonFinite { field: "quality", value: q });
                }
            }
            if row[0] != 0.0 {
                return Err(ModelError::InputShape(
                    "quality of algorithm 0 must be exactly 0".into(),
                ));
            }
        }
        Ok(())
    }
}

/// One device's assignment: a server index and an algorithm id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Gene {
    pub server: usize,
    pub algorithm: usize,
}

impl Gene {
    pub fn new(server: usize, algorithm: usize) -> Self {
        Self { server, algorithm }
    }
}

/// One gene per device, so every device is served by exactly one server and
/// exactly one algorithm.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Decision {
    pub genes: Vec<Gene>,
}

impl Decision {
    pub fn new(genes: Vec<Gene>) -> Self {
        Self { genes }
    }

    pub fn uniform(devices: usize, gene: Gene) -> Self {
        Self {
            genes: vec![gene; devices],
        }
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    /// Checks that every gene refers to an existing server and algorithm.
    pub fn validate(&self, model: &SystemModel) -> Result<(), ModelError> {
        if self.genes.len() != model.devices {
            return Err(ModelError::InputShape(format!(
                "decision covers {} devices, model has {}",
                self.genes.len(),
                model.devices
            )));
        }
        for gene in &self.genes {
            model.check_server(gene.server)?;
            model.profile(gene.algorithm)?;
        }
        Ok(())
    }

    /// One-hot enhancement view `x[m][k]`.
    pub fn enhancement_matrix(&self, algorithms: usize) -> Vec<Vec<u8>> {
        self.genes
            .iter()
            .map(|g| (0..=algorithms).map(|k| u8::from(k == g.algorithm)).collect())
            .collect()
    }

    /// One-hot offloading view `u[m][n]`.
    pub fn offload_matrix(&self, servers: usize) -> Vec<Vec<u8>> {
        self.genes
            .iter()
            .map(|g| (0..servers).map(|n| u8::from(n == g.server)).collect())
            .collect()
    }
}

pub fn transmission_latency(bits: f64, bandwidth: f64) -> Result<f64, ModelError> {
    non_negative("datasize", bits)?;
    non_negative("bandwidth", bandwidth)?;
    if bits == 0.0 {
        return Ok(0.0);
    }
    if bandwidth == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(bits / bandwidth)
}

pub fn device_latency(
    decision: &Decision,
    device: usize,
    input: &SlotInput,
    model: &SystemModel,
) -> Result<f64, ModelError> {
    let gene = decision.genes.get(device).ok_or(ModelError::UnknownDevice {
        device,
        devices: decision.genes.len(),
    })?;
    model.pair_latency(input, device, gene.server, gene.algorithm)
}

/// Quality minus weighted latency; `-inf` for infinite latency.
pub fn device_utility(quality: f64, latency: f64, latency_weight: f64) -> f64 {
    if latency == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    quality - latency_weight * latency
}

/// Reserved rate per server and pool.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PoolLoad {
    pub gpu: f64,
    pub cpu: f64,
}

impl PoolLoad {
    pub fn get(&self, pool: Pool) -> f64 {
        match pool {
            Pool::Gpu => self.gpu,
            Pool::Cpu => self.cpu,
        }
    }

    pub fn add(&mut self, pool: Pool, amount: f64) {
        match pool {
            Pool::Gpu => self.gpu += amount,
            Pool::Cpu => self.cpu += amount,
        }
    }
}

pub fn server_loads(decision: &Decision, model: &SystemModel) -> Result<Vec<PoolLoad>, ModelError> {
    let mut loads = vec![PoolLoad::default(); model.num_servers()];
    for gene in &decision.genes {
        if let Some((pool, rate)) = model.reservation(gene.server, gene.algorithm)? {
            loads[gene.server].add(pool, rate);
        }
    }
    Ok(loads)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityCheck {
    pub server: usize,
    pub pool: Pool,
    pub load: f64,
    pub capacity: f64,
    pub overload: f64,
}

impl CapacityCheck {
    pub fn satisfied(&self) -> bool {
        self.overload == 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatencyCheck {
    pub device: usize,
    pub latency: f64,
    pub excess: f64,
}

impl LatencyCheck {
    pub fn satisfied(&self) -> bool {
        self.excess == 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    /// One entry per `(server, pool)`, servers in index order, GPU first.
    pub capacity: Vec<CapacityCheck>,
    pub latency: Vec<LatencyCheck>,
    pub feasible: bool,
}

impl FeasibilityReport {
    pub fn capacity_ok(&self) -> bool {
        self.capacity.iter().all(CapacityCheck::satisfied)
    }

    pub fn latency_ok(&self) -> bool {
        self.latency.iter().all(LatencyCheck::satisfied)
    }
}

pub fn check_feasibility(
    decision: &Decision,
    input: &SlotInput,
    model: &SystemModel,
) -> Result<FeasibilityReport, ModelError> {
    debug_assert_eq!(decision.genes.len(), model.devices);
    let loads = server_loads(decision, model)?;
    let mut capacity = Vec::with_capacity(loads.len() * 2);
    for (server, load) in loads.iter().enumerate() {
        for pool in Pool::ALL {
            let used = load.get(pool);
            let cap = model.servers[server].capacity(pool);
            capacity.push(CapacityCheck {
                server,
                pool,
                load: used,
                capacity: cap,
                overload: (used - cap).max(0.0),
            });
        }
    }
    let max_latency = model.constants.max_latency_s;
    let mut latency = Vec::with_capacity(model.devices);
    for device in 0..model.devices {
        let l = device_latency(decision, device, input, model)?;
        latency.push(LatencyCheck {
            device,
            latency: l,
            excess: (l - max_latency).max(0.0),
        });
    }
    let feasible = capacity.iter().all(CapacityCheck::satisfied)
        && latency.iter().all(LatencyCheck::satisfied);
    Ok(FeasibilityReport {
        capacity,
        latency,
        feasible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_server_model(gpu: f64, cpu: f64, phi: f64, rate: f64) -> SystemModel {
        SystemModel::new(
            1,
            vec![EdgeServer::new("s", gpu, cpu)],
            vec![EnhancementProfile {
                name: "a".into(),
                kind: AlgorithmKind::LearningBased,
                demand: vec![phi],
                service_rate: vec![rate],
            }],
            ModelConstants {
                overhead_s: 0.2,
                latency_weight: 0.5,
                max_latency_s: 4.0,
            },
        )
        .unwrap()
    }

    #[test]
    fn transmission_examples() {
        assert_eq!(transmission_latency(20e6, 20e6).unwrap(), 1.0);
        assert_eq!(transmission_latency(0.0, 20e6).unwrap(), 0.0);
        assert_eq!(transmission_latency(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(transmission_latency(1.0, 0.0).unwrap(), f64::INFINITY);
        assert!(matches!(
            transmission_latency(-1.0, 1.0),
            Err(ModelError::Negative { field: "datasize", .. })
        ));
        assert!(transmission_latency(1.0, -1.0).is_err());
    }

    #[test]
    fn enhancement_examples() {
        let model = one_server_model(1e10, 1e9, 100.0, 1e9);
        assert_eq!(model.enhancement_latency(0, 0, 1e6).unwrap(), 0.0);
        let l = model.enhancement_latency(0, 1, 1e6).unwrap();
        assert!((l - 0.1).abs() < 1e-12);
        let model = one_server_model(1e10, 1e9, 100.0, 0.0);
        assert_eq!(model.enhancement_latency(0, 1, 1e6).unwrap(), f64::INFINITY);
        assert!(model.enhancement_latency(0, 1, -1.0).is_err());
        assert!(model.enhancement_latency(0, 2, 1.0).is_err());
    }

    #[test]
    fn device_latency_examples() {
        // transmit 1.0 s, enhance 0.5 s, overhead 0.2 s.
        let model = one_server_model(1e10, 1e9, 50.0, 2e9);
        let input = SlotInput {
            datasize: vec![20e6],
            bandwidth: vec![vec![20e6]],
            quality: vec![vec![0.0, 1.0]],
        };
        let d = Decision::uniform(1, Gene::new(0, 1));
        assert!((device_latency(&d, 0, &input, &model).unwrap() - 1.7).abs() < 1e-12);
        let d0 = Decision::uniform(1, Gene::new(0, 0));
        assert_eq!(device_latency(&d0, 0, &input, &model).unwrap(), 1.0 + 0.2);
        assert!(device_latency(&d0, 1, &input, &model).is_err());

        let blocked = SlotInput {
            bandwidth: vec![vec![0.0]],
            ..input
        };
        assert_eq!(
            device_latency(&d, 0, &blocked, &model).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn utility_examples() {
        assert!((device_utility(1.0, 1.0, 0.5) - 0.5).abs() < 1e-12);
        assert_eq!(device_utility(0.0, 0.0, 0.5), 0.0);
        assert_eq!(device_utility(3.0, f64::INFINITY, 0.5), f64::NEG_INFINITY);
        assert_eq!(device_utility(3.0, f64::INFINITY, 0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn loads_examples() {
        let model = SystemModel::new(
            2,
            vec![EdgeServer::new("a", 8.0, 8.0), EdgeServer::new("b", 8.0, 8.0)],
            vec![EnhancementProfile {
                name: "g".into(),
                kind: AlgorithmKind::LearningBased,
                demand: vec![1.0, 1.0],
                service_rate: vec![5.0, 3.0],
            }],
            ModelConstants::default(),
        )
        .unwrap();
        let none = Decision::uniform(2, Gene::new(0, 0));
        assert!(server_loads(&none, &model)
            .unwrap()
            .iter()
            .all(|l| l.gpu == 0.0 && l.cpu == 0.0));
        let both = Decision::uniform(2, Gene::new(0, 1));
        let loads = server_loads(&both, &model).unwrap();
        assert_eq!(loads[0].gpu, 10.0);
        assert_eq!(loads[0].cpu, 0.0);
        let spread = Decision::new(vec![Gene::new(0, 1), Gene::new(1, 1)]);
        let loads = server_loads(&spread, &model).unwrap();
        assert_eq!((loads[0].gpu, loads[1].gpu), (5.0, 3.0));
    }

    #[test]
    fn feasibility_examples() {
        let model = SystemModel::default();
        let input = SlotInput {
            datasize: vec![4e6; 10],
            bandwidth: vec![vec![1e12; 4]; 10],
            quality: vec![vec![0.0; 5]; 10],
        };
        let d = Decision::uniform(10, Gene::new(0, 0));
        let report = check_feasibility(&d, &input, &model).unwrap();
        assert!(report.feasible);
        assert_eq!(report.capacity.len(), 8);

        // L_max = 4; transmit 3.85 s + overhead 0.05 s + 0.2 s enhancement -> 4.1 s.
        let model = SystemModel::new(
            1,
            vec![EdgeServer::new("s", 8.0, 0.0)],
            vec![EnhancementProfile {
                name: "g".into(),
                kind: AlgorithmKind::LearningBased,
                demand: vec![0.2],
                service_rate: vec![10.0],
            }],
            ModelConstants {
                overhead_s: 0.05,
                latency_weight: 0.5,
                max_latency_s: 4.0,
            },
        )
        .unwrap();
        let input = SlotInput {
            datasize: vec![10.0],
            bandwidth: vec![vec![10.0 / 3.85]],
            quality: vec![vec![0.0, 1.0]],
        };
        let d = Decision::uniform(1, Gene::new(0, 1));
        let report = check_feasibility(&d, &input, &model).unwrap();
        assert!(!report.feasible);
        assert!(!report.latency_ok());
        assert!((report.latency[0].excess - 0.1).abs() < 1e-9);
        // service rate 10 against capacity 8 overloads by 2.
        assert!(!report.capacity_ok());
        assert_eq!(report.capacity[0].overload, 2.0);
        assert_eq!(report.capacity[1].overload, 0.0);
    }

    #[test]
    fn one_hot_views() {
        let d = Decision::new(vec![Gene::new(1, 2), Gene::new(0, 0)]);
        let x = d.enhancement_matrix(2);
        let u = d.offload_matrix(3);
        assert_eq!(x, vec![vec![0, 0, 1], vec![1, 0, 0]]);
        assert_eq!(u, vec![vec![0, 1, 0], vec![1, 0, 0]]);
    }

    #[test]
    fn default_model_matches_settings() {
        let m = SystemModel::default();
        assert_eq!(m.devices, 10);
        assert_eq!(m.num_servers(), 4);
        assert_eq!(m.num_algorithms(), 4);
        assert_eq!(m.constants.latency_weight, 0.5);
        assert_eq!(m.constants.max_latency_s, 4.0);
        assert_eq!(m.servers[0].gpu_capacity, 34.1e12);
        assert_eq!(m.servers[1].cpu_capacity, 854e6);
        assert_eq!(m.servers[3].gpu_capacity, 0.0);
        assert_eq!(m.decision_space(), Some(20u128.pow(10)));
        m.validate().unwrap();
    }

    #[test]
    fn model_validation() {
        let mut m = SystemModel::default();
        m.constants.latency_weight = -1.0;
        assert!(m.validate().is_err());
        let mut m = SystemModel::default();
        m.servers[2] = EdgeServer::new("dead", 0.0, 0.0);
        assert!(m.validate().is_err());
        let mut m = SystemModel::default();
        m.profiles[0].service_rate.pop();
        assert!(m.validate().is_err());
    }
}
