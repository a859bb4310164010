//! Per-slot scheduling: penalized fitness, the genetic search, an exhaustive
//! oracle, and two baseline policies.

mod baseline;
mod ga;
mod oracle;

pub use baseline::{baseline_capacity, baseline_no_enhancement};
pub use ga::{crossover, evolve, mutate, random_decision, random_individual, roulette_select, Evolution, RouletteWheel};
pub use oracle::{brute_force, OracleResult, DEFAULT_ORACLE_LIMIT};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sysmodel::{
    check_feasibility, device_utility, Decision, ModelError, Pool, SlotInput, SystemModel,
};

/// Capacity normaliser floor for the overload penalty.
pub const CAPACITY_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchedError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("decision space of {space} exceeds the enumeration limit {limit}")]
    SpaceTooLarge { space: String, limit: u64 },
    #[error("invalid GA configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub penalty_capacity: f64,
    pub penalty_latency: f64,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 50,
            generations: 100,
            crossover_prob: 0.8,
            mutation_prob: 0.3,
            penalty_capacity: 100.0,
            penalty_latency: 100.0,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), SchedError> {
        if self.population < 2 {
            return Err(SchedError::InvalidConfig(format!(
                "population must be >= 2, got {}",
                self.population
            )));
        }
        if self.generations < 1 {
            return Err(SchedError::InvalidConfig("generations must be >= 1".into()));
        }
        for (name, p) in [
            ("crossover_prob", self.crossover_prob),
            ("mutation_prob", self.mutation_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SchedError::InvalidConfig(format!("{name} {p} outside [0, 1]")));
            }
        }
        for (name, l) in [
            ("penalty_capacity", self.penalty_capacity),
            ("penalty_latency", self.penalty_latency),
        ] {
            if !(l.is_finite() && l >= 0.0) {
                return Err(SchedError::InvalidConfig(format!("{name} must be finite and >= 0, got {l}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fitness {
    /// Objective minus constraint penalties.
    pub fitness: f64,
    /// Unpenalized objective.
    pub raw: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub decision: Decision,
    pub fitness: f64,
    pub raw_utility: f64,
    pub feasible: bool,
}

impl Individual {
    fn new(decision: Decision, f: Fitness) -> Self {
        Self {
            decision,
            fitness: f.fitness,
            raw_utility: f.raw,
            feasible: f.feasible,
        }
    }
}

/// A scheduler's output: the decision plus devices whose task was rejected.
/// Rejected devices keep an algorithm-0 gene so they reserve no capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub decision: Decision,
    pub rejected: Vec<bool>,
}

impl Plan {
    pub fn accepted(decision: Decision) -> Self {
        let rejected = vec![false; decision.len()];
        Self { decision, rejected }
    }

    pub fn any_rejected(&self) -> bool {
        self.rejected.iter().any(|&r| r)
    }
}

/// Sum of per-device utilities; `-inf` if any device latency is infinite.
pub fn objective(decision: &Decision, input: &SlotInput, model: &SystemModel) -> Result<f64, SchedError> {
    let mut total = 0.0;
    for (device, gene) in decision.genes.iter().enumerate() {
        let latency = model.pair_latency(input, device, gene.server, gene.algorithm)?;
        let quality = input.quality[device][gene.algorithm];
        total += device_utility(quality, latency, model.constants.latency_weight);
    }
    Ok(total)
}

fn weighted(lambda: f64, violation: f64) -> f64 {
    if lambda == 0.0 {
        0.0
    } else {
        lambda * violation
    }
}

/// Objective with normalized penalties for capacity overload and latency
/// excess. Feasible decisions score exactly their objective.
pub fn penalized_fitness(
    decision: &Decision,
    input: &SlotInput,
    model: &SystemModel,
    config: &GaConfig,
) -> Result<Fitness, SchedError> {
    let raw = objective(decision, input, model)?;
    let report = check_feasibility(decision, input, model)?;
    let capacity_violation: f64 = report
        .capacity
        .iter()
        .fold(0.0, |acc, c| acc + c.overload / c.capacity.max(CAPACITY_EPS));
    let max_latency = model.constants.max_latency_s;
    let latency_violation: f64 = report
        .latency
        .iter()
        .fold(0.0, |acc, l| acc + l.excess / max_latency);
    let fitness = if report.feasible {
        raw
    } else {
        raw - weighted(config.penalty_capacity, capacity_violation)
            - weighted(config.penalty_latency, latency_violation)
    };
    Ok(Fitness {
        fitness,
        raw,
        feasible: report.feasible,
    })
}

/// Per-slot lookup tables so a decision evaluates in `O(M + N)` without
/// revalidating inputs. Produces bit-identical results to
/// [`penalized_fitness`].
#[derive(Debug, Clone)]
pub struct Evaluator {
    devices: usize,
    servers: usize,
    choices: usize,
    latency: Vec<f64>,
    utility: Vec<f64>,
    reservation: Vec<Option<(Pool, f64)>>,
    capacity: Vec<[f64; 2]>,
    max_latency: f64,
    penalty_capacity: f64,
    penalty_latency: f64,
}

fn pool_slot(pool: Pool) -> usize {
    match pool {
        Pool::Gpu => 0,
        Pool::Cpu => 1,
    }
}

impl Evaluator {
    pub fn new(input: &SlotInput, model: &SystemModel, config: &GaConfig) -> Result<Self, SchedError> {
        model.validate()?;
        input.validate(model)?;
        let (m, n, k) = (model.devices, model.num_servers(), model.num_algorithms());
        let choices = k + 1;
        let mut latency = Vec::with_capacity(m * n * choices);
        let mut utility = Vec::with_capacity(m * n * choices);
        for device in 0..m {
            for server in 0..n {
                for algorithm in 0..choices {
                    let l = model.pair_latency(input, device, server, algorithm)?;
                    latency.push(l);
                    utility.push(device_utility(
                        input.quality[device][algorithm],
                        l,
                        model.constants.latency_weight,
                    ));
                }
            }
        }
        let mut reservation = Vec::with_capacity(n * choices);
        for server in 0..n {
            for algorithm in 0..choices {
                reservation.push(model.reservation(server, algorithm)?);
            }
        }
        let capacity = model
            .servers
            .iter()
            .map(|s| [s.gpu_capacity, s.cpu_capacity])
            .collect();
        Ok(Self {
            devices: m,
            servers: n,
            choices,
            latency,
            utility,
            reservation,
            capacity,
            max_latency: model.constants.max_latency_s,
            penalty_capacity: config.penalty_capacity,
            penalty_latency: config.penalty_latency,
        })
    }

    pub fn devices(&self) -> usize {
        self.devices
    }

    pub fn servers(&self) -> usize {
        self.servers
    }

    /// Algorithm choices per device, `K + 1`.
    pub fn choices(&self) -> usize {
        self.choices
    }

    fn index(&self, device: usize, server: usize, algorithm: usize) -> usize {
        (device * self.servers + server) * self.choices + algorithm
    }

    pub fn latency(&self, device: usize, server: usize, algorithm: usize) -> f64 {
        self.latency[self.index(device, server, algorithm)]
    }

    pub fn utility(&self, device: usize, server: usize, algorithm: usize) -> f64 {
        self.utility[self.index(device, server, algorithm)]
    }

    pub fn evaluate(&self, decision: &Decision) -> Fitness {
        debug_assert_eq!(decision.genes.len(), self.devices);
        let mut raw = 0.0;
        let mut latency_violation = 0.0;
        let mut loads = vec![[0.0f64; 2]; self.servers];
        for (device, gene) in decision.genes.iter().enumerate() {
            let idx = self.index(device, gene.server, gene.algorithm);
            raw += self.utility[idx];
            latency_violation += (self.latency[idx] - self.max_latency).max(0.0) / self.max_latency;
            if let Some((pool, rate)) = self.reservation[gene.server * self.choices + gene.algorithm] {
                loads[gene.server][pool_slot(pool)] += rate;
            }
        }
        let mut capacity_violation = 0.0;
        let mut capacity_ok = true;
        for (load, cap) in loads.iter().zip(&self.capacity) {
            for slot in 0..2 {
                let overload = (load[slot] - cap[slot]).max(0.0);
                if overload != 0.0 {
                    capacity_ok = false;
                }
                capacity_violation += overload / cap[slot].max(CAPACITY_EPS);
            }
        }
        let feasible = capacity_ok && latency_violation == 0.0;
        let fitness = if feasible {
            raw
        } else {
            raw - weighted(self.penalty_capacity, capacity_violation)
                - weighted(self.penalty_latency, latency_violation)
        };
        Fitness {
            fitness,
            raw,
            feasible,
        }
    }

    pub fn individual(&self, decision: Decision) -> Individual {
        let f = self.evaluate(&decision);
        Individual::new(decision, f)
    }
}
