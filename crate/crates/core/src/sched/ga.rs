use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Evaluator, GaConfig, Individual, SchedError};
use crate::sysmodel::{Decision, Gene, SlotInput, SystemModel};

fn random_gene<R: Rng + ?Sized>(rng: &mut R, servers: usize, choices: usize) -> Gene {
    let server = rng.gen_range(0..servers);
    let algorithm = rng.gen_range(0..choices);
    Gene::new(server, algorithm)
}

/// Uniform server and uniform algorithm, independently per device.
pub fn random_decision<R: Rng + ?Sized>(rng: &mut R, model: &SystemModel) -> Decision {
    let (n, choices) = (model.num_servers(), model.num_algorithms() + 1);
    Decision::new((0..model.devices).map(|_| random_gene(rng, n, choices)).collect())
}

pub fn random_individual<R: Rng + ?Sized>(rng: &mut R, evaluator: &Evaluator) -> Individual {
    let genes = (0..evaluator.devices())
        .map(|_| random_gene(rng, evaluator.servers(), evaluator.choices()))
        .collect();
    evaluator.individual(Decision::new(genes))
}

/// Fitness-proportional sampler over one population.
///
/// Weights are `fitness - min + delta` with `delta = 1e-9 * (1 + |min|)`, the
/// minimum taken over finite fitnesses. Individuals with non-finite fitness
/// get zero weight. When every weight is equal, or no fitness is finite,
/// sampling is uniform.
#[derive(Debug, Clone)]
pub struct RouletteWheel {
    cumulative: Vec<f64>,
    uniform: bool,
}

impl RouletteWheel {
    pub fn new(population: &[Individual]) -> Self {
        assert!(!population.is_empty(), "roulette over an empty population");
        let min = population
            .iter()
            .map(|i| i.fitness)
            .filter(|f| f.is_finite())
            .fold(f64::INFINITY, f64::min);
        if !min.is_finite() {
            return Self {
                cumulative: vec![0.0; population.len()],
                uniform: true,
            };
        }
        let delta = 1e-9 * (1.0 + min.abs());
        let weights: Vec<f64> = population
            .iter()
            .map(|i| {
                if i.fitness.is_finite() {
                    i.fitness - min + delta
                } else {
                    0.0
                }
            })
            .collect();
        let uniform = weights.iter().all(|&w| w == weights[0]);
        let mut total = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                total += w;
                total
            })
            .collect();
        Self { cumulative, uniform }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let n = self.cumulative.len();
        if n == 1 {
            return 0;
        }
        if self.uniform {
            return rng.gen_range(0..n);
        }
        let total = self.cumulative[n - 1];
        let target = rng.gen::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= target)
            .min(n - 1)
    }
}

pub fn roulette_select<'a, R: Rng + ?Sized>(population: &'a [Individual], rng: &mut R) -> &'a Individual {
    let wheel = RouletteWheel::new(population);
    &population[wheel.sample(rng)]
}

/// Single-point crossover: devices before the cut come from `first`, the
/// rest from `second`. The cut is uniform over `1..M`.
pub fn crossover<R: Rng + ?Sized>(first: &Decision, second: &Decision, rng: &mut R) -> Decision {
    assert_eq!(first.len(), second.len(), "parents cover different device counts");
    let m = first.len();
    if m < 2 {
        return first.clone();
    }
    let cut = rng.gen_range(1..m);
    let mut genes = Vec::with_capacity(m);
    genes.extend_from_slice(&first.genes[..cut]);
    genes.extend_from_slice(&second.genes[cut..]);
    Decision::new(genes)
}

/// Redraws the gene of one uniformly chosen device.
pub fn mutate<R: Rng + ?Sized>(decision: &Decision, rng: &mut R, model: &SystemModel) -> Decision {
    mutate_with(decision, rng, model.num_servers(), model.num_algorithms() + 1)
}

fn mutate_with<R: Rng + ?Sized>(decision: &Decision, rng: &mut R, servers: usize, choices: usize) -> Decision {
    let mut out = decision.clone();
    if out.is_empty() {
        return out;
    }
    let device = rng.gen_range(0..out.len());
    out.genes[device] = random_gene(rng, servers, choices);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    /// Best feasible individual seen in any generation, or the fittest one
    /// when none was feasible.
    pub best: Individual,
    /// Best fitness per population: entry 0 is the initial population, entry
    /// `i` the population after `i` rounds of reproduction (`I + 1` entries).
    pub history: Vec<f64>,
}

fn best_index(population: &[Individual]) -> usize {
    let mut best = 0;
    for (i, ind) in population.iter().enumerate().skip(1) {
        if ind.fitness > population[best].fitness {
            best = i;
        }
    }
    best
}

/// Order for the reported result: any feasible individual beats any
/// infeasible one, then higher fitness wins; ties keep the incumbent.
fn better_report(candidate: &Individual, incumbent: &Individual) -> bool {
    match (candidate.feasible, incumbent.feasible) {
        (true, false) => true,
        (false, true) => false,
        _ => candidate.fitness > incumbent.fitness,
    }
}

/// Genetic search for one slot.
///
/// Each generation keeps its fittest individual unchanged and fills the other
/// `V - 1` places with offspring: two roulette-selected parents, crossover
/// with probability `P_c` (otherwise a copy of the first parent), then
/// mutation with probability `P_m`. Selection and elitism both use penalized
/// fitness.
pub fn evolve(input: &SlotInput, model: &SystemModel, config: &GaConfig) -> Result<Evolution, SchedError> {
    config.validate()?;
    let evaluator = Evaluator::new(input, model, config)?;
    Ok(evolve_with(&evaluator, config))
}

pub(crate) fn evolve_with(evaluator: &Evaluator, config: &GaConfig) -> Evolution {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (servers, choices) = (evaluator.servers(), evaluator.choices());

    let mut population: Vec<Individual> = (0..config.population)
        .map(|_| random_individual(&mut rng, evaluator))
        .collect();
    let mut history = Vec::with_capacity(config.generations + 1);
    let mut best = population[best_index(&population)].clone();
    history.push(best.fitness);
    for ind in &population {
        if better_report(ind, &best) {
            best = ind.clone();
        }
    }

    for _ in 0..config.generations {
        let elite = best_index(&population);
        let wheel = RouletteWheel::new(&population);
        let mut next = Vec::with_capacity(config.population);
        next.push(population[elite].clone());
        for _ in 1..config.population {
            let first = &population[wheel.sample(&mut rng)];
            let second = &population[wheel.sample(&mut rng)];
            let mut child = if rng.gen_bool(config.crossover_prob) {
                crossover(&first.decision, &second.decision, &mut rng)
            } else {
                first.decision.clone()
            };
            if rng.gen_bool(config.mutation_prob) {
                child = mutate_with(&child, &mut rng, servers, choices);
            }
            next.push(evaluator.individual(child));
        }
        population = next;
        let gen_best = &population[best_index(&population)];
        history.push(gen_best.fitness);
        for ind in &population {
            if better_report(ind, &best) {
                best = ind.clone();
            }
        }
    }
    Evolution { best, history }
}
