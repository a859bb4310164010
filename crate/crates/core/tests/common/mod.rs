#![allow(dead_code)]

use lowlight_sched::camq::CamMap;
use lowlight_sched::sched::{brute_force, DEFAULT_ORACLE_LIMIT};
use lowlight_sched::sysmodel::{
    AlgorithmKind, Decision, EdgeServer, EnhancementProfile, Gene, ModelConstants, Pool, SlotInput, SystemModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub struct Instance {
    pub model: SystemModel,
    pub input: SlotInput,
}

/// Random instance with tight enough capacity and latency bounds that both
/// constraints bind on a good share of decisions.
pub fn random_instance<R: Rng>(rng: &mut R, m: usize, n: usize, k: usize) -> Instance {
    let servers: Vec<EdgeServer> = (0..n)
        .map(|i| {
            let gpu = if rng.gen_bool(0.6) { rng.gen_range(2.0..10.0) } else { 0.0 };
            let cpu = rng.gen_range(2.0..10.0);
            EdgeServer::new(format!("s{i}"), gpu, cpu)
        })
        .collect();
    let profiles: Vec<EnhancementProfile> = (0..k)
        .map(|j| {
            let kind = if rng.gen_bool(0.5) {
                AlgorithmKind::LearningBased
            } else {
                AlgorithmKind::TheoryBased
            };
            let demand = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
            let service_rate = servers
                .iter()
                .map(|s| {
                    if s.capacity(kind.pool()) > 0.0 && rng.gen_bool(0.9) {
                        rng.gen_range(1.0..5.0)
                    } else {
                        0.0
                    }
                })
                .collect();
            EnhancementProfile {
                name: format!("a{j}"),
                kind,
                demand,
                service_rate,
            }
        })
        .collect();
    let constants = ModelConstants {
        overhead_s: 0.05,
        latency_weight: 0.5,
        max_latency_s: rng.gen_range(1.5..4.0),
    };
    let model = SystemModel::new(m, servers, profiles, constants).unwrap();
    let input = SlotInput {
        datasize: (0..m).map(|_| rng.gen_range(0.5..2.0)).collect(),
        bandwidth: (0..m)
            .map(|_| {
                (0..n)
                    .map(|_| if rng.gen_bool(0.05) { 0.0 } else { rng.gen_range(0.5..4.0) })
                    .collect()
            })
            .collect(),
        quality: (0..m)
            .map(|_| {
                let mut row: Vec<f64> = (0..=k).map(|_| rng.gen_range(-0.5..3.0)).collect();
                row[0] = 0.0;
                row
            })
            .collect(),
    };
    input.validate(&model).unwrap();
    Instance { model, input }
}

/// Instance whose exact optimum is feasible and positive, so relative gaps are
/// well defined. Returns the instance and its optimum.
pub fn gap_instance(seed: u64, m: usize, n: usize, k: usize) -> (Instance, Decision, f64) {
    let mut r = rng(seed);
    loop {
        let inst = random_instance(&mut r, m, n, k);
        let oracle = brute_force(&inst.input, &inst.model, DEFAULT_ORACLE_LIMIT).unwrap();
        if let Some(best) = oracle.best {
            if oracle.objective > 0.0 {
                return (inst, best, oracle.objective);
            }
        }
    }
}

pub fn random_decision<R: Rng>(rng: &mut R, model: &SystemModel) -> Decision {
    Decision::new(
        (0..model.devices)
            .map(|_| Gene::new(rng.gen_range(0..model.num_servers()), rng.gen_range(0..=model.num_algorithms())))
            .collect(),
    )
}

pub fn random_cam<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CamMap {
    CamMap::new(rows, cols, (0..rows * cols).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap()
}

/// Latency of one device straight from the formulas, independent of the
/// library's lookup paths.
pub fn naive_latency(inst: &Instance, decision: &Decision, device: usize) -> f64 {
    let g = decision.genes[device];
    let d = inst.input.datasize[device];
    let b = inst.input.bandwidth[device][g.server];
    let l_t = if d == 0.0 {
        0.0
    } else if b == 0.0 {
        f64::INFINITY
    } else {
        d / b
    };
    let l_e = if g.algorithm == 0 {
        0.0
    } else {
        let p = &inst.model.profiles[g.algorithm - 1];
        let s = p.service_rate[g.server];
        if s == 0.0 {
            f64::INFINITY
        } else {
            p.demand[g.server] * d / s
        }
    };
    l_t + l_e + inst.model.constants.overhead_s
}

/// C4 and C5 re-evaluated from raw sums: `(capacity_ok, latency_ok)`.
pub fn naive_feasibility(inst: &Instance, decision: &Decision) -> (bool, bool) {
    let model = &inst.model;
    let mut capacity_ok = true;
    for n in 0..model.num_servers() {
        for pool in [Pool::Gpu, Pool::Cpu] {
            let mut load = 0.0;
            for g in &decision.genes {
                if g.server == n && g.algorithm > 0 {
                    let p = &model.profiles[g.algorithm - 1];
                    if p.kind.pool() == pool {
                        load += p.service_rate[n];
                    }
                }
            }
            let cap = match pool {
                Pool::Gpu => model.servers[n].gpu_capacity,
                Pool::Cpu => model.servers[n].cpu_capacity,
            };
            if load > cap {
                capacity_ok = false;
            }
        }
    }
    let latency_ok = (0..model.devices).all(|m| naive_latency(inst, decision, m) <= model.constants.max_latency_s);
    (capacity_ok, latency_ok)
}

/// Decisions are structurally sound when the one-hot views have exactly one
/// server and one algorithm per device, within range.
pub fn structurally_valid(decision: &Decision, model: &SystemModel) -> bool {
    let (n, k) = (model.num_servers(), model.num_algorithms());
    decision.len() == model.devices
        && decision.genes.iter().all(|g| g.server < n && g.algorithm <= k)
        && decision
            .offload_matrix(n)
            .iter()
            .all(|row| row.len() == n && row.iter().map(|&v| u32::from(v)).sum::<u32>() == 1)
        && decision
            .enhancement_matrix(k)
            .iter()
            .all(|row| row.len() == k + 1 && row.iter().map(|&v| u32::from(v)).sum::<u32>() == 1)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    if a == b {
        return true;
    }
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Prints one acceptance line and returns whether it passed.
pub fn report(id: u32, name: &str, pass: bool, detail: &str) -> bool {
    println!("[{}] criterion {id} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}
