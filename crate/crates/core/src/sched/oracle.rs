use super::{Evaluator, GaConfig, SchedError};
use crate::sysmodel::{Decision, Gene, SlotInput, SystemModel};

pub const DEFAULT_ORACLE_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Best feasible decision, `None` when nothing is feasible.
    pub best: Option<Decision>,
    /// Objective of `best`, `-inf` when there is none.
    pub objective: f64,
    pub enumerated: u64,
    pub feasible: u64,
}

/// Exhaustive search over all `(N(K+1))^M` gene vectors.
///
/// Vectors are visited in lexicographic order of `(server, algorithm)` per
/// device, device 0 most significant, and only a strictly better objective
/// replaces the incumbent, so ties resolve to the smallest vector.
pub fn brute_force(input: &SlotInput, model: &SystemModel, limit: u64) -> Result<OracleResult, SchedError> {
    let evaluator = Evaluator::new(input, model, &GaConfig::default())?;
    let space = model.decision_space();
    match space {
        Some(s) if s <= u128::from(limit) => {}
        _ => {
            return Err(SchedError::SpaceTooLarge {
                space: space.map_or_else(|| "overflow".to_string(), |s| s.to_string()),
                limit,
            })
        }
    }
    Ok(enumerate(&evaluator))
}

pub(crate) fn enumerate(evaluator: &Evaluator) -> OracleResult {
    let (m, choices) = (evaluator.devices(), evaluator.choices());
    let per_device = evaluator.servers() * choices;
    let mut digits = vec![0usize; m];
    let mut decision = Decision::uniform(m, Gene::new(0, 0));
    let mut best: Option<Decision> = None;
    let mut best_objective = f64::NEG_INFINITY;
    let mut enumerated = 0u64;
    let mut feasible = 0u64;
    loop {
        enumerated += 1;
        let f = evaluator.evaluate(&decision);
        if f.feasible {
            feasible += 1;
            if best.is_none() || f.raw > best_objective {
                best_objective = f.raw;
                best = Some(decision.clone());
            }
        }
        // odometer step, last device fastest
        let mut pos = m;
        loop {
            if pos == 0 {
                return OracleResult {
                    best,
                    objective: best_objective,
                    enumerated,
                    feasible,
                };
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < per_device {
                decision.genes[pos] = Gene::new(digits[pos] / choices, digits[pos] % choices);
                break;
            }
            digits[pos] = 0;
            decision.genes[pos] = Gene::new(0, 0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sched::objective;
    use crate::sysmodel::{check_feasibility, AlgorithmKind, EdgeServer, EnhancementProfile, ModelConstants};

    fn model(devices: usize, servers: usize, algorithms: usize, max_latency: f64) -> SystemModel {
        SystemModel::new(
            devices,
            (0..servers).map(|i| EdgeServer::new(format!("s{i}"), 100.0, 100.0)).collect(),
            (0..algorithms)
                .map(|k| EnhancementProfile {
                    name: format!("a{k}"),
                    kind: AlgorithmKind::TheoryBased,
                    demand: vec![1.0; servers],
                    service_rate: vec![1.0; servers],
                })
                .collect(),
            ModelConstants {
                overhead_s: 0.0,
                latency_weight: 0.1,
                max_latency_s: max_latency,
            },
        )
        .unwrap()
    }

    fn input(model: &SystemModel, q: f64) -> SlotInput {
        let k = model.num_algorithms();
        let mut row = vec![q; k + 1];
        row[0] = 0.0;
        SlotInput {
            datasize: vec![1.0; model.devices],
            bandwidth: vec![vec![1.0; model.num_servers()]; model.devices],
            quality: vec![row; model.devices],
        }
    }

    #[test]
    fn single_point_space() {
        let m = model(1, 1, 0, 4.0);
        let r = brute_force(&input(&m, 0.0), &m, DEFAULT_ORACLE_LIMIT).unwrap();
        assert_eq!(r.enumerated, 1);
        assert_eq!(r.best, Some(Decision::uniform(1, Gene::new(0, 0))));
    }

    #[test]
    fn enumerates_whole_space() {
        let m = model(3, 2, 2, 4.0);
        let r = brute_force(&input(&m, 1.0), &m, DEFAULT_ORACLE_LIMIT).unwrap();
        assert_eq!(r.enumerated, 216);
        assert_eq!(r.feasible, 216);
    }

    #[test]
    fn latency_bound_forces_no_enhancement() {
        // transmit 1 s; enhancing adds 1 s which breaks L_max = 1.5.
        let m = model(3, 2, 2, 1.5);
        let inp = input(&m, 5.0);
        let r = brute_force(&inp, &m, DEFAULT_ORACLE_LIMIT).unwrap();
        let best = r.best.unwrap();
        assert!(best.genes.iter().all(|g| g.algorithm == 0));
        // ties everywhere: the lexicographically smallest vector wins.
        assert_eq!(best, Decision::uniform(3, Gene::new(0, 0)));
        assert_eq!(r.feasible, 8);
        assert_eq!(r.objective, objective(&best, &inp, &m).unwrap());
        assert!(check_feasibility(&best, &inp, &m).unwrap().feasible);
    }

    #[test]
    fn nothing_feasible() {
        let m = model(2, 1, 1, 0.5);
        let r = brute_force(&input(&m, 1.0), &m, DEFAULT_ORACLE_LIMIT).unwrap();
        assert_eq!(r.best, None);
        assert_eq!(r.objective, f64::NEG_INFINITY);
        assert_eq!(r.feasible, 0);
        assert_eq!(r.enumerated, 4);
    }

    #[test]
    fn limit_enforced() {
        let m = model(3, 2, 2, 4.0);
        assert!(matches!(
            brute_force(&input(&m, 1.0), &m, 215),
            Err(SchedError::SpaceTooLarge { limit: 215, .. })
        ));
        let m = SystemModel::default();
        let inp = SlotInput {
            datasize: vec![1.0; 10],
            bandwidth: vec![vec![1.0; 4]; 10],
            quality: vec![vec![0.0; 5]; 10],
        };
        assert!(brute_force(&inp, &m, DEFAULT_ORACLE_LIMIT).is_err());
    }
}
