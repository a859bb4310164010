use super::{Plan, SchedError};
use crate::sysmodel::{transmission_latency, Decision, Gene, SlotInput, SystemModel};

fn fastest_link(input: &SlotInput, device: usize) -> Result<usize, SchedError> {
    let bits = input.datasize[device];
    let mut best = 0;
    let mut best_latency = f64::INFINITY;
    for (server, &bw) in input.bandwidth[device].iter().enumerate() {
        let l = transmission_latency(bits, bw)?;
        if l < best_latency {
            best_latency = l;
            best = server;
        }
    }
    Ok(best)
}

/// No enhancement anywhere; each device uses the server with the lowest
/// transmission latency, ties to the smallest index.
pub fn baseline_no_enhancement(input: &SlotInput, model: &SystemModel) -> Result<Decision, SchedError> {
    input.validate(model)?;
    let genes = (0..model.devices)
        .map(|m| fastest_link(input, m).map(|n| Gene::new(n, 0)))
        .collect::<Result<_, _>>()?;
    Ok(Decision::new(genes))
}

/// Capacity-driven greedy that ignores bandwidth and latency.
///
/// Devices are visited in index order. Each tries its enhancing algorithms
/// with positive quality, best first, and takes the first one whose service
/// rate fits the residual capacity of some server, choosing the server with
/// the largest residual in that pool. A device with no positive-quality
/// algorithm runs unenhanced on its fastest link. A device whose candidates
/// all fail is rejected.
pub fn baseline_capacity(input: &SlotInput, model: &SystemModel) -> Result<Plan, SchedError> {
    input.validate(model)?;
    let mut residual: Vec<[f64; 2]> = model
        .servers
        .iter()
        .map(|s| [s.gpu_capacity, s.cpu_capacity])
        .collect();
    let pool_slot = |p| match p {
        crate::sysmodel::Pool::Gpu => 0,
        crate::sysmodel::Pool::Cpu => 1,
    };
    let mut genes = Vec::with_capacity(model.devices);
    let mut rejected = vec![false; model.devices];
    for (device, reject) in rejected.iter_mut().enumerate() {
        let q = &input.quality[device];
        let mut candidates: Vec<usize> = (1..q.len()).filter(|&k| q[k] > 0.0).collect();
        candidates.sort_by(|&a, &b| q[b].total_cmp(&q[a]).then(a.cmp(&b)));
        if candidates.is_empty() {
            genes.push(Gene::new(fastest_link(input, device)?, 0));
            continue;
        }
        let mut placed = None;
        'search: for &k in &candidates {
            let profile = &model.profiles[k - 1];
            let slot = pool_slot(profile.pool());
            let mut chosen: Option<usize> = None;
            for (n, res) in residual.iter().enumerate() {
                let rate = profile.service_rate[n];
                if rate > 0.0 && rate <= res[slot] && chosen.is_none_or(|c| res[slot] > residual[c][slot]) {
                    chosen = Some(n);
                }
            }
            if let Some(n) = chosen {
                residual[n][slot] -= profile.service_rate[n];
                placed = Some(Gene::new(n, k));
                break 'search;
            }
        }
        match placed {
            Some(g) => genes.push(g),
            None => {
                *reject = true;
                genes.push(Gene::new(fastest_link(input, device)?, 0));
            }
        }
    }
    Ok(Plan {
        decision: Decision::new(genes),
        rejected,
    })
}
