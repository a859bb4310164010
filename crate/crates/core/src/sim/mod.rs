//! Slot-by-slot pipeline: assess quality, schedule, account, then roll the
//! quality windows forward.

mod synth;
mod trace;

pub use synth::{generate_synthetic, SynthSpec};
pub use trace::{DeviceCams, SlotData, SlotPayload, Trace};

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camq::{filter_cam, CamError, FilteredCam, QualityParams, QualityState};
use crate::sched::{
    baseline_capacity, baseline_no_enhancement, brute_force, evolve, GaConfig, Plan, SchedError,
};
use crate::sysmodel::{
    check_feasibility, device_latency, device_utility, ModelError, SlotInput, SystemModel,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("slot {slot} is beyond the trace horizon {horizon}")]
    TraceExhausted { slot: usize, horizon: usize },
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("trace is {trace} but model is {model}")]
    DimensionMismatch { trace: String, model: String },
    #[error(transparent)]
    Cam(#[from] CamError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sched(#[from] SchedError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchedulerChoice {
    #[default]
    Ga,
    Oracle,
    Capacity,
    None,
}

impl SchedulerChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            SchedulerChoice::Ga => "ga",
            SchedulerChoice::Oracle => "oracle",
            SchedulerChoice::Capacity => "capacity",
            SchedulerChoice::None => "none",
        }
    }
}

/// Everything a run needs besides the trace.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    pub model: SystemModel,
    pub quality: QualityParams,
    pub threshold: f64,
    pub ga: GaConfig,
    pub scheduler: SchedulerChoice,
    pub oracle_limit: u64,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            model: SystemModel::default(),
            quality: QualityParams::default(),
            threshold: crate::camq::DEFAULT_THRESHOLD,
            ga: GaConfig::default(),
            scheduler: SchedulerChoice::Ga,
            oracle_limit: crate::sched::DEFAULT_ORACLE_LIMIT,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceOutcome {
    pub server: usize,
    pub algorithm: usize,
    pub rejected: bool,
    pub quality: f64,
    pub latency_s: f64,
    pub utility: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotMetrics {
    /// 1-based slot index.
    pub slot: usize,
    pub plan: Plan,
    pub devices: Vec<DeviceOutcome>,
    pub total_utility: f64,
    pub feasible: bool,
    pub scheduler_time: Duration,
}

impl SlotMetrics {
    pub fn scheduler_ms(&self) -> f64 {
        self.scheduler_time.as_secs_f64() * 1e3
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Summary {
    pub slots: usize,
    pub mean_latency_s: Option<f64>,
    pub p50_latency_s: Option<f64>,
    pub p95_latency_s: Option<f64>,
    pub p99_latency_s: Option<f64>,
    pub mean_utility: Option<f64>,
    pub feasibility_rate: Option<f64>,
    pub mean_scheduler_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub slots: Vec<SlotMetrics>,
    pub summary: Summary,
}

/// Per-run mutable state.
#[derive(Debug, Clone)]
pub struct Simulation {
    settings: SimSettings,
    state: QualityState,
}

fn check_dimensions(trace: &Trace, model: &SystemModel) -> Result<(), SimError> {
    let t = (trace.devices, trace.servers, trace.algorithms);
    let m = (model.devices, model.num_servers(), model.num_algorithms());
    if t != m {
        let fmt = |(a, b, c): (usize, usize, usize)| format!("M={a} N={b} K={c}");
        return Err(SimError::DimensionMismatch {
            trace: fmt(t),
            model: fmt(m),
        });
    }
    Ok(())
}

/// Q matrix for one slot and the filtered enhanced maps, per device and algorithm.
pub type SlotAssessment = (Vec<Vec<f64>>, Vec<Vec<FilteredCam>>);

/// Q matrix for one slot of CAMs, plus the filtered enhanced maps to commit.
pub fn assess_slot(state: &QualityState, cams: &[DeviceCams], threshold: f64) -> Result<SlotAssessment, CamError> {
    let mut quality = Vec::with_capacity(cams.len());
    let mut filtered = Vec::with_capacity(cams.len());
    for (device, c) in cams.iter().enumerate() {
        let lowlight_f = filter_cam(&c.lowlight, threshold)?;
        let mut row = Vec::with_capacity(c.enhanced.len() + 1);
        row.push(0.0);
        let mut maps = Vec::with_capacity(c.enhanced.len());
        for (idx, enhanced) in c.enhanced.iter().enumerate() {
            let enhanced_f = filter_cam(enhanced, threshold)?;
            row.push(state.quality_from_filtered(device, idx + 1, &enhanced_f, &lowlight_f)?);
            maps.push(enhanced_f);
        }
        quality.push(row);
        filtered.push(maps);
    }
    Ok((quality, filtered))
}

/// Runs the configured scheduler on one slot.
pub fn schedule(input: &SlotInput, settings: &SimSettings) -> Result<Plan, SimError> {
    let model = &settings.model;
    Ok(match settings.scheduler {
        SchedulerChoice::Ga => Plan::accepted(evolve(input, model, &settings.ga)?.best.decision),
        SchedulerChoice::Oracle => {
            let result = brute_force(input, model, settings.oracle_limit)?;
            match result.best {
                Some(d) => Plan::accepted(d),
                None => Plan::accepted(baseline_no_enhancement(input, model)?),
            }
        }
        SchedulerChoice::Capacity => baseline_capacity(input, model)?,
        SchedulerChoice::None => Plan::accepted(baseline_no_enhancement(input, model)?),
    })
}

/// Per-device latency and utility of a plan. Rejected devices get infinite
/// latency and `-inf` utility.
pub fn account(
    plan: &Plan,
    input: &SlotInput,
    model: &SystemModel,
) -> Result<(Vec<DeviceOutcome>, f64, bool), SimError> {
    let mut devices = Vec::with_capacity(model.devices);
    let mut total = 0.0;
    for (device, gene) in plan.decision.genes.iter().enumerate() {
        let rejected = plan.rejected[device];
        let quality = input.quality[device][gene.algorithm];
        let latency_s = if rejected {
            f64::INFINITY
        } else {
            device_latency(&plan.decision, device, input, model)?
        };
        let utility = device_utility(quality, latency_s, model.constants.latency_weight);
        total += utility;
        devices.push(DeviceOutcome {
            server: gene.server,
            algorithm: gene.algorithm,
            rejected,
            quality,
            latency_s,
            utility,
        });
    }
    let feasible = !plan.any_rejected() && check_feasibility(&plan.decision, input, model)?.feasible;
    Ok((devices, total, feasible))
}

impl Simulation {
    pub fn new(settings: SimSettings) -> Result<Self, SimError> {
        settings.model.validate()?;
        settings.ga.validate()?;
        if !settings.threshold.is_finite() {
            return Err(CamError::NonFiniteThreshold(settings.threshold).into());
        }
        let state = QualityState::new(
            settings.model.devices,
            settings.model.num_algorithms(),
            settings.quality,
        )?;
        Ok(Self { settings, state })
    }

    pub fn settings(&self) -> &SimSettings {
        &self.settings
    }

    pub fn quality_state(&self) -> &QualityState {
        &self.state
    }

    /// Processes slot `t` (0-based) of `trace`.
    pub fn run_slot(&mut self, t: usize, trace: &Trace) -> Result<SlotMetrics, SimError> {
        check_dimensions(trace, &self.settings.model)?;
        let slot = trace.slots.get(t).ok_or(SimError::TraceExhausted {
            slot: t + 1,
            horizon: trace.horizon(),
        })?;
        let (quality, filtered) = match &slot.payload {
            SlotPayload::Quality(q) => (q.clone(), None),
            SlotPayload::Cams(cams) => {
                let (q, f) = assess_slot(&self.state, cams, self.settings.threshold)?;
                (q, Some(f))
            }
        };
        let input = SlotInput {
            datasize: slot.datasize.clone(),
            bandwidth: slot.bandwidth.clone(),
            quality,
        };
        input.validate(&self.settings.model)?;

        let started = Instant::now();
        let plan = schedule(&input, &self.settings)?;
        let scheduler_time = started.elapsed();

        let (devices, total_utility, feasible) = account(&plan, &input, &self.settings.model)?;

        if let (Some(filtered), SlotPayload::Cams(cams)) = (filtered, &slot.payload) {
            for (device, maps) in filtered.into_iter().enumerate() {
                for (idx, map) in maps.into_iter().enumerate() {
                    self.state.push_cam(device, idx + 1, map)?;
                }
                if plan.rejected[device] {
                    continue;
                }
                if let Some(acc) = &cams[device].accuracy {
                    let chosen = plan.decision.genes[device].algorithm;
                    self.state.push_accuracy(device, acc[chosen])?;
                }
            }
        }

        Ok(SlotMetrics {
            slot: t + 1,
            plan,
            devices,
            total_utility,
            feasible,
            scheduler_time,
        })
    }
}

/// Runs every slot of `trace` in order.
pub fn run(trace: &Trace, settings: &SimSettings) -> Result<SimOutput, SimError> {
    trace.validate()?;
    check_dimensions(trace, &settings.model)?;
    let mut sim = Simulation::new(settings.clone())?;
    let slots = (0..trace.horizon())
        .map(|t| sim.run_slot(t, trace))
        .collect::<Result<Vec<_>, _>>()?;
    let summary = summarize(&slots);
    Ok(SimOutput { slots, summary })
}

/// Nearest-rank percentile of an ascending slice.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

pub fn summarize(slots: &[SlotMetrics]) -> Summary {
    if slots.is_empty() {
        return Summary::default();
    }
    let mut latencies: Vec<f64> = slots
        .iter()
        .flat_map(|s| s.devices.iter().map(|d| d.latency_s))
        .collect();
    latencies.sort_by(f64::total_cmp);
    let n = slots.len() as f64;
    let (mean_latency, p50, p95, p99) = if latencies.is_empty() {
        (None, None, None, None)
    } else {
        (
            Some(latencies.iter().sum::<f64>() / latencies.len() as f64),
            Some(percentile(&latencies, 50.0)),
            Some(percentile(&latencies, 95.0)),
            Some(percentile(&latencies, 99.0)),
        )
    };
    Summary {
        slots: slots.len(),
        mean_latency_s: mean_latency,
        p50_latency_s: p50,
        p95_latency_s: p95,
        p99_latency_s: p99,
        mean_utility: Some(slots.iter().map(|s| s.total_utility).sum::<f64>() / n),
        feasibility_rate: Some(slots.iter().filter(|s| s.feasible).count() as f64 / n),
        mean_scheduler_ms: Some(slots.iter().map(SlotMetrics::scheduler_ms).sum::<f64>() / n),
    }
}
