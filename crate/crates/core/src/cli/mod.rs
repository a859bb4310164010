//! Command-line surface: `simulate`, `schedule`, `oracle`, `gen-trace` and
//! `assess`.

pub mod cam_file;
pub mod config;
pub mod metrics;
pub mod trace_file;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub use cam_file::{load_cam, write_cam};
pub use config::{emit_config, parse_config, ConfigError, RunConfig};
pub use metrics::{emit_metrics, format_real, write_metrics};
pub use trace_file::{load_trace, write_trace};

use crate::camq::{cam_difference, filter_cam, filtered_difference, CamError, QualityState};
use crate::sched::{brute_force, objective, SchedError};
use crate::sim::{self, account, generate_synthetic, SchedulerChoice, SimError, SlotPayload, Trace};
use crate::sysmodel::{check_feasibility, ModelError, SlotInput};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {reason}")]
    CamFile { path: PathBuf, reason: String },
    #[error("trace: {0}")]
    Trace(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Sched(#[from] SchedError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Cam(#[from] CamError),
}

impl CliError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "lowlight-sched", version, about = "Low-light video analytics scheduling simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchedulerArg {
    Ga,
    Oracle,
    Capacity,
    None,
}

impl From<SchedulerArg> for SchedulerChoice {
    fn from(s: SchedulerArg) -> Self {
        match s {
            SchedulerArg::Ga => SchedulerChoice::Ga,
            SchedulerArg::Oracle => SchedulerChoice::Oracle,
            SchedulerArg::Capacity => SchedulerChoice::Capacity,
            SchedulerArg::None => SchedulerChoice::None,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every slot of a trace, or of a synthetic workload when no trace is given.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Trace manifest; the configured trace or a synthetic one when absent.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Overrides the configured scheduler.
        #[arg(long, value_enum)]
        scheduler: Option<SchedulerArg>,
        /// Largest decision space the oracle will enumerate.
        #[arg(long)]
        oracle_limit: Option<u64>,
        /// Record scheduler wall time (makes output run-dependent).
        #[arg(long)]
        timing: bool,
    },
    /// Schedule one slot of a trace in isolation.
    Schedule {
        #[command(flatten)]
        common: Common,
        /// Trace manifest; the configured trace or a synthetic one when absent.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// 1-based slot number.
        #[arg(long, default_value_t = 1)]
        slot: usize,
        /// Overrides the configured scheduler.
        #[arg(long, value_enum)]
        scheduler: Option<SchedulerArg>,
        /// Largest decision space the oracle will enumerate.
        #[arg(long)]
        oracle_limit: Option<u64>,
    },
    /// Exhaustively solve one slot of a trace.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Trace manifest; the configured trace or a synthetic one when absent.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// 1-based slot number.
        #[arg(long, default_value_t = 1)]
        slot: usize,
        /// Largest decision space the oracle will enumerate.
        #[arg(long)]
        oracle_limit: Option<u64>,
    },
    /// Write a synthetic trace manifest.
    GenTrace {
        #[command(flatten)]
        common: Common,
        /// Write CAMs as files in this directory, relative to the manifest.
        #[arg(long)]
        cam_dir: Option<PathBuf>,
        /// Overrides the configured slot count.
        #[arg(long)]
        slots: Option<usize>,
    },
    /// Quality row for one device from CAM files, with empty history.
    Assess {
        #[command(flatten)]
        common: Common,
        /// Low-light CAM file.
        #[arg(long)]
        lowlight: PathBuf,
        /// One per enhancement algorithm, in order.
        #[arg(long, required = true)]
        enhanced: Vec<PathBuf>,
    },
}

fn load_config(common: &Common) -> Result<RunConfig, CliError> {
    let mut config = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            parse_config(&text)?
        }
        None => parse_config("")?,
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if common.out.is_some() {
        config.out.clone_from(&common.out);
    }
    Ok(config)
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p).map_err(|e| CliError::io(p, e))?)),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    let mut w = open_out(path)?;
    let label = path.unwrap_or(Path::new("<stdout>"));
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(label, e))
}

fn trace_for(config: &RunConfig, trace: Option<PathBuf>) -> Result<Trace, CliError> {
    match trace.or_else(|| config.trace.clone()) {
        Some(path) => load_trace(&path),
        None => Ok(generate_synthetic(&config.synth_spec())?),
    }
}

/// Slot input for slot `slot` (1-based) assessed with empty CAM history.
fn isolated_input(config: &RunConfig, trace: &Trace, slot: usize) -> Result<SlotInput, CliError> {
    let data = slot
        .checked_sub(1)
        .and_then(|t| trace.slots.get(t))
        .ok_or(SimError::TraceExhausted {
            slot,
            horizon: trace.horizon(),
        })?;
    let quality = match &data.payload {
        SlotPayload::Quality(q) => q.clone(),
        SlotPayload::Cams(cams) => {
            let state = QualityState::new(trace.devices, trace.algorithms, config.quality_params())?;
            sim::assess_slot(&state, cams, config.quality.threshold)?.0
        }
    };
    Ok(SlotInput {
        datasize: data.datasize.clone(),
        bandwidth: data.bandwidth.clone(),
        quality,
    })
}

fn check_dims(trace: &Trace, config: &RunConfig) -> Result<(), CliError> {
    let model = config.model()?;
    let t = (trace.devices, trace.servers, trace.algorithms);
    let m = (model.devices, model.num_servers(), model.num_algorithms());
    if t != m {
        return Err(SimError::DimensionMismatch {
            trace: format!("M={} N={} K={}", t.0, t.1, t.2),
            model: format!("M={} N={} K={}", m.0, m.1, m.2),
        }
        .into());
    }
    Ok(())
}

fn plan_json(
    plan: &crate::sched::Plan,
    input: &SlotInput,
    config: &RunConfig,
    extra: &[(&str, String)],
) -> Result<String, CliError> {
    let model = config.model()?;
    let (devices, total, feasible) = account(plan, input, &model)?;
    let slot = sim::SlotMetrics {
        slot: 0,
        plan: plan.clone(),
        devices,
        total_utility: total,
        feasible,
        scheduler_time: Default::default(),
    };
    let record = metrics::slot_record(&slot, false);
    let body = record
        .strip_prefix("{\"type\":\"slot\",\"slot\":0,")
        .expect("slot record prefix")
        .strip_suffix(",\"scheduler_ms\":null}")
        .expect("slot record suffix");
    let mut out = String::from("{");
    for (k, v) in extra {
        out.push_str(&format!("\"{k}\":{v},"));
    }
    out.push_str(body);
    out.push_str("}\n");
    Ok(out)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            common,
            trace,
            scheduler,
            oracle_limit,
            timing,
        } => {
            let mut config = load_config(&common)?;
            if let Some(s) = scheduler {
                config.scheduler = s.into();
            }
            if let Some(l) = oracle_limit {
                config.oracle_limit = l;
            }
            let trace = trace_for(&config, trace)?;
            let output = sim::run(&trace, &config.settings()?)?;
            match &config.out {
                Some(path) => emit_metrics(&output, path, timing),
                None => write_metrics(io::stdout().lock(), &output, timing).map_err(|e| CliError::io(Path::new("<stdout>"), e)),
            }
        }
        Command::Schedule {
            common,
            trace,
            slot,
            scheduler,
            oracle_limit,
        } => {
            let mut config = load_config(&common)?;
            if let Some(s) = scheduler {
                config.scheduler = s.into();
            }
            if let Some(l) = oracle_limit {
                config.oracle_limit = l;
            }
            let trace = trace_for(&config, trace)?;
            check_dims(&trace, &config)?;
            let input = isolated_input(&config, &trace, slot)?;
            let settings = config.settings()?;
            let plan = sim::schedule(&input, &settings)?;
            let text = plan_json(
                &plan,
                &input,
                &config,
                &[
                    ("slot", slot.to_string()),
                    ("scheduler", format!("\"{}\"", config.scheduler.as_str())),
                ],
            )?;
            write_text(config.out.as_deref(), &text)
        }
        Command::Oracle {
            common,
            trace,
            slot,
            oracle_limit,
        } => {
            let mut config = load_config(&common)?;
            if let Some(l) = oracle_limit {
                config.oracle_limit = l;
            }
            let trace = trace_for(&config, trace)?;
            check_dims(&trace, &config)?;
            let input = isolated_input(&config, &trace, slot)?;
            let model = config.model()?;
            let result = brute_force(&input, &model, config.oracle_limit)?;
            let extra = [
                ("slot", slot.to_string()),
                ("enumerated", result.enumerated.to_string()),
                ("feasible_count", result.feasible.to_string()),
                ("objective", format_real(result.objective)),
            ];
            let text = match &result.best {
                Some(d) => {
                    debug_assert_eq!(objective(d, &input, &model)?, result.objective);
                    debug_assert!(check_feasibility(d, &input, &model)?.feasible);
                    plan_json(&crate::sched::Plan::accepted(d.clone()), &input, &config, &extra)?
                }
                None => {
                    let fields: Vec<String> = extra.iter().map(|(k, v)| format!("\"{k}\":{v}")).collect();
                    format!("{{{},\"decisions\":null}}\n", fields.join(","))
                }
            };
            write_text(config.out.as_deref(), &text)
        }
        Command::GenTrace { common, cam_dir, slots } => {
            let mut config = load_config(&common)?;
            if let Some(t) = slots {
                config.synth.slots = t;
            }
            let out = config
                .out
                .clone()
                .ok_or_else(|| CliError::Usage("gen-trace needs --out".into()))?;
            let trace = generate_synthetic(&config.synth_spec())?;
            write_trace(&trace, &out, cam_dir.as_deref())
        }
        Command::Assess {
            common,
            lowlight,
            enhanced,
        } => {
            let config = load_config(&common)?;
            let low = load_cam(&lowlight)?;
            let maps = enhanced.iter().map(|p| load_cam(p)).collect::<Result<Vec<_>, _>>()?;
            let state = QualityState::new(1, maps.len(), config.quality_params())?;
            let gamma = config.quality.threshold;
            let low_f = filter_cam(&low, gamma)?;
            let mut diff = vec![format_real(0.0)];
            let mut filtered = vec![format_real(0.0)];
            let mut quality = vec![format_real(0.0)];
            for (k, map) in maps.iter().enumerate() {
                let f = filter_cam(map, gamma)?;
                diff.push(format_real(cam_difference(map, &low)?));
                filtered.push(format_real(filtered_difference(&f, &low_f)?));
                quality.push(format_real(state.quality_from_filtered(0, k + 1, &f, &low_f)?));
            }
            let text = format!(
                "{{\"threshold\":{},\"cam_difference\":[{}],\"filtered_difference\":[{}],\"quality\":[{}]}}\n",
                format_real(gamma),
                diff.join(","),
                filtered.join(","),
                quality.join(",")
            );
            write_text(config.out.as_deref(), &text)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("lowlight-sched").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_parse() {
        let c = cli(&["simulate", "--seed", "3", "--scheduler", "capacity", "--oracle-limit", "10", "--timing"]);
        match c.command {
            Command::Simulate {
                common,
                scheduler,
                oracle_limit,
                timing,
                ..
            } => {
                assert_eq!(common.seed, Some(3));
                assert_eq!(scheduler, Some(SchedulerArg::Capacity));
                assert_eq!(oracle_limit, Some(10));
                assert!(timing);
            }
            other => panic!("{other:?}"),
        }
        assert!(Cli::try_parse_from(["x", "simulate", "--scheduler", "greedy"]).is_err());
        assert!(Cli::try_parse_from(["x", "assess", "--lowlight", "a"]).is_err());
    }

    #[test]
    fn small_end_to_end() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.toml");
        fs::write(
            &cfg,
            "seed = 4\n[model]\ndevices = 3\n[synth]\nslots = 4\ncam_rows = 4\ncam_cols = 4\n[ga]\npopulation = 10\ngenerations = 5\n",
        )
        .unwrap();
        let cfg_s = cfg.to_str().unwrap();
        let trace = dir.path().join("trace.json");
        run(cli(&["gen-trace", "--config", cfg_s, "--out", trace.to_str().unwrap(), "--cam-dir", "cams"])).unwrap();
        assert!(dir.path().join("cams/s0004_d003_k4.cam").exists());

        let metrics = dir.path().join("m.jsonl");
        run(cli(&[
            "simulate",
            "--config",
            cfg_s,
            "--trace",
            trace.to_str().unwrap(),
            "--out",
            metrics.to_str().unwrap(),
        ]))
        .unwrap();
        let text = fs::read_to_string(&metrics).unwrap();
        assert_eq!(text.lines().count(), 5);
        for line in text.lines() {
            serde_json::from_str::<serde_json::Value>(line).unwrap();
        }

        let plan = dir.path().join("plan.json");
        run(cli(&[
            "schedule", "--config", cfg_s, "--trace", trace.to_str().unwrap(), "--slot", "2", "--scheduler",
            "capacity", "--out", plan.to_str().unwrap(),
        ]))
        .unwrap();
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&plan).unwrap()).unwrap();
        assert_eq!(v["slot"], 2);
        assert_eq!(v["scheduler"], "capacity");
        assert_eq!(v["decisions"].as_array().unwrap().len(), 3);

        let bad_slot = run(cli(&["schedule", "--config", cfg_s, "--trace", trace.to_str().unwrap(), "--slot", "9"]));
        assert!(matches!(bad_slot, Err(CliError::Sim(SimError::TraceExhausted { .. }))));

        let low = dir.path().join("cams/s0001_d001_low.cam");
        let enh: Vec<String> = (1..=4)
            .map(|k| dir.path().join(format!("cams/s0001_d001_k{k}.cam")).to_string_lossy().into_owned())
            .collect();
        let assess_out = dir.path().join("q.json");
        let mut args = vec!["assess", "--config", cfg_s, "--lowlight", low.to_str().unwrap()];
        for e in &enh {
            args.push("--enhanced");
            args.push(e);
        }
        args.push("--out");
        args.push(assess_out.to_str().unwrap());
        run(cli(&args)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&assess_out).unwrap()).unwrap();
        assert_eq!(v["quality"].as_array().unwrap().len(), 5);
        assert_eq!(v["quality"][0], 0);
    }

    #[test]
    fn oracle_command_on_quality_trace() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.toml");
        fs::write(
            &cfg,
            "[model]\ndevices = 2\n[[servers]]\nname = \"a\"\ncpu_capacity = 10.0\n\
             [[algorithms]]\nname = \"x\"\nkind = \"theory_based\"\ndemand = 1.0\nservice_rate = 5.0\n",
        )
        .unwrap();
        let trace = dir.path().join("t.json");
        fs::write(
            &trace,
            r#"{"devices": 2, "servers": 1, "algorithms": 1,
                "slots": [{"datasize": [1.0, 1.0], "bandwidth": [[2.0], [2.0]], "quality": [[0, 1.0], [0, 2.0]]}]}"#,
        )
        .unwrap();
        let out = dir.path().join("o.json");
        run(cli(&[
            "oracle", "--config", cfg.to_str().unwrap(), "--trace", trace.to_str().unwrap(), "--out", out.to_str().unwrap(),
        ]))
        .unwrap();
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(v["enumerated"], 4);
        // two reservations of 5 fill capacity 10 exactly, so both enhance
        assert_eq!(v["decisions"][0]["algorithm"], 1);
        assert_eq!(v["decisions"][1]["algorithm"], 1);
    }
}
