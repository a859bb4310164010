//! JSON trace manifests.
//!
//! ```json
//! {
//!   "devices": 2, "servers": 1, "algorithms": 1,
//!   "slots": [
//!     { "datasize": [4e6, 2e6], "bandwidth": [[2e7], [2e7]],
//!       "quality": [[0, 0.8], [0, -0.1]] },
//!     { "datasize": [4e6, 2e6], "bandwidth": [[2e7], [2e7]],
//!       "cams": [
//!         { "lowlight": "cams/s2_d1_low.cam", "enhanced": ["cams/s2_d1_k1.cam"],
//!           "accuracy": [0.5, 0.7] },
//!         { "lowlight": {"rows": 1, "cols": 2, "values": [0.1, 0.6]},
//!           "enhanced": [{"rows": 1, "cols": 2, "values": [0.5, 0.9]}] }
//!       ] }
//!   ]
//! }
//! ```
//!
//! Each slot carries exactly one of `quality` (an `M x (K+1)` matrix whose
//! first column is zero) or `cams`. A CAM is either a path to a CAM file,
//! relative to the manifest's directory, or an inline row-major table.
//! `accuracy` lists observed accuracy for algorithms `0..=K` and is optional.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::cam_file::{load_cam, write_cam};
use super::CliError;
use crate::camq::CamMap;
use crate::sim::{DeviceCams, SlotData, SlotPayload, Trace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CamRef {
    Path(String),
    Inline { rows: usize, cols: usize, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CamsEntry {
    pub lowlight: CamRef,
    pub enhanced: Vec<CamRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotEntry {
    pub datasize: Vec<f64>,
    pub bandwidth: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cams: Option<Vec<CamsEntry>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub devices: usize,
    pub servers: usize,
    pub algorithms: usize,
    pub slots: Vec<SlotEntry>,
}

fn resolve(cam: &CamRef, base: &Path, slot: usize) -> Result<CamMap, CliError> {
    match cam {
        CamRef::Path(p) => load_cam(&base.join(p)),
        CamRef::Inline { rows, cols, values } => CamMap::new(*rows, *cols, values.clone())
            .map_err(|e| CliError::Trace(format!("slot {slot}: inline CAM: {e}"))),
    }
}

/// Builds a trace from a parsed manifest; CAM paths resolve against `base`.
pub fn manifest_to_trace(manifest: &Manifest, base: &Path) -> Result<Trace, CliError> {
    let mut slots = Vec::with_capacity(manifest.slots.len());
    for (t, entry) in manifest.slots.iter().enumerate() {
        let slot = t + 1;
        let payload = match (&entry.quality, &entry.cams) {
            (Some(q), None) => SlotPayload::Quality(q.clone()),
            (None, Some(cams)) => SlotPayload::Cams(
                cams.iter()
                    .map(|c| {
                        Ok(DeviceCams {
                            lowlight: resolve(&c.lowlight, base, slot)?,
                            enhanced: c
                                .enhanced
                                .iter()
                                .map(|e| resolve(e, base, slot))
                                .collect::<Result<_, CliError>>()?,
                            accuracy: c.accuracy.clone(),
                        })
                    })
                    .collect::<Result<_, CliError>>()?,
            ),
            _ => {
                return Err(CliError::Trace(format!(
                    "slot {slot}: exactly one of `quality` or `cams` is required"
                )))
            }
        };
        slots.push(SlotData {
            datasize: entry.datasize.clone(),
            bandwidth: entry.bandwidth.clone(),
            payload,
        });
    }
    let trace = Trace {
        devices: manifest.devices,
        servers: manifest.servers,
        algorithms: manifest.algorithms,
        slots,
    };
    trace.validate()?;
    Ok(trace)
}

pub fn load_trace(path: &Path) -> Result<Trace, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| CliError::Trace(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new(""));
    manifest_to_trace(&manifest, base)
}

fn inline(map: &CamMap) -> CamRef {
    CamRef::Inline {
        rows: map.rows(),
        cols: map.cols(),
        values: map.values().to_vec(),
    }
}

/// Converts a trace to a manifest. With `cam_dir`, CAMs are written as files
/// under `base/cam_dir` and referenced by relative path; otherwise inlined.
pub fn trace_to_manifest(trace: &Trace, base: &Path, cam_dir: Option<&Path>) -> Result<Manifest, CliError> {
    if let Some(dir) = cam_dir {
        let full = base.join(dir);
        fs::create_dir_all(&full).map_err(|e| CliError::io(&full, e))?;
    }
    let store = |map: &CamMap, name: String| -> Result<CamRef, CliError> {
        match cam_dir {
            None => Ok(inline(map)),
            Some(dir) => {
                let rel: PathBuf = dir.join(name);
                write_cam(map, &base.join(&rel))?;
                Ok(CamRef::Path(rel.to_string_lossy().replace('\\', "/")))
            }
        }
    };
    let mut slots = Vec::with_capacity(trace.slots.len());
    for (t, slot) in trace.slots.iter().enumerate() {
        let (quality, cams) = match &slot.payload {
            SlotPayload::Quality(q) => (Some(q.clone()), None),
            SlotPayload::Cams(cams) => {
                let mut entries = Vec::with_capacity(cams.len());
                for (m, c) in cams.iter().enumerate() {
                    let stem = format!("s{:04}_d{:03}", t + 1, m + 1);
                    entries.push(CamsEntry {
                        lowlight: store(&c.lowlight, format!("{stem}_low.cam"))?,
                        enhanced: c
                            .enhanced
                            .iter()
                            .enumerate()
                            .map(|(k, e)| store(e, format!("{stem}_k{}.cam", k + 1)))
                            .collect::<Result<_, _>>()?,
                        accuracy: c.accuracy.clone(),
                    });
                }
                (None, Some(entries))
            }
        };
        slots.push(SlotEntry {
            datasize: slot.datasize.clone(),
            bandwidth: slot.bandwidth.clone(),
            quality,
            cams,
        });
    }
    Ok(Manifest {
        devices: trace.devices,
        servers: trace.servers,
        algorithms: trace.algorithms,
        slots,
    })
}

pub fn write_trace(trace: &Trace, path: &Path, cam_dir: Option<&Path>) -> Result<(), CliError> {
    let base = path.parent().unwrap_or(Path::new(""));
    let manifest = trace_to_manifest(trace, base, cam_dir)?;
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Trace(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}
