//! Seeded synthetic workloads.
//!
//! A stand-in for real footage: each device's low-light CAM is a Gaussian
//! blob drifting across the grid plus per-cell noise. The enhanced CAM of
//! algorithm `k` adds a constant offset and a smooth cosine ripple to the
//! low-light map. Accuracy feedback rises with the offset so that larger CAM
//! differences go with higher accuracy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{DeviceCams, SimError, SlotData, SlotPayload, Trace};
use crate::camq::CamMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    pub devices: usize,
    pub servers: usize,
    pub algorithms: usize,
    pub slots: usize,
    /// Inclusive bit range per chunk.
    pub datasize_bits: [f64; 2],
    pub bandwidth_bps: [f64; 2],
    pub cam_rows: usize,
    pub cam_cols: usize,
    /// Peak of the low-light blob.
    pub lowlight_peak: f64,
    /// Per-slot blob displacement, in grid fractions.
    pub drift: f64,
    pub cam_noise: f64,
    /// Additive CAM offset per algorithm `1..=K`.
    pub offsets: Vec<f64>,
    /// Amplitude of the smooth ripple added to enhanced CAMs.
    pub enhance_noise: f64,
    pub accuracy_base: f64,
    pub accuracy_gain: f64,
    pub accuracy_noise: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            devices: 10,
            servers: 4,
            algorithms: 4,
            slots: 30,
            datasize_bits: [2e6, 8e6],
            bandwidth_bps: [20e6, 20e6],
            cam_rows: 8,
            cam_cols: 8,
            lowlight_peak: 0.6,
            drift: 0.05,
            cam_noise: 0.05,
            offsets: vec![0.05, -0.05, 0.15, 0.10],
            enhance_noise: 0.05,
            accuracy_base: 0.55,
            accuracy_gain: 1.0,
            accuracy_noise: 0.03,
            seed: 0,
        }
    }
}

fn check_range(name: &str, r: [f64; 2]) -> Result<(), SimError> {
    if !(r[0].is_finite() && r[1].is_finite() && r[0] >= 0.0 && r[0] <= r[1]) {
        return Err(SimError::InvalidSpec(format!(
            "{name} range [{}, {}] must be finite, non-negative and ordered",
            r[0], r[1]
        )));
    }
    Ok(())
}

fn check_amount(name: &str, v: f64) -> Result<(), SimError> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(SimError::InvalidSpec(format!("{name} must be finite and >= 0, got {v}")));
    }
    Ok(())
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.devices == 0 || self.servers == 0 {
            return Err(SimError::InvalidSpec("devices and servers must be >= 1".into()));
        }
        if self.cam_rows == 0 || self.cam_cols == 0 {
            return Err(SimError::InvalidSpec("CAM shape must be at least 1x1".into()));
        }
        if self.offsets.len() != self.algorithms {
            return Err(SimError::InvalidSpec(format!(
                "{} offsets given for {} algorithms",
                self.offsets.len(),
                self.algorithms
            )));
        }
        if let Some(o) = self.offsets.iter().find(|o| !o.is_finite()) {
            return Err(SimError::InvalidSpec(format!("offset {o} is not finite")));
        }
        check_range("datasize_bits", self.datasize_bits)?;
        check_range("bandwidth_bps", self.bandwidth_bps)?;
        check_amount("lowlight_peak", self.lowlight_peak)?;
        check_amount("drift", self.drift)?;
        check_amount("cam_noise", self.cam_noise)?;
        check_amount("enhance_noise", self.enhance_noise)?;
        check_amount("accuracy_noise", self.accuracy_noise)?;
        if !(0.0..=1.0).contains(&self.accuracy_base) {
            return Err(SimError::InvalidSpec(format!(
                "accuracy_base {} outside [0, 1]",
                self.accuracy_base
            )));
        }
        if !self.accuracy_gain.is_finite() {
            return Err(SimError::InvalidSpec("accuracy_gain must be finite".into()));
        }
        Ok(())
    }
}

fn draw<R: Rng>(rng: &mut R, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.gen_range(r[0]..=r[1])
    }
}

struct Blob {
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
    width: f64,
}

impl Blob {
    fn random<R: Rng>(rng: &mut R) -> Self {
        let angle = rng.gen_range(0.0..std::f64::consts::TAU);
        Self {
            x: rng.gen_range(0.2..0.8),
            y: rng.gen_range(0.2..0.8),
            vx: angle.cos(),
            vy: angle.sin(),
            width: rng.gen_range(0.15..0.3),
        }
    }

    fn step(&mut self, drift: f64) {
        self.x += self.vx * drift;
        self.y += self.vy * drift;
        if !(0.0..=1.0).contains(&self.x) {
            self.vx = -self.vx;
            self.x = self.x.clamp(0.0, 1.0);
        }
        if !(0.0..=1.0).contains(&self.y) {
            self.vy = -self.vy;
            self.y = self.y.clamp(0.0, 1.0);
        }
    }
}

fn cell_center(i: usize, n: usize) -> f64 {
    (i as f64 + 0.5) / n as f64
}

/// Generates a CAM-payload trace. Identical specs give identical traces.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<Trace, SimError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (rows, cols) = (spec.cam_rows, spec.cam_cols);
    let accuracy_noise = Normal::new(0.0, spec.accuracy_noise)
        .map_err(|e| SimError::InvalidSpec(e.to_string()))?;
    let mut blobs: Vec<Blob> = (0..spec.devices).map(|_| Blob::random(&mut rng)).collect();
    let mut slots = Vec::with_capacity(spec.slots);

    for _ in 0..spec.slots {
        let datasize = (0..spec.devices).map(|_| draw(&mut rng, spec.datasize_bits)).collect();
        let bandwidth = (0..spec.devices)
            .map(|_| (0..spec.servers).map(|_| draw(&mut rng, spec.bandwidth_bps)).collect())
            .collect();
        let mut cams = Vec::with_capacity(spec.devices);
        for blob in blobs.iter_mut() {
            blob.step(spec.drift);
            let mut low = Vec::with_capacity(rows * cols);
            for i in 0..rows {
                for j in 0..cols {
                    let dy = cell_center(i, rows) - blob.y;
                    let dx = cell_center(j, cols) - blob.x;
                    let g = (-(dx * dx + dy * dy) / (2.0 * blob.width * blob.width)).exp();
                    let noise: f64 = rng.gen();
                    low.push(spec.lowlight_peak * g + spec.cam_noise * noise);
                }
            }
            let mut enhanced = Vec::with_capacity(spec.algorithms);
            for &offset in &spec.offsets {
                let fx: f64 = rng.gen_range(0.5..2.0);
                let fy: f64 = rng.gen_range(0.5..2.0);
                let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let mut values = Vec::with_capacity(rows * cols);
                for i in 0..rows {
                    for j in 0..cols {
                        let arg = std::f64::consts::TAU
                            * (fx * cell_center(j, cols) + fy * cell_center(i, rows))
                            + phase;
                        let v = low[i * cols + j] + offset + spec.enhance_noise * arg.cos();
                        values.push(v.max(0.0));
                    }
                }
                enhanced.push(CamMap::new(rows, cols, values)?);
            }
            let mut accuracy = Vec::with_capacity(spec.algorithms + 1);
            accuracy.push((spec.accuracy_base + accuracy_noise.sample(&mut rng)).clamp(0.0, 1.0));
            for &offset in &spec.offsets {
                let a = spec.accuracy_base + spec.accuracy_gain * offset + accuracy_noise.sample(&mut rng);
                accuracy.push(a.clamp(0.0, 1.0));
            }
            cams.push(DeviceCams {
                lowlight: CamMap::new(rows, cols, low)?,
                enhanced,
                accuracy: Some(accuracy),
            });
        }
        slots.push(SlotData {
            datasize,
            bandwidth,
            payload: SlotPayload::Cams(cams),
        });
    }
    Ok(Trace {
        devices: spec.devices,
        servers: spec.servers,
        algorithms: spec.algorithms,
        slots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camq::{filter_cam, filtered_difference};

    fn cams(slot: &SlotData) -> &[DeviceCams] {
        match &slot.payload {
            SlotPayload::Cams(c) => c,
            SlotPayload::Quality(_) => panic!("expected CAMs"),
        }
    }

    #[test]
    fn zero_offsets_and_noise_copy_lowlight() {
        let spec = SynthSpec {
            offsets: vec![0.0; 4],
            enhance_noise: 0.0,
            slots: 5,
            ..SynthSpec::default()
        };
        let trace = generate_synthetic(&spec).unwrap();
        for slot in &trace.slots {
            for c in cams(slot) {
                let low_f = filter_cam(&c.lowlight, 0.4).unwrap();
                for e in &c.enhanced {
                    assert_eq!(e, &c.lowlight);
                    let e_f = filter_cam(e, 0.4).unwrap();
                    assert_eq!(filtered_difference(&e_f, &low_f).unwrap(), 0.0);
                }
            }
        }
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let spec = SynthSpec {
            seed: 42,
            ..SynthSpec::default()
        };
        assert_eq!(generate_synthetic(&spec).unwrap(), generate_synthetic(&spec).unwrap());
        let other = SynthSpec { seed: 43, ..spec.clone() };
        assert_ne!(generate_synthetic(&spec).unwrap(), generate_synthetic(&other).unwrap());
    }

    #[test]
    fn larger_offset_gives_larger_filtered_difference() {
        let spec = SynthSpec {
            devices: 1,
            algorithms: 2,
            offsets: vec![0.3, 0.1],
            slots: 100,
            seed: 7,
            ..SynthSpec::default()
        };
        let trace = generate_synthetic(&spec).unwrap();
        let (mut big, mut small) = (0.0, 0.0);
        for slot in &trace.slots {
            let c = &cams(slot)[0];
            let low_f = filter_cam(&c.lowlight, 0.4).unwrap();
            big += filtered_difference(&filter_cam(&c.enhanced[0], 0.4).unwrap(), &low_f).unwrap();
            small += filtered_difference(&filter_cam(&c.enhanced[1], 0.4).unwrap(), &low_f).unwrap();
        }
        assert!(big / 100.0 > small / 100.0, "{big} vs {small}");
    }

    #[test]
    fn accuracy_tracks_offset() {
        let spec = SynthSpec {
            devices: 3,
            slots: 50,
            ..SynthSpec::default()
        };
        let trace = generate_synthetic(&spec).unwrap();
        trace.validate().unwrap();
        let mut sums = [0.0; 5];
        for slot in &trace.slots {
            for c in cams(slot) {
                for (k, a) in c.accuracy.as_ref().unwrap().iter().enumerate() {
                    sums[k] += a;
                }
            }
        }
        // offsets 0.05, -0.05, 0.15, 0.10 order the means as 3 > 4 > 1 > 0 > 2.
        assert!(sums[3] > sums[4] && sums[4] > sums[1] && sums[1] > sums[0] && sums[0] > sums[2]);
    }

    #[test]
    fn degenerate_specs_rejected() {
        let bad = SynthSpec {
            offsets: vec![0.1],
            ..SynthSpec::default()
        };
        assert!(matches!(generate_synthetic(&bad), Err(SimError::InvalidSpec(_))));
        let bad = SynthSpec {
            datasize_bits: [5.0, 1.0],
            ..SynthSpec::default()
        };
        assert!(generate_synthetic(&bad).is_err());
        let bad = SynthSpec {
            cam_rows: 0,
            ..SynthSpec::default()
        };
        assert!(generate_synthetic(&bad).is_err());
        let bad = SynthSpec {
            accuracy_noise: -1.0,
            ..SynthSpec::default()
        };
        assert!(generate_synthetic(&bad).is_err());
    }
}
