use crate::camq::CamMap;

use super::SimError;

/// CAM payload of one device in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceCams {
    pub lowlight: CamMap,
    /// Enhanced CAMs for algorithms `1..=K`.
    pub enhanced: Vec<CamMap>,
    /// Observed accuracy per algorithm `0..=K`, when labels are available.
    pub accuracy: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SlotPayload {
    Cams(Vec<DeviceCams>),
    /// Precomputed `quality[m][k]`, `k` in `0..=K`.
    Quality(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotData {
    pub datasize: Vec<f64>,
    pub bandwidth: Vec<Vec<f64>>,
    pub payload: SlotPayload,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub devices: usize,
    pub servers: usize,
    pub algorithms: usize,
    pub slots: Vec<SlotData>,
}

impl Trace {
    pub fn horizon(&self) -> usize {
        self.slots.len()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let (m, n, k) = (self.devices, self.servers, self.algorithms);
        let bad = |t: usize, why: String| SimError::InvalidTrace(format!("slot {}: {why}", t + 1));
        let mut shapes: Vec<Option<(usize, usize)>> = vec![None; m];
        for (t, slot) in self.slots.iter().enumerate() {
            if slot.datasize.len() != m {
                return Err(bad(t, format!("expected {m} datasizes")));
            }
            if slot.bandwidth.len() != m || slot.bandwidth.iter().any(|b| b.len() != n) {
                return Err(bad(t, format!("expected a {m}x{n} bandwidth matrix")));
            }
            match &slot.payload {
                SlotPayload::Quality(q) => {
                    if q.len() != m || q.iter().any(|row| row.len() != k + 1) {
                        return Err(bad(t, format!("expected a {m}x{} quality matrix", k + 1)));
                    }
                }
                SlotPayload::Cams(cams) => {
                    if cams.len() != m {
                        return Err(bad(t, format!("expected CAMs for {m} devices")));
                    }
                    for (dev, c) in cams.iter().enumerate() {
                        if c.enhanced.len() != k {
                            return Err(bad(t, format!("device {dev}: expected {k} enhanced CAMs")));
                        }
                        let shape = c.lowlight.shape();
                        if c.enhanced.iter().any(|e| e.shape() != shape) {
                            return Err(bad(t, format!("device {dev}: enhanced CAM shape differs")));
                        }
                        match shapes[dev] {
                            Some(s) if s != shape => {
                                return Err(bad(t, format!("device {dev}: CAM shape changed across slots")))
                            }
                            _ => shapes[dev] = Some(shape),
                        }
                        if let Some(acc) = &c.accuracy {
                            if acc.len() != k + 1 {
                                return Err(bad(t, format!("device {dev}: expected {} accuracies", k + 1)));
                            }
                            if let Some(a) = acc.iter().find(|a| !(0.0..=1.0).contains(*a)) {
                                return Err(bad(t, format!("device {dev}: accuracy {a} outside [0, 1]")));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}
