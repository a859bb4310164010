//! Enhancement quality assessment on class activation maps.
//!
//! CAMs arrive as dense non-negative matrices. Filtering zeroes every cell at
//! or below a threshold instead of dropping it, so all sums over filtered maps
//! run over the same grid and stay shape-stable.

use std::collections::VecDeque;

use thiserror::Error;

pub const DEFAULT_THRESHOLD: f64 = 0.4;
pub const DEFAULT_DENOM_FLOOR: f64 = 1e-6;
pub const DEFAULT_Q_CAP: f64 = 10.0;
pub const DEFAULT_ACCURACY: f64 = 1.0;
pub const DEFAULT_WINDOW: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CamError {
    #[error("invalid CAM shape {rows}x{cols}: both dimensions must be at least 1")]
    EmptyShape { rows: usize, cols: usize },
    #[error("CAM declared {rows}x{cols} ({expected} cells) but holds {actual} values")]
    CountMismatch {
        rows: usize,
        cols: usize,
        expected: usize,
        actual: usize,
    },
    #[error("CAM value {value} at ({row}, {col}) is negative")]
    NegativeValue { row: usize, col: usize, value: f64 },
    #[error("CAM value at ({row}, {col}) is not finite")]
    NonFiniteValue { row: usize, col: usize },
    #[error("shape mismatch: {left_rows}x{left_cols} vs {right_rows}x{right_cols}")]
    ShapeMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("filtered maps use different thresholds ({left} vs {right})")]
    ThresholdMismatch { left: f64, right: f64 },
    #[error("threshold must be finite, got {0}")]
    NonFiniteThreshold(f64),
    #[error("denominator floor must be finite and positive, got {0}")]
    InvalidFloor(f64),
    #[error("unknown device {device} (state tracks {devices} devices)")]
    UnknownDevice { device: usize, devices: usize },
    #[error("unknown algorithm {algorithm} (valid range 0..={algorithms})")]
    UnknownAlgorithm { algorithm: usize, algorithms: usize },
    #[error("accuracy {0} outside [0, 1]")]
    AccuracyOutOfRange(f64),
    #[error("invalid quality parameter {field}: {reason}")]
    InvalidParam { field: &'static str, reason: String },
}

/// Dense row-major class activation map.
#[derive(Debug, Clone, PartialEq)]
pub struct CamMap {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl CamMap {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self, CamError> {
        if rows == 0 || cols == 0 {
            return Err(CamError::EmptyShape { rows, cols });
        }
        let expected = rows * cols;
        if values.len() != expected {
            return Err(CamError::CountMismatch {
                rows,
                cols,
                expected,
                actual: values.len(),
            });
        }
        for (idx, &value) in values.iter().enumerate() {
            let (row, col) = (idx / cols, idx % cols);
            if !value.is_finite() {
                return Err(CamError::NonFiniteValue { row, col });
            }
            if value < 0.0 {
                return Err(CamError::NegativeValue { row, col, value });
            }
        }
        Ok(Self { rows, cols, values })
    }

    /// Builds a map from nested rows; all rows must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, CamError> {
        let cols = rows.first().map_or(0, Vec::len);
        let values: Vec<f64> = rows.iter().flatten().copied().collect();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(CamError::CountMismatch {
                rows: rows.len(),
                cols,
                expected: rows.len() * cols,
                actual: values.len(),
            });
        }
        Self::new(rows.len(), cols, values)
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self, CamError> {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
}

/// A CAM with every cell not exceeding `threshold` set to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredCam {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    threshold: f64,
}

impl FilteredCam {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    /// The zero-masked values as a plain map.
    pub fn to_cam(&self) -> CamMap {
        CamMap {
            rows: self.rows,
            cols: self.cols,
            values: self.values.clone(),
        }
    }
}

fn check_shapes(left: (usize, usize), right: (usize, usize)) -> Result<(), CamError> {
    if left != right {
        return Err(CamError::ShapeMismatch {
            left_rows: left.0,
            left_cols: left.1,
            right_rows: right.0,
            right_cols: right.1,
        });
    }
    Ok(())
}

/// Signed sum of cellwise differences `enhanced - lowlight`.
pub fn cam_difference(enhanced: &CamMap, lowlight: &CamMap) -> Result<f64, CamError> {
    check_shapes(enhanced.shape(), lowlight.shape())?;
    Ok(enhanced
        .values
        .iter()
        .zip(&lowlight.values)
        .map(|(e, l)| e - l)
        .sum())
}

pub fn filter_cam(map: &CamMap, threshold: f64) -> Result<FilteredCam, CamError> {
    if !threshold.is_finite() {
        return Err(CamError::NonFiniteThreshold(threshold));
    }
    let values = map
        .values
        .iter()
        .map(|&v| if v > threshold { v } else { 0.0 })
        .collect();
    Ok(FilteredCam {
        rows: map.rows,
        cols: map.cols,
        values,
        threshold,
    })
}

/// Numerator of the quality score: signed sum over the zero-masked union of
/// active cells.
pub fn filtered_difference(
    enhanced: &FilteredCam,
    lowlight: &FilteredCam,
) -> Result<f64, CamError> {
    check_shapes(enhanced.shape(), lowlight.shape())?;
    if enhanced.threshold.to_bits() != lowlight.threshold.to_bits() {
        return Err(CamError::ThresholdMismatch {
            left: enhanced.threshold,
            right: lowlight.threshold,
        });
    }
    Ok(enhanced
        .values
        .iter()
        .zip(&lowlight.values)
        .map(|(e, l)| e - l)
        .sum())
}

/// Denominator of the quality score: total absolute change of `current`
/// against each historical map, floored at `floor`.
pub fn temporal_variation<'a, I>(
    current: &FilteredCam,
    history: I,
    floor: f64,
) -> Result<f64, CamError>
where
    I: IntoIterator<Item = &'a FilteredCam>,
{
    if !(floor.is_finite() && floor > 0.0) {
        return Err(CamError::InvalidFloor(floor));
    }
    let mut total = 0.0;
    for past in history {
        check_shapes(current.shape(), past.shape())?;
        total += current
            .values
            .iter()
            .zip(&past.values)
            .map(|(c, p)| (c - p).abs())
            .sum::<f64>();
    }
    Ok(total.max(floor))
}

/// Tunables for [`QualityState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityParams {
    pub window: usize,
    pub default_accuracy: f64,
    pub denom_floor: f64,
    pub q_cap: f64,
}

impl Default for QualityParams {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            default_accuracy: DEFAULT_ACCURACY,
            denom_floor: DEFAULT_DENOM_FLOOR,
            q_cap: DEFAULT_Q_CAP,
        }
    }
}

impl QualityParams {
    pub fn validate(&self) -> Result<(), CamError> {
        if self.window == 0 {
            return Err(CamError::InvalidParam {
                field: "window",
                reason: "must be at least 1".into(),
            });
        }
        if !(0.0..=1.0).contains(&self.default_accuracy) {
            return Err(CamError::InvalidParam {
                field: "default_accuracy",
                reason: format!("{} outside [0, 1]", self.default_accuracy),
            });
        }
        if !(self.denom_floor.is_finite() && self.denom_floor > 0.0) {
            return Err(CamError::InvalidParam {
                field: "denom_floor",
                reason: format!("{} must be finite and > 0", self.denom_floor),
            });
        }
        if !(self.q_cap.is_finite() && self.q_cap > 0.0) {
            return Err(CamError::InvalidParam {
                field: "q_cap",
                reason: format!("{} must be finite and > 0", self.q_cap),
            });
        }
        Ok(())
    }
}

/// Sliding windows feeding the quality score: filtered enhanced CAMs per
/// `(device, algorithm)` for algorithms `1..=K`, and recent accuracy per
/// device.
///
/// Mutation is single-writer; reads are pure.
#[derive(Debug, Clone)]
pub struct QualityState {
    params: QualityParams,
    algorithms: usize,
    cams: Vec<Vec<VecDeque<FilteredCam>>>,
    accuracy: Vec<VecDeque<f64>>,
}

impl QualityState {
    pub fn new(devices: usize, algorithms: usize, params: QualityParams) -> Result<Self, CamError> {
        params.validate()?;
        let window = params.window;
        Ok(Self {
            params,
            algorithms,
            cams: (0..devices)
                .map(|_| {
                    (0..algorithms)
                        .map(|_| VecDeque::with_capacity(window))
                        .collect()
                })
                .collect(),
            accuracy: (0..devices)
                .map(|_| VecDeque::with_capacity(window))
                .collect(),
        })
    }

    pub fn params(&self) -> &QualityParams {
        &self.params
    }

    pub fn window_depth(&self) -> usize {
        self.params.window
    }

    pub fn devices(&self) -> usize {
        self.accuracy.len()
    }

    pub fn algorithms(&self) -> usize {
        self.algorithms
    }

    fn check_device(&self, device: usize) -> Result<(), CamError> {
        if device >= self.accuracy.len() {
            return Err(CamError::UnknownDevice {
                device,
                devices: self.accuracy.len(),
            });
        }
        Ok(())
    }

    fn check_enhancing_algorithm(&self, algorithm: usize) -> Result<(), CamError> {
        if algorithm == 0 || algorithm > self.algorithms {
            return Err(CamError::UnknownAlgorithm {
                algorithm,
                algorithms: self.algorithms,
            });
        }
        Ok(())
    }

    /// Stored filtered CAMs for `(device, algorithm)`, oldest first.
    pub fn history(&self, device: usize, algorithm: usize) -> Result<&VecDeque<FilteredCam>, CamError> {
        self.check_device(device)?;
        self.check_enhancing_algorithm(algorithm)?;
        Ok(&self.cams[device][algorithm - 1])
    }

    pub fn accuracy_history(&self, device: usize) -> Result<&VecDeque<f64>, CamError> {
        self.check_device(device)?;
        Ok(&self.accuracy[device])
    }

    /// Mean of the stored accuracies, or the default when none are stored.
    pub fn rolling_accuracy(&self, device: usize) -> Result<f64, CamError> {
        self.check_device(device)?;
        let buf = &self.accuracy[device];
        if buf.is_empty() {
            return Ok(self.params.default_accuracy);
        }
        Ok(buf.iter().sum::<f64>() / buf.len() as f64)
    }

    /// Quality score of `algorithm` for `device` in the current slot.
    /// Algorithm 0 (no enhancement) always scores exactly 0.
    pub fn enhancement_quality(
        &self,
        device: usize,
        algorithm: usize,
        enhanced: &CamMap,
        lowlight: &CamMap,
        threshold: f64,
    ) -> Result<f64, CamError> {
        self.check_device(device)?;
        if algorithm == 0 {
            return Ok(0.0);
        }
        self.check_enhancing_algorithm(algorithm)?;
        let enhanced_f = filter_cam(enhanced, threshold)?;
        let lowlight_f = filter_cam(lowlight, threshold)?;
        self.quality_from_filtered(device, algorithm, &enhanced_f, &lowlight_f)
    }

    /// Same as [`enhancement_quality`](Self::enhancement_quality) for maps
    /// already filtered with a shared threshold.
    pub fn quality_from_filtered(
        &self,
        device: usize,
        algorithm: usize,
        enhanced_f: &FilteredCam,
        lowlight_f: &FilteredCam,
    ) -> Result<f64, CamError> {
        self.check_device(device)?;
        if algorithm == 0 {
            return Ok(0.0);
        }
        self.check_enhancing_algorithm(algorithm)?;
        let numerator = filtered_difference(enhanced_f, lowlight_f)?;
        let denominator = temporal_variation(
            enhanced_f,
            &self.cams[device][algorithm - 1],
            self.params.denom_floor,
        )?;
        let alpha = self.rolling_accuracy(device)?;
        let cap = self.params.q_cap;
        Ok((alpha * numerator / denominator).clamp(-cap, cap))
    }

    /// Pushes a filtered enhanced CAM into the `(device, algorithm)` window.
    pub fn push_cam(
        &mut self,
        device: usize,
        algorithm: usize,
        filtered_enhanced: FilteredCam,
    ) -> Result<(), CamError> {
        self.check_device(device)?;
        self.check_enhancing_algorithm(algorithm)?;
        let window = self.params.window;
        let buf = &mut self.cams[device][algorithm - 1];
        if let Some(front) = buf.front() {
            check_shapes(front.shape(), filtered_enhanced.shape())?;
        }
        while buf.len() >= window {
            buf.pop_front();
        }
        buf.push_back(filtered_enhanced);
        Ok(())
    }

    pub fn push_accuracy(&mut self, device: usize, accuracy: f64) -> Result<(), CamError> {
        self.check_device(device)?;
        if !(0.0..=1.0).contains(&accuracy) {
            return Err(CamError::AccuracyOutOfRange(accuracy));
        }
        let window = self.params.window;
        let buf = &mut self.accuracy[device];
        while buf.len() >= window {
            buf.pop_front();
        }
        buf.push_back(accuracy);
        Ok(())
    }

    /// Records one slot for `(device, algorithm)`. The accuracy is validated
    /// before anything is stored, so a rejected call leaves the state as is.
    pub fn commit_slot(
        &mut self,
        device: usize,
        algorithm: usize,
        filtered_enhanced: FilteredCam,
        accuracy_feedback: Option<f64>,
    ) -> Result<(), CamError> {
        if let Some(acc) = accuracy_feedback {
            if !(0.0..=1.0).contains(&acc) {
                return Err(CamError::AccuracyOutOfRange(acc));
            }
        }
        self.push_cam(device, algorithm, filtered_enhanced)?;
        if let Some(acc) = accuracy_feedback {
            self.push_accuracy(device, acc)?;
        }
        Ok(())
    }
}
