use serde::Serialize;

use super::depth::check_shape;
use crate::depth::median;
use crate::grid::Grid;
use crate::normals::Normal;
use crate::{Error, Result};

/// Slack applied to the strict `angle < t` thresholds so that an error of
/// exactly `t` degrees is not counted due to rounding in `acos`.
const THRESHOLD_TIE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalErrorStats {
    pub mean_deg: f64,
    pub median_deg: f64,
    pub within_11_25: f64,
    pub within_22_5: f64,
    pub within_30: f64,
    pub count: usize,
}

/// Angle between two vectors in degrees (atan2 form, exact at 0 and 180).
pub fn angle_deg(a: Normal, b: Normal) -> f64 {
    a.cross(&b).norm().atan2(a.dot(&b)).to_degrees()
}

/// Angular error statistics over the masked pixels; the "within" values
/// are percentages of pixels with error strictly below the threshold.
pub fn normal_metrics(pred: &Grid<Normal>, gt: &Grid<Normal>, mask: &Grid<bool>) -> Result<NormalErrorStats> {
    check_shape(gt, pred)?;
    check_shape(gt, mask)?;
    let errors: Vec<f64> = (0..gt.len()).filter(|&i| mask[i]).map(|i| angle_deg(pred[i], gt[i])).collect();
    if errors.is_empty() {
        return Err(Error::InsufficientData("empty normal mask".into()));
    }
    let n = errors.len() as f64;
    let within = |t: f64| 100.0 * errors.iter().filter(|&&e| e < t - THRESHOLD_TIE).count() as f64 / n;
    Ok(NormalErrorStats {
        mean_deg: errors.iter().sum::<f64>() / n,
        median_deg: median(errors.iter().copied()).expect("non-empty"),
        within_11_25: within(11.25),
        within_22_5: within(22.5),
        within_30: within(30.0),
        count: errors.len(),
    })
}
