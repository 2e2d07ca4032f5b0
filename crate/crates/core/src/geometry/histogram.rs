//! Length-weighted vessel diameter statistics.

use super::skeleton::VesselSkeleton;
use crate::error::{Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct LogNormalFit {
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiameterHistogram {
    /// Bin edges (micrometres); one more entry than `length_per_bin`.
    pub bin_edges: Vec<f64>,
    /// Centreline length (micrometres) falling in each bin.
    pub length_per_bin: Vec<f64>,
    pub total_length: f64,
    pub fit: LogNormalFit,
    /// Mode of the fitted lognormal, exp(mu - sigma^2) (micrometres).
    pub mode: f64,
    /// Set when every segment has the same diameter.
    pub degenerate: bool,
}

/// Histogram from explicit (diameter, length) pairs.
pub fn diameter_histogram_from_segments(segments: &[(f64, f64)], bin_width: f64) -> Result<DiameterHistogram> {
    if segments.is_empty() {
        return Err(Error::domain("no segments to histogram"));
    }
    if !(bin_width > 0.0) {
        return Err(Error::domain(format!("bin width must be positive, got {bin_width}")));
    }
    let total: f64 = segments.iter().map(|s| s.1).sum();
    if !(total > 0.0) {
        return Err(Error::domain("total centreline length is zero"));
    }
    let dmin = segments.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let dmax = segments.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let start = (dmin / bin_width).floor() * bin_width;
    let nbins = (((dmax - start) / bin_width).floor() as usize + 1).max(1);
    let bin_edges: Vec<f64> = (0..=nbins).map(|k| start + k as f64 * bin_width).collect();
    let mut length_per_bin = vec![0.0; nbins];
    for &(d, l) in segments {
        let k = (((d - start) / bin_width).floor() as usize).min(nbins - 1);
        length_per_bin[k] += l;
    }

    // weighted maximum likelihood for a lognormal
    let mu = segments.iter().map(|&(d, l)| l * d.ln()).sum::<f64>() / total;
    let var = segments.iter().map(|&(d, l)| l * (d.ln() - mu).powi(2)).sum::<f64>() / total;
    let degenerate = (dmax - dmin) <= 1e-12 * dmax;
    let sigma = if degenerate { 0.0 } else { var.sqrt() };
    let mode = if degenerate { dmin } else { (mu - sigma * sigma).exp() };
    Ok(DiameterHistogram { bin_edges, length_per_bin, total_length: total, fit: LogNormalFit { mu, sigma }, mode, degenerate })
}

pub fn diameter_histogram(skeleton: &VesselSkeleton, bin_width: f64) -> Result<DiameterHistogram> {
    skeleton.validate()?;
    let segs: Vec<(f64, f64)> = skeleton.capsules().iter().map(|c| (c.diameter(), c.length())).collect();
    diameter_histogram_from_segments(&segs, bin_width)
}
