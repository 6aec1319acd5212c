//! Relative L² errors and Gaussian kernel density estimates.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use faer::MatRef;

use crate::rom::StatisticsField;
use crate::{Error, Result};

#[cfg(not(feature = "std"))]
use num_traits::Float;

/// `sqrt(sum (c - r)^2 / sum r^2)`.
pub fn l2_relative_error(candidate: &[f64], reference: &[f64]) -> Result<f64> {
    if candidate.len() != reference.len() {
        return Err(Error::DimensionMismatch {
            context: "relative error operands",
            expected: reference.len(),
            actual: candidate.len(),
        });
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (c, r) in candidate.iter().zip(reference) {
        num += (c - r) * (c - r);
        den += r * r;
    }
    if den == 0.0 {
        return Err(Error::ZeroReference { column: 0 });
    }
    Ok((num / den).sqrt())
}

/// Per-column relative errors and their maximum.
pub fn max_l2_over_time(candidate: MatRef<'_, f64>, reference: MatRef<'_, f64>) -> Result<(Vec<f64>, f64)> {
    if candidate.nrows() != reference.nrows() || candidate.ncols() != reference.ncols() {
        return Err(Error::DimensionMismatch {
            context: "space-time fields",
            expected: reference.nrows() * reference.ncols(),
            actual: candidate.nrows() * candidate.ncols(),
        });
    }
    let mut series = Vec::with_capacity(reference.ncols());
    for j in 0..reference.ncols() {
        let (c, r) = (candidate.col(j), reference.col(j));
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..r.nrows() {
            num += (c[i] - r[i]) * (c[i] - r[i]);
            den += r[i] * r[i];
        }
        if den == 0.0 {
            return Err(Error::ZeroReference { column: j });
        }
        series.push((num / den).sqrt());
    }
    let max = series.iter().copied().fold(0.0, f64::max);
    Ok((series, max))
}

/// Mean and std error series of one method against a reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub method: String,
    pub mean_series: Vec<f64>,
    pub std_series: Vec<f64>,
    pub mean_max: f64,
    pub std_max: f64,
    pub reference_samples: usize,
    pub reference_seed: u64,
}

impl ErrorReport {
    pub fn compare(
        method: impl Into<String>,
        candidate: &StatisticsField,
        reference: &StatisticsField,
        reference_samples: usize,
        reference_seed: u64,
    ) -> Result<Self> {
        let (mean_series, mean_max) = max_l2_over_time(candidate.mean.as_ref(), reference.mean.as_ref())?;
        let (std_series, std_max) = max_l2_over_time(candidate.std.as_ref(), reference.std.as_ref())?;
        Ok(Self {
            method: method.into(),
            mean_series,
            std_series,
            mean_max,
            std_max,
            reference_samples,
            reference_seed,
        })
    }
}

/// Linear-interpolation quantile (type 7) of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelDensity {
    pub bandwidth: f64,
    pub density: Vec<f64>,
}

/// Silverman bandwidth `0.9 min(sd, IQR / 1.34) n^(-1/5)`; the IQR term is
/// dropped when it vanishes.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::invalid("density estimation needs at least 2 samples"));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite sample in density estimation".into()));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    if !(var > 0.0) {
        return Err(Error::invalid(format!("degenerate samples (variance {var:e})")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let sd = var.sqrt();
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    Ok(0.9 * spread * (n as f64).powf(-0.2))
}

/// Gaussian kernel density of `samples` at each `grid` point.
pub fn gaussian_kde(samples: &[f64], grid: &[f64]) -> Result<KernelDensity> {
    let h = silverman_bandwidth(samples)?;
    let norm = 1.0 / (samples.len() as f64 * h * (2.0 * core::f64::consts::PI).sqrt());
    let density = grid
        .iter()
        .map(|&g| {
            samples
                .iter()
                .map(|&s| {
                    let z = (g - s) / h;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
                * norm
        })
        .collect();
    Ok(KernelDensity { bandwidth: h, density })
}

/// `points` evenly spaced nodes covering the sample range widened by
/// `4h` on each side.
pub fn kde_grid(samples: &[f64], bandwidth: f64, points: usize) -> Vec<f64> {
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min) - 4.0 * bandwidth;
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 4.0 * bandwidth;
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::Mat;

    #[test]
    fn relative_error_examples() {
        let r = [1.0, 2.0, -3.0];
        assert_eq!(l2_relative_error(&r, &r).unwrap(), 0.0);
        let c: Vec<f64> = r.iter().map(|v| 2.0 * v).collect();
        assert!((l2_relative_error(&c, &r).unwrap() - 1.0).abs() < 1e-15);
        let e = l2_relative_error(&[1.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((e - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(l2_relative_error(&[1.0], &[0.0]).is_err());
        assert!(l2_relative_error(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn over_time_examples() {
        let r = Mat::from_fn(3, 5, |i, j| (i + j + 1) as f64);
        let (s, m) = max_l2_over_time(r.as_ref(), r.as_ref()).unwrap();
        assert!(s.iter().all(|&v| v == 0.0) && m == 0.0);
        let mut c = r.clone();
        c[(1, 3)] += 0.5;
        let (s, m) = max_l2_over_time(c.as_ref(), r.as_ref()).unwrap();
        assert_eq!(s.iter().position(|&v| v == m), Some(3));
        let mut z = r.clone();
        for i in 0..3 {
            z[(i, 2)] = 0.0;
        }
        assert_eq!(max_l2_over_time(c.as_ref(), z.as_ref()), Err(Error::ZeroReference { column: 2 }));
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
        assert!((quantile_sorted(&v, 0.25) - 1.75).abs() < 1e-15);
    }

    #[test]
    fn kde_rejects_degenerate() {
        assert!(gaussian_kde(&[1.0], &[0.0]).is_err());
        assert!(gaussian_kde(&[2.0, 2.0, 2.0], &[0.0]).is_err());
    }
}
