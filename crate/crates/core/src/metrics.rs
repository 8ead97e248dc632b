//! Statistics for evaluating detector output: significance classification,
//! the Mann-Kendall trend test, and Pearson / Spearman correlation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative error at or above which a result counts as significantly wrong.
pub const DEFAULT_SIGNIFICANCE: f64 = 1e-3;

/// Smallest series length for which the normal approximation is used.
pub const MK_MIN_LEN: usize = 8;

/// `err_rel >= threshold`. The boundary is inclusive.
pub fn classify_significant(err_rel: f64, threshold: f64) -> bool {
    err_rel >= threshold
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Increasing,
    Decreasing,
    NoTrend,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendResult {
    pub s: i64,
    #[serde(with = "crate::fmt::float")]
    pub z: f64,
    #[serde(with = "crate::fmt::float")]
    pub p_value: f64,
    pub direction: Direction,
    /// Fewer than [`MK_MIN_LEN`] points; `p_value` is 1 and no trend is
    /// reported.
    pub small_sample: bool,
}

fn check_series(series: &[f64]) -> Result<()> {
    if series.len() < 2 {
        return Err(Error::Argument(format!(
            "trend needs at least 2 points, got {}",
            series.len()
        )));
    }
    if series.iter().any(|v| v.is_nan()) {
        return Err(Error::Argument("series contains NaN".into()));
    }
    Ok(())
}

/// Mann-Kendall `S = sum_{i<j} sign(x_j - x_i)`.
pub fn mann_kendall_s(series: &[f64]) -> Result<i64> {
    check_series(series)?;
    let mut s = 0i64;
    for (i, a) in series.iter().enumerate() {
        for b in &series[i + 1..] {
            s += match b.partial_cmp(a) {
                Some(std::cmp::Ordering::Greater) => 1,
                Some(std::cmp::Ordering::Less) => -1,
                _ => 0,
            };
        }
    }
    Ok(s)
}

/// Two-sided Mann-Kendall test with tie-corrected variance and continuity
/// correction.
pub fn mann_kendall_test(series: &[f64], alpha: f64) -> Result<TrendResult> {
    let s = mann_kendall_s(series)?;
    let n = series.len();
    if n < MK_MIN_LEN {
        return Ok(TrendResult {
            s,
            z: 0.0,
            p_value: 1.0,
            direction: Direction::NoTrend,
            small_sample: true,
        });
    }

    let mut sorted = series.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * (t - 1.0) * (2.0 * t + 5.0);
        i = j;
    }
    let nf = n as f64;
    let var = (nf * (nf - 1.0) * (2.0 * nf + 5.0) - tie_term) / 18.0;

    let z = if var <= 0.0 || s == 0 {
        0.0
    } else if s > 0 {
        (s - 1) as f64 / var.sqrt()
    } else {
        (s + 1) as f64 / var.sqrt()
    };
    let p_value = libm::erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0);
    let direction = if p_value < alpha && s > 0 {
        Direction::Increasing
    } else if p_value < alpha && s < 0 {
        Direction::Decreasing
    } else {
        Direction::NoTrend
    };
    Ok(TrendResult {
        s,
        z,
        p_value,
        direction,
        small_sample: false,
    })
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Argument(format!(
            "length mismatch: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::Argument("correlation needs at least 2 points".into()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Argument("correlation of non-finite values".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of their ranks.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let mean = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = mean;
        }
        i = j;
    }
    ranks
}

/// Spearman rank correlation: Pearson on average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Argument(format!(
            "length mismatch: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.iter().chain(ys).any(|v| v.is_nan()) {
        return Err(Error::Argument("correlation of NaN".into()));
    }
    pearson(&average_ranks(xs), &average_ranks(ys))
}
