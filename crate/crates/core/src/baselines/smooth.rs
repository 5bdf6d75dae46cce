//! Median release calibrated to smooth sensitivity.

use rand::Rng;

use crate::error::{check_epsilon, Error, Result};
use crate::mechanism::Noise;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothSensitivityResult {
    pub smooth_sensitivity: f64,
    pub local_sensitivity: f64,
    pub median: f64,
    pub noisy_median: f64,
    pub epsilon: f64,
}

fn check_input(values: &[f64]) -> Result<()> {
    if values.len() < 3 {
        return Err(Error::InvalidParameter(format!("median sensitivity needs n >= 3, got {}", values.len())));
    }
    if values.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter("values must be sorted".into()));
    }
    if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
        return Err(Error::OutsideUnitInterval { index, value });
    }
    Ok(())
}

/// Zero-based index of the (lower) median.
pub fn median_index(n: usize) -> usize {
    (n - 1) / 2
}

pub fn local_sensitivity_median(values: &[f64]) -> Result<f64> {
    check_input(values)?;
    let m = median_index(values.len());
    Ok((values[m + 1] - values[m]).max(values[m] - values[m - 1]))
}

/// `max_t exp(-epsilon t) * max_{0<=j<=t+1} (x[m+j] - x[m+j-t-1])`, with
/// indices below the data reading 0 and above it reading 1. Quadratic.
pub fn smooth_sensitivity(values: &[f64], epsilon: f64) -> Result<f64> {
    check_input(values)?;
    check_epsilon(epsilon)?;
    let n = values.len() as isize;
    let m = median_index(values.len()) as isize;
    let at = |i: isize| {
        if i < 0 {
            0.0
        } else if i >= n {
            1.0
        } else {
            values[i as usize]
        }
    };
    let mut best = 0.0f64;
    for t in 0..=n {
        let weight = (-epsilon * t as f64).exp();
        if weight <= best {
            // every later term is at most weight * 1
            break;
        }
        let mut ls_t = 0.0f64;
        for j in 0..=t + 1 {
            ls_t = ls_t.max(at(m + j) - at(m + j - t - 1));
        }
        best = best.max(weight * ls_t);
    }
    Ok(best)
}

/// Median plus `Lap(2 S / epsilon)` for smooth sensitivity `S`.
pub fn smooth_sensitivity_median<R: Rng + ?Sized>(
    values: &[f64],
    epsilon: f64,
    noise: Noise,
    rng: &mut R,
) -> Result<SmoothSensitivityResult> {
    let s = smooth_sensitivity(values, epsilon)?;
    let median = values[median_index(values.len())];
    let noisy_median = if s > 0.0 { median + noise.draw(2.0 * s / epsilon, rng) } else { median };
    Ok(SmoothSensitivityResult {
        smooth_sensitivity: s,
        local_sensitivity: local_sensitivity_median(values)?,
        median,
        noisy_median,
        epsilon,
    })
}
