//! Branch tracking for complex logarithms and arguments.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

/// Shifts `value` by a multiple of 2π so it lies within π of `reference`.
pub fn nearest_branch(value: f64, reference: f64) -> f64 {
    value - TAU * ((value - reference) / TAU).round()
}

/// Unwrapped phase sequence and the number of 2π corrections applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Unwrapped {
    pub phase: Vec<f64>,
    pub jumps: usize,
    /// Largest adjacent step after unwrapping.
    pub max_step: f64,
}

/// Removes 2π discontinuities from a sequence of principal-branch angles.
///
/// The first sample is placed on the branch nearest `seed` (its own principal
/// value when `seed` is `None`).
pub fn unwrap(wrapped: &[f64], seed: Option<f64>) -> Unwrapped {
    let mut phase = Vec::with_capacity(wrapped.len());
    let mut jumps = 0;
    let mut max_step = 0.0f64;
    for (k, &w) in wrapped.iter().enumerate() {
        let reference = if k == 0 { seed } else { phase.last().copied() };
        let v = match reference {
            Some(r) => nearest_branch(w, r),
            None => w,
        };
        if k > 0 {
            let prev: f64 = phase[k - 1];
            // branch offsets are multiples of 2π; a change means a corrected wrap
            if ((v - w) - (prev - wrapped[k - 1])).abs() > PI {
                jumps += 1;
            }
            max_step = max_step.max((v - prev).abs());
        }
        phase.push(v);
    }
    Unwrapped {
        phase,
        jumps,
        max_step,
    }
}

/// Unwrapped argument of a complex sequence.
pub fn unwrapped_arg(values: &[Complex64], seed: Option<f64>) -> Unwrapped {
    let wrapped: Vec<f64> = values.iter().map(|v| v.arg()).collect();
    unwrap(&wrapped, seed)
}

/// Ordinary least-squares line `y = intercept + slope·x` and its RMS residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub rms: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> LineFit {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rms = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    LineFit {
        slope,
        intercept,
        rms,
    }
}
