use alloc::vec::Vec;
use core::f64::consts::TAU;

use crate::beating::{BeatingDataset, BeatingParams};
use crate::error::{Error, Result};

pub const MIN_GUESS_POINTS: usize = 16;

/// Starting point for [`fit_beating`](super::fit_beating) read off the data.
///
/// - A: mean count;
/// - V: (max − min)/(max + min), clipped to [0, 1];
/// - Δω: strongest non-zero DFT component of the mean-subtracted counts
///   after linear resampling onto a uniform grid;
/// - φ: 0;
/// - Ω: 2π/span, a broad envelope.
pub fn initial_guess(data: &BeatingDataset) -> Result<BeatingParams> {
    if data.len() < MIN_GUESS_POINTS {
        return Err(Error::validation(
            "beating dataset",
            alloc::format!(
                "{} points, need at least {MIN_GUESS_POINTS} for an initial guess",
                data.len()
            ),
        ));
    }
    let counts = data.counts();
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / n;
    let max = counts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = counts.iter().copied().fold(f64::INFINITY, f64::min);
    let visibility = if max + min > 0.0 {
        ((max - min) / (max + min)).clamp(0.0, 1.0)
    } else {
        0.0
    };

    Ok(BeatingParams {
        amplitude: mean,
        visibility,
        envelope_omega: TAU / data.span(),
        delta_omega: dominant_angular_frequency(data.delays(), counts),
        phase: 0.0,
    })
}

/// Angular frequency (rad per delay unit) of the largest non-DC DFT bin of
/// `values` after resampling them onto `delays.len()` uniform points.
/// A three-point parabolic fit on the magnitudes refines the peak within
/// its bin.
pub fn dominant_angular_frequency(delays: &[f64], values: &[f64]) -> f64 {
    let n = delays.len();
    if n < 4 {
        return 0.0;
    }
    let start = delays[0];
    let step = (delays[n - 1] - start) / (n - 1) as f64;
    let uniform = resample(delays, values, start, step, n);
    let mean = uniform.iter().sum::<f64>() / n as f64;

    let half = n / 2;
    let magnitudes: Vec<f64> = (0..=half)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (j, y) in uniform.iter().enumerate() {
                let (s, c) = (TAU * (k * j % n) as f64 / n as f64).sin_cos();
                re += (y - mean) * c;
                im -= (y - mean) * s;
            }
            (re * re + im * im).sqrt()
        })
        .collect();

    let mut peak = 1;
    for k in 2..=half {
        if magnitudes[k] > magnitudes[peak] {
            peak = k;
        }
    }
    let mut bin = peak as f64;
    if peak > 1 && peak < half {
        let (l, c, r) = (magnitudes[peak - 1], magnitudes[peak], magnitudes[peak + 1]);
        let denom = l - 2.0 * c + r;
        if denom < 0.0 {
            bin += (0.5 * (l - r) / denom).clamp(-0.5, 0.5);
        }
    }
    TAU * bin / (n as f64 * step)
}

fn resample(xs: &[f64], ys: &[f64], start: f64, step: f64, n: usize) -> Vec<f64> {
    let mut seg = 0;
    (0..n)
        .map(|j| {
            let x = start + step * j as f64;
            while seg + 2 < xs.len() && xs[seg + 1] < x {
                seg += 1;
            }
            let (x0, x1) = (xs[seg], xs[seg + 1]);
            let t = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
            ys[seg] + t * (ys[seg + 1] - ys[seg])
        })
        .collect()
}
