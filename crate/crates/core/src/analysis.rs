//! Population-rate spectrum of a spike log.
//!
//! The rate is the spike count per 1-ms bin. Its spectrum is the magnitude of
//! the plain DFT (no window) of the mean-removed rate, for bins `0..=n/2`,
//! with frequency axis `k * 1000 / n` Hz.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::spikes::SpikeEvent;

/// Bins per second of the rate series.
pub const SAMPLE_RATE_HZ: f64 = 1000.0;

/// Band searched for the dominant population rhythm.
pub const PEAK_BAND_HZ: (f64, f64) = (1.0, 30.0);

/// Below this magnitude a spectrum counts as flat.
pub const FLAT_MAGNITUDE: f64 = 1e-9;

/// Relative tolerance within which two peak candidates count as equal; the
/// lower frequency wins a tie.
pub const PEAK_TIE_TOLERANCE: f64 = 1e-9;

/// Spike count per millisecond for `iter = 1..=num_ms`; index `k` holds
/// millisecond `k + 1`. Spikes outside that range are ignored.
pub fn population_rate(spikes: &[SpikeEvent], num_ms: u64) -> Vec<f64> {
    let mut rate = vec![0.0; num_ms as usize];
    for s in spikes {
        if (1..=num_ms).contains(&s.iter) {
            rate[(s.iter - 1) as usize] += 1.0;
        }
    }
    rate
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub freqs_hz: Vec<f64>,
    pub magnitude: Vec<f64>,
}

/// One-sided DFT magnitude of the mean-removed series.
pub fn rate_spectrum(rate: &[f64], sample_rate_hz: f64) -> Spectrum {
    let n = rate.len();
    if n == 0 {
        return Spectrum {
            freqs_hz: Vec::new(),
            magnitude: Vec::new(),
        };
    }
    let mean = rate.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = rate.iter().map(|x| Complex::new(x - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let bins = n / 2 + 1;
    Spectrum {
        freqs_hz: (0..bins).map(|k| k as f64 * sample_rate_hz / n as f64).collect(),
        magnitude: buf[..bins].iter().map(|c| c.norm()).collect(),
    }
}

/// Frequency of the largest magnitude with `lo <= f <= hi`, or `None` when
/// the band is empty or flat.
pub fn peak_in_band(spectrum: &Spectrum, lo: f64, hi: f64) -> Option<f64> {
    let band: Vec<(f64, f64)> = spectrum
        .freqs_hz
        .iter()
        .zip(&spectrum.magnitude)
        .filter(|(f, _)| (lo..=hi).contains(*f))
        .map(|(f, m)| (*f, *m))
        .collect();
    let max = band.iter().map(|(_, m)| *m).fold(0.0, f64::max);
    if max <= FLAT_MAGNITUDE {
        return None;
    }
    band.iter()
        .find(|(_, m)| *m >= max * (1.0 - PEAK_TIE_TOLERANCE))
        .map(|(f, _)| *f)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSummary {
    pub num_ms: u64,
    pub neurons: usize,
    pub total_spikes: usize,
    /// Spikes per neuron per second.
    pub mean_rate_hz: f64,
    /// Dominant frequency in `PEAK_BAND_HZ`, if the spectrum is not flat.
    pub peak_hz: Option<f64>,
}

pub fn summarize(spikes: &[SpikeEvent], num_ms: u64, neurons: usize) -> (Vec<f64>, Spectrum, RateSummary) {
    let rate = population_rate(spikes, num_ms);
    let spectrum = rate_spectrum(&rate, SAMPLE_RATE_HZ);
    let total: f64 = rate.iter().sum();
    let seconds = num_ms as f64 / SAMPLE_RATE_HZ;
    let mean_rate_hz = if neurons == 0 || num_ms == 0 {
        0.0
    } else {
        total / (neurons as f64 * seconds)
    };
    let summary = RateSummary {
        num_ms,
        neurons,
        total_spikes: total as usize,
        mean_rate_hz,
        peak_hz: peak_in_band(&spectrum, PEAK_BAND_HZ.0, PEAK_BAND_HZ.1),
    };
    (rate, spectrum, summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct O(n^2) DFT magnitude, bins 0..=n/2.
    fn naive_dft(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let mean = x.iter().sum::<f64>() / n as f64;
        (0..=n / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (t, v) in x.iter().enumerate() {
                    let phase = -2.0 * std::f64::consts::PI * (k * t) as f64 / n as f64;
                    re += (v - mean) * phase.cos();
                    im += (v - mean) * phase.sin();
                }
                (re * re + im * im).sqrt()
            })
            .collect()
    }

    fn comb(period: u64, num_ms: u64) -> Vec<SpikeEvent> {
        (1..=num_ms)
            .filter(|t| t % period == 0)
            .flat_map(|t| (0..3).map(move |n| SpikeEvent { iter: t, neuron: n }))
            .collect()
    }

    #[test]
    fn fft_matches_direct_dft() {
        let rate = population_rate(&comb(37, 500), 500);
        let fast = rate_spectrum(&rate, SAMPLE_RATE_HZ);
        let slow = naive_dft(&rate);
        assert_eq!(fast.magnitude.len(), slow.len());
        for (a, b) in fast.magnitude.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        assert_eq!(fast.freqs_hz[1], 2.0);
    }

    #[test]
    fn ten_hz_comb_peaks_at_ten() {
        let (_, _, s) = summarize(&comb(100, 1000), 1000, 3);
        assert_eq!(s.peak_hz, Some(10.0));
        assert_eq!(s.total_spikes, 30);
        assert!((s.mean_rate_hz - 10.0).abs() < 1e-12);
    }

    #[test]
    fn empty_log_is_flat() {
        let (rate, spectrum, s) = summarize(&[], 500, 10);
        assert!(rate.iter().all(|x| *x == 0.0));
        assert!(spectrum.magnitude.iter().all(|m| *m == 0.0));
        assert_eq!(s.peak_hz, None);
        assert_eq!(s.mean_rate_hz, 0.0);
    }

    #[test]
    fn out_of_range_spikes_ignored() {
        let spikes = [SpikeEvent { iter: 0, neuron: 0 }, SpikeEvent { iter: 6, neuron: 0 }, SpikeEvent { iter: 5, neuron: 1 }];
        assert_eq!(population_rate(&spikes, 5), vec![0.0, 0.0, 0.0, 0.0, 1.0]);
    }
}
