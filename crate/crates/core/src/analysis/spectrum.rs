use std::fmt::Write as _;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::AnalysisError;
use crate::Time;

/// One-sided periodogram of a binned clock-edge impulse train.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub bin: Time,
    /// Frequency resolution.
    pub bin_hz: f64,
    /// Sample rate of the impulse train, `1 / bin`.
    pub sample_rate: f64,
    /// `nfft / 2 + 1` bins from DC to Nyquist.
    pub power: Vec<f64>,
    /// Time-domain energy of the mean-removed train.
    pub energy: f64,
}

impl Spectrum {
    pub fn frequency(&self, k: usize) -> f64 {
        k as f64 * self.bin_hz
    }

    pub fn nyquist(&self) -> f64 {
        self.sample_rate / 2.0
    }

    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }

    /// Largest bin with frequency in `[lo, hi]`.
    pub fn peak_in_band(&self, lo: f64, hi: f64) -> Result<(usize, f64), AnalysisError> {
        let nyquist = self.nyquist();
        let out = AnalysisError::BandOutOfRange { lo, hi, nyquist };
        if !(lo >= 0.0 && lo <= hi && hi <= nyquist) {
            return Err(out);
        }
        let first = (lo / self.bin_hz).ceil() as usize;
        let last = ((hi / self.bin_hz).floor() as usize).min(self.power.len() - 1);
        (first..=last)
            .map(|k| (k, self.power[k]))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or(out)
    }

    /// Strongest non-DC bin. Harmonics of an impulse train carry equal
    /// power, so near-ties (1e-9 relative) go to the lowest frequency.
    pub fn dominant(&self) -> (usize, f64) {
        let mut best = (0, 0.0);
        for (k, &p) in self.power.iter().enumerate().skip(1) {
            if p > best.1 * (1.0 + 1e-9) {
                best = (k, p);
            }
        }
        best
    }

    /// `frequency_hz,power`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("frequency_hz,power\n");
        for (k, p) in self.power.iter().enumerate() {
            let _ = writeln!(out, "{},{}", self.frequency(k), p);
        }
        out
    }
}

/// Bins `edges` into counts of width `bin`, removes the mean over all
/// `nfft` samples (zero padding included), and returns the one-sided power
/// scaled so that the bins sum to the time-domain energy.
pub fn clock_spectrum(edges: &[Time], bin: Time, nfft: usize) -> Result<Spectrum, AnalysisError> {
    if bin == Time::ZERO {
        return Err(AnalysisError::InvalidBin);
    }
    let last = edges.iter().max().ok_or(AnalysisError::InsufficientLength)?;
    let first = edges.iter().min().expect("non-empty");
    if last.as_ps() - first.as_ps() < bin.as_ps() {
        return Err(AnalysisError::InsufficientLength);
    }
    let needed = (last.as_ps() / bin.as_ps()) as usize + 1;
    if !nfft.is_power_of_two() || nfft < needed {
        return Err(AnalysisError::InvalidNfft { nfft, needed });
    }

    let mut counts = vec![0.0f64; nfft];
    for e in edges {
        counts[(e.as_ps() / bin.as_ps()) as usize] += 1.0;
    }
    let mean = edges.len() as f64 / nfft as f64;
    let mut buf: Vec<Complex<f64>> = counts.iter().map(|&c| Complex::new(c - mean, 0.0)).collect();
    let energy = buf.iter().map(|x| x.re * x.re).sum();

    FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);

    let n = nfft as f64;
    let half = nfft / 2;
    let power = (0..=half)
        .map(|k| {
            let p = buf[k].norm_sqr() / n;
            if k == 0 || k == half {
                p
            } else {
                2.0 * p
            }
        })
        .collect();
    let sample_rate = 1.0 / bin.as_secs_f64();
    Ok(Spectrum {
        bin,
        bin_hz: sample_rate / n,
        sample_rate,
        power,
        energy,
    })
}

/// `10 log10(max reference / max spread)` over the bins in `band` (Hz).
pub fn peak_reduction(
    reference: &Spectrum,
    spread: &Spectrum,
    band: (f64, f64),
) -> Result<f64, AnalysisError> {
    if reference.bin != spread.bin || reference.power.len() != spread.power.len() {
        return Err(AnalysisError::MismatchedSpectra);
    }
    let (_, r) = reference.peak_in_band(band.0, band.1)?;
    let (_, s) = spread.peak_in_band(band.0, band.1)?;
    Ok(match (r > 0.0, s > 0.0) {
        (_, true) => 10.0 * (r / s).log10(),
        (true, false) => f64::INFINITY,
        (false, false) => 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct O(n^2) DFT power, used as an independent oracle.
    fn naive_power(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..=n / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (t, v) in x.iter().enumerate() {
                    let a = -2.0 * std::f64::consts::PI * (k * t) as f64 / n as f64;
                    re += v * a.cos();
                    im += v * a.sin();
                }
                let p = (re * re + im * im) / n as f64;
                if k == 0 || k == n / 2 {
                    p
                } else {
                    2.0 * p
                }
            })
            .collect()
    }

    #[test]
    fn matches_direct_transform() {
        let edges: Vec<Time> = [0, 3, 4, 10, 11, 17, 30].iter().map(|&b| Time(b * 100)).collect();
        let s = clock_spectrum(&edges, Time(100), 32).unwrap();
        let mut x = vec![0.0; 32];
        for e in &edges {
            x[(e.0 / 100) as usize] += 1.0;
        }
        let mean = edges.len() as f64 / 32.0;
        let x: Vec<f64> = x.iter().map(|v| v - mean).collect();
        for (a, b) in s.power.iter().zip(naive_power(&x)) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn periodic_train_peaks_at_fundamental() {
        // period 16 bins of 625 ps = 10 ns
        let edges: Vec<Time> = (0..4096).map(|k| Time(k * 10_000)).collect();
        let s = clock_spectrum(&edges, Time(625), 1 << 16).unwrap();
        let (k, _) = s.dominant();
        assert!((s.frequency(k) - 1e8).abs() < s.bin_hz);
        let harmonic: f64 = (1..=s.power.len() - 1)
            .filter(|k| k % 4096 == 0)
            .map(|k| s.power[k])
            .sum();
        let non_dc = s.total_power() - s.power[0];
        assert!(harmonic / non_dc >= 0.9);
    }

    #[test]
    fn errors() {
        assert_eq!(clock_spectrum(&[], Time(10), 8), Err(AnalysisError::InsufficientLength));
        assert_eq!(clock_spectrum(&[Time(1), Time(5)], Time(10), 8), Err(AnalysisError::InsufficientLength));
        assert_eq!(clock_spectrum(&[Time(0)], Time(0), 8), Err(AnalysisError::InvalidBin));
        assert!(matches!(
            clock_spectrum(&[Time(0), Time(100)], Time(10), 6),
            Err(AnalysisError::InvalidNfft { .. })
        ));
        assert!(matches!(
            clock_spectrum(&[Time(0), Time(100)], Time(10), 8),
            Err(AnalysisError::InvalidNfft { needed: 11, .. })
        ));
    }

    fn flat(values: &[f64]) -> Spectrum {
        Spectrum {
            bin: Time(1000),
            bin_hz: 1e9 / ((values.len() - 1) * 2) as f64,
            sample_rate: 1e9,
            power: values.to_vec(),
            energy: values.iter().sum(),
        }
    }

    #[test]
    fn reduction_is_log_ratio_of_peaks() {
        let r = flat(&[0.0, 100.0, 1.0, 0.0, 0.0]);
        let s = flat(&[0.0, 25.0, 20.0, 0.0, 0.0]);
        let db = peak_reduction(&r, &s, (0.0, 5e8)).unwrap();
        assert!((db - 6.0206).abs() < 1e-3);
        assert_eq!(peak_reduction(&r, &r, (0.0, 5e8)).unwrap(), 0.0);
    }

    #[test]
    fn band_and_shape_checks() {
        let r = flat(&[0.0, 1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            peak_reduction(&r, &r, (0.0, 6e8)),
            Err(AnalysisError::BandOutOfRange { .. })
        ));
        assert!(matches!(
            peak_reduction(&r, &r, (1.3e8, 1.4e8)),
            Err(AnalysisError::BandOutOfRange { .. })
        ));
        let short = flat(&[0.0, 1.0, 1.0]);
        assert_eq!(peak_reduction(&r, &short, (0.0, 1e8)), Err(AnalysisError::MismatchedSpectra));
    }

    proptest! {
        #[test]
        fn self_reduction_is_zero(values in proptest::collection::vec(0.0f64..1e6, 5)) {
            let s = flat(&values);
            prop_assert_eq!(peak_reduction(&s, &s, (0.0, 5e8)).unwrap(), 0.0);
        }

        #[test]
        fn power_is_non_negative_and_sums_to_energy(
            bins in proptest::collection::vec(0u64..512, 2..200)
        ) {
            let edges: Vec<Time> = bins.iter().map(|b| Time(b * 10)).collect();
            prop_assume!(edges.iter().max() != edges.iter().min());
            let s = clock_spectrum(&edges, Time(10), 512).unwrap();
            prop_assert!(s.power.iter().all(|p| *p >= 0.0));
            prop_assert!((s.total_power() - s.energy).abs() <= 1e-9 * s.energy.max(1.0));
        }
    }
}
