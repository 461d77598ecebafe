//! Shared helpers for the integration suites: golden-fixture loading and
//! an independent frequency-response evaluation.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use cardiofilt::sosfilt::SosCascade;

pub fn oracle_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/oracle")
}

pub fn coeff_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("coeffs")
}

/// Golden impulse response: `(sample_rate_hz, samples)`.
pub fn load_impulse_fixture(name: &str) -> (f64, Vec<f64>) {
    let text = std::fs::read_to_string(oracle_dir().join(format!("{name}.imp")))
        .unwrap_or_else(|e| panic!("missing fixture {name}.imp: {e}"));
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split_whitespace().collect();
    assert_eq!(header[0], name);
    let fs: f64 = header[1].parse().unwrap();
    let n: usize = header[2].parse().unwrap();
    let samples: Vec<f64> = lines.map(|l| l.trim().parse().unwrap()).collect();
    assert_eq!(samples.len(), n);
    (fs, samples)
}

/// Golden gains: `(design, freq_hz) -> gain_db`.
pub fn load_gain_fixture() -> BTreeMap<(String, String), f64> {
    let text = std::fs::read_to_string(oracle_dir().join("gains.txt")).unwrap();
    let mut out = BTreeMap::new();
    for line in text.lines() {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() == 3 {
            out.insert((f[0].to_string(), f[1].to_string()), f[2].parse().unwrap());
        }
    }
    out
}

/// Golden band-SNR values keyed by case name.
pub fn load_band_snr_fixture() -> BTreeMap<String, f64> {
    let text = std::fs::read_to_string(oracle_dir().join("band_snr.txt")).unwrap();
    text.lines()
        .filter_map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            (f.len() == 2).then(|| (f[0].to_string(), f[1].parse().unwrap()))
        })
        .collect()
}

/// |H(e^{j 2 pi f / fs})| in dB, evaluated directly from the cascade's
/// coefficients (independent of the sample-by-sample recurrence).
pub fn cascade_gain_db(cascade: &SosCascade, freq_hz: f64) -> f64 {
    let w = 2.0 * std::f64::consts::PI * freq_hz / cascade.sample_rate_hz;
    let (zr, zi) = ((-w).cos(), (-w).sin()); // z^-1
    let (z2r, z2i) = ((-2.0 * w).cos(), (-2.0 * w).sin()); // z^-2
    let mut re = 1.0;
    let mut im = 0.0;
    for s in &cascade.sections {
        let nr = s.b0 + s.b1 * zr + s.b2 * z2r;
        let ni = s.b1 * zi + s.b2 * z2i;
        let dr = 1.0 + s.a1 * zr + s.a2 * z2r;
        let di = s.a1 * zi + s.a2 * z2i;
        let dmag = dr * dr + di * di;
        let hr = (nr * dr + ni * di) / dmag;
        let hi = (ni * dr - nr * di) / dmag;
        let (prev_re, prev_im) = (re, im);
        re = prev_re * hr - prev_im * hi;
        im = prev_re * hi + prev_im * hr;
    }
    10.0 * (re * re + im * im).max(1e-300).log10()
}

/// SplitMix64 white-noise source, bit-matched to the fixture generator.
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in [-1, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * 2.0f64.powi(-52) - 1.0
    }
}
