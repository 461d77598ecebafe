//! Seeded synthetic heart-sound and hospital-noise generators.
//!
//! These stand in for recorded material in tests, demos and desk-scale
//! experiments: heart sounds as S1/S2 trains of Gaussian-windowed tones
//! (with a systolic murmur band for the abnormal class), and ambient
//! ward noise as broadband, amplitude-modulated babble, or sharp-attack
//! bursty recordings. Everything is deterministic in the seed.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::signal::{normalize, Signal};
use crate::synth::SignalClass;

/// Ambient-noise flavors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    /// Flat broadband ward noise.
    Broadband,
    /// Band-limited chatter with a slow amplitude modulation.
    Babble,
    /// Quiet broadband baseline with sharp-attack, exponentially
    /// decaying thumps (doors, dropped objects, footsteps).
    Bursty,
}

fn one_pole_lowpass(x: &mut [f64], cutoff_hz: f64, fs: f64, order: usize) {
    let p = (-2.0 * std::f64::consts::PI * cutoff_hz / fs).exp();
    for _ in 0..order {
        let mut state = 0.0;
        for v in x.iter_mut() {
            state = (1.0 - p) * *v + p * state;
            *v = state;
        }
    }
}

/// Synthetic phonocardiogram: repeating S1/S2 pairs, peak-normalized.
/// The abnormal class adds a band-limited systolic murmur between S1
/// and S2.
pub fn clean_pcg(seed: u64, class: SignalClass, duration_s: f64, fs: f64) -> Result<Signal> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(2).wrapping_add(1));
    let normal = Normal::new(0.0, 1.0).unwrap();
    let n = (duration_s * fs) as usize;
    let mut x = vec![0.0f64; n];

    let beat_s: f64 = rng.random_range(0.7..1.0);
    let f1: f64 = rng.random_range(30.0..45.0);
    let f2: f64 = rng.random_range(50.0..70.0);
    let mut t0: f64 = rng.random_range(0.0..0.2);

    while t0 < duration_s - 0.5 {
        for (dt, freq, amp, width) in [
            (0.0, f1, 1.0, 0.055),
            (0.30 * beat_s, f2, 0.75, 0.04),
        ] {
            let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let center = ((t0 + dt) * fs) as i64;
            let half = (3.0 * width * fs) as i64;
            for k in -half..half {
                let idx = center + k;
                if idx < 0 || idx >= n as i64 {
                    continue;
                }
                let t = k as f64 / fs;
                let env = (-0.5 * (t / width) * (t / width)).exp();
                x[idx as usize] +=
                    amp * env * (std::f64::consts::TAU * freq * t + phase).sin();
            }
        }
        if class == SignalClass::Abnormal {
            let m0 = ((t0 + 0.08) * fs) as usize;
            let m1 = (((t0 + 0.30 * beat_s - 0.03) * fs) as usize).min(n);
            if m1 > m0 {
                let mut murmur: Vec<f64> =
                    (0..m1 - m0).map(|_| normal.sample(&mut rng)).collect();
                // crude 100-180 Hz band: difference of two smoothed copies
                let mut hi = murmur.clone();
                one_pole_lowpass(&mut hi, 180.0, fs, 2);
                one_pole_lowpass(&mut murmur, 100.0, fs, 2);
                let peak = hi
                    .iter()
                    .zip(&murmur)
                    .fold(0.0f64, |a, (h, l)| a.max((h - l).abs()));
                if peak > 0.0 {
                    for (i, (h, l)) in hi.iter().zip(&murmur).enumerate() {
                        x[m0 + i] += 0.35 * (h - l) / peak;
                    }
                }
            }
        }
        t0 += beat_s;
    }
    normalize(&Signal::new(x, fs)?)
}

/// Synthetic ambient ward noise, peak-normalized.
pub fn hospital_noise(seed: u64, kind: NoiseKind, duration_s: f64, fs: f64) -> Result<Signal> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(2));
    let normal = Normal::new(0.0, 1.0).unwrap();
    let n = (duration_s * fs) as usize;
    let mut x: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();

    match kind {
        NoiseKind::Broadband => {}
        NoiseKind::Babble => {
            let cutoff: f64 = rng.random_range(250.0..550.0);
            one_pole_lowpass(&mut x, cutoff, fs, 2);
            let depth: f64 = rng.random_range(0.5..0.8);
            let rate: f64 = rng.random_range(0.3..1.5);
            let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            for (i, v) in x.iter_mut().enumerate() {
                let t = i as f64 / fs;
                *v *= 1.0 + depth * (std::f64::consts::TAU * rate * t + phase).sin();
            }
        }
        NoiseKind::Bursty => {
            let base: f64 = rng.random_range(0.06..0.12);
            for v in x.iter_mut() {
                *v *= base;
            }
            let bursts = rng.random_range(5..11);
            let lo = ((0.5 * fs) as usize).min(n / 4);
            let hi = n.saturating_sub((0.8 * fs) as usize).max(lo + 1);
            for _ in 0..bursts {
                let start = rng.random_range(lo..hi);
                let decay_s: f64 = rng.random_range(0.05..0.2);
                let m = (5.0 * decay_s * fs) as usize;
                let cutoff: f64 = rng.random_range(150.0..600.0);
                let mut b: Vec<f64> = (0..m).map(|_| normal.sample(&mut rng)).collect();
                one_pole_lowpass(&mut b, cutoff, fs, 2);
                let rms = (b.iter().map(|v| v * v).sum::<f64>() / m as f64).sqrt();
                let amp = rng.random_range(12.0..20.0) * base / rms.max(1e-12);
                for (k, bv) in b.iter().enumerate() {
                    if start + k >= n {
                        break;
                    }
                    // instant attack, exponential decay
                    let env = (-(k as f64) / (decay_s * fs)).exp();
                    x[start + k] += amp * env * bv;
                }
            }
        }
    }
    normalize(&Signal::new(x, fs)?)
}

/// Write a demo corpus in the directory layout the dataset generator
/// expects: `clean/normal/`, `clean/abnormal/`, `noise/`. Noise kinds
/// rotate broadband -> babble -> bursty. Returns the two directories.
pub fn write_demo_corpus(
    dir: &std::path::Path,
    clean_per_class: usize,
    noise_count: usize,
    clean_duration_s: f64,
    noise_duration_s: f64,
    fs: f64,
    seed: u64,
) -> Result<(std::path::PathBuf, std::path::PathBuf)> {
    let clean_root = dir.join("clean");
    let noise_dir = dir.join("noise");
    std::fs::create_dir_all(clean_root.join("normal"))?;
    std::fs::create_dir_all(clean_root.join("abnormal"))?;
    std::fs::create_dir_all(&noise_dir)?;

    for i in 0..clean_per_class {
        for (class, sub) in [
            (SignalClass::Normal, "normal"),
            (SignalClass::Abnormal, "abnormal"),
        ] {
            let s = clean_pcg(
                seed.wrapping_add(1000 + i as u64 * 2 + (class == SignalClass::Abnormal) as u64),
                class,
                clean_duration_s,
                fs,
            )?;
            crate::wav::write_wav_f32(
                clean_root.join(sub).join(format!("{sub}_{i:03}.wav")),
                &s,
            )?;
        }
    }
    for i in 0..noise_count {
        let kind = match i % 3 {
            0 => NoiseKind::Broadband,
            1 => NoiseKind::Babble,
            _ => NoiseKind::Bursty,
        };
        let s = hospital_noise(seed.wrapping_add(9000 + i as u64), kind, noise_duration_s, fs)?;
        crate::wav::write_wav_f32(noise_dir.join(format!("noise_{i:03}.wav")), &s)?;
    }
    Ok((clean_root, noise_dir))
}
