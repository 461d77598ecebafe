//! Shipped coefficient sets against their golden design responses.

mod common;

use cardiofilt::sosfilt::{designs, load_cascade};
use common::{cascade_gain_db, coeff_dir, load_gain_fixture, load_impulse_fixture};

#[test]
fn embedded_designs_match_files_on_disk() {
    for name in designs::ALL {
        let embedded = designs::load(name, None).unwrap();
        let from_disk = load_cascade(coeff_dir().join(format!("{name}.sos"))).unwrap();
        assert_eq!(embedded, from_disk, "{name}");
    }
}

#[test]
fn impulse_responses_match_design_oracle() {
    for name in designs::ALL {
        let (fs, golden) = load_impulse_fixture(name);
        let mut cascade = designs::load(name, None).unwrap();
        assert_eq!(cascade.sample_rate_hz, fs, "{name}");
        let mut impulse = vec![0.0; golden.len()];
        impulse[0] = 1.0;
        let mut response = Vec::new();
        cascade.process(&impulse, &mut response);
        let mut worst = 0.0f64;
        for (a, b) in response.iter().zip(&golden) {
            worst = worst.max((a - b).abs());
        }
        assert!(worst <= 1e-9, "{name}: max deviation {worst:e}");
    }
}

#[test]
fn frequency_responses_match_design_oracle() {
    let gains = load_gain_fixture();
    assert!(!gains.is_empty());
    for ((name, freq), golden_db) in &gains {
        let cascade = designs::load(name, None).unwrap();
        let ours = cascade_gain_db(&cascade, freq.parse().unwrap());
        assert!(
            (ours - golden_db).abs() < 1e-6,
            "{name} @ {freq} Hz: {ours} vs {golden_db}"
        );
    }
}

#[test]
fn design_bounds() {
    let bandstop = designs::ecg_bandstop();
    assert!(cascade_gain_db(&bandstop, 50.0) < -40.0);

    let bp = designs::pcg_bandpass();
    assert!(cascade_gain_db(&bp, 100.0) >= -1.5);
    assert!(cascade_gain_db(&bp, 500.0) <= -26.0);

    let hp = designs::ecg_highpass();
    assert!(cascade_gain_db(&hp, 0.1) < -26.0);

    let aa = designs::decim_8k_to_2k();
    assert!(cascade_gain_db(&aa, 1500.0) < -40.0);
    assert!(cascade_gain_db(&aa, 100.0) > -1.01);
}
