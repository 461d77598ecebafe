#!/usr/bin/env python3
"""Generate the shipped SOS coefficient files and their golden responses.

Designs are produced once with scipy and committed; the Rust code never
designs filters at runtime. Outputs:

  crates/core/coeffs/<name>.sos          coefficient files (text format)
  crates/core/tests/oracle/<name>.imp    4096-sample impulse responses
  crates/core/tests/oracle/gains.txt     gain (dB) at checked frequencies

Run from the repository root:  python3 tools/design_filters.py
"""

import os

import numpy as np
from scipy import signal

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
COEFF_DIR = os.path.join(ROOT, "crates", "core", "coeffs")
ORACLE_DIR = os.path.join(ROOT, "crates", "core", "tests", "oracle")

IMP_LEN = 4096

# name -> (design, fs, frequencies to record gains at)
DESIGNS = {
    # 0.5 Hz high-pass: baseline-drift removal. rp 0.2 so the three-stage
    # cascade stays within ~0.6 dB in the passband; rs 70 so the DC
    # steady-state (elliptic stopband floor) sits well below 1e-3.
    "ecg_highpass": (
        lambda: signal.ellip(4, 0.2, 70, 0.5 / 250.0, "highpass", output="sos"),
        500.0,
        [0.1, 0.5, 1.0, 10.0, 50.0, 100.0],
    ),
    # 150 Hz low-pass: EMG / high-frequency noise.
    "ecg_lowpass": (
        lambda: signal.ellip(4, 0.2, 60, 150.0 / 250.0, "lowpass", output="sos"),
        500.0,
        [0.1, 10.0, 50.0, 100.0, 150.0, 200.0],
    ),
    # 49.5-50.5 Hz bandstop: power-line interference. rs 50 leaves ~10 dB
    # of margin on the -40 dB requirement at exactly 50 Hz.
    "ecg_bandstop": (
        lambda: signal.ellip(
            4, 0.2, 50, [49.5 / 250.0, 50.5 / 250.0], "bandstop", output="sos"
        ),
        500.0,
        [10.0, 49.5, 50.0, 50.5, 60.0, 100.0],
    ),
    # 20-200 Hz band-pass: primary heart-sound range, applied at 2 kHz.
    "pcg_bandpass": (
        lambda: signal.ellip(
            4, 1.0, 50, [20.0 / 1000.0, 200.0 / 1000.0], "bandpass", output="sos"
        ),
        2000.0,
        [5.0, 10.0, 20.0, 100.0, 200.0, 300.0, 500.0, 900.0],
    ),
    # Decimation anti-alias for the 8 kHz -> 2 kHz path: low-pass at
    # 0.8 x output Nyquist = 800 Hz.
    "decim_8k_to_2k": (
        lambda: signal.ellip(8, 1.0, 60, 800.0 / 4000.0, "lowpass", output="sos"),
        8000.0,
        [100.0, 400.0, 800.0, 1000.0, 1500.0, 3000.0],
    ),
}


def write_sos(path, label, fs, sos):
    with open(path, "w") as f:
        f.write(f"{label}, {float(fs)!r}, {len(sos)}\n")
        for row in sos:
            b0, b1, b2, a0, a1, a2 = (float(v) for v in row)
            assert a0 == 1.0
            f.write(f"{b0!r} {b1!r} {b2!r} {a1!r} {a2!r}\n")


def main():
    os.makedirs(COEFF_DIR, exist_ok=True)
    os.makedirs(ORACLE_DIR, exist_ok=True)
    gains_lines = []
    for name, (design, fs, freqs) in DESIGNS.items():
        sos = design()
        # stability: poles strictly inside the unit circle
        for row in sos:
            a1, a2 = row[4], row[5]
            assert abs(a2) < 1.0 and abs(a1) < 1.0 + a2, f"{name}: unstable section"
        write_sos(os.path.join(COEFF_DIR, name + ".sos"), name, fs, sos)

        imp = np.zeros(IMP_LEN)
        imp[0] = 1.0
        h = signal.sosfilt(sos, imp)
        with open(os.path.join(ORACLE_DIR, name + ".imp"), "w") as f:
            f.write(f"{name} {float(fs)!r} {IMP_LEN}\n")
            for v in h:
                f.write(f"{float(v)!r}\n")

        w, resp = signal.sosfreqz(sos, worN=freqs, fs=fs)
        for f_hz, r in zip(freqs, resp):
            db = float(20.0 * np.log10(max(abs(r), 1e-300)))
            gains_lines.append(f"{name} {float(f_hz)!r} {db!r}")
        print(f"{name}: {len(sos)} sections written")
    with open(os.path.join(ORACLE_DIR, "gains.txt"), "w") as f:
        f.write("\n".join(gains_lines) + "\n")
    print("gains.txt written")


if __name__ == "__main__":
    main()
