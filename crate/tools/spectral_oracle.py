#!/usr/bin/env python3
"""Golden band-SNR values from an independent periodogram implementation.

Computes the expected band-SNR of the tone test cases and of the full PCG
pipeline demonstration (decimate -> burst-adaptive canceller -> band-pass)
with a reference implementation that shares no code with the Rust crate.
The Welch estimator here is validated against scipy.signal.welch before
the values are written.

Run from the repository root:  python3 tools/spectral_oracle.py
"""

import math
import os

import numpy as np
from scipy import signal as scipy_signal

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
COEFF_DIR = os.path.join(ROOT, "crates", "core", "coeffs")
ORACLE_DIR = os.path.join(ROOT, "crates", "core", "tests", "oracle")

M64 = (1 << 64) - 1


def splitmix64(state):
    state = (state + 0x9E3779B97F4A7C15) & M64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
    z ^= z >> 31
    return state, z


def white_noise(seed, n):
    out = []
    s = seed
    for _ in range(n):
        s, z = splitmix64(s)
        out.append((z >> 11) * 2.0 ** -52 - 1.0)
    return out


def read_sos(name):
    path = os.path.join(COEFF_DIR, name + ".sos")
    with open(path) as f:
        header = f.readline().strip().split(",")
        fs = float(header[1])
        n = int(header[2])
        rows = [tuple(float(v) for v in f.readline().split()) for _ in range(n)]
    return fs, rows


def sosfilt(rows, x):
    y = list(x)
    for (b0, b1, b2, a1, a2) in rows:
        z1 = 0.0
        z2 = 0.0
        for i in range(len(y)):
            xi = y[i]
            yi = b0 * xi + z1
            z1 = b1 * xi - a1 * yi + z2
            z2 = b2 * xi - a2 * yi
            y[i] = yi
    return y


def ar_path(x):
    y = []
    s0 = 0.0
    for v in x:
        s0 = v + 0.5 * s0
        y.append(s0)
    return y


def fir(coeffs, x):
    y = []
    hist = [0.0] * len(coeffs)
    for v in x:
        hist.insert(0, v)
        hist.pop()
        y.append(sum(c * h for c, h in zip(coeffs, hist)))
    return y


def ba_nlms(primary, ref, taps=10, mu0=0.05, eps=1e-3, alpha=0.99, eta=5.0, beta=6.0):
    w = [0.0] * taps
    win = [0.0] * taps
    ebar = 0.0
    out = []
    for p, r in zip(primary, ref):
        win.insert(0, r)
        win.pop()
        y = sum(wj * xj for wj, xj in zip(w, win))
        e = p - y
        out.append(e)
        energy = sum(xj * xj for xj in win)
        ebar = alpha * ebar + (1.0 - alpha) * energy
        mu = mu0 * beta if energy > eta * ebar else mu0
        g = mu / (eps + energy)
        for j in range(taps):
            w[j] += g * e * win[j]
    return out


def welch_psd(x, fs):
    """1 s Hann (periodic) segments, 50% overlap, density scaling, one-sided."""
    nperseg = int(fs)
    step = nperseg // 2
    win = np.array([0.5 - 0.5 * math.cos(2.0 * math.pi * i / nperseg) for i in range(nperseg)])
    u = fs * float(np.sum(win * win))
    x = np.asarray(x)
    nbins = nperseg // 2 + 1
    acc = np.zeros(nbins)
    count = 0
    start = 0
    while start + nperseg <= len(x):
        seg = x[start:start + nperseg] * win
        spec = np.fft.rfft(seg)
        p = (spec.real ** 2 + spec.imag ** 2) / u
        p[1:] *= 2.0
        if nperseg % 2 == 0:
            p[-1] /= 2.0
        acc += p
        count += 1
        start += step
    assert count > 0
    return acc / count


def band_power(psd, fs, lo, hi):
    nperseg = (len(psd) - 1) * 2
    df = fs / nperseg
    total = 0.0
    for k, p in enumerate(psd):
        f = k * df
        if (lo <= f < hi) or (f == fs / 2.0 and hi >= fs / 2.0):
            total += p * df
    return total


def band_snr(x, fs, lfn=(0.0, 20.0), lf=(20.0, 200.0), hf=(200.0, 1e9)):
    psd = welch_psd(x, fs)
    hf = (hf[0], min(hf[1], fs / 2.0 + 1.0))
    num = band_power(psd, fs, *lf)
    den = band_power(psd, fs, *lfn) + band_power(psd, fs, *hf)
    return 10.0 * math.log10(num / den)


def check_against_scipy():
    rng = np.random.default_rng(1)
    x = rng.normal(0, 1, 7000)
    fs = 2000.0
    mine = welch_psd(x, fs)
    f, ref = scipy_signal.welch(
        x, fs=fs, window="hann", nperseg=2000, noverlap=1000,
        detrend=False, scaling="density",
    )
    err = np.max(np.abs(mine - ref) / np.maximum(np.abs(ref), 1e-300))
    assert err < 1e-10, f"welch mismatch vs scipy: {err}"
    print(f"welch vs scipy max rel err: {err:.3e}")


def main():
    check_against_scipy()
    fs2 = 2000.0
    lines = []

    n = int(4 * fs2)
    tone100 = [math.sin(2.0 * math.pi * 100.0 * i / fs2) for i in range(n)]
    tone500 = [math.sin(2.0 * math.pi * 500.0 * i / fs2) for i in range(n)]
    twotone = [a + b for a, b in zip(tone100, tone500)]
    lines.append(("tone100_db", band_snr(tone100, fs2)))
    lines.append(("tone500_db", band_snr(tone500, fs2)))
    lines.append(("twotone_db", band_snr(twotone, fs2)))

    # Full PCG pipeline demonstration: 100 Hz tone + broadband noise at
    # -3 dB, 8 kHz capture, decimate by 4, burst-adaptive canceller,
    # 20-200 Hz band-pass.
    fs8 = 8000.0
    n8 = int(16 * fs8)
    clean8 = [0.5 * math.sin(2.0 * math.pi * 100.0 * i / fs8) for i in range(n8)]
    raw8 = white_noise(0x5EED, n8)
    noise8 = ar_path(raw8)
    ref8 = fir([2.5, -2.0, 1.0, -0.5], raw8)
    p_c = sum(v * v for v in clean8) / n8
    p_n = sum(v * v for v in noise8) / n8
    scale = math.sqrt(p_c / (p_n * 10.0 ** (-3.0 / 10.0)))
    primary8 = [c + scale * v for c, v in zip(clean8, noise8)]

    _, aa = read_sos("decim_8k_to_2k")
    primary2 = sosfilt(aa, primary8)[::4]
    ref2 = sosfilt(aa, ref8)[::4]

    denoised2 = ba_nlms(primary2, ref2)
    _, bp = read_sos("pcg_bandpass")
    post2 = sosfilt(bp, denoised2)

    before = band_snr(primary2, fs2)
    after = band_snr(post2, fs2)
    lines.append(("pipeline_scale", scale))
    lines.append(("pipeline_before_db", before))
    lines.append(("pipeline_after_db", after))
    lines.append(("pipeline_improvement_db", after - before))

    with open(os.path.join(ORACLE_DIR, "band_snr.txt"), "w") as f:
        for k, v in lines:
            f.write(f"{k} {float(v)!r}\n")
            print(f"{k} = {v:.6f}")


if __name__ == "__main__":
    main()
