"""Writes a speech-like test signal, degraded copies and reference ESTOI values.

Reference values come from pystoi (extended=True). Rerun only to regenerate:
    python3 make_estoi_fixture.py
"""
import struct

import numpy as np
from pystoi import stoi

FS = 16000
rng = np.random.default_rng(1234)


def write_pcm16(path, x):
    q = np.clip(np.round(x * 32768.0), -32768, 32767).astype('<i2')
    with open(path, 'wb') as f:
        f.write(b'RIFF' + struct.pack('<I', 36 + 2 * len(q)) + b'WAVE')
        f.write(b'fmt ' + struct.pack('<IHHIIHH', 16, 1, 1, FS, 2 * FS, 2, 16))
        f.write(b'data' + struct.pack('<I', 2 * len(q)))
        f.write(q.tobytes())
    return q.astype(np.float64) / 32768.0


def speech_like(seconds):
    n = int(seconds * FS)
    t = np.arange(n) / FS
    f0 = 140.0 + 25.0 * np.sin(2 * np.pi * 0.7 * t)
    phase = 2 * np.pi * np.cumsum(f0) / FS
    x = np.zeros(n)
    for h in range(1, 30):
        gain = 1.0 / h * (1.0 + 0.8 * np.sin(2 * np.pi * (0.9 + 0.37 * h) * t + h))
        x += gain * np.sin(h * phase)
    syll = np.maximum(0.0, np.sin(2 * np.pi * 3.1 * t)) ** 1.5
    x *= syll
    x[int(1.2 * FS):int(1.45 * FS)] = 0.0
    return 0.5 * x / np.max(np.abs(x))


clean = write_pcm16('estoi_clean.wav', speech_like(2.5))
rows = []
noise = rng.standard_normal(len(clean))
for snr in (20, 5):
    g = np.sqrt(np.mean(clean ** 2) / (np.mean(noise ** 2) * 10 ** (snr / 10)))
    name = f'estoi_noisy_{snr}dB.wav'
    deg = write_pcm16(name, (clean + g * noise) * 0.8)
    rows.append((name, stoi(clean, deg, FS, extended=True)))
tail = rng.standard_normal(4000) * np.exp(-np.arange(4000) / 1200.0)
tail[0] = 4.0
rev = np.convolve(clean, tail)[:len(clean)]
deg = write_pcm16('estoi_reverb.wav', 0.5 * rev / np.max(np.abs(rev)))
rows.append(('estoi_reverb.wav', stoi(clean, deg, FS, extended=True)))
with open('estoi_reference.csv', 'w') as f:
    f.write('file,estoi\n')
    for name, v in rows:
        f.write(f'{name},{v:.10f}\n')
