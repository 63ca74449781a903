"""PCM16 mono WAV files, paired-dataset manifests and a synthetic toy corpus."""

import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError, UnsupportedFormatError

PCM_SCALE = 32768.0


@dataclass
class AudioClip:
    samples: np.ndarray
    sample_rate: int


def _chunks(data):
    pos = 12
    while pos + 8 <= len(data):
        cid, size = struct.unpack_from("<4sI", data, pos)
        yield cid, pos + 8, size
        pos += 8 + size + (size & 1)


def read_wav_header(path):
    """Return ``(sample_rate, sample_count, data_offset)`` after validating the format."""
    with open(path, "rb") as fh:
        data = fh.read()
    return _parse(data, path)[:3]


def _parse(data, path):
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise UnsupportedFormatError(f"{path}: chunk 'RIFF': not a RIFF/WAVE file")
    fmt = None
    for cid, start, size in _chunks(data):
        name = cid.decode("latin-1")
        if start + size > len(data):
            raise UnsupportedFormatError(f"{path}: chunk {name!r}: size {size} runs past end of file")
        if cid == b"fmt ":
            if size < 16:
                raise UnsupportedFormatError(f"{path}: chunk 'fmt ': too short ({size} bytes)")
            tag, channels, rate, _, align, bits = struct.unpack_from("<HHIIHH", data, start)
            if tag != 1:
                raise UnsupportedFormatError(f"{path}: chunk 'fmt ': format tag {tag} is not PCM")
            if channels != 1:
                raise UnsupportedFormatError(f"{path}: chunk 'fmt ': {channels} channels, only mono is supported")
            if bits != 16 or align != 2:
                raise UnsupportedFormatError(f"{path}: chunk 'fmt ': {bits}-bit samples, only 16-bit is supported")
            fmt = rate
        elif cid == b"data":
            if fmt is None:
                raise UnsupportedFormatError(f"{path}: chunk 'data': appears before 'fmt '")
            if size % 2:
                raise UnsupportedFormatError(f"{path}: chunk 'data': odd byte count {size}")
            return fmt, size // 2, start, data
    missing = "'fmt '" if fmt is None else "'data'"
    raise UnsupportedFormatError(f"{path}: chunk {missing}: missing")


def read_wav(path):
    """Read a PCM16 mono WAV; samples are scaled by 1/32768 into [-1, 1)."""
    with open(path, "rb") as fh:
        data = fh.read()
    rate, count, start, data = _parse(data, path)
    pcm = np.frombuffer(data, dtype="<i2", count=count, offset=start)
    return AudioClip(pcm.astype(np.float64) / PCM_SCALE, int(rate))


def to_pcm16(samples):
    """Saturating conversion of float samples to int16."""
    x = np.asarray(samples, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("cannot write NaN or Inf samples")
    return np.clip(np.round(x * PCM_SCALE), -32768, 32767).astype("<i2")


def write_wav(path, clip):
    pcm = to_pcm16(clip.samples)
    rate = int(clip.sample_rate)
    size = pcm.size * 2
    header = b"RIFF" + struct.pack("<I", 36 + size) + b"WAVE"
    header += b"fmt " + struct.pack("<IHHIIHH", 16, 1, 1, rate, rate * 2, 2, 16)
    header += b"data" + struct.pack("<I", size)
    with open(path, "wb") as fh:
        fh.write(header + pcm.tobytes())


# manifests -----------------------------------------------------------------

@dataclass
class DatasetManifest:
    """Pairs of ``(clean_path, noise_or_noisy_path)``.

    File format: one ``clean<TAB>other`` pair per line, paths relative to
    the manifest's directory.  ``#`` lines are comments, except the two
    directives ``# mode: premixed|mix`` and ``# snr_db: 0, 5, 10``.
    """

    pairs: list
    mode: str = "mix"
    snr_db: tuple = (0.0, 5.0, 10.0, 15.0)
    sample_rate: int = None
    path: str = None
    ids: list = field(default_factory=list)

    def validate(self):
        """Check every file exists, is readable and shares one sample rate."""
        rates = set()
        for clean, other in self.pairs:
            for p in (clean, other):
                if not os.path.exists(p):
                    raise FileNotFoundError(p)
                rates.add(read_wav_header(p)[0])
        if len(rates) > 1:
            raise ShapeError(f"manifest mixes sample rates {sorted(rates)}")
        self.sample_rate = rates.pop() if rates else None
        return self

    def load(self, snr_db=None):
        from .training import Dataset

        self.validate()
        clean = [read_wav(c).samples for c, _ in self.pairs]
        other = [read_wav(o).samples for _, o in self.pairs]
        return Dataset(clean, other, premixed=self.mode == "premixed",
                       snr_db=tuple(self.snr_db if snr_db is None else snr_db))


def load_manifest(path):
    base = os.path.dirname(os.path.abspath(path))
    pairs, ids = [], []
    mode, snrs = "mix", (0.0, 5.0, 10.0, 15.0)
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if line.lstrip().startswith("#"):
                body = line.lstrip()[1:].strip()
                if body.startswith("mode:"):
                    mode = body.split(":", 1)[1].strip()
                    if mode not in ("mix", "premixed"):
                        raise ValueError(f"{path}:{lineno}: unknown mode {mode!r}")
                elif body.startswith("snr_db:"):
                    snrs = tuple(float(s) for s in body.split(":", 1)[1].split(","))
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'clean_path<TAB>noise_path'")
            pairs.append(tuple(os.path.join(base, p) for p in parts))
            ids.append(os.path.splitext(os.path.basename(parts[0]))[0])
    return DatasetManifest(pairs, mode=mode, snr_db=snrs, path=path, ids=ids)


def write_manifest(path, manifest):
    base = os.path.dirname(os.path.abspath(path))
    with open(path, "w") as fh:
        fh.write(f"# mode: {manifest.mode}\n")
        fh.write(f"# snr_db: {', '.join(repr(float(s)) for s in manifest.snr_db)}\n")
        for clean, other in manifest.pairs:
            fh.write(f"{os.path.relpath(clean, base)}\t{os.path.relpath(other, base)}\n")


# toy corpus ----------------------------------------------------------------

def _adsr(length, rng):
    """Attack/decay/sustain/release envelope; times are fractions of the clip."""
    env = np.zeros(length)
    start = int(rng.uniform(0.0, 0.35) * length)
    dur = int(rng.uniform(0.35, 0.6) * length)
    a = int(rng.uniform(0.01, 0.05) * length)
    d = int(rng.uniform(0.05, 0.12) * length)
    r = int(rng.uniform(0.08, 0.2) * length)
    sustain = rng.uniform(0.5, 0.8)
    s = max(dur - a - d, 0)
    shape = np.concatenate([
        np.linspace(0.0, 1.0, a, endpoint=False),
        np.linspace(1.0, sustain, d, endpoint=False),
        np.full(s, sustain),
        np.linspace(sustain, 0.0, r),
    ])
    end = min(start + shape.size, length)
    env[start:end] = shape[:end - start]
    return env


def toy_clean(rng, length, rate):
    """Sum of 2-4 harmonic tones, each with its own ADSR envelope; zero mean, peak 0.5."""
    t = np.arange(length) / rate
    x = np.zeros(length)
    for _ in range(rng.integers(2, 5)):
        f0 = rng.uniform(150.0, 500.0)
        phase = rng.uniform(0, 2 * np.pi, size=3)
        tone = sum((0.5 ** h) * np.sin(2 * np.pi * f0 * (h + 1) * t + phase[h]) for h in range(3))
        x += tone * _adsr(length, rng)
    x -= x.mean()
    return 0.5 * x / np.max(np.abs(x))


def toy_noise(rng, length, color):
    """Gaussian white or 1/f (pink) noise normalised to peak 0.9."""
    w = rng.standard_normal(length)
    if color == "pink":
        spec = np.fft.rfft(w)
        f = np.arange(spec.size, dtype=np.float64)
        f[0] = 1.0
        w = np.fft.irfft(spec / np.sqrt(f), n=length)
    w -= w.mean()
    return 0.9 * w / np.max(np.abs(w))


def generate_toy_dataset(directory, seed=0, count=20, sample_rate=16000, seconds=1.0,
                         noise="white", snr_db=(0.0, 5.0, 10.0, 15.0)):
    """Write ``count`` clean/noise WAV pairs plus ``manifest.tsv``; deterministic per seed.

    ``noise`` is ``"white"``, ``"pink"`` or ``"mixed"`` (alternating).
    """
    if noise not in ("white", "pink", "mixed"):
        raise ValueError(f"unknown noise colour {noise!r}")
    rng = np.random.default_rng(seed)
    length = int(round(seconds * sample_rate))
    os.makedirs(os.path.join(directory, "clean"), exist_ok=True)
    os.makedirs(os.path.join(directory, "noise"), exist_ok=True)
    pairs, ids = [], []
    for i in range(count):
        color = noise if noise != "mixed" else ("white", "pink")[i % 2]
        clip_id = f"clip_{i:04d}"
        cpath = os.path.join(directory, "clean", clip_id + ".wav")
        npath = os.path.join(directory, "noise", clip_id + ".wav")
        write_wav(cpath, AudioClip(toy_clean(rng, length, sample_rate), sample_rate))
        write_wav(npath, AudioClip(toy_noise(rng, length, color), sample_rate))
        pairs.append((os.path.abspath(cpath), os.path.abspath(npath)))
        ids.append(clip_id)
    manifest = DatasetManifest(pairs, mode="mix", snr_db=tuple(snr_db), sample_rate=sample_rate,
                               path=os.path.join(directory, "manifest.tsv"), ids=ids)
    write_manifest(manifest.path, manifest)
    return manifest
