"""Synthetic radiograph-like datasets with controllable class differences.

Each class has a background texture (band-limited Gaussian noise over a
smooth low-frequency field) and a set of localized oscillatory blobs.  Blob
sites are drawn once per class, so they mark the same region in every image
of that class, jittered by a few pixels per image.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .imaging import GrayImage, save_pgm


@dataclass(frozen=True)
class ClassSpec:
    name: str
    band: tuple[float, float] = (0.0, 0.5)
    texture_amplitude: float = 0.3
    shading_amplitude: float = 1.0
    blob_count: int = 0
    blob_radius: float = 4.0
    blob_amplitude: float = 1.0
    blob_frequency: float = 0.35
    blob_jitter: int = 2
    blob_sites: tuple = field(default=())


PRESETS = {
    # same background, class-specific blob sites
    "blobs2": (
        ClassSpec("CTL", blob_count=1, blob_sites=((20, 20),)),
        ClassSpec("PNEU", blob_count=1, blob_sites=((44, 44),)),
    ),
    # four disjoint background spectra, no blobs
    "texture4": (
        ClassSpec("BAC", band=(0.05, 0.12), texture_amplitude=0.6),
        ClassSpec("CTL", band=(0.12, 0.2), texture_amplitude=0.6),
        ClassSpec("CVD19", band=(0.2, 0.3), texture_amplitude=0.6),
        ClassSpec("VIR", band=(0.3, 0.5), texture_amplitude=0.6),
    ),
    # indistinguishable classes
    "null2": (ClassSpec("A"), ClassSpec("B")),
}


def _band_noise(rng, size, band):
    white = rng.standard_normal((size, size))
    fy = np.fft.fftfreq(size)[:, None]
    fx = np.fft.rfftfreq(size)[None, :]
    radius = np.hypot(fy, fx)
    lo, hi = band
    mask = (radius >= lo) & (radius <= hi)
    field_ = np.fft.irfft2(np.fft.rfft2(white) * mask, s=(size, size))
    sd = field_.std()
    return field_ / sd if sd > 0 else field_


def _blob_sites(spec: ClassSpec, size: int, rng) -> list[tuple[float, float]]:
    if spec.blob_sites:
        return [(float(r) * size / 64.0, float(c) * size / 64.0) for r, c in spec.blob_sites[: spec.blob_count]]
    margin = spec.blob_radius * 2
    return [tuple(rng.uniform(margin, size - margin, size=2)) for _ in range(spec.blob_count)]


def render_image(spec: ClassSpec, size: int, rng: np.random.Generator, sites) -> np.ndarray:
    """One image of class ``spec`` at the given blob sites."""
    img = spec.shading_amplitude * _band_noise(rng, size, (0.0, 2.0 / size))
    img += spec.texture_amplitude * _band_noise(rng, size, spec.band)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    for r0, c0 in sites:
        r = r0 + rng.integers(-spec.blob_jitter, spec.blob_jitter + 1)
        c = c0 + rng.integers(-spec.blob_jitter, spec.blob_jitter + 1)
        theta = rng.uniform(0, np.pi)
        phase = rng.uniform(0, 2 * np.pi)
        envelope = np.exp(-((yy - r) ** 2 + (xx - c) ** 2) / (2 * spec.blob_radius ** 2))
        wave = np.cos(2 * np.pi * spec.blob_frequency * (np.cos(theta) * xx + np.sin(theta) * yy) + phase)
        img += spec.blob_amplitude * envelope * wave
    return img


def generate(specs, n_per_class: int, image_size: int = 64, seed: int = 0):
    """Yield (class name, image index, pixels) in class order, deterministically."""
    if n_per_class < 1:
        raise ValueError(f"n_per_class must be >= 1, got {n_per_class}")
    for ci, spec in enumerate(specs):
        sites = _blob_sites(spec, image_size, np.random.default_rng([seed, ci, 0]))
        for i in range(n_per_class):
            rng = np.random.default_rng([seed, ci, i + 1])
            yield spec.name, i, render_image(spec, image_size, rng, sites)


def gen_synthetic(out_dir, n_per_class: int, specs="blobs2", image_size: int = 64, seed: int = 0,
                  max_value: int = 65535) -> list[str]:
    """Write ``out_dir/<class>/<class>_<i>.pgm`` and return the written paths."""
    if isinstance(specs, str):
        if specs not in PRESETS:
            raise ValueError(f"unknown preset {specs!r}; choose from {sorted(PRESETS)}")
        specs = PRESETS[specs]
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ValueError("class names must be unique")
    paths = []
    for name, i, px in generate(specs, n_per_class, image_size, seed):
        d = os.path.join(out_dir, name)
        os.makedirs(d, exist_ok=True)
        path = os.path.join(d, f"{name}_{i:04d}.pgm")
        save_pgm(GrayImage(px), path, max_value=max_value)
        paths.append(path)
    return paths
