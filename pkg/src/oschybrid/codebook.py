"""Over-sampling codebooks of phase-quantized UPA steering vectors.

Entries are generic array vectors ``a(w_y, w_z)`` on an over-sampled grid of
spatial frequencies, optionally snapped to a ``q``-bit phase alphabet and then
deduplicated. Element ordering matches :mod:`oschybrid.channel` (z fastest).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .channel import ArrayGeometry

__all__ = [
    "QuantizerSpec",
    "Codebook",
    "generic_array_vector",
    "quantize_phases",
    "build_osc",
    "correlation",
    "save_codebook",
    "load_codebook",
]

TWO_PI = 2 * np.pi
# float phase errors are ~1e-15; anything within this window counts as a tie
_TIE_TOL = 1e-9


@dataclass(frozen=True)
class QuantizerSpec:
    """Uniform phase alphabet {0, 2pi/2^q, ..., 2pi(2^q-1)/2^q}."""

    bits: int

    def __post_init__(self):
        if int(self.bits) < 1:
            raise ValueError(f"quantizer bits must be >= 1, got {self.bits}")

    @property
    def levels(self) -> int:
        return 2 ** self.bits

    @property
    def phases(self) -> np.ndarray:
        return TWO_PI * np.arange(self.levels) / self.levels


@dataclass(frozen=True, eq=False)
class Codebook:
    """Deduplicated, ordered set of unit-norm codewords.

    ``vectors`` has one codeword per row (shape ``count x N``); ``matrix``
    gives the column form used in the linear algebra.
    """

    vectors: np.ndarray
    rho: int
    geometry: ArrayGeometry
    quantizer: Optional[QuantizerSpec] = None
    frequencies: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.vectors.setflags(write=False)

    def __len__(self) -> int:
        return self.vectors.shape[0]

    def __getitem__(self, i):
        return self.vectors[i]

    @property
    def matrix(self) -> np.ndarray:
        return self.vectors.T

    @property
    def bits(self) -> int:
        """Phase-shifter resolution, 0 meaning unquantized."""
        return 0 if self.quantizer is None else self.quantizer.bits


def generic_array_vector(geometry: ArrayGeometry, w_y: float, w_z: float) -> np.ndarray:
    """Array vector with element (n, m) = exp(j(n w_y + m w_z)) / sqrt(N)."""
    vy = np.exp(1j * np.arange(geometry.n_y) * w_y)
    vz = np.exp(1j * np.arange(geometry.n_z) * w_z)
    return np.kron(vy, vz) / np.sqrt(geometry.n_elements)


def _phase_indices(v: np.ndarray, quantizer: QuantizerSpec) -> np.ndarray:
    """Index into the phase alphabet of the circularly nearest level.

    Exact (within tolerance) halfway cases resolve to the smaller phase value.
    """
    phases = np.mod(np.angle(v), TWO_PI)
    grid = quantizer.phases
    diff = phases[..., None] - grid
    dist = np.abs(np.mod(diff + np.pi, TWO_PI) - np.pi)
    near = dist <= dist.min(axis=-1, keepdims=True) + _TIE_TOL
    # grid is ascending, so the first candidate is the smallest phase
    return np.argmax(near, axis=-1)


def quantize_phases(v: np.ndarray, quantizer: QuantizerSpec) -> np.ndarray:
    """Snap every element's phase to the nearest level; modulus becomes 1/sqrt(N)."""
    v = np.asarray(v, dtype=complex)
    n = v.shape[-1]
    table = np.exp(1j * quantizer.phases) / np.sqrt(n)
    return table[_phase_indices(v, quantizer)]


def _first_unique_rows(keys: np.ndarray) -> np.ndarray:
    _, first = np.unique(keys, axis=0, return_index=True)
    return np.sort(first)


def build_osc(geometry: ArrayGeometry, rho: int,
              quantizer: Optional[QuantizerSpec] = None) -> Codebook:
    """Build the over-sampling codebook.

    Candidates enumerate ``w_y`` over ``2 pi i / (rho N_y)`` (outer loop) and
    ``w_z`` over ``2 pi j / (rho N_z)`` (inner loop). With a quantizer each
    element phase is snapped to the alphabet; duplicates are then dropped
    keeping the first occurrence.
    """
    rho = int(rho)
    if rho < 1:
        raise ValueError(f"oversampling factor must be >= 1, got {rho}")
    ny, nz, n = geometry.n_y, geometry.n_z, geometry.n_elements
    wy = TWO_PI * np.arange(rho * ny) / (rho * ny)
    wz = TWO_PI * np.arange(rho * nz) / (rho * nz)
    freqs = np.stack(np.meshgrid(wy, wz, indexing="ij"), axis=-1).reshape(-1, 2)

    # phase of element (n, m) for every candidate, z index fastest
    idx_y = np.repeat(np.arange(ny), nz)
    idx_z = np.tile(np.arange(nz), ny)
    phase = freqs[:, :1] * idx_y[None, :] + freqs[:, 1:] * idx_z[None, :]
    cands = np.exp(1j * phase) / np.sqrt(n)

    if quantizer is not None:
        levels = _phase_indices(cands, quantizer)
        keep = _first_unique_rows(levels)
        table = np.exp(1j * quantizer.phases) / np.sqrt(n)
        vectors = table[levels[keep]]
    else:
        key = np.round(np.concatenate([cands.real, cands.imag], axis=1) * 1e9).astype(np.int64)
        keep = _first_unique_rows(key)
        vectors = cands[keep]
    return Codebook(np.ascontiguousarray(vectors), rho, geometry, quantizer, freqs[keep])


def correlation(a: np.ndarray, b: np.ndarray) -> float:
    """|a^H b| for unit-norm vectors, clipped into [0, 1]."""
    return float(min(abs(np.vdot(a, b)), 1.0))


def save_codebook(path, codebook: Codebook) -> None:
    """Write a codebook as CSV: ``# key=value`` header, then one row per entry.

    Each row interleaves real and imaginary parts. Values are written with 17
    significant digits so a load reproduces the entries bit for bit.
    """
    g = codebook.geometry
    header = [
        f"n_y={g.n_y}",
        f"n_z={g.n_z}",
        f"spacing={g.spacing_over_wavelength!r}",
        f"rho={codebook.rho}",
        f"q={codebook.bits}",
        f"count={len(codebook)}",
    ]
    inter = np.empty((len(codebook), 2 * g.n_elements))
    inter[:, 0::2] = codebook.vectors.real
    inter[:, 1::2] = codebook.vectors.imag
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "w") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        np.savetxt(fh, inter, delimiter=",", fmt="%.17g")
    os.replace(tmp, path)


def load_codebook(path) -> Codebook:
    meta = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition("=")
            meta[key] = value
    try:
        geometry = ArrayGeometry(int(meta["n_y"]), int(meta["n_z"]), float(meta["spacing"]))
        rho, q, count = int(meta["rho"]), int(meta["q"]), int(meta["count"])
    except KeyError as exc:
        raise ValueError(f"{path}: missing codebook header field {exc}") from None
    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    if data.shape != (count, 2 * geometry.n_elements):
        raise ValueError(f"{path}: expected {count} rows of {2 * geometry.n_elements} values, "
                         f"got shape {data.shape}")
    vectors = data[:, 0::2] + 1j * data[:, 1::2]
    return Codebook(vectors, rho, geometry, QuantizerSpec(q) if q else None)
