"""UPA array responses and clustered mmWave channel realizations.

Element ordering
----------------
A UPA with ``n_y`` elements on the y axis and ``n_z`` on the z axis is
flattened with the z index varying fastest: element ``(n, m)`` sits at
position ``n * n_z + m``. Every module (channel, codebook, analog) relies on
this ordering, which is what ``np.kron(y_part, z_part)`` produces.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

__all__ = [
    "ArrayGeometry",
    "ClusterSpec",
    "PathRealization",
    "ChannelSet",
    "upa_response",
    "sample_cluster_angles",
    "sample_channel",
]

SQRT3 = np.sqrt(3.0)


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform planar array in the yz-plane."""

    n_y: int
    n_z: int
    spacing_over_wavelength: float = 0.5

    def __post_init__(self):
        if int(self.n_y) < 1 or int(self.n_z) < 1:
            raise ValueError(f"array dimensions must be >= 1, got {self.n_y}x{self.n_z}")
        if not self.spacing_over_wavelength > 0:
            raise ValueError("spacing_over_wavelength must be positive")

    @property
    def n_elements(self) -> int:
        return self.n_y * self.n_z

    def __str__(self) -> str:
        return f"{self.n_y}x{self.n_z}"


@dataclass(frozen=True)
class ClusterSpec:
    """Cluster/path counts, center ranges and per-cluster angle spreads (radians)."""

    n_clusters: int = 8
    n_paths: int = 10
    center_azimuth_range: Tuple[float, float] = (-np.pi / 2, np.pi / 2)
    center_elevation_range: Tuple[float, float] = (-np.pi / 2, np.pi / 2)
    spread_az_tx: float = np.deg2rad(7.5)
    spread_el_tx: float = np.deg2rad(7.5)
    spread_az_rx: float = np.deg2rad(7.5)
    spread_el_rx: float = np.deg2rad(7.5)

    def __post_init__(self):
        if self.n_clusters < 1 or self.n_paths < 1:
            raise ValueError("n_clusters and n_paths must be positive")
        for name in ("spread_az_tx", "spread_el_tx", "spread_az_rx", "spread_el_rx"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        for rng in (self.center_azimuth_range, self.center_elevation_range):
            lo, hi = rng
            if not (-np.pi / 2 - 1e-12 <= lo <= hi <= np.pi / 2 + 1e-12):
                raise ValueError(f"center range {rng} must lie within [-pi/2, pi/2]")

    @classmethod
    def with_spread(cls, spread_deg: float, **kwargs) -> "ClusterSpec":
        s = np.deg2rad(spread_deg)
        return cls(spread_az_tx=s, spread_el_tx=s, spread_az_rx=s, spread_el_rx=s, **kwargs)


@dataclass(frozen=True)
class PathRealization:
    gain: complex
    aoa_az: float
    aoa_el: float
    aod_az: float
    aod_el: float


@dataclass
class ChannelSet:
    """Per-user channel matrices (each N_r x N_t) and the paths that built them."""

    per_user: List[np.ndarray]
    realizations: List[List[PathRealization]] = field(default_factory=list)

    @property
    def n_users(self) -> int:
        return len(self.per_user)

    def __getitem__(self, k: int) -> np.ndarray:
        return self.per_user[k]

    def __len__(self) -> int:
        return len(self.per_user)


def _phase_ramp(n: int, step) -> np.ndarray:
    """exp(j * idx * step) for idx in 0..n-1, broadcast over trailing dims of ``step``."""
    idx = np.arange(n).reshape((n,) + (1,) * np.ndim(step))
    return np.exp(1j * idx * step)


def upa_response(geometry: ArrayGeometry, azimuth, elevation) -> np.ndarray:
    """Array response of a UPA toward (azimuth, elevation).

    Scalar angles give a vector of length ``N``; 1-D angle arrays of length L
    give an ``N x L`` matrix whose columns are the responses.
    """
    az = np.asarray(azimuth, dtype=float)
    el = np.asarray(elevation, dtype=float)
    kd = 2 * np.pi * geometry.spacing_over_wavelength
    ay = _phase_ramp(geometry.n_y, kd * np.sin(az) * np.cos(el))
    az_ = _phase_ramp(geometry.n_z, kd * np.sin(el))
    if ay.ndim == 1:
        v = np.kron(ay, az_)
    else:
        # column-wise Kronecker product, z fastest
        v = (ay[:, None, :] * az_[None, :, :]).reshape(geometry.n_elements, -1)
    return v / np.sqrt(geometry.n_elements)


def _cluster_family(rng: np.random.Generator, n_clusters: int, n_paths: int,
                    center_range: Sequence[float], spread: float) -> np.ndarray:
    lo, hi = center_range
    centers = rng.uniform(lo, hi, size=n_clusters)
    half_width = SQRT3 * spread
    offsets = rng.uniform(-half_width, half_width, size=(n_clusters, n_paths))
    return centers[:, None] + offsets


def sample_cluster_angles(spec: ClusterSpec, rng: np.random.Generator) -> np.ndarray:
    """Draw per-path angles for one user.

    Each cluster center is uniform on its configured range, and path angles are
    uniform on ``center +/- sqrt(3) * spread`` so that their standard deviation
    about the center equals ``spread``. The four families are independent.

    Returns
    -------
    np.ndarray
        Shape ``(n_clusters * n_paths, 4)``; columns are
        (aoa_az, aoa_el, aod_az, aod_el), rows ordered cluster-major.
    """
    nc, npth = spec.n_clusters, spec.n_paths
    families = [
        _cluster_family(rng, nc, npth, spec.center_azimuth_range, spec.spread_az_rx),
        _cluster_family(rng, nc, npth, spec.center_elevation_range, spec.spread_el_rx),
        _cluster_family(rng, nc, npth, spec.center_azimuth_range, spec.spread_az_tx),
        _cluster_family(rng, nc, npth, spec.center_elevation_range, spec.spread_el_tx),
    ]
    return np.stack([f.reshape(-1) for f in families], axis=1)


def channel_from_paths(rx: ArrayGeometry, tx: ArrayGeometry, gains: np.ndarray,
                       angles: np.ndarray, n_paths_total: int = None) -> np.ndarray:
    """Assemble sqrt(N_t N_r / L) * sum_l gain_l a_r(l) a_t(l)^H."""
    gains = np.asarray(gains, dtype=complex)
    angles = np.atleast_2d(angles)
    total = len(gains) if n_paths_total is None else n_paths_total
    a_r = upa_response(rx, angles[:, 0], angles[:, 1])
    a_t = upa_response(tx, angles[:, 2], angles[:, 3])
    scale = np.sqrt(tx.n_elements * rx.n_elements / total)
    return scale * (a_r * gains[None, :]) @ a_t.conj().T


def sample_channel(config, spec: ClusterSpec, rng: np.random.Generator) -> ChannelSet:
    """Draw one clustered channel per user.

    ``config`` needs ``bs_geometry``, ``user_geometry`` and ``n_users``
    (normally a :class:`oschybrid.config.SystemConfig`).
    """
    per_user, realizations = [], []
    n_total = spec.n_clusters * spec.n_paths
    for _ in range(config.n_users):
        angles = sample_cluster_angles(spec, rng)
        gains = (rng.standard_normal(n_total) + 1j * rng.standard_normal(n_total)) / np.sqrt(2)
        per_user.append(channel_from_paths(config.user_geometry, config.bs_geometry, gains, angles))
        realizations.append([PathRealization(complex(g), *map(float, a)) for g, a in zip(gains, angles)])
    return ChannelSet(per_user, realizations)
