"""Link-level evaluation: received symbols, SMSE, sum spectral efficiency, BER."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence

import numpy as np
from scipy.special import erfc

from .analog import AnalogStage, stacked_effective_channel
from .channel import ChannelSet
from .digital import DigitalStage
from .errors import SingularCovariance

__all__ = [
    "Estimate",
    "ModulationSpec",
    "QAM16",
    "SnrGrid",
    "MetricCurve",
    "transmit_receive",
    "end_to_end_gain",
    "smse_empirical",
    "sse",
    "ber",
    "qam16_awgn_ber",
]


class Estimate(NamedTuple):
    value: float
    stderr: float
    n: int


# per-axis Gray labels: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3
_GRAY_PAM4 = np.array([-3.0, -1.0, 3.0, 1.0])


@dataclass(frozen=True)
class ModulationSpec:
    """Gray-mapped square QAM with unit average energy."""

    name: str
    bits_per_symbol: int
    constellation: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)

    def modulate(self, bits: np.ndarray) -> np.ndarray:
        """Map a flat bit array (length multiple of bits_per_symbol) to symbols."""
        b = np.asarray(bits, dtype=np.uint8).reshape(-1, self.bits_per_symbol)
        weights = 1 << np.arange(self.bits_per_symbol - 1, -1, -1)
        return self.constellation[b @ weights]

    def demodulate(self, symbols: np.ndarray) -> np.ndarray:
        """Minimum-distance hard decisions back to a flat bit array."""
        s = np.asarray(symbols).reshape(-1)
        idx = np.argmin(np.abs(s[:, None] - self.constellation[None, :]), axis=1)
        return self.labels[idx].reshape(-1)


def _qam16() -> ModulationSpec:
    idx = np.arange(16)
    i_part = _GRAY_PAM4[idx >> 2]
    q_part = _GRAY_PAM4[idx & 3]
    points = (i_part + 1j * q_part) / np.sqrt(10.0)
    labels = ((idx[:, None] >> np.arange(3, -1, -1)[None, :]) & 1).astype(np.uint8)
    return ModulationSpec("16-QAM", 4, points, labels)


QAM16 = _qam16()


def qam16_awgn_ber(snr_linear) -> np.ndarray:
    """Exact Gray 16-QAM bit error rate at symbol SNR Es/N0 (unit Es)."""
    snr = np.asarray(snr_linear, dtype=float)
    # half minimum distance over per-dimension noise std
    a = np.sqrt(2 * snr / 10.0)

    def q(x):
        return 0.5 * erfc(x / np.sqrt(2))

    return (3 * q(a) + 2 * q(3 * a) - q(5 * a)) / 4


@dataclass(frozen=True)
class SnrGrid:
    """SNR points in dB, with SNR = P_t / sigma^2."""

    points: tuple

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        if len(pts) == 0 or any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError(f"SNR grid must be non-empty and strictly increasing: {pts}")
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_range(cls, lo: float, hi: float, step: float) -> "SnrGrid":
        if step <= 0:
            raise ValueError("SNR step must be positive")
        n = int(np.floor((hi - lo) / step + 1e-9)) + 1
        return cls(tuple(round(lo + i * step, 10) for i in range(n)))

    def sigma2(self, p_t: float = 1.0) -> np.ndarray:
        return p_t / 10 ** (np.asarray(self.points) / 10)

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)


@dataclass
class MetricCurve:
    label: str
    metric: str
    params: Dict[str, object]
    x: List[float]
    y: List[float]
    stderr: List[float]
    trials: List[int]

    def __post_init__(self):
        if not (len(self.x) == len(self.y) == len(self.stderr) == len(self.trials)):
            raise ValueError("curve columns must have equal length")


def transmit_receive(channels: ChannelSet, analog: AnalogStage, digital: DigitalStage,
                     x: np.ndarray, rng: Optional[np.random.Generator] = None,
                     noise: Optional[Sequence[np.ndarray]] = None) -> List[np.ndarray]:
    """Per-user symbol estimates ``V_k^H M_k^H (gamma H_k F W x + n_k) / gamma``.

    ``x`` is the stacked symbol vector (K N_s) or a batch of them as columns.
    Noise is drawn i.i.d. CN(0, sigma2) unless given explicitly per user.
    """
    x = np.asarray(x, dtype=complex)
    squeeze = x.ndim == 1
    X = x[:, None] if squeeze else x
    g = digital.gamma
    tx = g * (analog.F @ (digital.W @ X))
    out = []
    for k in range(len(channels)):
        r = channels[k] @ tx
        if noise is not None:
            r = r + np.reshape(noise[k], r.shape)
        elif digital.sigma2 > 0:
            if rng is None:
                raise ValueError("rng required when sigma2 > 0 and no noise is given")
            s = np.sqrt(digital.sigma2 / 2)
            r = r + s * (rng.standard_normal(r.shape) + 1j * rng.standard_normal(r.shape))
        est = digital.combiners[k].conj().T @ (analog.combiners[k].conj().T @ r) / g
        out.append(est[:, 0] if squeeze else est)
    return out


def end_to_end_gain(channels: ChannelSet, analog: AnalogStage, digital: DigitalStage) -> np.ndarray:
    """Noiseless map ``V^H H_eff W`` (K N_s x K N_s)."""
    H_eff = stacked_effective_channel(channels, analog)
    return digital.V.conj().T @ H_eff @ digital.W


def smse_empirical(channels: ChannelSet, analog: AnalogStage, digital: DigitalStage,
                   n_trials: int, rng: np.random.Generator,
                   modulation: ModulationSpec = QAM16) -> Estimate:
    """Monte Carlo mean of ``||x_hat - x||^2`` with its standard error."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    n_sym = sum(v.shape[1] for v in digital.combiners)
    bits = rng.integers(0, 2, size=n_sym * n_trials * modulation.bits_per_symbol)
    X = modulation.modulate(bits).reshape(n_sym, n_trials)
    est = np.vstack(transmit_receive(channels, analog, digital, X, rng))
    err = np.sum(np.abs(est - X) ** 2, axis=0)
    se = float(err.std(ddof=1) / np.sqrt(n_trials)) if n_trials > 1 else float("nan")
    return Estimate(float(err.mean()), se, n_trials)


def sse(channels: ChannelSet, analog: AnalogStage, digital: DigitalStage,
        sigma2: Optional[float] = None) -> float:
    """Sum over users of ``log2 det(I + Gamma_k^{-1} S_k)`` in bits/s/Hz.

    ``S_k`` is the user's own post-combining signal covariance and ``Gamma_k``
    its inter-user interference plus combined noise, Gaussian signalling
    assumed.
    """
    s2 = digital.sigma2 if sigma2 is None else sigma2
    g2 = digital.gamma ** 2
    n = digital.n_streams
    total = 0.0
    for k in range(len(channels)):
        V = digital.combiners[k]
        M = analog.combiners[k]
        A = V.conj().T @ M.conj().T @ channels[k] @ analog.F @ digital.W  # N_s x K N_s
        own = A[:, k * n:(k + 1) * n]
        S = g2 * own @ own.conj().T
        other = np.delete(A, np.s_[k * n:(k + 1) * n], axis=1)
        MV = M @ V
        Gamma = g2 * other @ other.conj().T + s2 * (MV.conj().T @ MV)
        cond = np.linalg.cond(Gamma)
        if not np.isfinite(cond) or cond > 1e12:
            raise SingularCovariance(f"user {k}: interference-plus-noise condition {cond:.3e}")
        _, ld_total = np.linalg.slogdet(Gamma + S)
        _, ld_gamma = np.linalg.slogdet(Gamma)
        total += (ld_total - ld_gamma) / np.log(2)
    return float(total)


def ber(channels: ChannelSet, analog: AnalogStage, digital: DigitalStage,
        modulation: ModulationSpec, n_bits: int, rng: np.random.Generator) -> Estimate:
    """Uncoded bit error rate with per-stream gain equalization.

    Each stream estimate is divided by its complex end-to-end gain
    ``(V^H H_eff W)_ii`` before minimum-distance demapping, removing the
    MMSE shrinkage. Returns the BER and its binomial standard error.
    """
    n_sym = sum(v.shape[1] for v in digital.combiners)
    per_vec = n_sym * modulation.bits_per_symbol
    if n_bits <= 0 or n_bits % per_vec:
        raise ValueError(f"n_bits must be a positive multiple of {per_vec}, got {n_bits}")
    n_vec = n_bits // per_vec
    bits = rng.integers(0, 2, size=n_bits, dtype=np.uint8)
    # stream-major layout: each stream carries a contiguous run of symbols
    X = modulation.modulate(bits).reshape(n_sym, n_vec)
    est = np.vstack(transmit_receive(channels, analog, digital, X, rng))
    gain = np.diag(end_to_end_gain(channels, analog, digital))
    decided = modulation.demodulate(est / gain[:, None])
    errors = int(np.count_nonzero(decided != bits))
    p = errors / n_bits
    return Estimate(p, float(np.sqrt(p * (1 - p) / n_bits)), n_bits)
