"""Closed-form min-SMSE digital precoder and combiners.

The design is a single pass: the precoder is computed from a block-unitary
initial combiner, then each user's combiner is the MMSE solution for that
precoder. Linear systems are solved through factorizations with explicit
condition-number guards instead of forming inverses.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import RankDeficient, SingularCombinerSystem, ZeroPowerPrecoder

__all__ = [
    "DigitalStage",
    "InitialCombiner",
    "digital_precoder",
    "digital_combiner",
    "normalization_gamma",
    "mmse_bias",
    "design_digital",
    "zero_forcing_digital",
    "smse_user",
    "smse_trace",
    "smse_analytic",
    "lemma1_check",
]

COND_LIMIT = 1e12


@dataclass
class DigitalStage:
    """Digital precoder ``W`` (blocks of ``n_streams`` columns), combiners ``V_k``,
    power normalization ``gamma``, bias ``mu`` and the noise variance used."""

    W: np.ndarray
    combiners: List[np.ndarray]
    gamma: float
    mu: float
    sigma2: float

    @property
    def n_streams(self) -> int:
        return self.combiners[0].shape[1]

    def block(self, k: int) -> np.ndarray:
        n = self.n_streams
        return self.W[:, k * n:(k + 1) * n]

    @property
    def V(self) -> np.ndarray:
        return sla.block_diag(*self.combiners)


@dataclass
class InitialCombiner:
    """Per-user blocks with orthonormal columns (unitary when N_s = M_r)."""

    blocks: List[np.ndarray]

    @classmethod
    def identity(cls, n_users: int, n_streams: int, m_r: Optional[int] = None) -> "InitialCombiner":
        m_r = n_streams if m_r is None else m_r
        return cls([np.eye(m_r, n_streams, dtype=complex) for _ in range(n_users)])

    @classmethod
    def random(cls, n_users: int, n_streams: int, rng: np.random.Generator,
               m_r: Optional[int] = None) -> "InitialCombiner":
        """Haar-distributed blocks (QR of a complex Gaussian with phase fix)."""
        m_r = n_streams if m_r is None else m_r
        blocks = []
        for _ in range(n_users):
            z = rng.standard_normal((m_r, n_streams)) + 1j * rng.standard_normal((m_r, n_streams))
            q, r = np.linalg.qr(z)
            d = np.diag(r)
            blocks.append(q * (d / np.abs(d))[None, :])
        return cls(blocks)

    @property
    def matrix(self) -> np.ndarray:
        return sla.block_diag(*self.blocks)


def _guarded_solve(a: np.ndarray, b: np.ndarray, exc, what: str) -> np.ndarray:
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise exc(f"{what} condition number {cond:.3e} exceeds {COND_LIMIT:.0e}")
    return sla.solve(a, b, assume_a="her")


def digital_precoder(H_eff: np.ndarray, v_ini) -> np.ndarray:
    """``W = (H_eff^H H_eff)^{-1} H_eff^H V_ini``.

    This is the stationary point of the sum MSE in ``W`` for a fixed combiner
    with ``V V^H = I``; then ``W W^H`` equals the inverse Gram matrix.
    """
    V = v_ini.matrix if isinstance(v_ini, InitialCombiner) else np.asarray(v_ini)
    Hh = H_eff.conj().T
    return _guarded_solve(Hh @ H_eff, Hh @ V, RankDeficient, "effective-channel Gram")


def digital_combiner(h_eff_k: np.ndarray, W: np.ndarray, W_k: np.ndarray, M_k: np.ndarray,
                     gamma: float, sigma2: float) -> np.ndarray:
    """MMSE combiner ``V_k`` of one user for a fixed precoder.

    ``V_k^H = W_k^H H_k^H (H_k W W^H H_k^H + sigma2/gamma^2 M_k^H M_k)^{-1}``;
    the returned matrix is ``V_k`` itself (M_r x N_s).
    """
    hw = h_eff_k @ W
    inner = hw @ hw.conj().T + (sigma2 / gamma ** 2) * (M_k.conj().T @ M_k)
    # inner is Hermitian, so V_k = inner^{-1} H_k W_k
    return _guarded_solve(inner, h_eff_k @ W_k, SingularCombinerSystem, "combiner system")


def normalization_gamma(F: np.ndarray, W: np.ndarray, p_t: float) -> float:
    """Scale so that ``gamma^2 tr(F W W^H F^H) = p_t``."""
    power = float(np.linalg.norm(F @ W, "fro") ** 2)
    if not power > 1e-300:
        raise ZeroPowerPrecoder(f"tr(F W W^H F^H) = {power:.3e}")
    return float(np.sqrt(p_t / power))


def mmse_bias(gamma: float, sigma2: float) -> float:
    """mu = gamma^2 / (gamma^2 + sigma^2)."""
    g2 = gamma ** 2
    return g2 / (g2 + sigma2)


def design_digital(h_eff_blocks: Sequence[np.ndarray], F: np.ndarray,
                   M_blocks: Sequence[np.ndarray], n_streams: int, p_t: float,
                   sigma2: float, v_ini: Optional[InitialCombiner] = None) -> DigitalStage:
    """Run the single-pass digital design for given effective channels."""
    n_users = len(h_eff_blocks)
    m_r = h_eff_blocks[0].shape[0]
    if v_ini is None:
        v_ini = InitialCombiner.identity(n_users, n_streams, m_r)
    H_eff = np.vstack(h_eff_blocks)
    W = digital_precoder(H_eff, v_ini)
    gamma = normalization_gamma(F, W, p_t)
    combiners = [
        digital_combiner(h_eff_blocks[k], W, W[:, k * n_streams:(k + 1) * n_streams],
                         M_blocks[k], gamma, sigma2)
        for k in range(n_users)
    ]
    return DigitalStage(W, combiners, gamma, mmse_bias(gamma, sigma2), sigma2)


def zero_forcing_digital(h_eff_blocks: Sequence[np.ndarray], F: np.ndarray, n_streams: int,
                         p_t: float, sigma2: float,
                         v_ini: Optional[InitialCombiner] = None) -> DigitalStage:
    """Same precoder, but combiners fixed to the initial blocks (no MMSE step)."""
    n_users = len(h_eff_blocks)
    m_r = h_eff_blocks[0].shape[0]
    if v_ini is None:
        v_ini = InitialCombiner.identity(n_users, n_streams, m_r)
    W = digital_precoder(np.vstack(h_eff_blocks), v_ini)
    gamma = normalization_gamma(F, W, p_t)
    return DigitalStage(W, [b.copy() for b in v_ini.blocks], gamma, mmse_bias(gamma, sigma2), sigma2)


def smse_user(h_eff_k, W, W_k, V_k, M_k, gamma, sigma2) -> float:
    """Per-user MSE for unit-power i.i.d. symbols and white noise of variance sigma2."""
    a = V_k.conj().T @ h_eff_k
    signal = np.linalg.norm(a @ W, "fro") ** 2
    noise = (sigma2 / gamma ** 2) * np.linalg.norm(M_k @ V_k, "fro") ** 2
    cross = np.trace(a @ W_k).real
    return float(signal + noise - 2 * cross + V_k.shape[1])


def smse_trace(h_eff_blocks, W, V_blocks, M_blocks, gamma, sigma2) -> float:
    """Exact sum MSE summed over users."""
    n_s = V_blocks[0].shape[1]
    return sum(
        smse_user(h_eff_blocks[k], W, W[:, k * n_s:(k + 1) * n_s], V_blocks[k], M_blocks[k],
                  gamma, sigma2)
        for k in range(len(h_eff_blocks))
    )


def smse_analytic(H_eff: np.ndarray, gamma: float, sigma2: float, k_users: int, n_s: int,
                  p_t: float, high_snr: bool = False) -> float:
    """Approximate sum MSE from the effective channel alone.

    ``(mu - 1)^2 K N_s + K N_s mu^2 sigma2 / p_t * tr((H^H H)^{-1})``, or with
    ``high_snr`` only ``K N_s sigma2 / p_t * tr((H^H H)^{-1})``.
    """
    Hh = H_eff.conj().T
    gram = Hh @ H_eff
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise RankDeficient(f"effective-channel Gram condition number {cond:.3e}")
    tr_inv = float(np.trace(sla.solve(gram, np.eye(gram.shape[0]), assume_a="her")).real)
    s = np.linalg.svd(H_eff, compute_uv=False)
    tr_sv = float(np.sum(s ** -2.0))
    if not np.isclose(tr_inv, tr_sv, rtol=1e-8, atol=0):
        raise RankDeficient(f"trace of inverse Gram {tr_inv!r} disagrees with SVD sum {tr_sv!r}")
    kns = k_users * n_s
    if high_snr:
        return kns * sigma2 / p_t * tr_inv
    mu = mmse_bias(gamma, sigma2)
    return (mu - 1) ** 2 * kns + kns * mu ** 2 * sigma2 / p_t * tr_inv


def lemma1_check(A: np.ndarray, block_rows: Sequence[int], tol: float = 1e-9) -> bool:
    """Check ``A_i (A^H A)^{-1} A_j^H = delta_ij I`` for a row partition of square A."""
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or sum(block_rows) != A.shape[0]:
        return False
    try:
        X = np.linalg.solve(A.conj().T @ A, A.conj().T)
    except np.linalg.LinAlgError:
        return False
    P = A @ X
    edges = np.concatenate([[0], np.cumsum(block_rows)])
    for i in range(len(block_rows)):
        for j in range(len(block_rows)):
            blk = P[edges[i]:edges[i + 1], edges[j]:edges[j + 1]]
            target = np.eye(block_rows[i]) if i == j else 0.0
            if not np.linalg.norm(blk - target) < tol:
                return False
    return True
