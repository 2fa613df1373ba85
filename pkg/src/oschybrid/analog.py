"""Greedy joint analog precoder/combiner selection (JAPC).

Every iteration picks the (user, combiner beam, precoder beam) triple with the
largest ``|a_r^H H_k a_t|^2`` over the still-available candidates, then prunes
all candidates whose correlation with the winners reaches ``beta``. Pruning
keeps the effective channel well conditioned, which stands in for the
condition-number objective.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .channel import ChannelSet
from .codebook import Codebook
from .errors import CodebookExhausted, SingularChannel

__all__ = [
    "AnalogStage",
    "JapcConfig",
    "Selection",
    "japc",
    "effective_channel",
    "stacked_effective_channel",
    "condition_number",
]


@dataclass(frozen=True)
class JapcConfig:
    beta: float = 0.15

    def __post_init__(self):
        if not 0 < self.beta <= 1:
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")


@dataclass(frozen=True)
class Selection:
    """One greedy step: user, codebook indices and the objective value."""

    user: int
    rx_index: int
    tx_index: int
    gain: float


@dataclass
class AnalogStage:
    """Analog precoder ``F`` (columns grouped per user) and combiners ``M_k``."""

    F: np.ndarray
    combiners: List[np.ndarray]
    selections: List[Selection] = field(default_factory=list)

    @property
    def n_users(self) -> int:
        return len(self.combiners)

    @property
    def m_r(self) -> int:
        return self.combiners[0].shape[1]

    def block(self, k: int) -> np.ndarray:
        """Columns of F serving user k."""
        m = self.m_r
        return self.F[:, k * m:(k + 1) * m]


class _Candidates:
    """Lazy descending walk over one user's gain matrix.

    Only gains at or above a threshold (roughly the ``top`` largest, estimated
    from a strided subsample) are sorted. Everything below the threshold is
    smaller than anything kept, so a hit at or above it is the exact masked
    maximum; when the walk runs dry it falls back to a full masked scan.
    """

    def __init__(self, gains: np.ndarray, top: int = 4096):
        self.gains = gains
        flat = gains.ravel()
        if flat.size <= top:
            kept = np.arange(flat.size)
            self.floor = -np.inf
        else:
            stride = max(1, flat.size // (8 * top))
            sub = flat[::stride]
            k = max(1, min(sub.size, top // stride))
            self.floor = float(np.partition(sub, sub.size - k)[sub.size - k])
            kept = np.flatnonzero(flat >= self.floor)
        # descending value, ascending flat index on ties
        self.order = kept[np.lexsort((kept, -flat[kept]))]
        self.pos = 0

    def reset(self):
        self.pos = 0

    def best(self, avail_r: np.ndarray, avail_t: np.ndarray) -> Optional[Tuple[float, int, int]]:
        n_t = self.gains.shape[1]
        order = self.order
        while self.pos < len(order):
            r, t = divmod(int(order[self.pos]), n_t)
            if avail_r[r] and avail_t[t]:
                return float(self.gains[r, t]), r, t
            self.pos += 1
        return _masked_argmax(self.gains, avail_r, avail_t)


def _masked_argmax(gains, avail_r, avail_t) -> Optional[Tuple[float, int, int]]:
    mask = avail_r[:, None] & avail_t[None, :]
    if not mask.any():
        return None
    flat = np.where(mask, gains, -np.inf).ravel()
    i = int(np.argmax(flat))
    r, t = divmod(i, gains.shape[1])
    return float(flat[i]), r, t


def _gain_matrix(r_vecs: np.ndarray, h_t: np.ndarray, chunk: int = 64) -> np.ndarray:
    """``|r^H h_t|^2`` for every codebook row ``r``, in cache-sized row blocks."""
    out = np.empty((r_vecs.shape[0], h_t.shape[1]))
    for i in range(0, r_vecs.shape[0], chunk):
        z = (r_vecs[i:i + chunk].conj() @ h_t).view(np.float64)
        z *= z
        out[i:i + chunk] = z[:, 0::2] + z[:, 1::2]
    return out


def _restore_one(vectors: np.ndarray, avail: np.ndarray, chosen: Sequence[int]) -> int:
    """Re-admit the pruned candidate least correlated with the chosen columns."""
    pruned = ~avail
    pruned[list(chosen)] = False
    idx = np.flatnonzero(pruned)
    if idx.size == 0:
        raise CodebookExhausted("no pruned candidates left to restore")
    corr = np.abs(vectors[idx].conj() @ vectors[list(chosen)].T).max(axis=1)
    pick = int(idx[np.argmin(corr)])
    avail[pick] = True
    return pick


def japc(channels: ChannelSet, bs_codebook: Codebook, user_codebooks: Sequence[Codebook],
         cfg: JapcConfig, m_r: int) -> AnalogStage:
    """Select ``m_r`` analog beams per user by greedy gain maximisation with pruning.

    Parameters
    ----------
    channels : ChannelSet
        K channel matrices, each N_r x N_t.
    bs_codebook : Codebook
        Shared BS candidate set; pruned globally across users.
    user_codebooks : sequence of Codebook
        One candidate set per user.
    cfg : JapcConfig
        Correlation threshold ``beta``.
    m_r : int
        RF chains per user; the loop runs K * m_r times.

    Returns
    -------
    AnalogStage
        ``F = [F_1, ..., F_K]`` and per-user ``M_k``, plus the selection log.

    Notes
    -----
    Argmax ties go to the smallest (user, combiner index, precoder index).
    A winner is always removed from its set even when ``beta`` is 1. If a set
    runs dry while an active user still needs columns, the pruned candidate
    least correlated with that side's chosen beams is re-admitted; only when
    nothing is left to re-admit is :class:`CodebookExhausted` raised.
    """
    n_users = len(channels)
    if len(user_codebooks) != n_users:
        raise ValueError(f"need {n_users} user codebooks, got {len(user_codebooks)}")
    t_vecs = bs_codebook.vectors
    r_vecs = [cb.vectors for cb in user_codebooks]
    if len(t_vecs) < n_users * m_r:
        raise CodebookExhausted(f"BS codebook has {len(t_vecs)} entries, need {n_users * m_r}")
    for k, rv in enumerate(r_vecs):
        if len(rv) < m_r:
            raise CodebookExhausted(f"user {k} codebook has {len(rv)} entries, need {m_r}")

    t_mat = t_vecs.T
    cands = [_Candidates(_gain_matrix(r_vecs[k], channels[k] @ t_mat)) for k in range(n_users)]

    avail_t = np.ones(len(t_vecs), dtype=bool)
    avail_r = [np.ones(len(rv), dtype=bool) for rv in r_vecs]
    chosen_t: List[List[int]] = [[] for _ in range(n_users)]
    chosen_r: List[List[int]] = [[] for _ in range(n_users)]
    active = list(range(n_users))
    log: List[Selection] = []

    for _ in range(n_users * m_r):
        if not avail_t.any():
            _restore_one(t_vecs, avail_t, [i for c in chosen_t for i in c])
            for c in cands:
                c.reset()
        for k in active:
            if not avail_r[k].any():
                _restore_one(r_vecs[k], avail_r[k], chosen_r[k])
                cands[k].reset()

        best = None
        for k in active:
            hit = cands[k].best(avail_r[k], avail_t)
            if hit is not None and (best is None or hit[0] > best[0]):
                best = (hit[0], k, hit[1], hit[2])
        if best is None:
            raise CodebookExhausted("no admissible (combiner, precoder) pair remains")
        value, k, r, t = best

        chosen_r[k].append(r)
        chosen_t[k].append(t)
        log.append(Selection(k, r, t, value))

        corr_r = np.abs(r_vecs[k].conj() @ r_vecs[k][r])
        avail_r[k] &= corr_r < cfg.beta
        avail_r[k][r] = False
        corr_t = np.abs(t_vecs.conj() @ t_vecs[t])
        avail_t &= corr_t < cfg.beta
        avail_t[t] = False

        if len(chosen_r[k]) == m_r:
            active.remove(k)

    F = np.concatenate([t_vecs[chosen_t[k]].T for k in range(n_users)], axis=1)
    combiners = [r_vecs[k][chosen_r[k]].T.copy() for k in range(n_users)]
    return AnalogStage(F, combiners, log)


def effective_channel(H_k: np.ndarray, F: np.ndarray, M_k: np.ndarray) -> np.ndarray:
    """Baseband channel seen through the analog stages, ``M_k^H H_k F``."""
    return M_k.conj().T @ H_k @ F


def stacked_effective_channel(channels: ChannelSet, analog: AnalogStage) -> np.ndarray:
    """All users' effective channels stacked row-wise (K M_r x M_t)."""
    return np.vstack([effective_channel(channels[k], analog.F, analog.combiners[k])
                      for k in range(len(channels))])


def condition_number(H_eff: np.ndarray, n_streams: Optional[int] = None) -> float:
    """sigma_1 / sigma_n with ``n = n_streams`` (default: the smaller dimension)."""
    s = np.linalg.svd(H_eff, compute_uv=False)
    n = len(s) if n_streams is None else int(n_streams)
    if n < 1 or n > len(s):
        raise ValueError(f"n_streams={n_streams} outside 1..{len(s)}")
    if s[0] == 0 or s[n - 1] < 1e-12 * s[0]:
        raise SingularChannel(f"singular value {n} is {s[n - 1]:.3e} against sigma_1={s[0]:.3e}")
    return float(s[0] / s[n - 1])
