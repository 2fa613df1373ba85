"""Independent reference implementations used only by the tests.

Everything here is written with plain loops or a different numerical route
than the package code so that agreement is meaningful.
"""

import cmath
import itertools
import math
from fractions import Fraction

import numpy as np
from scipy import integrate


def upa_loop(n_y, n_z, d, theta, phi):
    """Array response by explicit double loop (y index outer, z index inner)."""
    out = []
    for n in range(n_y):
        for m in range(n_z):
            ph = 2 * math.pi * d * (n * math.sin(theta) * math.cos(phi) + m * math.sin(phi))
            out.append(cmath.exp(1j * ph) / math.sqrt(n_y * n_z))
    return np.array(out)


def dft_2d_codebook(n_y, n_z):
    """Columns of kron(DFT_y, DFT_z), normalised; rows of the result are codewords."""
    fy = np.array([[cmath.exp(2j * math.pi * a * b / n_y) for b in range(n_y)] for a in range(n_y)])
    fz = np.array([[cmath.exp(2j * math.pi * a * b / n_z) for b in range(n_z)] for a in range(n_z)])
    return np.kron(fy, fz).T / math.sqrt(n_y * n_z)


def quantized_osc_patterns(n_y, n_z, rho, bits):
    """Exact rational enumeration of the quantized OSC.

    Returns the list of unique per-element level tuples in first-occurrence
    order. Phases are kept as Fractions of a full turn; halfway cases go to the
    smaller phase value.
    """
    levels = 2 ** bits
    seen, out = set(), []
    for i in range(rho * n_y):
        for j in range(rho * n_z):
            pattern = []
            for n in range(n_y):
                for m in range(n_z):
                    turn = (Fraction(n * i, rho * n_y) + Fraction(m * j, rho * n_z)) % 1
                    scaled = turn * levels
                    lo = math.floor(scaled)
                    frac = scaled - lo
                    if frac < Fraction(1, 2):
                        lvl = lo % levels
                    elif frac > Fraction(1, 2):
                        lvl = (lo + 1) % levels
                    else:
                        lvl = min(lo % levels, (lo + 1) % levels)
                    pattern.append(lvl)
            key = tuple(pattern)
            if key not in seen:
                seen.add(key)
                out.append(key)
    return out


def japc_bruteforce(H_list, t_book, r_books, beta, m_r):
    """Literal replay of the greedy-with-pruning selection using Python loops.

    ``t_book`` and ``r_books[k]`` are lists of 1-D vectors. Returns the list
    of (user, r_index, t_index) choices in selection order. When a set is
    empty, the pruned, unchosen entry whose largest correlation with the
    chosen entries is smallest is re-admitted (lowest index on ties).
    """
    K = len(H_list)
    avail_t = list(range(len(t_book)))
    avail_r = [list(range(len(b))) for b in r_books]
    active = list(range(K))
    count = [0] * K
    picks = []

    def dot(a, b):  # a^H b
        return sum(complex(x).conjugate() * complex(y) for x, y in zip(a, b))

    def restore(book, avail, chosen):
        best_x, best_c = None, None
        for x in range(len(book)):
            if x in avail or x in chosen:
                continue
            c = max(abs(dot(book[x], book[y])) for y in chosen)
            if best_c is None or c < best_c:
                best_x, best_c = x, c
        avail.append(best_x)
        avail.sort()

    chosen_t, chosen_r = [], [[] for _ in range(K)]
    for _ in range(K * m_r):
        if not avail_t:
            restore(t_book, avail_t, chosen_t)
        for k in active:
            if not avail_r[k]:
                restore(r_books[k], avail_r[k], chosen_r[k])
        best = None
        for k in active:
            H = H_list[k]
            for r in avail_r[k]:
                ar = r_books[k][r]
                # row vector a_r^H H
                row = [sum(complex(ar[i]).conjugate() * complex(H[i][c]) for i in range(len(ar)))
                       for c in range(len(H[0]))]
                for t in avail_t:
                    val = abs(sum(row[c] * complex(t_book[t][c]) for c in range(len(row)))) ** 2
                    if best is None or val > best[0]:
                        best = (val, k, r, t)
        _, k, r, t = best
        picks.append((k, r, t))
        chosen_t.append(t)
        chosen_r[k].append(r)
        avail_r[k] = [x for x in avail_r[k]
                      if x != r and abs(dot(r_books[k][r], r_books[k][x])) < beta]
        avail_t = [x for x in avail_t if x != t and abs(dot(t_book[t], t_book[x])) < beta]
        count[k] += 1
        if count[k] == m_r:
            active.remove(k)
    return picks


def qam16_ber_by_integration(snr_linear):
    """Gray 16-QAM BER by integrating the Gaussian over the decision regions.

    One axis of 16-QAM is Gray 4-PAM; both axes are identical, so the per-bit
    rate of the constellation equals the per-bit rate of one axis.
    """
    d = 1 / math.sqrt(10)  # half spacing at unit average energy
    sigma = math.sqrt(1 / snr_linear / 2)
    levels = {-3: (0, 0), -1: (0, 1), 1: (1, 1), 3: (1, 0)}
    bounds = [(-math.inf, -2), (-2, 0), (0, 2), (2, math.inf)]
    decided = [(0, 0), (0, 1), (1, 1), (1, 0)]

    def pdf(y, mean):
        return math.exp(-((y - mean) ** 2) / (2 * sigma ** 2)) / (sigma * math.sqrt(2 * math.pi))

    total = 0.0
    for a, bits in levels.items():
        for (lo, hi), dbits in zip(bounds, decided):
            wrong = sum(b != c for b, c in zip(bits, dbits))
            if not wrong:
                continue
            p, _ = integrate.quad(pdf, lo * d if lo != -math.inf else -np.inf,
                                  hi * d if hi != math.inf else np.inf, args=(a * d,),
                                  epsabs=1e-14, epsrel=1e-12)
            total += wrong * p
    return total / (4 * 2)


def all_sign_patterns(n):
    return list(itertools.product((0, 1), repeat=n))
