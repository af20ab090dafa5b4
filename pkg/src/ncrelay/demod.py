"""Destination demodulators.

Both demodulators search every information vector and pick the codeword
closest to the received hard decisions. The ML version weighs each position
by its log-likelihood ratio ``ln((1-P)/P)``; the minimum-distance version uses
unit weights, which is what a receiver without source-to-relay CSI can do.
"""

import numpy as np

from .gf2code import NetworkCode

P_MIN = 1e-15
P_MAX = 0.5


def clamp_probabilities(P) -> np.ndarray:
    return np.clip(np.asarray(P, dtype=float), P_MIN, P_MAX)


def weights(P) -> np.ndarray:
    """Reliability ``ln((1-P)/P)`` of each position, after clamping."""
    P = clamp_probabilities(P)
    return np.maximum(np.log1p(-P) - np.log(P), 0.0)


def bpsk_hard_decision(y, h, rng=None, tie_u=None) -> int:
    """Coherent BPSK decision (bit 0 -> +1). An exact tie is settled by a fair coin.

    The coin is ``tie_u < 0.5`` when a uniform draw is supplied, else ``rng``.
    """
    if h == 0:
        raise ValueError("channel gain must be nonzero")
    metric = (complex(y) * np.conj(complex(h))).real
    if metric > 0:
        return 0
    if metric < 0:
        return 1
    if tie_u is None:
        tie_u = (rng if rng is not None else np.random.default_rng()).random()
    return int(tie_u < 0.5)


def decision_metrics(hd, w, code: NetworkCode) -> np.ndarray:
    """Weighted Hamming distance from ``hd`` to every codeword, accumulated position by position."""
    hd = np.asarray(hd, dtype=np.uint8)
    if hd.shape != (code.length,):
        raise ValueError(f"expected {code.length} hard decisions, got shape {hd.shape}")
    w = np.asarray(w, dtype=float)
    cb = code.codebook
    metric = np.zeros(cb.shape[0])
    for m in range(code.length):
        metric = metric + w[m] * (cb[:, m] != hd[m])
    return metric


def pick_minimizer(metric, u: float) -> int:
    """Index of the ``floor(u * k)``-th of the ``k`` minimizers, in codebook order."""
    best = np.flatnonzero(metric == metric.min())
    return int(best[min(int(u * best.size), best.size - 1)])


def ml_joint_demodulate(hd, w, code: NetworkCode, rng=None, tie_u=None) -> np.ndarray:
    """Information bits of the minimum-metric codeword; ties broken uniformly at random.

    ``tie_u`` is a uniform draw in [0, 1) used for the tie; if omitted one is
    taken from ``rng``.
    """
    if tie_u is None:
        tie_u = (rng if rng is not None else np.random.default_rng()).random()
    i = pick_minimizer(decision_metrics(hd, w, code), tie_u)
    return code.messages[i].copy()


def mdd_demodulate(hd, code: NetworkCode, rng=None, tie_u=None) -> np.ndarray:
    return ml_joint_demodulate(hd, np.ones(code.length), code, rng, tie_u)
