"""Pairwise error probabilities, union bounds and high-SNR gains.

Conditioned on the fading, every codeword position behaves as a BSC with a
known flip probability, so the probability that the weighted-Hamming
demodulator prefers ``cbar`` over the transmitted ``c`` depends only on the
positions where they differ. Averaging over Rayleigh fading at high SNR gives
a power law ``K * gamma**-d_H`` whose constant is computed in closed form here.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import comb, gammaln

from .channel import SnrPoint, Topology, _gamma, q_func
from .demod import clamp_probabilities, weights
from .gf2code import MAX_SOURCES, GuardExceeded, NetworkCode, differing_positions

MAX_PEP_DISTANCE = 24
MAX_SEARCH_BITS = 20
_CHUNK = 1 << 14

# min-term constant of the d_H = 2 average, without the product term
DH2_CONSTANT = 6.0 / 16.0
# alternative prefactor (sqrt(2) gamma)**-2, kept for comparison behind literal_dh2
DH2_CONSTANT_LITERAL = 0.5


def _theta(c, cbar) -> np.ndarray:
    theta = differing_positions(c, cbar)
    if theta.size > MAX_PEP_DISTANCE:
        raise GuardExceeded(f"Hamming distance {theta.size} exceeds the limit of {MAX_PEP_DISTANCE}")
    return theta


def _flip_patterns(d: int, start: int, stop: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    return ((idx[:, None] >> np.arange(d)) & 1).astype(bool)


def pep_given_probabilities(P_theta, w_theta) -> np.ndarray:
    """Exact PEP over the differing positions, vectorized over leading axes.

    ``P_theta`` and ``w_theta`` have shape ``(..., d)``. Every one of the
    ``2**d`` flip patterns is enumerated; a pattern counts as an error when the
    flipped weight strictly exceeds the unflipped weight. Metric ties count
    as no error.
    """
    P = np.asarray(P_theta, dtype=float)
    w = np.asarray(w_theta, dtype=float)
    P, w = np.broadcast_arrays(P, w)
    d = P.shape[-1]
    if d > MAX_PEP_DISTANCE:
        raise GuardExceeded(f"Hamming distance {d} exceeds the limit of {MAX_PEP_DISTANCE}")
    lead = P.shape[:-1]
    if d == 0:
        return np.zeros(lead)
    P2 = P.reshape(-1, d)
    w2 = w.reshape(-1, d)
    tol = 1e-12 * np.abs(w2).sum(axis=1, keepdims=True)
    out = np.zeros(P2.shape[0])
    for start in range(0, 1 << d, _CHUNK):
        pat = _flip_patterns(d, start, min(start + _CHUNK, 1 << d))  # (k, d)
        signed = np.where(pat[None, :, :], w2[:, None, :], -w2[:, None, :]).sum(axis=2)
        prob = np.where(pat[None, :, :], P2[:, None, :], 1.0 - P2[:, None, :]).prod(axis=2)
        out += np.where(signed > tol, prob, 0.0).sum(axis=1)
    return out.reshape(lead)


def pep_oracle(P, w, c, cbar) -> float:
    """Exact conditional PEP of deciding ``cbar`` when ``c`` was sent."""
    theta = _theta(c, cbar)
    P = np.asarray(P, dtype=float)
    w = np.asarray(w, dtype=float)
    return float(pep_given_probabilities(P[theta], w[theta]))


def n_d_count(d_h: int, d: int) -> int:
    """Number of size-``d`` split terms kept by the high-SNR PEP bound.

    Split sizes are filled in increasing order until ``2**(d_h-1) - 1`` terms
    are used, which counts each unordered split of the differing positions
    into two nonempty parts exactly once.
    """
    if d_h < 2 or not 1 <= d <= d_h // 2:
        raise ValueError(f"d must be in 1..{d_h // 2} for d_H={d_h}")
    budget = (1 << (d_h - 1)) - 1
    used = 0
    for k in range(1, d + 1):
        b = int(comb(d_h, k, exact=True))
        n = b if used + b <= budget else budget - used
        if k == d:
            return n
        used += n
    raise AssertionError("unreachable")


def pep_high_snr(P, c, cbar) -> float:
    """High-SNR PEP bound: all-flip product plus one min-term per split."""
    theta = _theta(c, cbar)
    Pt = np.asarray(P, dtype=float)[theta]
    d_h = theta.size
    if d_h == 0:
        return 0.0
    total = float(np.prod(Pt))
    everything = set(range(d_h))
    for d in range(1, d_h // 2 + 1):
        n = n_d_count(d_h, d)
        for A in itertools.islice(itertools.combinations(range(d_h), d), n):
            rest = sorted(everything.difference(A))
            total += min(float(np.prod(Pt[list(A)])), float(np.prod(Pt[rest])))
    return total


def upsilon(d: int) -> float:
    """Correction constant of the min-of-products average."""
    if d < 1:
        raise ValueError("d must be >= 1")
    log_v = (
        (d - 1) * math.log(2.0)
        + 0.5 * (d - 1) * math.log(math.pi)
        + gammaln(d + 0.5)
        - d * gammaln(1.5)
        - gammaln(d + 1.0)
    )
    return float(math.exp(log_v / d))


def apep_bracket(d_h: int) -> float:
    """``1 + 2 sqrt(pi) Gamma(d_h + 1/2) sum_d N_d / (Gamma(d + 1/2) Gamma(d_h - d + 1/2))``."""
    if d_h < 1:
        raise ValueError("d_H must be >= 1")
    s = 0.0
    for d in range(1, d_h // 2 + 1):
        s += n_d_count(d_h, d) * math.exp(gammaln(d_h + 0.5) - gammaln(d + 0.5) - gammaln(d_h - d + 0.5))
    return 1.0 + 2.0 * math.sqrt(math.pi) * s


def sigma_srd(top: Topology, code: NetworkCode) -> np.ndarray:
    """Per-position sum of inverse variances of the links each position depends on."""
    top.check_code(code)
    relay = 1.0 / top.sigma_sq_rd
    if not top.ideal_sr:
        relay = relay + (code.encoding.T / top.sigma_sq_sr).sum(axis=0)
    return np.concatenate([1.0 / top.sigma_sq_sd, relay])


def _chi_product(c, cbar, sigma) -> float:
    theta = differing_positions(c, cbar)
    return float(np.prod(np.asarray(sigma, dtype=float)[theta]))


def apep_high_snr(snr, c, cbar, sigma) -> float:
    """Fading-averaged PEP at high SNR: ``bracket(d_H) (4 gamma)**-d_H prod sigma[theta]``."""
    d_h = differing_positions(c, cbar).size
    if d_h < 1:
        raise ValueError("codewords must differ")
    return apep_bracket(d_h) * (4.0 * _gamma(snr)) ** (-d_h) * _chi_product(c, cbar, sigma)


def apep_dh2(snr, c, cbar, sigma, literal: bool = False) -> float:
    """Averaged PEP for a distance-2 pair, dropping the all-flip product term."""
    d_h = differing_positions(c, cbar).size
    if d_h != 2:
        raise ValueError(f"apep_dh2 needs d_H = 2, got {d_h}")
    const = DH2_CONSTANT_LITERAL if literal else DH2_CONSTANT
    return const * _gamma(snr) ** -2 * _chi_product(c, cbar, sigma)


def _apep_coefficient(d_h: int, prod_sigma: float, literal_dh2: bool = False) -> float:
    """Coefficient ``K`` of ``K gamma**-d_H`` for one pair."""
    if d_h == 2:
        return (DH2_CONSTANT_LITERAL if literal_dh2 else DH2_CONSTANT) * prod_sigma
    return apep_bracket(d_h) * 4.0 ** (-d_h) * prod_sigma


def error_patterns(code: NetworkCode, t: int) -> np.ndarray:
    """Codeword differences ``G e`` for every message difference ``e`` with ``e[t] = 1``.

    By linearity the union bound over ordered pairs ``(b, bbar)`` with
    ``b[t] != bbar[t]``, averaged over ``b``, collapses to a sum over these.
    """
    if not 0 <= t < code.n_sources:
        raise ValueError(f"source index {t} out of range")
    return code.codebook[code.messages[:, t] == 1]


# ---------------------------------------------------------------- semi-analytic


def _position_links(top: Topology, code: NetworkCode, m: int):
    """Variances of the links that position ``m`` depends on, as (kind, index) pairs."""
    ns = code.n_sources
    if m < ns:
        return [("sd", m)]
    q = m - ns
    links = [("rd", q)]
    if not top.ideal_sr:
        links += [("sr", (t, q)) for t in range(ns) if code.encoding[q, t]]
    return links


def _link_var(top: Topology, link) -> float:
    kind, idx = link
    if kind == "sd":
        return float(top.sigma_sq_sd[idx])
    if kind == "rd":
        return float(top.sigma_sq_rd[idx])
    return float(top.sigma_sq_sr[idx])


def _sample_position(rng, variances, gamma: float, n: int, beta: float):
    """Draw ``|h|^2`` for the links behind one position, with a defensive mixture.

    With probability ``beta`` all links follow their true exponential law;
    otherwise one link, chosen uniformly, is drawn from an exponential with
    mean ``1/gamma`` (the deep-fade scale) and the rest stay natural. Returns
    the per-link gains ``(n, k)`` and the likelihood ratio ``(n,)``.
    """
    var = np.asarray(variances, dtype=float)
    k = var.size
    fade = np.minimum(var, 1.0 / gamma)
    natural = rng.standard_exponential((n, k)) * var
    faded = rng.standard_exponential((n, k)) * fade
    pick = rng.integers(0, k, size=n)
    use_mix = rng.random(n) >= beta
    x = natural.copy()
    rows = np.flatnonzero(use_mix)
    x[rows, pick[rows]] = faded[rows, pick[rows]]
    # density ratio g/f per link, in log form to stay finite
    log_ratio = np.log(var / fade) - x / fade + x / var
    mix = np.exp(log_ratio).mean(axis=1)
    lr = 1.0 / (beta + (1.0 - beta) * mix)
    return x, lr


def _branch_flip(x, gamma: float) -> np.ndarray:
    """Flip probability of a position from its links' ``|h|^2``: first column is the last hop."""
    p = q_func(np.sqrt(2.0 * gamma * x))
    out = p[:, 0]
    if p.shape[1] > 1:
        first = 0.5 * (1.0 - np.prod(1.0 - 2.0 * p[:, 1:], axis=1))
        out = end_to_end(first, out)
    return out


def end_to_end(a, b):
    return a + b - 2.0 * a * b


def semi_analytic_pep(snr, code: NetworkCode, top: Topology, delta, n_samples: int = 100_000, seed: int = 0,
                      beta: float = 0.5, stream: int = 0) -> tuple[float, float]:
    """Fading average of the exact conditional PEP for one difference pattern.

    Returns ``(estimate, standard_error)``. Importance sampling concentrates
    draws on deep fades of the links that matter, which is where the average
    lives at high SNR.
    """
    gamma = _gamma(snr)
    theta = np.flatnonzero(np.asarray(delta))
    if theta.size == 0:
        return 0.0, 0.0
    if theta.size > MAX_PEP_DISTANCE:
        raise GuardExceeded(f"Hamming distance {theta.size} exceeds the limit of {MAX_PEP_DISTANCE}")
    ss = np.random.SeedSequence(seed, spawn_key=(0x5E41, stream))
    rng = np.random.Generator(np.random.Philox(ss))
    total = np.zeros(n_samples)
    done = 0
    est_parts = []
    while done < n_samples:
        n = min(_CHUNK, n_samples - done)
        P = np.empty((n, theta.size))
        lr = np.ones(n)
        for j, m in enumerate(theta):
            var = [_link_var(top, lk) for lk in _position_links(top, code, int(m))]
            x, r = _sample_position(rng, var, gamma, n, beta)
            P[:, j] = _branch_flip(x, gamma)
            lr *= r
        w = weights(P)
        est_parts.append(lr * pep_given_probabilities(clamp_probabilities(P), w))
        done += n
    total = np.concatenate(est_parts)
    return float(total.mean()), float(total.std(ddof=1) / np.sqrt(n_samples)) if n_samples > 1 else 0.0


# ---------------------------------------------------------------- union bound


def abep_union_bound(snr, code: NetworkCode, top: Topology, t: int, mode: str = "asymptotic",
                     n_samples: int = 100_000, seed: int = 0, literal_dh2: bool = False) -> float:
    """Union bound on the ABEP of source ``t``.

    ``asymptotic`` sums the closed-form high-SNR averages over every pair;
    ``semi_analytic`` averages the exact conditional PEP over fading draws.
    """
    top.check_code(code)
    pats = error_patterns(code, t)
    if mode == "asymptotic":
        sigma = sigma_srd(top, code)
        zero = np.zeros(code.length, dtype=np.uint8)
        total = 0.0
        for delta in pats:
            d_h = int(delta.sum())
            if d_h == 2:
                total += apep_dh2(snr, zero, delta, sigma, literal=literal_dh2)
            else:
                total += apep_high_snr(snr, zero, delta, sigma)
        return total
    if mode == "semi_analytic":
        total = 0.0
        for i, delta in enumerate(pats):
            total += semi_analytic_pep(snr, code, top, delta, n_samples, seed, stream=_pattern_stream(delta))[0]
        return total
    raise ValueError(f"unknown mode {mode!r}")


def _pattern_stream(delta) -> int:
    # keyed by the pattern itself so the draw does not depend on which source asked
    return int(sum(int(b) << i for i, b in enumerate(delta)))


@dataclass
class AsymptoticAbep:
    """High-SNR behaviour ``ABEP -> K gamma**-G_d = (G_c gamma)**-G_d`` of one source."""

    source: int
    diversity: int
    coefficient: float | None
    coding_gain: float | None
    demod: str = "ml"
    dominant_patterns: list = field(default_factory=list)

    def abep(self, snr) -> float:
        if self.coefficient is None:
            return float("nan")
        return self.coefficient * _gamma(snr) ** (-self.diversity)


def asymptotic_gains(code: NetworkCode, top: Topology, t: int, demod_kind: str = "ml",
                     literal_dh2: bool = False) -> AsymptoticAbep:
    """Diversity order and coding gain of source ``t`` from the dominant pairs only.

    For the minimum-distance demodulator only the diversity order is known in
    closed form; the coefficient is reported as None.
    """
    top.check_code(code)
    sv = int(code.separation_vector[t])
    pats = error_patterns(code, t)
    dom = pats[pats.sum(axis=1) == sv]
    if demod_kind == "mdd":
        return AsymptoticAbep(t, sv - sv // 2, None, None, "mdd", [d.tolist() for d in dom])
    if demod_kind != "ml":
        raise ValueError(f"unknown demodulator {demod_kind!r}")
    sigma = sigma_srd(top, code)
    k = sum(_apep_coefficient(sv, float(np.prod(sigma[d.astype(bool)])), literal_dh2) for d in dom)
    return AsymptoticAbep(t, sv, k, k ** (-1.0 / sv), "ml", [d.tolist() for d in dom])


# ---------------------------------------------------------------- code search


@dataclass
class CodeCandidate:
    encoding: np.ndarray
    separation_vector: tuple
    k_realistic: tuple
    k_ideal: tuple
    gc_realistic: tuple
    gc_ideal: tuple

    @property
    def gain_gap(self) -> float:
        return float(sum(abs(a - b) for a, b in zip(self.gc_realistic, self.gc_ideal)))

    def key(self, objective: str = "sv"):
        sv = tuple(-s for s in sorted(self.separation_vector, reverse=True))
        bits = tuple(self.encoding.reshape(-1).tolist())
        gap = round(self.gain_gap, 12)
        if objective == "sv":
            return (sv, gap, bits)
        if objective == "gap":
            return (gap, sv, bits)
        raise ValueError(f"unknown objective {objective!r}")


def code_search(n_sources: int, n_relays: int, top: Topology | None = None, objective: str = "sv",
                limit: int | None = None) -> list[CodeCandidate]:
    """Rank every binary encoding matrix of the given size.

    Default ordering: larger separation vector (sorted, compared
    lexicographically) first, then the smaller total gap between realistic and
    ideal coding gains, then the bit pattern of the matrix.
    """
    nbits = n_sources * n_relays
    if nbits > MAX_SEARCH_BITS:
        raise GuardExceeded(f"{nbits} encoding bits exceeds the search limit of {MAX_SEARCH_BITS}")
    if n_sources > MAX_SOURCES:
        raise GuardExceeded("too many sources")
    if top is None:
        top = Topology.iid(n_sources, n_relays)
    real, ideal = top.with_ideal_sr(False), top.with_ideal_sr(True)
    out = []
    for idx in range(1 << nbits):
        bits = [(idx >> (nbits - 1 - i)) & 1 for i in range(nbits)]
        code = NetworkCode(np.array(bits, dtype=np.uint8).reshape(n_relays, n_sources))
        gr = [asymptotic_gains(code, real, t) for t in range(n_sources)]
        gi = [asymptotic_gains(code, ideal, t) for t in range(n_sources)]
        out.append(CodeCandidate(
            code.encoding,
            tuple(int(s) for s in code.separation_vector),
            tuple(g.coefficient for g in gr),
            tuple(g.coefficient for g in gi),
            tuple(g.coding_gain for g in gr),
            tuple(g.coding_gain for g in gi),
        ))
    out.sort(key=lambda c: c.key(objective))
    return out[:limit] if limit else out


__all__ = [
    "AsymptoticAbep", "CodeCandidate", "SnrPoint", "abep_union_bound", "apep_bracket", "apep_dh2",
    "apep_high_snr", "asymptotic_gains", "code_search", "error_patterns", "n_d_count", "pep_given_probabilities",
    "pep_high_snr", "pep_oracle", "semi_analytic_pep", "sigma_srd", "upsilon",
]
