"""Rayleigh-fading topology and per-link cross-over probabilities.

Link gains are circularly symmetric complex Gaussian with ``E|h|^2 = sigma^2``.
A BPSK hard decision over a link with gain ``h`` at ``gamma = Em/N0`` flips
the bit with probability ``Q(sqrt(2 gamma |h|^2))``. A relay that XORs the
hard decisions of several sources behaves as a single BSC whose flip
probability is the probability of an odd number of first-hop errors; the
relay-to-destination hop is a second BSC in cascade.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from .gf2code import NetworkCode


def q_func(x):
    """Gaussian tail ``Q(x) = erfc(x / sqrt 2) / 2``."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))


@dataclass(frozen=True, eq=False)
class Topology:
    """Per-link Rayleigh variances.

    ``sigma_sq_sr[t, q]`` is the variance of the link from source ``t`` to
    relay ``q``. With ``ideal_sr`` the source-to-relay hops are error free and
    ``sigma_sq_sr`` is ignored by every downstream formula.
    """

    sigma_sq_sd: np.ndarray
    sigma_sq_sr: np.ndarray
    sigma_sq_rd: np.ndarray
    ideal_sr: bool = False
    positions: dict | None = field(default=None)
    alpha: float | None = None

    def __post_init__(self):
        sd = np.array(self.sigma_sq_sd, dtype=float).reshape(-1)
        rd = np.array(self.sigma_sq_rd, dtype=float).reshape(-1)
        sr = np.array(self.sigma_sq_sr, dtype=float)
        if sr.size == 0:
            sr = sr.reshape(sd.size, rd.size)
        if sr.shape != (sd.size, rd.size):
            raise ValueError(f"sigma_sq_sr must have shape {(sd.size, rd.size)}, got {sr.shape}")
        if sd.size < 1:
            raise ValueError("need at least one source")
        for name, arr in (("sigma_sq_sd", sd), ("sigma_sq_sr", sr), ("sigma_sq_rd", rd)):
            if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
                raise ValueError(f"{name} entries must be finite and > 0")
            arr.setflags(write=False)
        object.__setattr__(self, "sigma_sq_sd", sd)
        object.__setattr__(self, "sigma_sq_sr", sr)
        object.__setattr__(self, "sigma_sq_rd", rd)

    @property
    def n_sources(self) -> int:
        return self.sigma_sq_sd.size

    @property
    def n_relays(self) -> int:
        return self.sigma_sq_rd.size

    @property
    def n_links(self) -> int:
        return self.n_sources + self.n_sources * self.n_relays + self.n_relays

    @classmethod
    def iid(cls, n_sources: int, n_relays: int, sigma_sq: float = 1.0, ideal_sr: bool = False) -> Topology:
        return cls(
            np.full(n_sources, sigma_sq),
            np.full((n_sources, n_relays), sigma_sq),
            np.full(n_relays, sigma_sq),
            ideal_sr=ideal_sr,
        )

    @classmethod
    def from_positions(cls, sources, relays, destination, alpha: float, ideal_sr: bool = False) -> Topology:
        """Variances ``d**-alpha`` from 2-D node coordinates (meters)."""
        src = np.asarray(sources, dtype=float).reshape(-1, 2)
        rel = np.asarray(relays, dtype=float).reshape(-1, 2)
        dst = np.asarray(destination, dtype=float).reshape(2)
        if alpha <= 0:
            raise ValueError("path-loss exponent must be > 0")

        def var(d):
            d = np.asarray(d, dtype=float)
            if np.any(d <= 0):
                raise ValueError("two nodes share a position; distance 0 is not allowed")
            return d ** (-alpha)

        sd = var(np.linalg.norm(src - dst, axis=1))
        sr = var(np.linalg.norm(src[:, None, :] - rel[None, :, :], axis=2))
        rd = var(np.linalg.norm(rel - dst, axis=1))
        pos = {"sources": src.tolist(), "relays": rel.tolist(), "destination": dst.tolist()}
        return cls(sd, sr, rd, ideal_sr=ideal_sr, positions=pos, alpha=float(alpha))

    def with_ideal_sr(self, ideal: bool = True) -> Topology:
        return Topology(self.sigma_sq_sd, self.sigma_sq_sr, self.sigma_sq_rd, ideal, self.positions, self.alpha)

    def check_code(self, code: NetworkCode):
        if (code.n_sources, code.n_relays) != (self.n_sources, self.n_relays):
            raise ValueError(
                f"code is {code.n_sources}S{code.n_relays}R but topology is {self.n_sources}S{self.n_relays}R"
            )


@dataclass(frozen=True)
class SnrPoint:
    """Per-transmission ``Em/N0`` with ``Em`` fixed at 1."""

    gamma: float

    def __post_init__(self):
        if not (self.gamma > 0 and np.isfinite(self.gamma)):
            raise ValueError("gamma must be finite and > 0")

    @classmethod
    def from_db(cls, db: float) -> SnrPoint:
        return cls(10.0 ** (db / 10.0))

    @property
    def db(self) -> float:
        return 10.0 * np.log10(self.gamma)

    @property
    def n0(self) -> float:
        return 1.0 / self.gamma

    @staticmethod
    def energy_total(n_sources: int, n_relays: int, em: float = 1.0) -> float:
        """Energy spent per round of the protocol (one slot per node)."""
        return em * (n_sources + n_relays)

    @staticmethod
    def energy_per_info_bit(em: float = 1.0) -> float:
        return em


def _gamma(snr) -> float:
    return snr.gamma if isinstance(snr, SnrPoint) else float(snr)


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of all gains. ``h_sr`` is None when the S->R hops are ideal."""

    h_sd: np.ndarray
    h_sr: np.ndarray | None
    h_rd: np.ndarray

    @property
    def ideal_sr(self) -> bool:
        return self.h_sr is None


def sample_realization(top: Topology, rng: np.random.Generator) -> ChannelRealization:
    """Independent Rayleigh gains, variance ``sigma^2 / 2`` per real dimension."""

    def draw(var):
        var = np.asarray(var)
        z = rng.standard_normal(var.shape + (2,))
        return np.sqrt(var / 2.0) * (z[..., 0] + 1j * z[..., 1])

    h_sd = draw(top.sigma_sq_sd)
    h_sr = draw(top.sigma_sq_sr)
    h_rd = draw(top.sigma_sq_rd)
    return ChannelRealization(h_sd, None if top.ideal_sr else h_sr, h_rd)


def link_flip_prob(h, snr):
    """BPSK flip probability ``Q(sqrt(2 gamma |h|^2))``; works elementwise."""
    g = _gamma(snr)
    h = np.asarray(h)
    return q_func(np.sqrt(2.0 * g * (h.real * h.real + h.imag * h.imag)))


def relay_nc_crossover(p_sr, g) -> float:
    """Probability that the XOR of the active first-hop decisions is wrong.

    Closed form: ``sum_t g_t p_t prod_{r>t} (1 - 2 g_r p_r)``.
    """
    gp = [float(gt) * float(pt) for pt, gt in zip(np.asarray(p_sr, dtype=float), np.asarray(g))]
    total = 0.0
    for t in range(len(gp)):
        tail = 1.0
        for r in range(t + 1, len(gp)):
            tail *= 1.0 - 2.0 * gp[r]
        total += gp[t] * tail
    return total


def relay_nc_crossover_recursive(p_sr, g) -> float:
    """Same quantity via the BSC cascade recursion ``a' = a(1-p) + (1-a)p``."""
    a = 0.0
    for pt, gt in zip(np.asarray(p_sr, dtype=float), np.asarray(g)):
        if gt:
            a = a * (1.0 - pt) + (1.0 - a) * pt
    return float(a)


def end_to_end_crossover(a, b):
    """Two BSCs in cascade: ``a + b - 2ab``."""
    return a + b - 2.0 * a * b


def crossover_vector(real: ChannelRealization, code: NetworkCode, snr) -> np.ndarray:
    """Flip probabilities of every codeword position as seen at the destination."""
    p_sd = link_flip_prob(real.h_sd, snr)
    p_rd = link_flip_prob(real.h_rd, snr)
    enc = code.encoding
    relay = np.empty(code.n_relays)
    for q in range(code.n_relays):
        if real.ideal_sr:
            relay[q] = p_rd[q]
        else:
            p_sr = link_flip_prob(real.h_sr[:, q], snr)
            relay[q] = end_to_end_crossover(relay_nc_crossover(p_sr, enc[q]), p_rd[q])
    return np.concatenate([np.atleast_1d(p_sd), relay])


def avg_link_flip_prob_exact(sigma_sq, snr):
    """Fading-averaged BPSK error probability ``(1 - sqrt(x / (1 + x))) / 2`` with ``x = gamma sigma^2``."""
    x = _gamma(snr) * np.asarray(sigma_sq, dtype=float)
    return 0.5 * (1.0 - np.sqrt(x / (1.0 + x)))


def avg_link_flip_prob_high_snr(sigma_sq, snr):
    return 1.0 / (4.0 * _gamma(snr) * np.asarray(sigma_sq, dtype=float))


def avg_relay_crossover_high_snr(top: Topology, g, q: int, snr) -> float:
    """High-SNR average flip probability of relay ``q``'s end-to-end branch."""
    gam = _gamma(snr)
    out = 1.0 / (4.0 * gam * top.sigma_sq_rd[q])
    if not top.ideal_sr:
        g = np.asarray(g, dtype=float)
        out += float(np.sum(g / (4.0 * gam * top.sigma_sq_sr[:, q])))
    return float(out)
