"""Monte Carlo estimation of per-source end-to-end ABEP.

Trials are grouped in fixed-size blocks. Block ``k`` draws all of its random
inputs from a Philox stream keyed by ``(seed, k)``, so the outcome of every
trial is fixed by the seed and its index alone. Blocks are consumed in index
order and the stop rule is checked after each one, which makes the result
independent of how many worker threads computed the blocks.
"""

from __future__ import annotations

import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binomtest

from . import _kernels
from ._accel import HAVE_NUMBA
from .channel import ChannelRealization, SnrPoint, Topology, _gamma, crossover_vector, link_flip_prob
from .demod import bpsk_hard_decision, mdd_demodulate, ml_joint_demodulate, weights
from .gf2code import NetworkCode

log = logging.getLogger(__name__)

MODES = ("bsc", "waveform")
DEMODS = ("ml", "mdd")


@dataclass
class McConfig:
    seed: int = 1
    max_trials: int = 10**8
    target_errors: int = 400
    mode: str = "bsc"
    demod: str = "ml"
    snr_db: tuple = ()
    workers: int = 1
    block_trials: int = _kernels.BLOCK_TRIALS
    use_numba: bool | None = None

    def __post_init__(self):
        if self.max_trials < 1:
            raise ValueError("max_trials must be >= 1")
        if self.target_errors < 1:
            raise ValueError("target_errors must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.demod not in DEMODS:
            raise ValueError(f"demod must be one of {DEMODS}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.block_trials < 1:
            raise ValueError("block_trials must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        self.snr_db = tuple(float(x) for x in self.snr_db)


def wilson_ci(errors: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    if trials < 1:
        return 0.0, 1.0
    ci = binomtest(int(errors), int(trials)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass
class McEstimate:
    """Per-source error counts at one SNR point."""

    snr_db: float
    trials: int
    errors: np.ndarray
    demod: str = "ml"
    mode: str = "bsc"
    ci: list = field(default_factory=list)

    def __post_init__(self):
        self.errors = np.asarray(self.errors, dtype=np.int64)
        if not self.ci:
            self.ci = [wilson_ci(e, self.trials) for e in self.errors]

    @property
    def abep(self) -> np.ndarray:
        if self.trials == 0:
            return np.full(self.errors.shape, np.nan)
        return self.errors / self.trials

    @property
    def ci_lo(self) -> np.ndarray:
        return np.array([c[0] for c in self.ci])

    @property
    def ci_hi(self) -> np.ndarray:
        return np.array([c[1] for c in self.ci])

    @property
    def half_width(self) -> np.ndarray:
        return (self.ci_hi - self.ci_lo) / 2.0


def _link_scale(top: Topology) -> np.ndarray:
    var = np.concatenate([top.sigma_sq_sd, top.sigma_sq_sr.reshape(-1), top.sigma_sq_rd])
    return np.sqrt(var / 2.0)


def _block_draws(cfg: McConfig, top: Topology, block: int) -> dict:
    return _kernels.draw_block(int(cfg.seed), block, top.n_sources, top.n_links, cfg.mode == "waveform",
                               cfg.block_trials)


def run_trial(top: Topology, code: NetworkCode, snr, trial_index: int, cfg: McConfig) -> np.ndarray:
    """Reference scalar implementation of one trial; returns per-source error bits.

    Uses the same random inputs as the block kernels (it regenerates the
    trial's block), but goes through the channel and demod functions one
    link at a time. Meant for checking the kernels, not for speed.
    """
    top.check_code(code)
    block, row = divmod(int(trial_index), cfg.block_trials)
    d = _block_draws(cfg, top, block)
    ns, nr = code.n_sources, code.n_relays
    scale = _link_scale(top)
    h = scale * d["fading"][row, :, 0] + 1j * (scale * d["fading"][row, :, 1])
    bits = d["bits"][row]
    tie = float(d["tie_u"][row])
    gamma = _gamma(snr)
    waveform = cfg.mode == "waveform"
    sr_idx = lambda t, q: ns + t * nr + q  # noqa: E731
    rd_idx = lambda q: ns + ns * nr + q  # noqa: E731

    real = ChannelRealization(h[:ns], None if top.ideal_sr else h[ns:ns + ns * nr].reshape(ns, nr),
                              h[ns + ns * nr:])
    p = link_flip_prob(h, gamma)

    def send(bit, k):
        if waveform:
            noise_std = np.sqrt((1.0 / gamma) / 2.0)
            n = noise_std * d["noise"][row, k, 0] + 1j * (noise_std * d["noise"][row, k, 1])
            y = h[k] * (1.0 - 2.0 * bit) + n
            return bpsk_hard_decision(y, h[k], tie_u=tie)
        return int(bit) ^ int(d["flip_u"][row, k] < p[k])

    hd = np.empty(ns + nr, dtype=np.uint8)
    for t in range(ns):
        hd[t] = send(bits[t], t)
    for q in range(nr):
        rb = 0
        for t in range(ns):
            if code.encoding[q, t]:
                rb ^= int(bits[t]) if top.ideal_sr else send(bits[t], sr_idx(t, q))
        hd[ns + q] = send(rb, rd_idx(q))
    if cfg.demod == "mdd":
        b_hat = mdd_demodulate(hd, code, tie_u=tie)
    else:
        P = crossover_vector(real, code, gamma)
        b_hat = ml_joint_demodulate(hd, weights(P), code, tie_u=tie)
    return (b_hat != bits).astype(np.uint8)


class _PointRunner:
    def __init__(self, top: Topology, code: NetworkCode, gamma: float, cfg: McConfig):
        top.check_code(code)
        self.top, self.code, self.gamma, self.cfg = top, code, gamma, cfg
        self.scale = _link_scale(top)

    def block(self, k: int, n_valid: int) -> np.ndarray:
        d = _block_draws(self.cfg, self.top, k)
        return _kernels.simulate_block(
            d, self.scale, self.gamma, self.code.encoding, self.code.codebook, self.code.messages,
            self.top.ideal_sr, self.cfg.mode == "waveform", self.cfg.demod == "mdd", n_valid, self.cfg.use_numba,
        )


def _estimate_point(runner: _PointRunner, cfg: McConfig, pool, snr_db: float, progress) -> McEstimate:
    B = cfg.block_trials
    n_blocks = -(-cfg.max_trials // B)
    ns = runner.code.n_sources
    errors = np.zeros(ns, dtype=np.int64)
    trials = 0
    k = 0
    batch = cfg.workers
    while k < n_blocks:
        ks = list(range(k, min(k + batch, n_blocks)))
        valid = [min(B, cfg.max_trials - j * B) for j in ks]
        if pool is None:
            results = (runner.block(j, v) for j, v in zip(ks, valid))
        else:
            results = pool.map(runner.block, ks, valid)
        stop = False
        for j, v, e in zip(ks, valid, results):
            errors += e
            trials += v
            if np.all(errors >= cfg.target_errors):
                stop = True
                break
        k = ks[-1] + 1
        if progress is not None:
            progress(snr_db, trials, errors)
        if stop:
            break
    return McEstimate(snr_db, trials, errors, cfg.demod, cfg.mode)


def stderr_progress(snr_db, trials, errors):
    print(f"\r[{snr_db:6.2f} dB] trials={trials:>12d} errors={errors.tolist()}", end="", file=sys.stderr)


def estimate_abep(top: Topology, code: NetworkCode, cfg: McConfig, progress=None) -> list[McEstimate]:
    """One estimate per SNR point in ``cfg.snr_db``.

    Stops at the first block where every source has ``target_errors`` errors,
    or at ``max_trials``. Results depend only on the seed and the config.
    """
    out = []
    pool = ThreadPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        for db in cfg.snr_db:
            runner = _PointRunner(top, code, SnrPoint.from_db(db).gamma, cfg)
            est = _estimate_point(runner, cfg, pool, db, progress)
            log.info("snr=%.2f dB trials=%d errors=%s", db, est.trials, est.errors.tolist())
            out.append(est)
    finally:
        if pool is not None:
            pool.shutdown()
    if progress is stderr_progress and cfg.snr_db:
        print(file=sys.stderr)
    return out


def estimate_slope(est_low, est_high, snr_low_db: float, snr_high_db: float):
    """Empirical diversity order ``-d log10(ABEP) / d(dB / 10)``.

    Accepts scalars, arrays or :class:`McEstimate` objects.
    """
    lo = est_low.abep if isinstance(est_low, McEstimate) else np.asarray(est_low, dtype=float)
    hi = est_high.abep if isinstance(est_high, McEstimate) else np.asarray(est_high, dtype=float)
    if np.any(lo <= 0) or np.any(hi <= 0) or np.any(~np.isfinite(lo)) or np.any(~np.isfinite(hi)):
        raise ValueError("slope needs nonzero estimates at both points")
    if snr_high_db == snr_low_db:
        raise ValueError("SNR points must differ")
    s = -(np.log10(hi) - np.log10(lo)) / ((snr_high_db - snr_low_db) / 10.0)
    return float(s) if np.ndim(s) == 0 else s


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
