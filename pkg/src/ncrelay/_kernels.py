"""Block kernels for the Monte Carlo engine.

A block is a fixed number of trials whose random inputs are drawn up front
from a counter-based generator keyed by ``(seed, block_index)``. The draws do
not depend on SNR, mode or demodulator beyond which arrays are read, so every
SNR point and both demodulators see the same fading (common random numbers).

Link order inside a trial: the ``NS`` direct links, then the ``NS * NR``
source-to-relay links (source-major), then the ``NR`` relay-to-destination
links.

Two interchangeable implementations consume the same draws: a numba loop
kernel and a vectorized numpy one. They follow the same arithmetic order so
they agree decision for decision.
"""

import math

import numpy as np
from scipy.special import erfc

from ._accel import HAVE_NUMBA, njit

BLOCK_TRIALS = 1 << 15
_SQRT2 = math.sqrt(2.0)
P_MIN = 1e-15
P_MAX = 0.5
# Below this gamma*|h|^2 a link's reliability weight may round to zero, so the
# no-flip shortcut is not taken. Q(sqrt(2e-3)) ~ 0.487, far from 1/2.
QUIET_GX = 1e-3


def link_layout(n_sources: int, n_relays: int) -> int:
    return n_sources + n_sources * n_relays + n_relays


def draw_block(seed: int, block_index: int, n_sources: int, n_links: int, waveform: bool,
               block_trials: int = BLOCK_TRIALS) -> dict:
    """Every random input of one block, in a fixed draw order."""
    ss = np.random.SeedSequence(seed, spawn_key=(block_index,))
    rng = np.random.Generator(np.random.Philox(ss))
    B = block_trials
    out = {"bits": rng.integers(0, 2, size=(B, n_sources), dtype=np.uint8)}
    out["fading"] = rng.standard_normal((B, n_links, 2))
    if waveform:
        out["noise"] = rng.standard_normal((B, n_links, 2))
    else:
        out["flip_u"] = rng.random((B, n_links))
    out["tie_u"] = rng.random(B)
    return out


@njit(cache=True, nogil=True)
def _bpsk_link(bit, zr, zi, sc, nr_, ni_, noise_std, u):
    """Send ``bit`` as +-1 over one link and return the coherent hard decision."""
    hr = sc * zr
    hi = sc * zi
    s = 1.0 - 2.0 * float(bit)
    yr = hr * s + noise_std * nr_
    yi = hi * s + noise_std * ni_
    m = yr * hr + yi * hi
    out = 0
    if m < 0.0:
        out = 1
    elif m == 0.0 and u < 0.5:
        out = 1
    return out


@njit(cache=True, nogil=True)
def _block_numba(bits, fading, flip_u, noise, tie_u, scale, gamma, enc, codebook, messages,
                 ideal_sr, waveform, mdd, n_valid):
    ns = bits.shape[1]
    nr = enc.shape[0]
    n = ns + nr
    n_links = scale.shape[0]
    n_words = codebook.shape[0]
    errors = np.zeros(ns, dtype=np.int64)
    p = np.empty(n_links)
    flip = np.zeros(n_links, dtype=np.uint8)
    xs = np.empty(n_links)
    hd = np.empty(n, dtype=np.uint8)
    P = np.empty(n)
    w = np.empty(n)
    metric = np.empty(n_words)
    noise_std = math.sqrt((1.0 / gamma) / 2.0)
    two_gamma = 2.0 * gamma
    for i in range(n_valid):
        # Fast path: decide every link first using a cheap Chernoff test
        # u >= exp(-gamma x) / 2 >= Q(sqrt(2 gamma x)), which rules out a flip
        # without evaluating erfc. Only links the trial actually uses count.
        quiet = True
        for k in range(n_links):
            hr = scale[k] * fading[i, k, 0]
            hi = scale[k] * fading[i, k, 1]
            x = hr * hr + hi * hi
            xs[k] = x
            p[k] = -1.0
            if ideal_sr and k >= ns and k < ns + ns * nr:
                continue
            if waveform:
                continue
            if gamma * x > QUIET_GX and flip_u[i, k] >= 0.5 * math.exp(-gamma * x):
                flip[k] = 0
            else:
                p[k] = 0.5 * math.erfc(math.sqrt(two_gamma * x) / _SQRT2)
                flip[k] = 1 if flip_u[i, k] < p[k] else 0
                quiet = False
        # hard decisions at relays and destination
        for t in range(ns):
            if waveform:
                hd[t] = _bpsk_link(np.int64(bits[i, t]), fading[i, t, 0], fading[i, t, 1], scale[t],
                                   noise[i, t, 0], noise[i, t, 1], noise_std, tie_u[i])
            else:
                hd[t] = np.int64(bits[i, t]) ^ np.int64(flip[t])
        for q in range(nr):
            rb = 0
            for t in range(ns):
                if enc[q, t]:
                    bt = np.int64(bits[i, t])
                    if not ideal_sr:
                        ks = ns + t * nr + q
                        if waveform:
                            bt = _bpsk_link(bt, fading[i, ks, 0], fading[i, ks, 1], scale[ks],
                                            noise[i, ks, 0], noise[i, ks, 1], noise_std, tie_u[i])
                        else:
                            bt = bt ^ np.int64(flip[ks])
                    rb = rb ^ bt
            kd = ns + ns * nr + q
            if waveform:
                hd[ns + q] = _bpsk_link(rb, fading[i, kd, 0], fading[i, kd, 1], scale[kd],
                                        noise[i, kd, 0], noise[i, kd, 1], noise_std, tie_u[i])
            else:
                hd[ns + q] = rb ^ np.int64(flip[kd])
        if waveform:
            quiet = True
            for m in range(ns):
                if hd[m] != bits[i, m]:
                    quiet = False
            if quiet:
                for q in range(nr):
                    c = 0
                    for t in range(ns):
                        if enc[q, t]:
                            c ^= np.int64(bits[i, t])
                    if hd[ns + q] != c:
                        quiet = False
            if quiet:
                for k in range(n_links):
                    if ideal_sr and k >= ns and k < ns + ns * nr:
                        continue
                    if gamma * xs[k] <= QUIET_GX:
                        quiet = False
        if quiet:
            # the received word is the transmitted codeword and every
            # reliability is strictly positive, so the decision is correct
            continue
        for k in range(n_links):
            if p[k] < 0.0:
                p[k] = 0.5 * math.erfc(math.sqrt(two_gamma * xs[k]) / _SQRT2)
        # genie reliabilities
        for t in range(ns):
            P[t] = p[t]
        for q in range(nr):
            prd = p[ns + ns * nr + q]
            if ideal_sr:
                P[ns + q] = prd
            else:
                a = 0.0
                for t in range(ns):
                    gp = enc[q, t] * p[ns + t * nr + q]
                    tail = 1.0
                    for r in range(t + 1, ns):
                        tail *= 1.0 - 2.0 * (enc[q, r] * p[ns + r * nr + q])
                    a += gp * tail
                P[ns + q] = a + prd - 2.0 * a * prd
        for m in range(n):
            if mdd:
                w[m] = 1.0
            else:
                pm = min(max(P[m], P_MIN), P_MAX)
                w[m] = max(math.log1p(-pm) - math.log(pm), 0.0)
        # exhaustive weighted-Hamming search
        best = np.inf
        nbest = 0
        for c in range(n_words):
            acc = 0.0
            for m in range(n):
                if codebook[c, m] != hd[m]:
                    acc += w[m]
            metric[c] = acc
            if acc < best:
                best = acc
                nbest = 1
            elif acc == best:
                nbest += 1
        pick = int(tie_u[i] * nbest)
        if pick > nbest - 1:
            pick = nbest - 1
        chosen = 0
        seen = 0
        for c in range(n_words):
            if metric[c] == best:
                if seen == pick:
                    chosen = c
                    break
                seen += 1
        for t in range(ns):
            if messages[chosen, t] != bits[i, t]:
                errors[t] += 1
    return errors


def _block_numpy(bits, fading, flip_u, noise, tie_u, scale, gamma, enc, codebook, messages,
                 ideal_sr, waveform, mdd, n_valid):
    ns = bits.shape[1]
    nr = enc.shape[0]
    bits = bits[:n_valid]
    hr = scale * fading[:n_valid, :, 0]
    hi = scale * fading[:n_valid, :, 1]
    x = hr * hr + hi * hi
    p = 0.5 * erfc(np.sqrt(2.0 * gamma * x) / _SQRT2)
    if not waveform:
        flip = (flip_u[:n_valid] < p).astype(np.uint8)
    noise_std = math.sqrt((1.0 / gamma) / 2.0)
    coin = tie_u[:n_valid] < 0.5

    def link(bit, k):
        if not waveform:
            return bit ^ flip[:, k]
        sgn = 1.0 - 2.0 * bit
        yr = hr[:, k] * sgn + noise_std * noise[:n_valid, k, 0]
        yi = hi[:, k] * sgn + noise_std * noise[:n_valid, k, 1]
        m = yr * hr[:, k] + yi * hi[:, k]
        return np.where(m > 0.0, False, np.where(m < 0.0, True, coin)).astype(np.uint8)

    B = bits.shape[0]
    hd = np.empty((B, ns + nr), dtype=np.uint8)
    for t in range(ns):
        hd[:, t] = link(bits[:, t], t)
    sr_p = p[:, ns:ns + ns * nr].reshape(B, ns, nr)
    rd_p = p[:, ns + ns * nr:]
    P = np.empty((B, ns + nr))
    P[:, :ns] = p[:, :ns]
    for q in range(nr):
        rb = np.zeros(B, dtype=np.uint8)
        a = np.zeros(B)
        for t in range(ns):
            if enc[q, t]:
                bt = bits[:, t] if ideal_sr else link(bits[:, t], ns + t * nr + q)
                rb ^= bt
            gp = enc[q, t] * sr_p[:, t, q]
            tail = np.ones(B)
            for r in range(t + 1, ns):
                tail *= 1.0 - 2.0 * (enc[q, r] * sr_p[:, r, q])
            a += gp * tail
        hd[:, ns + q] = link(rb, ns + ns * nr + q)
        prd = rd_p[:, q]
        P[:, ns + q] = prd if ideal_sr else a + prd - 2.0 * a * prd
    if mdd:
        w = np.ones_like(P)
    else:
        Pc = np.minimum(np.maximum(P, P_MIN), P_MAX)
        w = np.maximum(np.log1p(-Pc) - np.log(Pc), 0.0)

    n_words = codebook.shape[0]
    metric = np.zeros((B, n_words))
    for m in range(ns + nr):
        mism = codebook[None, :, m] != hd[:, m, None]
        metric = np.where(mism, metric + w[:, m, None], metric)
    best = metric.min(axis=1, keepdims=True)
    is_best = metric == best
    nbest = is_best.sum(axis=1)
    pick = np.minimum((tie_u[:n_valid] * nbest).astype(np.int64), nbest - 1)
    rank = np.cumsum(is_best, axis=1) - 1
    chosen = np.argmax(is_best & (rank == pick[:, None]), axis=1)
    decided = messages[chosen]
    return (decided != bits).sum(axis=0).astype(np.int64)


def simulate_block(draws: dict, scale, gamma: float, enc, codebook, messages, ideal_sr: bool, waveform: bool,
                   mdd: bool, n_valid: int, use_numba: bool | None = None) -> np.ndarray:
    """Per-source error counts over the first ``n_valid`` trials of a drawn block."""
    if use_numba is None:
        use_numba = HAVE_NUMBA
    fn = _block_numba if use_numba else _block_numpy
    empty2 = np.empty((0, 0))
    empty3 = np.empty((0, 0, 0))
    return fn(
        draws["bits"],
        draws["fading"],
        draws.get("flip_u", empty2),
        draws.get("noise", empty3),
        draws["tie_u"],
        np.ascontiguousarray(scale, dtype=np.float64),
        float(gamma),
        np.ascontiguousarray(enc, dtype=np.uint8),
        np.ascontiguousarray(codebook, dtype=np.uint8),
        np.ascontiguousarray(messages, dtype=np.uint8),
        bool(ideal_sr),
        bool(waveform),
        bool(mdd),
        int(n_valid),
    )
