"""Binary network-code algebra over GF(2).

A network with ``n_sources`` sources and ``n_relays`` relays is described by
its encoding matrix (one row of 0/1 coefficients per relay). Stacking the
identity on top of it gives the systematic generator of a
``(n_sources + n_relays, n_sources)`` linear block code: positions
``0..n_sources-1`` are the direct source bits, the remaining positions are the
relay bits, in relay order.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

MAX_SOURCES = 20


class GuardExceeded(ValueError):
    """An exhaustive enumeration would exceed its configured size limit."""


def _as_bits(a, name: str, ndim: int) -> np.ndarray:
    arr = np.asarray(a)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-D, got shape {arr.shape}")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError(f"{name} entries must be 0 or 1")
    return arr.astype(np.uint8)


def build_generator(enc) -> np.ndarray:
    """Return the systematic generator ``[I; enc]`` with shape ``(NS+NR, NS)``."""
    enc = _as_bits(enc, "encoding matrix", 2)
    n_relays, n_sources = enc.shape
    if n_sources < 1:
        raise ValueError("need at least one source")
    return np.vstack([np.eye(n_sources, dtype=np.uint8), enc])


def encode(G, b) -> np.ndarray:
    """Codeword ``G (.) b`` with arithmetic in GF(2)."""
    G = np.asarray(G, dtype=np.uint8)
    b = _as_bits(b, "information bits", 1)
    if b.shape[0] != G.shape[1]:
        raise ValueError(f"expected {G.shape[1]} information bits, got {b.shape[0]}")
    return (G.astype(np.int64) @ b.astype(np.int64) % 2).astype(np.uint8)


def _pair(c, cbar) -> tuple[np.ndarray, np.ndarray]:
    c = np.asarray(c, dtype=np.uint8)
    cbar = np.asarray(cbar, dtype=np.uint8)
    if c.shape != cbar.shape:
        raise ValueError(f"length mismatch: {c.shape} vs {cbar.shape}")
    return c, cbar


def difference(c, cbar) -> np.ndarray:
    """Difference pattern ``c XOR cbar``."""
    c, cbar = _pair(c, cbar)
    return c ^ cbar


def differing_positions(c, cbar) -> np.ndarray:
    """Indices where the two words disagree (0-based)."""
    return np.flatnonzero(difference(c, cbar))


def hamming_distance(c, cbar) -> int:
    return int(difference(c, cbar).sum())


def message_table(n_sources: int) -> np.ndarray:
    """All ``2**n_sources`` information vectors; row ``i`` has bit ``t`` = ``(i >> t) & 1``."""
    if n_sources > MAX_SOURCES:
        raise GuardExceeded(f"{n_sources} sources exceeds the enumeration limit of {MAX_SOURCES}")
    idx = np.arange(1 << n_sources, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n_sources)) & 1).astype(np.uint8)


def enumerate_codebook(G) -> np.ndarray:
    """Codewords for every message of :func:`message_table`, shape ``(2**NS, NS+NR)``."""
    G = np.asarray(G, dtype=np.uint8)
    msgs = message_table(G.shape[1])
    return (msgs.astype(np.int64) @ G.T.astype(np.int64) % 2).astype(np.uint8)


def separation_vector(G) -> np.ndarray:
    """Per-source minimum distance of the code generated by ``G``.

    Entry ``t`` is the smallest Hamming distance between two codewords whose
    information bits differ in position ``t``. Because the code is linear this
    is the minimum weight over codewords of messages with bit ``t`` set.
    """
    G = np.asarray(G, dtype=np.uint8)
    n_sources = G.shape[1]
    msgs = message_table(n_sources)
    weights = enumerate_codebook(G).sum(axis=1)
    sv = np.empty(n_sources, dtype=np.int64)
    for t in range(n_sources):
        sv[t] = weights[msgs[:, t] == 1].min()
    return sv


def pack_bits(bits) -> np.ndarray:
    """Pack the last axis of a 0/1 array into integers, position ``m`` -> bit ``m``."""
    bits = np.asarray(bits, dtype=np.int64)
    return (bits << np.arange(bits.shape[-1], dtype=np.int64)).sum(axis=-1)


class NetworkCode:
    """Encoding matrix plus its generator, codebook and separation vector.

    Instances are treated as immutable; the derived arrays are cached and
    marked read-only so they can be shared between threads.
    """

    def __init__(self, encoding):
        enc = _as_bits(encoding, "encoding matrix", 2)
        if enc.shape[1] < 1:
            raise ValueError("need at least one source")
        if enc.shape[1] > MAX_SOURCES:
            raise GuardExceeded(f"{enc.shape[1]} sources exceeds the enumeration limit of {MAX_SOURCES}")
        enc.setflags(write=False)
        self.encoding = enc

    @classmethod
    def from_relay_sources(cls, n_sources: int, relay_sources) -> NetworkCode:
        """Build from, for each relay, the (1-based) list of sources it XORs."""
        enc = np.zeros((len(relay_sources), n_sources), dtype=np.uint8)
        for q, srcs in enumerate(relay_sources):
            for s in srcs:
                enc[q, s - 1] = 1
        return cls(enc)

    @property
    def n_sources(self) -> int:
        return self.encoding.shape[1]

    @property
    def n_relays(self) -> int:
        return self.encoding.shape[0]

    @property
    def length(self) -> int:
        return self.n_sources + self.n_relays

    @cached_property
    def generator(self) -> np.ndarray:
        G = build_generator(self.encoding)
        G.setflags(write=False)
        return G

    @cached_property
    def messages(self) -> np.ndarray:
        m = message_table(self.n_sources)
        m.setflags(write=False)
        return m

    @cached_property
    def codebook(self) -> np.ndarray:
        cb = enumerate_codebook(self.generator)
        cb.setflags(write=False)
        return cb

    @cached_property
    def packed_codebook(self) -> np.ndarray:
        return pack_bits(self.codebook)

    @cached_property
    def separation_vector(self) -> np.ndarray:
        sv = separation_vector(self.generator)
        sv.setflags(write=False)
        return sv

    def encode(self, b) -> np.ndarray:
        return encode(self.generator, b)

    def dominant_messages(self, t: int) -> np.ndarray:
        """Nonzero difference messages with bit ``t`` set whose codeword weight equals ``SV[t]``."""
        weights = self.codebook.sum(axis=1)
        mask = (self.messages[:, t] == 1) & (weights == self.separation_vector[t])
        return self.messages[mask]

    def __eq__(self, other):
        return isinstance(other, NetworkCode) and np.array_equal(self.encoding, other.encoding)

    def __hash__(self):
        return hash(self.encoding.tobytes() + bytes(self.encoding.shape))

    def __repr__(self):
        rows = ",".join("".join(map(str, r)) for r in self.encoding)
        return f"NetworkCode({rows})"
