"""Serial Gallager-B reference decoder, codebook enumeration and datasets.

Bit vectors are ``numpy.uint8`` arrays indexed from ``r_0``; the string form
writes ``r_0`` leftmost (``"10001100"``).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

MAX_ENUM_BITS = 24


def bits(word) -> np.ndarray:
    """Coerce a bit string or sequence to a uint8 vector."""
    if isinstance(word, str):
        if set(word) - {"0", "1"}:
            raise ValueError(f"not a bit string: {word!r}")
        return np.array([int(ch) for ch in word], dtype=np.uint8)
    arr = np.asarray(word, dtype=np.uint8)
    if arr.ndim != 1 or np.any(arr > 1):
        raise ValueError("bit vectors are 1-D with entries in {0, 1}")
    return arr


def bitstring(vec) -> str:
    return "".join(str(int(b)) for b in vec)


@dataclass(frozen=True, eq=False)
class HMatrix:
    """Binary parity-check matrix, shape (M, N) with N > M."""

    entries: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.entries)
        if h.ndim != 2 or not np.isin(h, (0, 1)).all():
            raise ValueError("H must be a 2-D 0/1 matrix")
        if h.shape[1] <= h.shape[0]:
            raise ValueError(f"H must have N > M, got {h.shape}")
        h = h.astype(np.uint8)
        h.setflags(write=False)
        object.__setattr__(self, "entries", h)

    @classmethod
    def from_rows(cls, rows: Sequence[str]) -> "HMatrix":
        return cls(np.array([bits(r) for r in rows]))

    @classmethod
    def from_supports(cls, n: int, supports: Sequence[Sequence[int]]) -> "HMatrix":
        h = np.zeros((len(supports), n), dtype=np.uint8)
        for m, s in enumerate(supports):
            h[m, list(s)] = 1
        return cls(h)

    def __eq__(self, other):
        return isinstance(other, HMatrix) and np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash(self.entries.tobytes())

    @property
    def M(self) -> int:
        return self.entries.shape[0]

    @property
    def N(self) -> int:
        return self.entries.shape[1]

    @property
    def is_regular(self) -> bool:
        col = self.entries.sum(axis=0)
        row = self.entries.sum(axis=1)
        return bool((col == col[0]).all() and (row == row[0]).all() and col[0] > 0)

    @property
    def d_v(self) -> Optional[int]:
        col = self.entries.sum(axis=0)
        return int(col[0]) if (col == col[0]).all() else None

    @property
    def d_c(self) -> Optional[int]:
        row = self.entries.sum(axis=1)
        return int(row[0]) if (row == row[0]).all() else None

    def checks_of(self, n: int) -> list[int]:
        """S(v_n): checks connected to variable ``n``."""
        return np.flatnonzero(self.entries[:, n]).tolist()

    def variables_of(self, m: int) -> list[int]:
        """S(c_m): variables connected to check ``m``."""
        return np.flatnonzero(self.entries[m]).tolist()

    def edges(self) -> list[tuple[int, int]]:
        """Tanner edges as (m, n), ordered by check then variable."""
        ms, ns = np.nonzero(self.entries)
        return list(zip(ms.tolist(), ns.tolist()))

    def rank2(self) -> int:
        """Rank over GF(2)."""
        a = self.entries.copy()
        rank = 0
        for col in range(a.shape[1]):
            pivot = next((r for r in range(rank, a.shape[0]) if a[r, col]), None)
            if pivot is None:
                continue
            a[[rank, pivot]] = a[[pivot, rank]]
            for r in range(a.shape[0]):
                if r != rank and a[r, col]:
                    a[r] ^= a[rank]
            rank += 1
        return rank


def make_example8() -> HMatrix:
    """The 4x8 running-example matrix (N=8, M=4, d_v=2, d_c=4)."""
    return HMatrix.from_supports(8, [
        (1, 4, 6, 7),
        (0, 3, 5, 6),
        (2, 3, 5, 7),
        (0, 1, 2, 4),
    ])


@dataclass(frozen=True)
class DecoderParams:
    """GaB parameters.

    ``tie_threshold`` is the vote threshold for variable-to-check messages
    (default ``d_v / 2``); ``decision_threshold`` the one for the decided
    bit (default ``(d_v + 1) / 2``, plain majority of all votes and r_n).
    Sums equal to a threshold resolve to ``r_n``.
    """

    max_iter: int = 100
    tie_threshold: Optional[Fraction] = None
    decision_threshold: Optional[Fraction] = None

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")

    def thresholds(self, d_v: int) -> tuple[Fraction, Fraction]:
        b2 = self.tie_threshold if self.tie_threshold is not None else Fraction(d_v, 2)
        b3 = (self.decision_threshold if self.decision_threshold is not None
              else Fraction(d_v + 1, 2))
        return Fraction(b2), Fraction(b3)


@dataclass
class DecodeResult:
    x_prime: np.ndarray
    converged: bool
    iterations_used: int


@dataclass
class GabState:
    """Messages after one round; useful for inspecting the decoder."""

    r: np.ndarray
    vnc: np.ndarray
    cnv: np.ndarray
    x_prime: np.ndarray
    syndrome: np.ndarray


def syndrome(H: HMatrix, x) -> np.ndarray:
    x = bits(x)
    if x.size != H.N:
        raise ValueError(f"word length {x.size} != N = {H.N}")
    return (H.entries.astype(np.int64) @ x.astype(np.int64) % 2).astype(np.uint8)


def _vote(total: np.ndarray, b: Fraction, r: np.ndarray) -> np.ndarray:
    # compare total against b exactly: total * den vs num
    lhs = total * b.denominator
    return np.where(lhs > b.numerator, 1, np.where(lhs < b.numerator, 0, r)).astype(np.uint8)


def gab_rounds(H: HMatrix, r, params: DecoderParams):
    """Yield a :class:`GabState` for each of ``params.max_iter`` rounds."""
    if not H.is_regular:
        raise ValueError("GaB needs a regular H")
    r = bits(r)
    if r.size != H.N:
        raise ValueError(f"word length {r.size} != N = {H.N}")
    b2, b3 = params.thresholds(H.d_v)
    m_idx, n_idx = np.nonzero(H.entries)
    r64 = r.astype(np.int64)
    vnc = r64[n_idx].copy()
    for _ in range(params.max_iter):
        parity = np.bincount(m_idx, weights=vnc, minlength=H.M).astype(np.int64)
        cnv = (parity[m_idx] - vnc) % 2
        csum = np.bincount(n_idx, weights=cnv, minlength=H.N).astype(np.int64)
        vnc = _vote(csum[n_idx] - cnv + r64[n_idx], b2, r64[n_idx]).astype(np.int64)
        x = _vote(csum + r64, b3, r64)
        yield GabState(r, vnc.astype(np.uint8), cnv.astype(np.uint8), x, syndrome(H, x))


def gab_decode(H: HMatrix, r, params: DecoderParams = DecoderParams()) -> DecodeResult:
    x = None
    for i, st in enumerate(gab_rounds(H, r, params), start=1):
        x = st.x_prime
        if not st.syndrome.any():
            return DecodeResult(x, True, i)
    return DecodeResult(x, False, params.max_iter)


def enumerate_codebook(H: HMatrix) -> list[tuple[int, ...]]:
    """All words with zero syndrome, sorted with r_0 as the most significant bit."""
    if H.N > MAX_ENUM_BITS:
        raise ValueError(f"N = {H.N} too large for brute force (max {MAX_ENUM_BITS})")
    n = H.N
    # bit (n-1-k) of the integer holds r_k, so integer order == string order
    words = np.arange(1 << n, dtype=np.uint32)
    ok = np.ones(words.size, dtype=bool)
    for row in H.entries:
        mask = 0
        for k in np.flatnonzero(row):
            mask |= 1 << (n - 1 - int(k))
        v = words & np.uint32(mask)
        parity = np.zeros(words.size, dtype=np.uint32)
        while v.any():
            parity ^= v & np.uint32(1)
            v = v >> np.uint32(1)
        ok &= parity == 0
    out = []
    for w in np.flatnonzero(ok):
        out.append(tuple((int(w) >> (n - 1 - k)) & 1 for k in range(n)))
    return out


def make_dataset(H: HMatrix) -> list[tuple[int, ...]]:
    """Codebook followed by every single-bit flip of every codeword."""
    book = enumerate_codebook(H)
    flips = []
    for cw in book:
        for k in range(H.N):
            w = list(cw)
            w[k] ^= 1
            flips.append(tuple(w))
    return book + flips
