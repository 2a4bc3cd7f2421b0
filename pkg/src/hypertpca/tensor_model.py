"""Symmetric order-p tensors under the null and planted (spiked) laws.

Only entries at distinct-index p-subsets of ``range(n)`` are stored, in
colexicographic order of the sorted subsets.  Entry ``k`` of the noise is drawn
from a stream keyed by ``(seed, k // CHUNK)``, so a tensor is a pure function
of its seed and chunks can be generated independently.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from hypertpca.errors import ParameterError, ShapeError

CHUNK = 4096
MAGIC = b"SPT1"
# Dense views are materialised for the counting kernels; refuse silly sizes.
MAX_DENSE_ENTRIES = 60_000_000

_NOISE_STREAM = 0
_SPIKE_STREAM = 1


def _check_np(n: int, p: int) -> None:
    if not (isinstance(p, (int, np.integer)) and p >= 2):
        raise ParameterError(f"tensor order p must be an integer >= 2, got {p!r}")
    if not (isinstance(n, (int, np.integer)) and n >= p):
        raise ParameterError(f"need n >= p, got n={n!r}, p={p}")


@dataclass(frozen=True)
class ModelParams:
    n: int
    p: int
    lam: float

    def __post_init__(self):
        _check_np(self.n, self.p)
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ParameterError(f"lambda must be a finite non-negative real, got {self.lam!r}")

    @property
    def kappa(self) -> float:
        """Signal scale lambda * n^(-p/4) multiplying the rank-one term."""
        return self.lam * self.n ** (-self.p / 4)


@dataclass(frozen=True)
class Spike:
    entries: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=np.int8)
        if arr.ndim != 1 or not np.all((arr == 1) | (arr == -1)):
            raise ShapeError("spike entries must be a 1-d vector of +-1")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def n(self) -> int:
        return int(self.entries.shape[0])

    def __len__(self):
        return self.n

    def __getitem__(self, i):
        return int(self.entries[i])


def colex_rank(subset: Sequence[int]) -> int:
    """Rank of a sorted subset among all subsets of the same size, colex order."""
    return sum(math.comb(c, i + 1) for i, c in enumerate(subset))


@lru_cache(maxsize=32)
def colex_subsets(n: int, p: int) -> np.ndarray:
    """All p-subsets of range(n) as rows, in colex order (row k has rank k)."""
    rows = sorted(combinations(range(n), p), key=lambda c: c[::-1])
    out = np.array(rows, dtype=np.int64).reshape(-1, p)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class SymmetricTensor:
    """Symmetric tensor restricted to distinct-index entries.

    ``T[i, j, k]`` returns the same value for every ordering of the indices.
    Repeated indices are not part of the model and raise ``KeyError``.
    """

    n: int
    p: int
    values: np.ndarray
    _dense: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        _check_np(self.n, self.p)
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        if vals.shape != (math.comb(self.n, self.p),):
            raise ShapeError(
                f"expected {math.comb(self.n, self.p)} values for n={self.n}, p={self.p}, "
                f"got shape {vals.shape}"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.values.shape[0]

    def rank(self, idx: Iterable[int]) -> int:
        key = sorted(int(i) for i in idx)
        if len(key) != self.p:
            raise ShapeError(f"edge {tuple(idx)} has arity {len(key)}, expected {self.p}")
        if len(set(key)) != self.p:
            raise KeyError(f"repeated index in {tuple(key)}: diagonal entries are not stored")
        if key[0] < 0 or key[-1] >= self.n:
            raise KeyError(f"index out of range in {tuple(key)} for n={self.n}")
        return colex_rank(key)

    def __getitem__(self, idx) -> float:
        return float(self.values[self.rank(idx)])

    def items(self):
        """Yield ``(sorted_subset, value)`` pairs in storage order."""
        for row, v in zip(colex_subsets(self.n, self.p), self.values):
            yield tuple(int(c) for c in row), float(v)

    def dense(self) -> np.ndarray:
        """Full n^p symmetric array with zeros on repeated-index entries (cached)."""
        if self._dense:
            return self._dense[0]
        size = self.n ** self.p
        if size > MAX_DENSE_ENTRIES:
            raise ShapeError(f"dense view would hold {size} entries")
        out = np.zeros((self.n,) * self.p)
        subs = colex_subsets(self.n, self.p)
        for perm in _perms(self.p):
            out[tuple(subs[:, k] for k in perm)] = self.values
        out.setflags(write=False)
        self._dense.append(out)
        return out

    def with_values(self, values) -> "SymmetricTensor":
        return SymmetricTensor(self.n, self.p, values)


@lru_cache(maxsize=None)
def _perms(p):
    from itertools import permutations

    return tuple(permutations(range(p)))


def _noise(n: int, p: int, seed: int) -> np.ndarray:
    total = math.comb(n, p)
    out = np.empty(total)
    for c, start in enumerate(range(0, total, CHUNK)):
        stop = min(total, start + CHUNK)
        ss = np.random.SeedSequence(seed, spawn_key=(_NOISE_STREAM, c))
        out[start:stop] = np.random.default_rng(ss).standard_normal(stop - start)
    return out


def sample_null(n: int, p: int, seed: int) -> SymmetricTensor:
    """Symmetric tensor whose distinct-index entries are i.i.d. N(0, 1)."""
    _check_np(n, p)
    return SymmetricTensor(n, p, _noise(n, p, seed))


def sample_spike(n: int, seed: int) -> Spike:
    ss = np.random.SeedSequence(seed, spawn_key=(_SPIKE_STREAM,))
    bits = np.random.default_rng(ss).integers(0, 2, size=n)
    return Spike(2 * bits - 1)


def planted_signal(n: int, p: int, spike: Spike, kappa: float) -> np.ndarray:
    """kappa * x^e for every p-subset e, in storage order."""
    if spike.n != n:
        raise ShapeError(f"spike has length {spike.n}, tensor has n={n}")
    subs = colex_subsets(n, p)
    return kappa * np.prod(spike.entries.astype(np.float64)[subs], axis=1)


def sample_planted(params: ModelParams, seed: int, spike: Spike | None = None):
    """Return ``(Y, x_star)`` with Y_e = kappa * x^e + G_e.

    The noise G is exactly ``sample_null(n, p, seed)``; the spike is drawn from
    an independent stream of the same seed unless one is supplied.
    """
    n, p = params.n, params.p
    if spike is None:
        spike = sample_spike(n, seed)
    values = _noise(n, p, seed) + planted_signal(n, p, spike, params.kappa)
    return SymmetricTensor(n, p, values), spike


def edge_monomial(T: SymmetricTensor, S) -> float:
    """Product of T over the edges of hypergraph S (1 for no edges)."""
    out = 1.0
    for e in S.edges:
        if len(e) != T.p:
            raise ShapeError(f"edge {tuple(e)} has arity {len(e)}, tensor order is {T.p}")
        out *= T[e]
    return out


# --- files -----------------------------------------------------------------


def save_tensor(T: SymmetricTensor, path) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", T.n, T.p))
        fh.write(T.values.astype("<f8").tobytes())


def save_tensor_text(T: SymmetricTensor, path) -> None:
    with open(path, "w") as fh:
        for subset, v in T.items():
            fh.write(" ".join(str(i) for i in subset) + f" {v!r}\n")


def load_tensor(path) -> SymmetricTensor:
    """Read either the binary SPT1 format or the text format."""
    raw = Path(path).read_bytes()
    if raw[:4] == MAGIC:
        n, p = struct.unpack("<II", raw[4:12])
        vals = np.frombuffer(raw[12:], dtype="<f8")
        if vals.shape[0] != math.comb(n, p):
            raise ShapeError(f"{path}: expected {math.comb(n, p)} values, found {vals.shape[0]}")
        return SymmetricTensor(n, p, vals.astype(np.float64))
    return _parse_text(raw.decode(), path)


def _parse_text(text: str, path) -> SymmetricTensor:
    rows = [line.split() for line in text.splitlines() if line.strip()]
    if not rows:
        raise ShapeError(f"{path}: empty tensor file")
    p = len(rows[0]) - 1
    entries = {}
    for r in rows:
        if len(r) != p + 1:
            raise ShapeError(f"{path}: inconsistent row {' '.join(r)!r}")
        entries[tuple(sorted(int(i) for i in r[:-1]))] = float(r[-1])
    n = max(max(k) for k in entries) + 1
    if len(entries) != math.comb(n, p):
        raise ShapeError(f"{path}: found {len(entries)} entries, expected C({n},{p})")
    vals = np.empty(len(entries))
    for k, v in entries.items():
        vals[colex_rank(k)] = v
    return SymmetricTensor(n, p, vals)


def save_spike(x: Spike, path) -> None:
    Path(path).write_text("".join(f"{int(v)}\n" for v in x.entries))


def load_spike(path) -> Spike:
    vals = [int(line) for line in Path(path).read_text().split()]
    return Spike(np.array(vals))
