"""Uniform point sources on [0, 1)^d.

Four kinds share one generator type:

* ``pseudo-random`` -- counter-mode SplitMix64 (see :func:`splitmix64`).
* ``halton`` -- radical inverse in the first ``d`` primes.
* ``sobol`` -- Gray-code Sobol points from the bundled Joe-Kuo table.
* ``scrambled-sobol`` -- Sobol points with a nested (Owen) digit scramble.

Low-discrepancy kinds start at sequence index 1, so the all-zeros point is
never emitted.  Every point is a pure function of ``(kind, dimension, seed,
index)``; a generator may be created at any cursor, which is how sample
generation is partitioned across workers.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

__all__ = [
    "KINDS",
    "DirectionNumberTable",
    "SequenceGenerator",
    "load_direction_numbers",
    "next_point",
    "primes",
    "radical_inverse",
    "scramble",
    "splitmix64",
    "star_discrepancy_2d",
    "uniform_stream",
]

KINDS = ("pseudo-random", "halton", "sobol", "scrambled-sobol")

SOBOL_BITS = 32
DIRECTION_FILE = "sobol_directions.txt"
DIRECTION_SHA256 = "c57125c19cd6617467de7aaa63a895f089341512267549dea0671331b20daa53"

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_U64 = np.uint64


def _mix64(z):
    """SplitMix64 finalizer, elementwise on a uint64 array."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _U64(30))) * _M1
        z = (z ^ (z >> _U64(27))) * _M2
    return z ^ (z >> _U64(31))


def splitmix64(state, counter):
    """Counter-mode SplitMix64: the ``counter``-th output of a stream at ``state``.

    ``splitmix64(0, 0) == 0xE220A8397B1DCDAF`` is the reference first output
    of SplitMix64 seeded with zero.
    """
    state = np.asarray(state, dtype=np.uint64)
    counter = np.asarray(counter, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix64(state + (counter + _U64(1)) * _GOLDEN)


def _stream_key(seed: int, tag: int) -> np.uint64:
    """Independent 64-bit stream key for ``(seed, tag)``."""
    s = np.asarray([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    k = _mix64(_mix64(s) ^ np.asarray([tag & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))
    return k[0]


def _to_unit(z):
    # top 53 bits, centred in their cell: result lies in (0, 1)
    return ((z >> _U64(11)).astype(np.float64) + 0.5) * 2.0**-53


def uniform_stream(seed: int, start: int, count: int, tag: int = 0) -> np.ndarray:
    """``count`` uniforms from the seeded counter stream, beginning at ``start``."""
    key = _stream_key(seed, tag)
    counters = np.arange(start, start + count, dtype=np.uint64)
    return _to_unit(splitmix64(key, counters))


# --------------------------------------------------------------------------
# Halton


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


@lru_cache(maxsize=None)
def primes(count: int) -> tuple[int, ...]:
    """The first ``count`` primes."""
    out: list[int] = []
    n = 2
    while len(out) < count:
        if _is_prime(n):
            out.append(n)
        n += 1
    return tuple(out)


def radical_inverse(index: int, base: int) -> float:
    """Reflect the base-``base`` digits of ``index`` about the radix point.

    >>> radical_inverse(1, 2)
    0.5
    >>> radical_inverse(3, 3) == 1 / 9
    True
    """
    if int(base) != base or not _is_prime(int(base)):
        raise ValueError(f"base must be a prime >= 2, got {base!r}")
    if int(index) != index or index < 0:
        raise ValueError(f"index must be a nonnegative integer, got {index!r}")
    index, base = int(index), int(base)
    num, den = 0, 1
    while index > 0:
        index, digit = divmod(index, base)
        num = num * base + digit
        den *= base
    return num / den


def _radical_inverse_array(index: np.ndarray, base: int) -> np.ndarray:
    n = index.astype(np.int64).copy()
    num = np.zeros_like(n)
    den = np.ones_like(n)
    while np.any(n > 0):
        live = n > 0
        digit = n % base
        num = np.where(live, num * base + digit, num)
        den = np.where(live, den * base, den)
        n //= base
    # one correctly rounded division per coordinate
    return num / den


def _halton(index: np.ndarray, dimension: int) -> np.ndarray:
    bases = primes(dimension)
    return np.stack([_radical_inverse_array(index, b) for b in bases], axis=1)


# --------------------------------------------------------------------------
# Sobol


@dataclass(frozen=True)
class DirectionNumberTable:
    """Primitive polynomials and initial direction integers, one row per dimension."""

    degree: tuple[int, ...]
    coeffs: tuple[int, ...]
    initial: tuple[tuple[int, ...], ...]

    @property
    def capacity(self) -> int:
        return len(self.degree)

    def direction_integers(self, dimension: int, bits: int = SOBOL_BITS) -> np.ndarray:
        """Matrix ``V`` of shape (dimension, bits); ``V[j, k]`` is v_{k+1} scaled by 2**bits."""
        if dimension > self.capacity:
            raise ValueError(
                f"Sobol dimension {dimension} exceeds table capacity {self.capacity}"
            )
        V = np.zeros((dimension, bits), dtype=np.uint64)
        for j in range(dimension):
            s = self.degree[j]
            if s == 0:
                m = [1] * bits
            else:
                a = self.coeffs[j]
                m = list(self.initial[j]) + [0] * max(bits - s, 0)
                for k in range(s, bits):
                    val = m[k - s] ^ (m[k - s] << s)
                    for i in range(1, s):
                        if (a >> (s - 1 - i)) & 1:
                            val ^= m[k - i] << i
                    m[k] = val
            for k in range(bits):
                V[j, k] = m[k] << (bits - 1 - k)
        return V


def load_direction_numbers(verify: bool = True) -> DirectionNumberTable:
    """Parse the bundled direction-number file, checking its SHA-256."""
    return _load_table(verify)


@lru_cache(maxsize=2)
def _load_table(verify: bool) -> DirectionNumberTable:
    raw = resources.files("rareber.data").joinpath(DIRECTION_FILE).read_bytes()
    if verify and hashlib.sha256(raw).hexdigest() != DIRECTION_SHA256:
        raise RuntimeError(f"{DIRECTION_FILE} checksum mismatch")
    degree, coeffs, initial = [], [], []
    for line in raw.decode().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        fields = [int(t) for t in line.split()]
        dim, s, a, m = fields[0], fields[1], fields[2], fields[3:]
        if dim != len(degree) + 1 or len(m) != s:
            raise RuntimeError(f"malformed direction-number row for dim {dim}")
        degree.append(s)
        coeffs.append(a)
        initial.append(tuple(m))
    return DirectionNumberTable(tuple(degree), tuple(coeffs), tuple(initial))


@lru_cache(maxsize=64)
def _sobol_matrix(dimension: int) -> np.ndarray:
    return load_direction_numbers().direction_integers(dimension)


def _sobol_integers(index: np.ndarray, dimension: int) -> np.ndarray:
    """Gray-code Sobol points as 32-bit integers, shape (len(index), dimension)."""
    if np.any(index >= 2**SOBOL_BITS):
        raise OverflowError("Sobol index exceeds 2**32 - 1")
    V = _sobol_matrix(dimension)
    gray = index.astype(np.uint64)
    gray = gray ^ (gray >> _U64(1))
    x = np.zeros((len(index), dimension), dtype=np.uint64)
    for b in range(SOBOL_BITS):
        bit = ((gray >> _U64(b)) & _U64(1)).astype(bool)
        if bit.any():
            x[bit] ^= V[:, b]
    return x


@lru_cache(maxsize=256)
def _scramble_keys(seed: int, dimension: int) -> np.ndarray:
    base = _stream_key(seed, 0x5C4A)
    tags = np.arange(dimension * SOBOL_BITS, dtype=np.uint64).reshape(dimension, SOBOL_BITS)
    return _mix64(base ^ _mix64(tags + _U64(1)))


def scramble(digits, seed: int, dims=None) -> np.ndarray:
    """Nested uniform scramble of 32-digit base-2 integers.

    ``digits`` has shape (n, d) (or (d,)); column ``j`` is scrambled with the
    key for coordinate ``dims[j]`` (default ``0..d-1``).  Digit ``k`` is flipped
    by a hash bit of ``(seed, coordinate, k, original digits 0..k-1)``, so two
    inputs sharing a b-digit prefix share a b-digit prefix afterwards.
    """
    x = np.atleast_2d(np.asarray(digits, dtype=np.uint64))
    d = x.shape[1]
    dims = np.arange(d) if dims is None else np.asarray(dims)
    keys = _scramble_keys(int(seed), int(dims.max()) + 1)[dims]
    out = np.zeros_like(x)
    for k in range(SOBOL_BITS):
        shift = SOBOL_BITS - k
        prefix = x >> _U64(shift) if k else np.zeros_like(x)
        with np.errstate(over="ignore"):
            flip = _mix64(keys[:, k] ^ (prefix * _GOLDEN)) >> _U64(63)
        digit = (x >> _U64(shift - 1)) & _U64(1)
        out |= (digit ^ flip) << _U64(shift - 1)
    return out.reshape(np.shape(digits)) if np.ndim(digits) == 1 else out


# --------------------------------------------------------------------------
# generator


class SequenceGenerator:
    """Stateful stream of points in [0, 1)^d.

    Parameters
    ----------
    kind : {"pseudo-random", "halton", "sobol", "scrambled-sobol"}
    dimension : int
    seed : int
        PRNG key for ``pseudo-random``, scramble key for ``scrambled-sobol``,
        and the padding stream for Sobol coordinates beyond table capacity.
    cursor : int
        Number of points already consumed.

    Attributes
    ----------
    padded : bool
        True when a Sobol kind was asked for more dimensions than the
        direction-number table holds; the extra coordinates come from the
        seeded pseudo-random stream.
    """

    def __init__(self, kind: str, dimension: int, seed: int = 0, cursor: int = 0):
        if kind not in KINDS:
            raise ValueError(f"unknown sequence kind {kind!r}; expected one of {KINDS}")
        if int(dimension) != dimension or dimension < 1:
            raise ValueError(f"dimension must be a positive integer, got {dimension!r}")
        if cursor < 0:
            raise ValueError("cursor must be nonnegative")
        self.kind = kind
        self.dimension = int(dimension)
        self.seed = int(seed)
        self.cursor = int(cursor)
        capacity = load_direction_numbers().capacity
        self.padded = kind in ("sobol", "scrambled-sobol") and self.dimension > capacity
        self._ld_dims = min(self.dimension, capacity) if self.padded else self.dimension

    def __repr__(self):
        return (
            f"SequenceGenerator(kind={self.kind!r}, dimension={self.dimension}, "
            f"seed={self.seed}, cursor={self.cursor})"
        )

    def points(self, start: int, count: int) -> np.ndarray:
        """Points at cursors ``start .. start+count-1`` without touching state."""
        d = self.dimension
        if self.kind == "pseudo-random":
            flat = uniform_stream(self.seed, start * d, count * d, tag=0x9A)
            return flat.reshape(count, d)
        index = np.arange(start + 1, start + count + 1, dtype=np.uint64)
        if self.kind == "halton":
            return _halton(index, d)
        ints = _sobol_integers(index, self._ld_dims)
        if self.kind == "sobol":
            out = ints.astype(np.float64) * 2.0**-SOBOL_BITS
        else:
            out = (scramble(ints, self.seed).astype(np.float64) + 0.5) * 2.0**-SOBOL_BITS
        if self.padded:
            extra = d - self._ld_dims
            pad = uniform_stream(self.seed, start * extra, count * extra, tag=0xFAD)
            out = np.hstack([out, pad.reshape(count, extra)])
        return out

    def take(self, count: int) -> np.ndarray:
        """Emit ``count`` points as a (count, d) array and advance the cursor."""
        out = self.points(self.cursor, count)
        self.cursor += count
        return out

    def next_point(self) -> np.ndarray:
        return self.take(1)[0]


def next_point(gen: SequenceGenerator) -> np.ndarray:
    """Emit the point at ``gen.cursor`` and advance it."""
    return gen.next_point()


def star_discrepancy_2d(points: np.ndarray) -> float:
    """Exact star discrepancy of a small 2-D point set (O(N^3))."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    xs = np.unique(np.concatenate([pts[:, 0], [1.0]]))
    ys = np.unique(np.concatenate([pts[:, 1], [1.0]]))
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    px = pts[:, 0][:, None, None]
    py = pts[:, 1][:, None, None]
    open_count = ((px < X) & (py < Y)).sum(axis=0)
    closed_count = ((px <= X) & (py <= Y)).sum(axis=0)
    area = X * Y
    return float(max((area - open_count / n).max(), (closed_count / n - area).max()))
