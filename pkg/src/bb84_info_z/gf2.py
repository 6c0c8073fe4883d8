"""Linear algebra over F_2.

Bit strings are 1-D ``uint8`` arrays of 0/1 and matrices are 2-D ``uint8``
arrays.  Index 0 of a bit string is the leftmost character of its text form,
and row ``i`` of a parity-check matrix produces syndrome bit ``i``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

#: Largest block length accepted by the exhaustive coset decoder (when r > 0).
MAX_DECODE_N = 24
#: Largest r + m accepted by the exhaustive span enumeration for d_{r,m}.
MAX_DRM_VECTORS = 20

_POPCOUNT8 = np.array([bin(i).count("1") for i in range(256)], dtype=np.int64)


class Gf2Error(ValueError):
    """Rejected input to a GF(2) operation."""


class CapExceeded(Gf2Error):
    """An exhaustive routine was asked for an instance above its hard cap."""


def as_bits(value) -> np.ndarray:
    """Coerce a 0/1 string or sequence to a read-only bit array."""
    if isinstance(value, str):
        value = value.strip()
        if value and set(value) - {"0", "1"}:
            raise Gf2Error(f"not a bit string: {value!r}")
        arr = np.frombuffer(value.encode(), dtype=np.uint8) - ord("0")
    else:
        arr = np.asarray(value)
        if arr.ndim != 1:
            raise Gf2Error("bit string must be one-dimensional")
        if arr.size and not np.isin(arr, (0, 1)).all():
            raise Gf2Error("bit string entries must be 0 or 1")
    out = np.array(arr, dtype=np.uint8)
    out.flags.writeable = False
    return out


def as_matrix(value) -> np.ndarray:
    arr = np.array(value, dtype=np.int64)
    if arr.ndim != 2:
        raise Gf2Error("matrix must be two-dimensional")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise Gf2Error("matrix entries must be 0 or 1")
    out = arr.astype(np.uint8)
    out.flags.writeable = False
    return out


def bits_to_str(bits) -> str:
    return "".join("1" if b else "0" for b in np.asarray(bits))


def weight(bits) -> int:
    return int(np.count_nonzero(bits))


def hamming(a, b) -> int:
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise Gf2Error(f"length mismatch: {a.size} vs {b.size}")
    return int(np.count_nonzero(a != b))


def xor(a, b) -> np.ndarray:
    a, b = np.asarray(a, dtype=np.uint8), np.asarray(b, dtype=np.uint8)
    if a.shape != b.shape:
        raise Gf2Error(f"length mismatch: {a.size} vs {b.size}")
    return a ^ b


def bits_to_int(bits) -> int:
    """Integer whose most significant bit is index 0."""
    out = 0
    for b in np.asarray(bits):
        out = (out << 1) | int(b)
    return out


def int_to_bits(value: int, length: int) -> np.ndarray:
    return np.array([(value >> (length - 1 - j)) & 1 for j in range(length)], dtype=np.uint8)


def _mul_transpose(x, mat, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.uint8)
    mat = np.asarray(mat, dtype=np.uint8)
    if mat.ndim != 2:
        raise Gf2Error(f"{what} must be a matrix")
    if x.shape[-1] != mat.shape[1]:
        raise Gf2Error(f"dimension mismatch: string length {x.shape[-1]}, {what} has {mat.shape[1]} columns")
    return ((x.astype(np.int64) @ mat.T.astype(np.int64)) & 1).astype(np.uint8)


def syndrome(x, pc) -> np.ndarray:
    """Return ``x @ pc.T`` over F_2.  Accepts a batch of strings as a 2-D array."""
    return _mul_transpose(x, pc, "parity-check matrix")


def apply_key_map(x, pk) -> np.ndarray:
    """Privacy-amplification map ``x @ pk.T`` over F_2."""
    return _mul_transpose(x, pk, "key matrix")


def rank(mat) -> int:
    """Rank over F_2 by Gaussian elimination."""
    a = np.array(mat, dtype=np.uint8) & 1
    if a.ndim != 2:
        raise Gf2Error("matrix must be two-dimensional")
    rows, cols = a.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        pivots = np.nonzero(a[r:, c])[0]
        if pivots.size == 0:
            continue
        p = r + pivots[0]
        if p != r:
            a[[r, p]] = a[[p, r]]
        below = np.nonzero(a[:, c])[0]
        below = below[below != r]
        a[below] ^= a[r]
        r += 1
    return r


@dataclass(frozen=True, eq=False)
class LinearCodeSpec:
    """Parity-check matrix ``pc`` (r x n) and key matrix ``pk`` (m x n).

    The r + m rows taken together must be linearly independent.
    """

    pc: np.ndarray
    pk: np.ndarray

    def __post_init__(self):
        pc = as_matrix(self.pc) if np.size(self.pc) else np.zeros((0, np.shape(self.pk)[1]), dtype=np.uint8)
        pk = as_matrix(self.pk)
        if pc.shape[1] != pk.shape[1]:
            raise Gf2Error(f"pc has {pc.shape[1]} columns but pk has {pk.shape[1]}")
        if pk.shape[0] < 1:
            raise Gf2Error("key matrix needs at least one row")
        if rank(np.vstack([pc, pk])) != pc.shape[0] + pk.shape[0]:
            raise Gf2Error("rows of pc and pk together are not linearly independent")
        pc.flags.writeable = False
        object.__setattr__(self, "pc", pc)
        object.__setattr__(self, "pk", pk)

    @property
    def n(self) -> int:
        return self.pk.shape[1]

    @property
    def r(self) -> int:
        return self.pc.shape[0]

    @property
    def m(self) -> int:
        return self.pk.shape[0]

    def stacked(self) -> np.ndarray:
        return np.vstack([self.pc, self.pk])

    def drm(self) -> int:
        return code_distance_drm(self.stacked(), self.r, self.m)


def random_full_rank(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """Rejection-sample a fair-coin ``rows x cols`` matrix until it has full row rank."""
    if rows > cols:
        raise Gf2Error(f"cannot have {rows} independent rows in F_2^{cols}")
    while True:
        mat = rng.integers(0, 2, size=(rows, cols), dtype=np.uint8)
        if rank(mat) == rows:
            return mat


def random_code(n: int, r: int, m: int, rng: np.random.Generator, min_distance: int | None = None,
                max_tries: int = 100_000) -> LinearCodeSpec:
    """Random code with stacked rank r + m; optionally require ``d_min(pc) >= min_distance``."""
    for _ in range(max_tries):
        stacked = random_full_rank(r + m, n, rng)
        pc, pk = stacked[:r], stacked[r:]
        if min_distance is None or minimum_distance(pc) >= min_distance:
            return LinearCodeSpec(pc, pk)
    raise Gf2Error(f"no [n={n}, r={r}] code with distance >= {min_distance} found in {max_tries} tries")


def _packed(vectors: np.ndarray) -> np.ndarray:
    return np.packbits(np.asarray(vectors, dtype=np.uint8), axis=-1)


def _popcount(packed: np.ndarray) -> np.ndarray:
    return _POPCOUNT8[packed].sum(axis=-1)


def _span(packed_rows: np.ndarray) -> np.ndarray:
    span = np.zeros((1, packed_rows.shape[1] if packed_rows.ndim == 2 else 0), dtype=np.uint8)
    for v in packed_rows:
        span = np.concatenate([span, span ^ v])
    return span


def code_distance_drm(vectors, r: int, m: int) -> int:
    """Minimum over r <= r' < r+m of the distance from v_{r'+1} to Span{v_1..v_{r'}}.

    ``vectors`` holds v_1..v_{r+m} as rows (the parity-check rows followed by the
    key rows).  Exhaustive; refuses r + m above :data:`MAX_DRM_VECTORS`.
    """
    vecs = np.asarray(vectors, dtype=np.uint8)
    if vecs.ndim != 2 or vecs.shape[0] != r + m:
        raise Gf2Error(f"expected {r + m} vectors, got shape {vecs.shape}")
    if m < 1:
        raise Gf2Error("m must be at least 1")
    if r + m > MAX_DRM_VECTORS:
        raise CapExceeded(f"instance too large for exhaustive mode: r+m={r + m} > {MAX_DRM_VECTORS}")
    packed = _packed(vecs)
    span = _span(packed[:r])
    best = None
    for rp in range(r, r + m):
        d = int(_popcount(span ^ packed[rp]).min())
        best = d if best is None else min(best, d)
        span = np.concatenate([span, span ^ packed[rp]])
    return best


def minimum_distance(pc) -> int:
    """Minimum weight of a nonzero codeword in ker(pc), by enumerating the kernel."""
    pc = as_matrix(pc)
    n = pc.shape[1]
    if n > MAX_DECODE_N:
        raise CapExceeded(f"instance too large for exhaustive mode: n={n} > {MAX_DECODE_N}")
    basis = kernel_basis(pc)
    if basis.shape[0] == 0:
        return n + 1
    words = _span(_packed(basis))[1:]
    return int(_popcount(words).min())


def kernel_basis(mat) -> np.ndarray:
    """Rows spanning the null space {x : x @ mat.T = 0}."""
    a = np.array(mat, dtype=np.uint8) & 1
    rows, cols = a.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(a[r:, c])[0]
        if nz.size == 0:
            continue
        p = r + nz[0]
        a[[r, p]] = a[[p, r]]
        others = np.nonzero(a[:, c])[0]
        others = others[others != r]
        a[others] ^= a[r]
        pivots.append(c)
        r += 1
    free = [c for c in range(cols) if c not in pivots]
    basis = np.zeros((len(free), cols), dtype=np.uint8)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for row, pcol in enumerate(pivots):
            basis[i, pcol] = a[row, f]
    return basis


@lru_cache(maxsize=64)
def _leader_table(pc_bytes: bytes, r: int, n: int) -> dict:
    pc = np.frombuffer(pc_bytes, dtype=np.uint8).reshape(r, n)
    cols = [bits_to_int(pc[:, j]) for j in range(n)]
    table = {0: ()}
    target = 1 << r
    w = 0
    while len(table) < target:
        w += 1
        if w > n:
            raise Gf2Error("parity-check matrix does not have full row rank")
        found = {}
        for support in itertools.combinations(range(n), w):
            s = 0
            for j in support:
                s ^= cols[j]
            if s in table:
                continue
            # smaller integer (index 0 most significant) = lexicographically smaller string
            key = sum(1 << (n - 1 - j) for j in support)
            prev = found.get(s)
            if prev is None or key < prev[0]:
                found[s] = (key, support)
        for s, (_, support) in found.items():
            table[s] = support
    return table


def decode_to_coset_leader(y, pc, target_syndrome) -> np.ndarray:
    """Nearest string to ``y`` whose syndrome is ``target_syndrome``.

    Minimum-weight coset decoding; ties go to the lexicographically smallest
    error pattern.  The syndrome-to-leader table is built once per matrix.
    """
    y = np.asarray(y, dtype=np.uint8)
    pc = as_matrix(pc)
    target = np.asarray(target_syndrome, dtype=np.uint8)
    r, n = pc.shape
    if y.shape != (n,):
        raise Gf2Error(f"dimension mismatch: string length {y.size}, matrix has {n} columns")
    if target.shape != (r,):
        raise Gf2Error(f"syndrome must have {r} bits")
    if r == 0:
        return y.copy()
    if n > MAX_DECODE_N:
        raise CapExceeded(f"instance too large for exhaustive mode: n={n} > {MAX_DECODE_N}")
    table = _leader_table(pc.tobytes(), r, n)
    delta = bits_to_int(syndrome(y, pc) ^ target)
    out = y.copy()
    for j in table[delta]:
        out[j] ^= 1
    return out


def format_matrix(mat) -> str:
    """Shared text form: ``rows cols`` then one space-separated row per line."""
    mat = np.asarray(mat, dtype=np.uint8)
    lines = [f"{mat.shape[0]} {mat.shape[1]}"]
    lines += [" ".join(str(int(b)) for b in row) for row in mat]
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise Gf2Error("empty matrix text")
    try:
        rows, cols = (int(t) for t in lines[0])
    except ValueError as exc:
        raise Gf2Error(f"bad matrix header {' '.join(lines[0])!r}") from exc
    body = lines[1:]
    if len(body) != rows or any(len(row) != cols for row in body):
        raise Gf2Error(f"matrix body does not match header {rows}x{cols}")
    if rows == 0:
        return np.zeros((0, cols), dtype=np.uint8)
    return as_matrix([[int(t) for t in row] for row in body])
