"""Exact arithmetic and affine geometry over Z_p^m for odd primes p.

Every table, transform, and counting routine in this package keys group
elements by one fixed encoding: the element with digit vector
(x_0, ..., x_{m-1}) in [0, p)^m has canonical index sum_i x_i * p**i
(little-endian base p).  Index <-> digit conversion is a bijection below
p**m and all vectorised kernels rely on that single convention.

Cosets w + V are stored in parity-check form: a reduced list of normal
vectors n_j together with target residues c_j, the coset being
{x : n_j . x = c_j for all j}.  Inconsistent constraint systems produce
an explicit empty-set value rather than raising, because intersection
statistics downstream need to count degenerate intersections.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

logger = logging.getLogger("lshape")

__all__ = [
    "ResourceLimitError",
    "PrimeField",
    "GroupVector",
    "AffineSubspace",
    "LinearMap",
    "vec_add",
    "vec_sub",
    "vec_neg",
    "vec_scale",
    "dot",
    "modular_rref",
    "solve_mod",
    "subspace_from_normals",
    "full_space",
    "intersect_subspaces",
    "power_vector",
    "digit_table",
    "digits_of",
    "index_of",
    "add_map",
    "scale_map",
]

#: Hard cap on dense enumeration sizes (number of group elements).  The
#: regime of interest is tiny (p <= 7, m <= 8) but the guard catches
#: accidental huge requests before they allocate.
MAX_ENUMERATION = 1 << 24


class ResourceLimitError(RuntimeError):
    """Raised when a requested computation exceeds the configured caps."""


def _is_prime(q: int) -> bool:
    if q < 2:
        return False
    i = 2
    while i * i <= q:
        if q % i == 0:
            return False
        i += 1
    return True


_small_p_warned: set[int] = set()


@dataclass(frozen=True)
class PrimeField:
    """The prime modulus shared by a whole computation.

    ``strict_mode`` rejects p < 11.  The geometry (halving a step in y,
    doubling one in x) only needs 2 invertible, so everything here is
    well defined for any odd prime; small p is what makes exhaustive
    testing affordable, hence the default is permissive with a one-time
    warning per modulus.
    """

    p: int
    strict_mode: bool = False

    def __post_init__(self) -> None:
        if not _is_prime(self.p):
            raise ValueError(f"p = {self.p} is not prime")
        if self.p == 2:
            raise ValueError("p must be odd: the maps y + 2z and 2x + y need 2 invertible")
        if self.p < 11:
            if self.strict_mode:
                raise ValueError(f"strict mode requires p >= 11, got p = {self.p}")
            if self.p not in _small_p_warned:
                _small_p_warned.add(self.p)
                logger.warning(
                    "p = %d is small; results are exact but density thresholds "
                    "are easiest to interpret for p >= 11",
                    self.p,
                )

    @property
    def inv2(self) -> int:
        """Multiplicative inverse of 2 mod p (the only inverse cached by name)."""
        return (self.p + 1) // 2


@lru_cache(maxsize=512)
def power_vector(p: int, m: int) -> np.ndarray:
    """[1, p, p^2, ..., p^(m-1)] as int64, read-only."""
    out = p ** np.arange(m, dtype=np.int64)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=512)
def digit_table(p: int, m: int) -> np.ndarray:
    """All p^m digit vectors in index order: row i is the digits of index i."""
    size = p**m
    if size > MAX_ENUMERATION:
        raise ResourceLimitError(f"refusing to enumerate {size} elements (cap {MAX_ENUMERATION})")
    idx = np.arange(size, dtype=np.int64)
    out = (idx[:, None] // power_vector(p, m)[None, :]) % p
    out.setflags(write=False)
    return out


def digits_of(p: int, m: int, indices: np.ndarray | int) -> np.ndarray:
    """Digit vectors of the given canonical indices, shape (..., m)."""
    arr = np.asarray(indices, dtype=np.int64)
    return (arr[..., None] // power_vector(p, m)) % p


def index_of(p: int, digits: np.ndarray | Sequence[int]) -> np.ndarray | int:
    """Canonical indices of the given digit vectors (last axis is the digits)."""
    arr = np.asarray(digits, dtype=np.int64) % p
    out = arr @ power_vector(p, arr.shape[-1])
    if out.ndim == 0:
        return int(out)
    return out


@lru_cache(maxsize=8192)
def add_map(p: int, m: int, h_index: int) -> np.ndarray:
    """Permutation a with a[i] = index of (element i) + (element h), read-only."""
    d = digit_table(p, m)
    out = index_of(p, (d + d[h_index]) % p)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=1024)
def scale_map(p: int, m: int, c: int) -> np.ndarray:
    """Permutation (for c invertible) s with s[i] = index of c * (element i)."""
    d = digit_table(p, m)
    out = index_of(p, (c * d) % p)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class GroupVector:
    """An element of Z_p^m as a digit tuple; doubles as a character label."""

    p: int
    digits: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(not (0 <= d < self.p) for d in self.digits):
            raise ValueError(f"digits {self.digits} out of range for p = {self.p}")

    @classmethod
    def from_index(cls, p: int, m: int, index: int) -> "GroupVector":
        if not (0 <= index < p**m):
            raise ValueError(f"index {index} out of range for p^m = {p**m}")
        digits = []
        q = index
        for _ in range(m):
            q, r = divmod(q, p)
            digits.append(r)
        return cls(p, tuple(digits))

    @classmethod
    def zero(cls, p: int, m: int) -> "GroupVector":
        return cls(p, (0,) * m)

    @property
    def m(self) -> int:
        return len(self.digits)

    @property
    def index(self) -> int:
        return int(sum(d * self.p**i for i, d in enumerate(self.digits)))

    def as_array(self) -> np.ndarray:
        return np.array(self.digits, dtype=np.int64)

    def is_zero(self) -> bool:
        return all(d == 0 for d in self.digits)


def _check_same_space(a: GroupVector, b: GroupVector) -> None:
    if a.p != b.p:
        raise ValueError(f"mixed moduli {a.p} and {b.p}")
    if a.m != b.m:
        raise ValueError(f"dimension mismatch: {a.m} vs {b.m}")


def vec_add(a: GroupVector, b: GroupVector) -> GroupVector:
    _check_same_space(a, b)
    return GroupVector(a.p, tuple((x + y) % a.p for x, y in zip(a.digits, b.digits)))


def vec_sub(a: GroupVector, b: GroupVector) -> GroupVector:
    _check_same_space(a, b)
    return GroupVector(a.p, tuple((x - y) % a.p for x, y in zip(a.digits, b.digits)))


def vec_neg(a: GroupVector) -> GroupVector:
    return GroupVector(a.p, tuple((-x) % a.p for x in a.digits))


def vec_scale(c: int, a: GroupVector) -> GroupVector:
    return GroupVector(a.p, tuple((c * x) % a.p for x in a.digits))


def dot(a: GroupVector, b: GroupVector) -> int:
    _check_same_space(a, b)
    return int(sum(x * y for x, y in zip(a.digits, b.digits)) % a.p)


def modular_rref(matrix: np.ndarray | Sequence[Sequence[int]], p: int) -> tuple[np.ndarray, tuple[int, ...]]:
    """Reduced row echelon form mod p.

    Returns (rows, pivots): the nonzero reduced rows and their pivot
    column indices.  Zero rows are dropped, so len(rows) is the rank.
    """
    a = np.array(matrix, dtype=np.int64) % p
    if a.ndim != 2:
        a = a.reshape(0 if a.size == 0 else 1, -1)
    rows, cols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        pivot = None
        for i in range(r, rows):
            if a[i, c] % p != 0:
                pivot = i
                break
        if pivot is None:
            continue
        a[[r, pivot]] = a[[pivot, r]]
        inv = pow(int(a[r, c]), p - 2, p)
        a[r] = (a[r] * inv) % p
        for i in range(rows):
            if i != r and a[i, c] % p != 0:
                a[i] = (a[i] - a[i, c] * a[r]) % p
        pivots.append(c)
        r += 1
    return a[:r].copy(), tuple(pivots)


def solve_mod(a: np.ndarray | Sequence[Sequence[int]], b: np.ndarray | Sequence[int], p: int) -> np.ndarray | None:
    """One solution x of A x = b mod p (free variables set to 0), or None."""
    a = np.array(a, dtype=np.int64) % p
    b = np.array(b, dtype=np.int64) % p
    if a.size == 0:
        return np.zeros(a.shape[1] if a.ndim == 2 else 0, dtype=np.int64)
    aug = np.hstack([a, b.reshape(-1, 1)])
    rref, pivots = modular_rref(aug, p)
    ncols = a.shape[1]
    if ncols in pivots:
        return None  # a row reduced to 0 = nonzero
    x = np.zeros(ncols, dtype=np.int64)
    for i, c in enumerate(pivots):
        x[c] = rref[i, -1]
    return x


@dataclass(frozen=True)
class AffineSubspace:
    """A coset {x : n_j . x = c_j} in parity-check form, possibly empty.

    ``normals`` is always a reduced (RREF) independent list, so the
    codimension equals len(normals).  The empty set keeps no constraints
    and is marked explicitly; by convention it reports the maximal
    codimension (the ambient dimension), which is what degenerate
    intersection counts downstream expect.
    """

    p: int
    ambient_dim: int
    normals: tuple[tuple[int, ...], ...]
    offsets: tuple[int, ...]
    is_empty: bool = False

    @property
    def codimension(self) -> int:
        if self.is_empty:
            return self.ambient_dim
        return len(self.normals)

    @property
    def dim(self) -> int:
        return self.ambient_dim - self.codimension

    @property
    def cardinality(self) -> int:
        if self.is_empty:
            return 0
        return self.p ** (self.ambient_dim - len(self.normals))

    def _normal_matrix(self) -> np.ndarray:
        return np.array(self.normals, dtype=np.int64).reshape(len(self.normals), self.ambient_dim)

    def contains(self, x: GroupVector | int) -> bool:
        if self.is_empty:
            return False
        if isinstance(x, GroupVector):
            xd = x.as_array()
        else:
            xd = digits_of(self.p, self.ambient_dim, x)
        if not self.normals:
            return True
        lhs = (self._normal_matrix() @ xd) % self.p
        return bool(np.array_equal(lhs, np.array(self.offsets, dtype=np.int64)))

    def _pivots_free(self) -> tuple[list[int], list[int]]:
        piv = []
        mat = self._normal_matrix()
        for row in mat:
            nz = np.flatnonzero(row)
            piv.append(int(nz[0]))
        free = [c for c in range(self.ambient_dim) if c not in piv]
        return piv, free

    def offset_point(self) -> GroupVector:
        """The canonical member: all free coordinates zero."""
        if self.is_empty:
            raise ValueError("the empty set has no members")
        x = np.zeros(self.ambient_dim, dtype=np.int64)
        piv, _ = self._pivots_free()
        for i, c in enumerate(piv):
            x[c] = self.offsets[i]
        return GroupVector(self.p, tuple(int(v) for v in x))

    def basis(self) -> tuple[GroupVector, ...]:
        """Directions spanning V, one per free coordinate, in column order."""
        if self.is_empty:
            return ()
        mat = self._normal_matrix()
        piv, free = self._pivots_free()
        out = []
        for f in free:
            v = np.zeros(self.ambient_dim, dtype=np.int64)
            v[f] = 1
            for i, c in enumerate(piv):
                v[c] = (-mat[i, f]) % self.p
            out.append(GroupVector(self.p, tuple(int(t) for t in v)))
        return tuple(out)

    def member_indices(self) -> np.ndarray:
        """Canonical indices of all members, ordered by parameter index.

        Parameter j runs over the free coordinates in ascending column
        order; the member at parameter vector t is offset_point +
        sum_j t_j * basis_j.  The stream is deterministic and exactly
        p^dim long.
        """
        if self.is_empty:
            return np.zeros(0, dtype=np.int64)
        k = self.dim
        if self.p**k > MAX_ENUMERATION:
            raise ResourceLimitError(f"coset enumeration of size {self.p ** k} exceeds cap")
        params = digit_table(self.p, k)
        mat = self._normal_matrix()
        piv, free = self._pivots_free()
        x = np.zeros((self.p**k, self.ambient_dim), dtype=np.int64)
        if free:
            x[:, free] = params
        if piv:
            rhs = np.array(self.offsets, dtype=np.int64)[None, :]
            corr = params @ mat[:, free].T if free else 0
            x[:, piv] = (rhs - corr) % self.p
        return np.asarray(index_of(self.p, x), dtype=np.int64)

    def members(self) -> Iterator[GroupVector]:
        for i in self.member_indices():
            yield GroupVector.from_index(self.p, self.ambient_dim, int(i))


def subspace_from_normals(
    p: int,
    ambient_dim: int,
    normals: Iterable[GroupVector | Sequence[int]] = (),
    offsets: Iterable[int] = (),
) -> AffineSubspace:
    """Reduce an arbitrary constraint list to a canonical AffineSubspace.

    Dependent constraints are merged; contradictory ones yield the
    explicit empty-set value.
    """
    rows = []
    for nrm in normals:
        if isinstance(nrm, GroupVector):
            if nrm.p != p or nrm.m != ambient_dim:
                raise ValueError("normal vector lives in the wrong space")
            rows.append(list(nrm.digits))
        else:
            if len(nrm) != ambient_dim:
                raise ValueError("normal vector lives in the wrong space")
            rows.append([int(v) % p for v in nrm])
    offs = [int(c) % p for c in offsets]
    if len(offs) != len(rows):
        raise ValueError(f"{len(rows)} normals but {len(offs)} offsets")
    if not rows:
        return AffineSubspace(p, ambient_dim, (), ())
    aug = np.hstack([np.array(rows, dtype=np.int64), np.array(offs, dtype=np.int64).reshape(-1, 1)])
    rref, pivots = modular_rref(aug, p)
    if ambient_dim in pivots:
        return AffineSubspace(p, ambient_dim, (), (), is_empty=True)
    nrm = tuple(tuple(int(v) for v in row[:-1]) for row in rref)
    off = tuple(int(row[-1]) for row in rref)
    return AffineSubspace(p, ambient_dim, nrm, off)


def full_space(p: int, ambient_dim: int) -> AffineSubspace:
    return AffineSubspace(p, ambient_dim, (), ())


def intersect_subspaces(a: AffineSubspace, b: AffineSubspace) -> AffineSubspace:
    if a.p != b.p or a.ambient_dim != b.ambient_dim:
        raise ValueError("cannot intersect cosets of different spaces")
    if a.is_empty or b.is_empty:
        return AffineSubspace(a.p, a.ambient_dim, (), (), is_empty=True)
    return subspace_from_normals(
        a.p,
        a.ambient_dim,
        list(a.normals) + list(b.normals),
        list(a.offsets) + list(b.offsets),
    )


@dataclass(frozen=True)
class LinearMap:
    """A k x m residue matrix acting on Z_p^m by matrix-vector product."""

    p: int
    matrix: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        widths = {len(r) for r in self.matrix}
        if len(widths) > 1:
            raise ValueError("ragged matrix")

    @classmethod
    def from_array(cls, p: int, arr: np.ndarray | Sequence[Sequence[int]]) -> "LinearMap":
        a = np.array(arr, dtype=np.int64) % p
        return cls(p, tuple(tuple(int(v) for v in row) for row in a))

    @classmethod
    def identity(cls, p: int, m: int) -> "LinearMap":
        return cls.from_array(p, np.eye(m, dtype=np.int64))

    @property
    def out_dim(self) -> int:
        return len(self.matrix)

    @property
    def in_dim(self) -> int:
        return len(self.matrix[0]) if self.matrix else 0

    def as_array(self) -> np.ndarray:
        return np.array(self.matrix, dtype=np.int64).reshape(self.out_dim, self.in_dim)

    def apply(self, v: GroupVector) -> GroupVector:
        if v.p != self.p or v.m != self.in_dim:
            raise ValueError("vector lives in the wrong space")
        out = (self.as_array() @ v.as_array()) % self.p
        return GroupVector(self.p, tuple(int(t) for t in out))

    def compose(self, other: "LinearMap") -> "LinearMap":
        """self after other."""
        if other.out_dim != self.in_dim:
            raise ValueError("composition dimension mismatch")
        return LinearMap.from_array(self.p, (self.as_array() @ other.as_array()) % self.p)

    def index_map(self) -> np.ndarray:
        """Output index for every input index (vectorised graph of the map)."""
        d = digit_table(self.p, self.in_dim)
        out_digits = (d @ self.as_array().T) % self.p
        return np.asarray(index_of(self.p, out_digits), dtype=np.int64)

    def is_invertible(self) -> bool:
        if self.out_dim != self.in_dim:
            return False
        _, piv = modular_rref(self.as_array(), self.p)
        return len(piv) == self.in_dim

    def inverse(self) -> "LinearMap":
        if self.out_dim != self.in_dim:
            raise ValueError("only square maps can be inverted")
        m = self.in_dim
        aug = np.hstack([self.as_array(), np.eye(m, dtype=np.int64)])
        rref, piv = modular_rref(aug, self.p)
        if list(piv) != list(range(m)):
            raise ValueError("map is singular")
        return LinearMap.from_array(self.p, rref[:, m:])
