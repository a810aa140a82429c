"""Unimodular lattices in the plane.

A lattice is stored by a basis matrix whose *columns* are the basis vectors.
Haar-random lattices are drawn through the Iwasawa parametrization

    basis = R(phi) [[1/sqrt(y), x/sqrt(y)], [0, sqrt(y)]],

with tau = x + i y distributed by dx dy / y^2 on the modular fundamental
domain {|x| <= 1/2, x^2 + y^2 >= 1} and phi uniform.  The ratio of the two
basis vectors, read as complex numbers, is exactly tau.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, NonGenericLattice

SQRT3_2 = math.sqrt(3.0) / 2.0

# relative tolerance for declaring two successive minima tied
TIE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class UnimodularLattice:
    """Lattice of covolume one given by a 2x2 basis (columns are basis vectors)."""

    basis: np.ndarray

    def __post_init__(self):
        basis = np.array(self.basis, dtype=float)
        if basis.shape != (2, 2):
            raise DomainError("basis must be a 2x2 matrix")
        if abs(abs(np.linalg.det(basis)) - 1.0) >= 1e-10:
            raise DomainError(f"basis is not unimodular (det = {np.linalg.det(basis)!r})")
        basis.setflags(write=False)
        object.__setattr__(self, "basis", basis)

    @classmethod
    def standard(cls) -> "UnimodularLattice":
        return cls(np.eye(2))

    def vectors(self, coeffs) -> np.ndarray:
        """Lattice points with integer coordinates ``coeffs`` (shape (..., 2))."""
        return np.asarray(coeffs, dtype=float) @ self.basis.T


class PrimitiveIndex(NamedTuple):
    """Pair (k1, k2) with gcd 1 and k1 >= 0; k1 == 0 forces k2 == 1."""

    k1: int
    k2: int

    def is_valid(self) -> bool:
        k1, k2 = self
        if k1 < 0 or math.gcd(k1, k2) != 1:
            return False
        return k1 > 0 or k2 == 1


class PrimitiveSet(NamedTuple):
    """Result of :func:`enumerate_primitive`: indices ``k`` (m, 2) and vectors ``v`` (m, 2)."""

    k: np.ndarray
    v: np.ndarray

    def __len__(self):
        return self.k.shape[0]

    def pairs(self) -> list[tuple[PrimitiveIndex, np.ndarray]]:
        return [(PrimitiveIndex(int(a), int(b)), vec) for (a, b), vec in zip(self.k, self.v)]


@dataclass(frozen=True, eq=False)
class ReducedBasis:
    """The pair (e1(L), e2(L)) of successive-minima vectors with positive first coordinates."""

    e1: np.ndarray
    e2: np.ndarray

    @property
    def norm1(self) -> float:
        return float(np.hypot(*self.e1))

    @property
    def norm2(self) -> float:
        return float(np.hypot(*self.e2))

    @property
    def det(self) -> float:
        return float(self.e1[0] * self.e2[1] - self.e1[1] * self.e2[0])

    @property
    def matrix(self) -> np.ndarray:
        """Representative matrix with positive determinant: [e1, e2] or [e2, e1]."""
        if self.det > 0:
            return np.column_stack([self.e1, self.e2])
        return np.column_stack([self.e2, self.e1])

    @property
    def dual_vectors(self) -> tuple[np.ndarray, np.ndarray]:
        """(f1, f2) with <f_i, e_j> = delta_ij."""
        inv_t = np.linalg.inv(np.column_stack([self.e1, self.e2])).T
        return inv_t[:, 0], inv_t[:, 1]

    def lattice(self) -> UnimodularLattice:
        return UnimodularLattice(self.matrix)

    def combine(self, k) -> np.ndarray:
        """k1 e1 + k2 e2 for integer pairs ``k`` of shape (..., 2)."""
        k = np.asarray(k, dtype=float)
        return k[..., :1] * self.e1 + k[..., 1:2] * self.e2


# ---------------------------------------------------------------------- sampling
def _haar_params(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    xs = np.empty(0)
    ys = np.empty(0)
    while xs.size < n:
        m = int(1.2 * (n - xs.size)) + 16
        x = rng.uniform(-0.5, 0.5, m)
        y = SQRT3_2 / (1.0 - rng.uniform(0.0, 1.0, m))  # density prop. to y^-2 on [sqrt3/2, inf)
        ok = x * x + y * y >= 1.0
        xs = np.concatenate([xs, x[ok]])
        ys = np.concatenate([ys, y[ok]])
    phi = rng.uniform(0.0, 2.0 * np.pi, n)
    return xs[:n], ys[:n], phi


def _iwasawa_bases(x, y, phi) -> np.ndarray:
    sy = np.sqrt(y)
    upper = np.zeros(x.shape + (2, 2))
    upper[..., 0, 0] = 1.0 / sy
    upper[..., 0, 1] = x / sy
    upper[..., 1, 1] = sy
    c, s = np.cos(phi), np.sin(phi)
    rot = np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
    return rot @ upper


def sample_haar(rng: np.random.Generator) -> UnimodularLattice:
    """One Haar-random unimodular lattice."""
    x, y, phi = _haar_params(rng, 1)
    return UnimodularLattice(_iwasawa_bases(x, y, phi)[0])


def sample_haar_batch(rng: np.random.Generator, n: int, return_params: bool = False):
    """``n`` Haar-random bases as an array of shape (n, 2, 2).

    With ``return_params`` the Iwasawa coordinates (x, y, phi) are returned too.
    """
    x, y, phi = _haar_params(rng, n)
    bases = _iwasawa_bases(x, y, phi)
    if return_params:
        return bases, (x, y, phi)
    return bases


def haar_height_cdf(y) -> np.ndarray:
    """Distribution function of the height y = Im(tau) under Haar measure."""
    y = np.asarray(y, dtype=float)
    lo = SQRT3_2

    def primitive(s):
        s = np.clip(s, lo, 1.0)
        return -1.0 / s + 2.0 * np.sqrt(1.0 - s * s) / s + 2.0 * np.arcsin(s)

    low_part = primitive(y) - primitive(lo)
    high_part = np.where(y > 1.0, 1.0 - 1.0 / np.maximum(y, 1.0), 0.0)
    out = 3.0 / np.pi * (low_part + high_part)
    return np.where(y < lo, 0.0, out)


# ---------------------------------------------------------------------- reduction
def gauss_reduce_batch(bases: np.ndarray, max_iter: int = 10_000) -> tuple[np.ndarray, np.ndarray]:
    """Lagrange-Gauss reduction of many bases at once.

    Returns (b1, b2), each of shape (n, 2), with |b1| <= |b2| and
    |<b1, b2>| <= |b1|^2 / 2; b1 realises the first minimum and b2 the second.
    """
    bases = np.asarray(bases, dtype=float)
    b1 = bases[..., :, 0].copy()
    b2 = bases[..., :, 1].copy()
    active = np.ones(b1.shape[0], dtype=bool)
    for _ in range(max_iter):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        u, v = b1[idx], b2[idx]
        nu = (u * u).sum(-1)
        nv = (v * v).sum(-1)
        swap = nv < nu
        u[swap], v[swap] = v[swap].copy(), u[swap].copy()
        nu = np.where(swap, nv, nu)
        mu = np.rint((u * v).sum(-1) / nu)
        v = v - mu[:, None] * u
        b1[idx], b2[idx] = u, v
        active[idx] = (v * v).sum(-1) < nu
    else:
        raise RuntimeError("Gauss reduction did not terminate")
    return b1, b2


def _positive(v: np.ndarray) -> np.ndarray:
    flip = (v[..., 0] < 0) | ((v[..., 0] == 0) & (v[..., 1] < 0))
    return np.where(flip[..., None], -v, v) + 0.0


def reduce_batch(bases: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reduced pairs for many bases.

    Returns (e1, e2, generic) where ``generic`` flags the lattices on which
    the pair is uniquely defined; callers resample the others.
    """
    b1, b2 = gauss_reduce_batch(bases)
    n1 = (b1 * b1).sum(-1)
    n2 = (b2 * b2).sum(-1)
    dot = (b1 * b2).sum(-1)
    e1 = _positive(b1)
    e2 = _positive(b2)
    generic = ((e1[:, 0] != 0) & (e2[:, 0] != 0)
               & (n2 - n1 > TIE_RTOL * n2)
               & (n1 - 2.0 * np.abs(dot) > TIE_RTOL * n1))
    return e1, e2, generic


def _angle_key(v) -> float:
    return math.atan2(v[1], v[0])


def reduce(L: UnimodularLattice, strict: bool = True) -> ReducedBasis:
    """Reduced pair (e1(L), e2(L)).

    On the measure-zero set where the pair is not unique, ``strict=True``
    raises :class:`NonGenericLattice`; otherwise ties are broken by taking the
    candidate with the smallest polar angle in (-pi/2, pi/2] (vectors on the
    y axis are taken with positive second coordinate).
    """
    e1, e2, generic = reduce_batch(L.basis[None])
    if generic[0]:
        return ReducedBasis(e1[0], e2[0])
    if strict:
        raise NonGenericLattice("reduced basis is not unique for this lattice")
    b1, b2 = e1[0], e2[0]
    combos = np.array([(m, n) for m in range(-2, 3) for n in range(-2, 3) if (m, n) != (0, 0)], dtype=float)
    cands = _positive(combos @ np.array([b1, b2]))
    norms = np.hypot(cands[:, 0], cands[:, 1])
    n1 = norms.min()
    first = [c for c, r in zip(cands, norms) if r <= n1 * (1 + TIE_RTOL)]
    best1 = min(first, key=_angle_key)
    indep = [(c, r) for c, r in zip(cands, norms) if abs(best1[0] * c[1] - best1[1] * c[0]) > 1e-9 * n1 * r]
    n2 = min(r for _, r in indep)
    second = [c for c, r in indep if r <= n2 * (1 + TIE_RTOL)]
    best2 = min(second, key=_angle_key)
    return ReducedBasis(np.array(best1, dtype=float), np.array(best2, dtype=float))


def dual(L: UnimodularLattice) -> UnimodularLattice:
    """Dual lattice, basis (B^-1)^T."""
    return UnimodularLattice(np.linalg.inv(L.basis).T)


def geodesic_apply(L: UnimodularLattice, lam: float) -> UnimodularLattice:
    """delta(lambda) L with delta(lambda) = diag(lambda, 1/lambda)."""
    if lam <= 0:
        raise DomainError("lambda must be positive")
    return UnimodularLattice(np.diag([lam, 1.0 / lam]) @ L.basis)


# ---------------------------------------------------------------------- enumeration
def _row_candidates(e1: np.ndarray, e2: np.ndarray, radius: float) -> tuple[np.ndarray, np.ndarray]:
    """All integer (k1, k2) with |k1 e1 + k2 e2| <= radius, by rows of constant k2."""
    det = abs(e1[0] * e2[1] - e1[1] * e2[0])
    # |k2| <= radius |f2| where f2 is the dual vector to e2; |f2| = |e1| / det
    k2_max = int(math.floor(radius * math.hypot(*e1) / det + 1e-9))
    k2 = np.arange(-k2_max, k2_max + 1)
    a = e1 @ e1
    b = 2.0 * k2 * (e1 @ e2)
    c = k2 * k2 * (e2 @ e2) - radius * radius
    disc = b * b - 4 * a * c
    ok = disc >= 0
    k2 = k2[ok]
    root = np.sqrt(disc[ok])
    lo = np.floor((-b[ok] - root) / (2 * a)).astype(np.int64)
    hi = np.ceil((-b[ok] + root) / (2 * a)).astype(np.int64)
    counts = hi - lo + 1
    rows = np.repeat(k2, counts)
    offsets = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    k1 = np.repeat(lo, counts) + offsets
    vecs = k1[:, None] * e1 + rows[:, None] * e2
    keep = np.hypot(vecs[:, 0], vecs[:, 1]) <= radius
    return np.column_stack([k1[keep], rows[keep]]), vecs[keep]


def enumerate_primitive(rb: ReducedBasis, A: float) -> PrimitiveSet:
    """Pi_A(L): primitive indices k in Pi with |k1 e1 + k2 e2| <= A, in lexicographic order."""
    if A <= 0:
        raise DomainError("A must be positive")
    k, v = _row_candidates(rb.e1, rb.e2, A)
    k1, k2 = k[:, 0], k[:, 1]
    keep = (np.gcd(k1, k2) == 1) & ((k1 > 0) | ((k1 == 0) & (k2 == 1)))
    k, v = k[keep], v[keep]
    order = np.lexsort((k[:, 1], k[:, 0]))
    return PrimitiveSet(k[order], v[order])


def enumerate_vectors(L: UnimodularLattice, radius: float, primitive: bool = False) -> np.ndarray:
    """Non-zero lattice vectors of norm <= radius (both signs), optionally primitive only."""
    rb = reduce(L, strict=False)
    k, v = _row_candidates(rb.e1, rb.e2, radius)
    g = np.gcd(k[:, 0], k[:, 1])
    keep = g == 1 if primitive else g > 0
    return v[keep]
