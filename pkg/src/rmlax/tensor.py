"""Dense operator algebra on Mat_n (x) Mat_Nt^{(x) r}.

Site indices are 0-based. A "site operator" is an Nt^r x Nt^r matrix whose
tensor factors are ordered site 0 first; an auxiliary block structure of
size n sits outside it (block (i, j) occupies rows i*d:(i+1)*d, d = Nt^r).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class ShapeError(ValueError):
    pass


@dataclass(frozen=True)
class SiteOperator:
    """An element of Mat_n (x) Mat_Nt^{(x) r} stored as a dense matrix."""

    aux_dim: int
    site_dim: int
    num_sites: int
    data: np.ndarray

    def __post_init__(self):
        d = self.aux_dim * self.site_dim**self.num_sites
        if self.data.shape != (d, d):
            raise ShapeError(f"expected {(d, d)}, got {self.data.shape}")

    @property
    def block_dim(self) -> int:
        return self.site_dim**self.num_sites

    def _check(self, other: "SiteOperator"):
        if (self.aux_dim, self.site_dim, self.num_sites) != (other.aux_dim, other.site_dim, other.num_sites):
            raise ShapeError("operators live on different spaces")

    def _wrap(self, data):
        return SiteOperator(self.aux_dim, self.site_dim, self.num_sites, data)

    def __add__(self, other):
        self._check(other)
        return self._wrap(self.data + other.data)

    def __sub__(self, other):
        self._check(other)
        return self._wrap(self.data - other.data)

    def __matmul__(self, other):
        self._check(other)
        return self._wrap(self.data @ other.data)

    def __mul__(self, c):
        return self._wrap(self.data * c)

    __rmul__ = __mul__

    def block(self, i: int, j: int) -> np.ndarray:
        d = self.block_dim
        return self.data[i * d : (i + 1) * d, j * d : (j + 1) * d]


def kron(a, b) -> np.ndarray:
    return np.kron(a, b)


def _check_sites(sites, r):
    if len(set(sites)) != len(sites):
        raise ShapeError(f"site collision {sites}")
    for s in sites:
        if not 0 <= s < r:
            raise ShapeError(f"site {s} out of range for {r} sites")


def embed(op: np.ndarray, sites: tuple[int, ...], r: int, n: int) -> np.ndarray:
    """Place a k-site operator on ``sites`` (its factor order) inside r sites."""
    sites = tuple(sites)
    _check_sites(sites, r)
    k = len(sites)
    if op.shape != (n**k, n**k):
        raise ShapeError(f"operator shape {op.shape} does not act on {k} sites of dim {n}")
    if r == k and sites == tuple(range(k)):
        return np.asarray(op, dtype=complex)
    rest = r - k
    full = np.kron(op, np.eye(n**rest)).reshape([n] * (2 * r))
    # current factor order: sites..., then the remaining sites ascending
    order = list(sites) + [s for s in range(r) if s not in sites]
    perm = np.argsort(order)
    axes = list(perm) + [r + p for p in perm]
    return full.transpose(axes).reshape(n**r, n**r)


def embed_pair(op: np.ndarray, a: int, b: int, r: int, n: int | None = None) -> np.ndarray:
    if n is None:
        n = math.isqrt(op.shape[0])
    return embed(op, (a, b), r, n)


def embed_site(op: np.ndarray, a: int, r: int) -> np.ndarray:
    return embed(op, (a,), r, op.shape[0])


def embed_aux(i: int, j: int, payload: np.ndarray, aux_dim: int) -> np.ndarray:
    e = np.zeros((aux_dim, aux_dim))
    e[i, j] = 1.0
    return np.kron(e, payload)


def swap(n: int) -> np.ndarray:
    return permutation_P(n)


def swap_conj(op: np.ndarray, n: int) -> np.ndarray:
    """Exchange the two tensor factors of a two-site operator."""
    p = permutation_P(n)
    return p @ op @ p


def omega(gamma, tau: complex, n: int) -> complex:
    return (gamma[0] + gamma[1] * tau) / n


def dtau_omega(gamma, n: int) -> float:
    return gamma[1] / n


@lru_cache(maxsize=None)
def _clock_shift(n: int):
    w = cmath.exp(2j * math.pi / n)
    q = np.diag([w**k for k in range(n)])
    lam = np.zeros((n, n), dtype=complex)
    for k in range(n):
        lam[k, (k + 1) % n] = 1.0
    return q, lam


def t_matrix(a1: int, a2: int, n: int) -> np.ndarray:
    """T_a = exp(pi i a1 a2 / n) Q^a1 Lambda^a2 for integer representatives a."""
    q, lam = _clock_shift(n)
    m = np.linalg.matrix_power(q, a1 % n) @ np.linalg.matrix_power(lam, a2 % n)
    return cmath.exp(1j * math.pi * a1 * a2 / n) * m


def index_set(n: int) -> list[tuple[int, int]]:
    return [(a1, a2) for a1 in range(n) for a2 in range(n)]


@lru_cache(maxsize=None)
def _t_basis(n: int):
    return {a: t_matrix(*a, n) for a in index_set(n)}


def t_basis(n: int) -> dict[tuple[int, int], np.ndarray]:
    return dict(_t_basis(n))


@lru_cache(maxsize=None)
def t_pair_products(n: int) -> dict[tuple[int, int], np.ndarray]:
    """T_a (x) T_{-a} for every a, with -a taken as the integer negative."""
    return {a: np.kron(t_matrix(*a, n), t_matrix(-a[0], -a[1], n)) for a in index_set(n)}


def kappa(alpha, beta, n: int) -> complex:
    return cmath.exp(1j * math.pi * (beta[0] * alpha[1] - beta[1] * alpha[0]) / n)


@lru_cache(maxsize=None)
def _perm_standard(n: int) -> np.ndarray:
    p = np.zeros((n * n, n * n))
    for i in range(n):
        for j in range(n):
            p[i * n + j, j * n + i] = 1.0
    return p


def permutation_P(n: int, via: str = "standard") -> np.ndarray:
    if via == "standard":
        return _perm_standard(n).astype(complex)
    if via == "tbasis":
        return sum(t_pair_products(n).values()) / n
    raise ValueError(via)


def comm(a, b):
    return a @ b - b @ a


def max_abs(a) -> float:
    a = a.data if isinstance(a, SiteOperator) else np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def partial_site_trace(op: np.ndarray, site: int, r: int, n: int) -> np.ndarray:
    """Contract the row and column index of one site."""
    if not 0 <= site < r:
        raise ShapeError(f"site {site} out of range for {r} sites")
    t = np.asarray(op).reshape([n] * (2 * r))
    out = np.trace(t, axis1=site, axis2=r + site)
    return out.reshape(n ** (r - 1), n ** (r - 1))
