"""Quantum R-matrices, their q-derivatives and classical limits.

Convention used everywhere: ``R^z(q)`` has the spectral parameter ``z`` in
the superscript slot and the dynamical argument ``q``. For the Belavin
family

    R^z(q) = sum_a T_a (x) T_{-a} exp(2 pi i a2 q / Nt) phi(q, omega_a + z),

so Nt = 1 gives the Kronecker function phi(z, q). ``F = dR/dq``,
``F' = d^2R/dq^2`` and ``F0 = dr/dq`` where ``r`` is the classical r-matrix.
Index exchange (ab -> ba) on two sites is conjugation by the permutation P.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rmlax import elliptic as ell
from rmlax.elliptic import PoleError, PrecisionError, Sampler
from rmlax.report import IdentityReport, relative_residual
from rmlax.tensor import (
    comm,
    embed_pair,
    index_set,
    kappa,
    max_abs,
    permutation_P,
    swap_conj,
    t_pair_products,
)

TWO_PI_I = 2j * math.pi
RICHARDSON_ETAS = (1e-3, 5e-4)
RICHARDSON_AGREEMENT = 1e-6


@dataclass(frozen=True)
class REval:
    value: np.ndarray
    d_q: np.ndarray
    d2_q: np.ndarray


class RMatrixFamily:
    """Shared interface. Subclasses fill in evaluate / f0 / f0_prime / r / m."""

    kind = "abstract"
    ntilde = 1
    # R^eta(q) = residue * Id / eta + r(q) + eta m(q) + O(eta^2)
    residue = 1.0
    scalar: ell.FunctionFamily

    @property
    def dim(self) -> int:
        return self.ntilde**2

    def evaluate(self, z, q) -> REval:
        raise NotImplementedError

    def f0(self, q) -> np.ndarray:
        raise NotImplementedError

    def f0_alt(self, q) -> np.ndarray:
        """F0 through an independent formula; defaults to ``f0``."""
        return self.f0(q)

    def f0_prime(self, q) -> np.ndarray:
        raise NotImplementedError

    def r(self, q) -> np.ndarray:
        raise NotImplementedError

    def m(self, q) -> np.ndarray:
        raise NotImplementedError

    @property
    def unitarity_factor(self) -> float:
        """Prefactor of wp(q) in the unitarity scalar; it rescales the potential."""
        return self.ntilde**2

    def unitarity_scalar(self, z, q) -> complex:
        """R^z_12(q) R^z_21(-q) as a multiple of the identity."""
        n = self.ntilde
        return n * n * (self.scalar.wp(n * z) - self.scalar.wp(q))

    def wp(self, q) -> complex:
        """The potential function fixed by unitarity (its q-dependent part)."""
        return self.scalar.wp(q)

    def wp_prime(self, q) -> complex:
        return self.scalar.wp_prime(q)

    def pole_distance(self, x) -> float:
        return self.scalar.pole_distance(complex(x))

    def describe(self) -> dict:
        return {"kind": self.kind, "ntilde": self.ntilde, "scalar": self.scalar.describe()}


class BelavinElliptic(RMatrixFamily):
    kind = "belavin"

    def __init__(self, ntilde: int, tau, pole_guard: float | None = None):
        if ntilde < 1:
            raise ValueError("ntilde must be >= 1")
        self.ntilde = ntilde
        self.tau = ell.as_tau(tau)
        self.scalar = ell.EllipticFamily(self.tau, pole_guard)
        self._pairs = t_pair_products(ntilde)
        self._alphas = index_set(ntilde)

    def _omega(self, a):
        return (a[0] + a[1] * self.tau) / self.ntilde

    def _c(self, a):
        return TWO_PI_I * a[1] / self.ntilde

    def evaluate(self, z, q) -> REval:
        sc = self.scalar
        d = self.dim
        val = np.zeros((d, d), complex)
        d1 = np.zeros((d, d), complex)
        d2 = np.zeros((d, d), complex)
        for a in self._alphas:
            w = self._omega(a) + z
            c = self._c(a)
            e = np.exp(c * q)
            ph = sc.phi(w, q)
            f = sc.f(w, q)
            fp = sc.f_prime(w, q)
            t = self._pairs[a]
            val += (e * ph) * t
            d1 += (e * (c * ph + f)) * t
            d2 += (e * (c * c * ph + 2 * c * f + fp)) * t
        return REval(val, d1, d2)

    def r(self, q) -> np.ndarray:
        sc = self.scalar
        out = sc.E1(q) * self._pairs[(0, 0)]
        for a in self._alphas[1:]:
            out = out + np.exp(self._c(a) * q) * sc.phi(self._omega(a), q) * self._pairs[a]
        return out

    def f0(self, q) -> np.ndarray:
        # term-by-term derivative of r, with d/dq phi(w, q) from the theta quotient rule
        sc = self.scalar
        th0 = ell.theta_prime0(self.tau)
        tq, tq1 = ell.theta_jet(q, self.tau)[:2]
        out = -sc.E2(q) * self._pairs[(0, 0)]
        for a in self._alphas[1:]:
            w = self._omega(a)
            s0, s1 = ell.theta_jet(w + q, self.tau)[:2]
            tw = sc.theta(w)
            ph = th0 * s0 / (tw * tq)
            f = th0 * (s1 * tq - s0 * tq1) / (tw * tq * tq)
            c = self._c(a)
            out = out + np.exp(c * q) * (c * ph + f) * self._pairs[a]
        return out

    def f0_alt(self, q) -> np.ndarray:
        # -E2 Id + sum phi_g(q, w_g)(E1(q + w_g) - E1(q) + 2 pi i d_tau w_g) T (x) T
        sc = self.scalar
        n = self.ntilde
        out = -sc.E2(q) * self._pairs[(0, 0)]
        for a in self._alphas[1:]:
            w = self._omega(a)
            dtau_w = a[1] / n
            coeff = np.exp(self._c(a) * q) * sc.phi(q, w) * (sc.E1(q + w) - sc.E1(q) + TWO_PI_I * dtau_w)
            out = out + coeff * self._pairs[a]
        return out

    def f0_prime(self, q) -> np.ndarray:
        sc = self.scalar
        out = -sc.wp_prime(q) * self._pairs[(0, 0)]
        for a in self._alphas[1:]:
            w = self._omega(a)
            c = self._c(a)
            e = np.exp(c * q)
            out = out + e * (c * c * sc.phi(w, q) + 2 * c * sc.f(w, q) + sc.f_prime(w, q)) * self._pairs[a]
        return out

    def m(self, q) -> np.ndarray:
        sc = self.scalar
        e1 = sc.E1(q)
        out = 0.5 * (e1 * e1 - sc.wp(q)) * self._pairs[(0, 0)]
        for a in self._alphas[1:]:
            # d/dw phi(q, w) at w = omega_a
            out = out + np.exp(self._c(a) * q) * sc.f(q, self._omega(a)) * self._pairs[a]
        return out

    def describe(self):
        return {"kind": self.kind, "ntilde": self.ntilde, "tau": [self.tau.real, self.tau.imag]}


class YangRational(RMatrixFamily):
    kind = "yang"

    def __init__(self, ntilde: int, pole_guard: float | None = None):
        if ntilde < 1:
            raise ValueError("ntilde must be >= 1")
        self.ntilde = ntilde
        self.scalar = ell.RationalFamily(pole_guard)
        self._P = permutation_P(ntilde)
        self._I = np.eye(self.dim, dtype=complex)

    def evaluate(self, z, q) -> REval:
        z, q = self.scalar._guard(z), self.scalar._guard(q)
        n = self.ntilde
        return REval(self._I / z + n * self._P / q, -n * self._P / q**2, 2 * n * self._P / q**3)

    def r(self, q):
        return self.ntilde * self._P / self.scalar._guard(q)

    def f0(self, q):
        return -self.ntilde * self._P / self.scalar._guard(q) ** 2

    def f0_prime(self, q):
        return 2 * self.ntilde * self._P / self.scalar._guard(q) ** 3

    def m(self, q):
        return np.zeros((self.dim, self.dim), complex)


_PAULI = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
PAULI_PAIRS = tuple(np.kron(s, s) for s in _PAULI)


class TrigXXZ(RMatrixFamily):
    """sum_a phi_a(q) sigma_a (x) sigma_a with cot / 1/sin coefficients (Nt = 2)."""

    kind = "xxz"
    residue = 2.0

    def __init__(self, pole_guard: float | None = None):
        self.ntilde = 2
        self.scalar = ell.TrigonometricFamily(circular=True, pole_guard=pole_guard)

    def _coeffs(self, z, q):
        sc = self.scalar
        z, q = sc._guard(z), sc._guard(q)
        cz, cq = 1 / np.tan(z), 1 / np.tan(q)
        sz, sq = 1 / np.sin(z), 1 / np.sin(q)
        return (cz + cq + sz, sq, sq, cz + cq - sz), q

    @staticmethod
    def _combine(c):
        return sum(ci * p for ci, p in zip(c, PAULI_PAIRS))

    def _dcoeffs(self, q):
        s, c = np.sin(q), np.cos(q)
        d1 = (-1 / s**2, -c / s**2, -c / s**2, -1 / s**2)
        d2 = (2 * c / s**3, (1 + c * c) / s**3, (1 + c * c) / s**3, 2 * c / s**3)
        return d1, d2

    def evaluate(self, z, q) -> REval:
        c, q = self._coeffs(z, q)
        d1, d2 = self._dcoeffs(q)
        return REval(self._combine(c), self._combine(d1), self._combine(d2))

    def r(self, q):
        # finite part of the expansion around z = 0: cot z + 1/sin z = 2/z + O(z)
        q = self.scalar._guard(q)
        cq, sq = 1 / np.tan(q), 1 / np.sin(q)
        return self._combine((cq, sq, sq, cq))

    def f0(self, q):
        return self._combine(self._dcoeffs(self.scalar._guard(q))[0])

    def f0_prime(self, q):
        return self._combine(self._dcoeffs(self.scalar._guard(q))[1])

    def m(self, q):
        # z-linear coefficients of cot z +- 1/sin z are -1/3 +- 1/6, both q-independent
        return self._combine((-1 / 6, 0, 0, -1 / 2))

    def unitarity_scalar(self, z, q):
        # the spectral part comes out as 1/sin^2 z here, not wp(2z)
        return 4 * (1 / np.sin(z) ** 2 - 1 / np.sin(q) ** 2)


class SpinExchange(RMatrixFamily):
    """phi(z, q) P: the Kronecker function times the permutation of the two sites.

    Its residue at z = 0 is P rather than the identity, so there is no
    classical r-matrix in the usual sense; r and m are not provided.
    """

    kind = "spin_exchange"

    def __init__(self, ntilde: int, tau=1j, scalar: ell.FunctionFamily | None = None):
        if ntilde < 1:
            raise ValueError("ntilde must be >= 1")
        self.ntilde = ntilde
        self.scalar = scalar if scalar is not None else ell.EllipticFamily(tau)
        self._P = permutation_P(ntilde)

    @property
    def unitarity_factor(self) -> float:
        return 1.0

    def unitarity_scalar(self, z, q):
        return self.scalar.wp(z) - self.scalar.wp(q)

    def evaluate(self, z, q) -> REval:
        sc = self.scalar
        return REval(sc.phi(z, q) * self._P, sc.f(z, q) * self._P, sc.f_prime(z, q) * self._P)

    def f0(self, q):
        return -self.scalar.E2(q) * self._P

    def f0_prime(self, q):
        return -self.scalar.wp_prime(q) * self._P

    def describe(self):
        return {"kind": self.kind, "ntilde": self.ntilde, "scalar": self.scalar.describe()}


def make_family(kind: str, ntilde: int = 2, tau=1j) -> RMatrixFamily:
    if kind in ("belavin", "elliptic"):
        return BelavinElliptic(ntilde, tau)
    if kind in ("yang", "rational"):
        return YangRational(ntilde)
    if kind in ("xxz", "trigonometric"):
        return TrigXXZ()
    if kind in ("spin_exchange", "permutation"):
        return SpinExchange(ntilde, tau)
    raise ValueError(f"unknown R-matrix family {kind!r}")


# -- thin functional API -------------------------------------------------------------


def r_eval(family: RMatrixFamily, z, q) -> REval:
    return family.evaluate(z, q)


def f0_eval(family: RMatrixFamily, q) -> np.ndarray:
    return family.f0(q)


def r_classical(family: RMatrixFamily, q) -> np.ndarray:
    return family.r(q)


def m_classical(family: RMatrixFamily, q) -> np.ndarray:
    return family.m(q)


def m_richardson(family: RMatrixFamily, q, etas=RICHARDSON_ETAS) -> np.ndarray:
    """m from the small-eta expansion of R^eta(q), extrapolated in eta^2.

    The symmetric quotient (R^eta - R^-eta - 2 res/eta)/(2 eta) equals m + O(eta^2).
    Richardson over the two step sizes is done once along the real eta axis
    and once along the imaginary one; the two extrapolations must agree.
    """
    eye = np.eye(family.dim)

    def quotient(eta):
        plus = family.evaluate(eta, q).value
        minus = family.evaluate(-eta, q).value
        return (plus - minus - 2 * family.residue * eye / eta) / (2 * eta)

    h1, h2 = etas
    ratio = (h1 / h2) ** 2
    estimates = []
    for direction in (1, 1j):
        m1, m2 = quotient(direction * h1), quotient(direction * h2)
        estimates.append((ratio * m2 - m1) / (ratio - 1))
    a, b = estimates
    if max_abs(a - b) / max(1.0, max_abs(a)) > RICHARDSON_AGREEMENT:
        raise PrecisionError("m extraction: the real and imaginary eta extrapolations disagree")
    return (a + b) / 2


# -- sampling ---------------------------------------------------------------------------


def _as_sampler(sampler) -> Sampler:
    if sampler is None:
        return Sampler()
    if isinstance(sampler, int):
        return Sampler(sampler)
    return sampler


def _fd(fn, x, family: "RMatrixFamily"):
    """Five-point central difference with a step scaled to the distance from the nearest pole."""
    h = 0.005 * min(1.0, family.pole_distance(x))
    return (8 * (fn(x + h) - fn(x - h)) - (fn(x + 2 * h) - fn(x - 2 * h))) / (12 * h)


def _rel(lhs_minus_rhs, *terms) -> float:
    return relative_residual(max_abs(lhs_minus_rhs), *(max_abs(t) for t in terms))


# -- identity suites ------------------------------------------------------------------


def check_aybe(family: RMatrixFamily, sampler=None, tol: float = 1e-9, samples: int = 50) -> IdentityReport:
    """AYBE on three sites, its F-degeneration and the cancellation identity."""
    sampler = _as_sampler(sampler)
    report = IdentityReport(f"aybe[{family.kind}]")
    n = family.ntilde

    def op(mat, a, b):
        return embed_pair(mat, a, b, 3, n)

    def R(z, q, a, b):
        return op(family.evaluate(z, q).value, a, b)

    def aybe(p):
        z, w, qa, qb, qc = p
        lhs = R(z, qa - qb, 0, 1) @ R(w, qb - qc, 1, 2)
        t1 = R(w, qa - qc, 0, 2) @ R(z - w, qa - qb, 0, 1)
        t2 = R(w - z, qb - qc, 1, 2) @ R(z, qa - qc, 0, 2)
        return _rel(lhs - t1 - t2, lhs, t1, t2)

    def degenerate(p):
        z, _, qa, qb, qc = p
        eab, ebc, eac = (family.evaluate(z, x) for x in (qa - qb, qb - qc, qa - qc))
        lhs = op(eab.value, 0, 1) @ op(ebc.d_q, 1, 2) - op(eab.d_q, 0, 1) @ op(ebc.value, 1, 2)
        rhs = op(family.f0(qb - qc), 1, 2) @ op(eac.value, 0, 2) - op(eac.value, 0, 2) @ op(family.f0(qa - qb), 0, 1)
        return _rel(lhs - rhs, lhs, rhs)

    for name, tag, fn in (
        ("aybe", "associative Yang-Baxter", aybe),
        ("aybe_degenerate", "F-degeneration of AYBE", degenerate),
    ):
        res, k = sampler.run(fn, 5, samples)
        report.add(name, tag, res, tol)
        report.resampled += k

    def cancellation(p):
        z, _, *qs = p
        return cancellation_residual(family, z, qs)

    res, k = sampler.run(cancellation, 6, max(1, samples // 5))
    report.add("offdiagonal_cancellation", "R F0 ordering identity, 4 sites", res, tol)
    report.resampled += k
    return report


def cancellation_residual(family: RMatrixFamily, z, qs) -> float:
    """[R_ac, F0] + sum_b (R_ab F_bc - F_ab R_bc) - (sum_b R_ac F0_bc - sum_b F0_ab R_ac)."""
    n, r = family.ntilde, len(qs)
    op = lambda mat, a, b: embed_pair(mat, a, b, r, n)  # noqa: E731
    f0 = {(i, j): op(family.f0(qs[i] - qs[j]), i, j) for i in range(r) for j in range(r) if i != j}
    big_f0 = sum(f0[(i, j)] for i in range(r) for j in range(r) if i > j)
    worst = 0.0
    for a in range(r):
        for c in range(r):
            if a == c:
                continue
            rac = op(family.evaluate(z, qs[a] - qs[c]).value, a, c)
            lhs = comm(rac, big_f0)
            for b in range(r):
                if b in (a, c):
                    continue
                eab = family.evaluate(z, qs[a] - qs[b])
                ebc = family.evaluate(z, qs[b] - qs[c])
                lhs = lhs + op(eab.value, a, b) @ op(ebc.d_q, b, c) - op(eab.d_q, a, b) @ op(ebc.value, b, c)
            rhs = sum(rac @ f0[(b, c)] for b in range(r) if b != c) - sum(f0[(a, b)] @ rac for b in range(r) if b != a)
            worst = max(worst, _rel(lhs - rhs, lhs, rhs))
    return worst


def check_unitarity_skew(family: RMatrixFamily, sampler=None, tol: float = 1e-9, samples: int = 50) -> IdentityReport:
    sampler = _as_sampler(sampler)
    report = IdentityReport(f"unitarity[{family.kind}]")
    n = family.ntilde
    eye = np.eye(family.dim)

    def unitarity(p):
        z, q = p
        lhs = family.evaluate(z, q).value @ swap_conj(family.evaluate(z, -q).value, n)
        rhs = family.unitarity_scalar(z, q) * eye
        return _rel(lhs - rhs, lhs, rhs)

    def skew(p):
        z, q = p
        a = family.evaluate(z, q).value
        b = swap_conj(family.evaluate(-z, -q).value, n)
        return _rel(a + b, a, b)

    def f0_sym(p):
        _, q = p
        a = family.f0(q)
        b = swap_conj(family.f0(-q), n)
        return _rel(a - b, a, b)

    def differentiated(p):
        z, q = p
        e = family.evaluate(z, q)
        em = family.evaluate(z, -q)
        # F_ba(q_ba) = d/dx R_ba(x) at x = -q
        lhs = e.value @ swap_conj(em.d_q, n) - e.d_q @ swap_conj(em.value, n)
        rhs = n * n * family.wp_prime(q) * eye
        return _rel(lhs - rhs, lhs, rhs)

    for name, tag, fn in (
        ("unitarity", "R_12(q) R_21(-q) proportional to identity", unitarity),
        ("skew_symmetry", "R^z_ab(q) = -R^-z_ba(-q)", skew),
        ("f0_symmetry", "F0_ab(q) = F0_ba(-q)", f0_sym),
        ("unitarity_derivative", "R_ab F_ba - F_ab R_ba = Nt^2 wp'", differentiated),
    ):
        res, k = sampler.run(fn, 2, samples)
        report.add(name, tag, res, tol)
        report.resampled += k
    return report


def check_qybe(family: RMatrixFamily, sampler=None, tol: float = 1e-9, samples: int = 50) -> IdentityReport:
    sampler = _as_sampler(sampler)
    report = IdentityReport(f"qybe[{family.kind}]")
    n = family.ntilde

    def qybe(p):
        eta, qa, qb, qc = p
        R = lambda q, a, b: embed_pair(family.evaluate(eta, q).value, a, b, 3, n)  # noqa: E731
        rab, rac, rbc = R(qa - qb, 0, 1), R(qa - qc, 0, 2), R(qb - qc, 1, 2)
        lhs = rab @ rac @ rbc
        rhs = rbc @ rac @ rab
        return _rel(lhs - rhs, lhs, rhs)

    res, k = sampler.run(qybe, 4, samples)
    report.add("qybe", "quantum Yang-Baxter", res, tol)
    report.resampled = k
    return report


def check_pauli_structure(family: RMatrixFamily, sampler=None, tol: float = 1e-9, samples: int = 20) -> IdentityReport:
    """[R(u), R(v)] = 0 and R_ab(u) F_ba(v) - F_ab(v) R_ba(u) = 0.

    Both hold for Nt = 2 (and for Yang at any rank, which only involves P);
    the Belavin matrix at Nt >= 3 violates them, so those runs are reported
    as expected failures.
    """
    sampler = _as_sampler(sampler)
    n = family.ntilde
    expect = "fail" if family.kind == "belavin" and n >= 3 else "pass"
    gate = 1e-6 if expect == "fail" else tol
    report = IdentityReport(f"pauli[{family.kind}]")

    def commutes(p):
        z, u, v = p
        a, b = family.evaluate(z, u).value, family.evaluate(z, v).value
        return _rel(comm(a, b), a @ b)

    def rf(p):
        z, u, v = p
        eu, ev = family.evaluate(z, u), family.evaluate(z, v)
        lhs = eu.value @ swap_conj(ev.d_q, n)
        rhs = ev.d_q @ swap_conj(eu.value, n)
        return _rel(lhs - rhs, lhs, rhs)

    for name, tag, fn in (
        ("commuting_R", "[R(u), R(v)] = 0", commutes),
        ("RF_exchange", "R_ab(u) F_ba(v) = F_ab(v) R_ba(u)", rf),
    ):
        res, k = sampler.run(fn, 3, samples)
        report.add(name, tag, res, gate, expect=expect)
        report.resampled += k
    return report


def check_fourier(ntilde: int, tau, sampler=None, tol: float = 1e-9, samples: int = 20) -> IdentityReport:
    sampler = _as_sampler(sampler)
    fam = BelavinElliptic(ntilde, tau)
    sc = fam.scalar
    n = ntilde
    alphas = index_set(n)
    report = IdentityReport(f"fourier[Nt={n}]")

    def phi_a(a, x, w):
        return np.exp(TWO_PI_I * a[1] * x / n) * sc.phi(x, w)

    def transform(p):
        eta, z = p
        worst = 0.0
        for g in alphas:
            lhs = sum(kappa(a, g, n) ** 2 * phi_a(a, n * eta, fam._omega(a) + z / n) for a in alphas) / n
            rhs = phi_a(g, z, fam._omega(g) + eta)
            worst = max(worst, relative_residual(abs(lhs - rhs), abs(lhs), abs(rhs)))
        return worst

    def e2_sum(p):
        (eta,) = p
        lhs = sum(sc.E2(fam._omega(a) + eta) for a in alphas)
        rhs = n * n * sc.E2(n * eta)
        return relative_residual(abs(lhs - rhs), abs(lhs), abs(rhs))

    def e2_twisted(p):
        (eta,) = p
        worst = 0.0
        for g in alphas[1:]:
            lhs = sum(kappa(a, g, n) ** 2 * sc.E2(fam._omega(a) + eta) for a in alphas)
            w = fam._omega(g)
            rhs = -n * n * phi_a(g, n * eta, w) * (sc.E1(n * eta + w) - sc.E1(n * eta) + TWO_PI_I * g[1] / n)
            worst = max(worst, relative_residual(abs(lhs - rhs), abs(lhs), abs(rhs)))
        return worst

    def arg_symmetry(p):
        z, q = p
        lhs = fam.evaluate(z, q).value @ permutation_P(n)
        rhs = fam.evaluate(q / n, n * z).value
        return _rel(lhs - rhs, lhs, rhs)

    for name, tag, fn, k in (
        ("fourier_transform", "finite Fourier transform of phi_a", transform, 2),
        ("e2_sum", "sum_a E2(w_a + eta) = Nt^2 E2(Nt eta)", e2_sum, 1),
        ("e2_twisted_sum", "kappa-twisted E2 sum", e2_twisted, 1),
        ("argument_symmetry", "R^z(q) P = R^(q/Nt)(Nt z)", arg_symmetry, 2),
    ):
        if name == "e2_twisted_sum" and n == 1:
            continue
        res, kk = sampler.run(fn, k, samples)
        report.add(name, tag, res, tol)
        report.resampled += kk
    return report


def check_f0_routes(family: RMatrixFamily, sampler=None, tol: float = 1e-9, samples: int = 20) -> IdentityReport:
    """F0 via the r-matrix derivative against the shifted-E1 formula and finite differences."""
    sampler = _as_sampler(sampler)
    report = IdentityReport(f"f0[{family.kind}]")

    def routes(p):
        (q,) = p
        a, b = family.f0(q), family.f0_alt(q)
        return _rel(a - b, a, b)

    def fd(p):
        (q,) = p
        num = _fd(family.r, q, family)
        a = family.f0(q)
        return _rel(a - num, a)

    for name, tag, fn, t in (
        ("f0_two_formulas", "dr/dq against the explicit F0 formula", routes, tol),
        ("f0_finite_difference", "dr/dq against central differences", fd, 1e-6),
    ):
        res, k = sampler.run(fn, 1, samples)
        report.add(name, tag, res, t)
        report.resampled += k
    return report


def check_kzb_flatness(family: RMatrixFamily, sampler=None, tol: float = 1e-8, samples: int = 30) -> IdentityReport:
    sampler = _as_sampler(sampler)
    report = IdentityReport(f"kzb[{family.kind}]")
    n = family.ntilde

    def ops(p, which):
        qa, qb, qc = p
        fn = family.r if which == "r" else family.m
        return (
            embed_pair(fn(qa - qb), 0, 1, 3, n),
            embed_pair(fn(qa - qc), 0, 2, 3, n),
            embed_pair(fn(qb - qc), 1, 2, 3, n),
        )

    def cybe(p):
        rab, rac, rbc = ops(p, "r")
        t = (comm(rab, rac), comm(rab, rbc), comm(rac, rbc))
        return _rel(sum(t), *t)

    def rm(p):
        rab, rac, rbc = ops(p, "r")
        mab, mac, mbc = ops(p, "m")
        t1, t2 = comm(rab, mac + mbc), comm(rac, mab + mbc)
        return _rel(t1 + t2, t1, t2, rab @ mac)

    def m_cross(p):
        q = p[0] - p[1]
        a, b = family.m(q), m_richardson(family, q)
        return _rel(a - b, a, b)

    for name, tag, fn, t in (
        ("classical_ybe", "classical Yang-Baxter for r", cybe, tol),
        ("r_m_identity", "[r_ab, m_ac + m_bc] + [r_ac, m_ab + m_bc] = 0", rm, tol),
        ("m_extrapolation", "analytic m against eta-extrapolation", m_cross, 1e-6),
    ):
        res, k = sampler.run(fn, 3, samples)
        report.add(name, tag, res, t)
        report.resampled += k
    return report


def check_derivatives(family: RMatrixFamily, sampler=None, tol: float = 1e-6, samples: int = 20) -> IdentityReport:
    """F, F' and dF0/dq against central differences."""
    sampler = _as_sampler(sampler)
    report = IdentityReport(f"derivatives[{family.kind}]")

    def fd_f(p):
        z, q = p
        e = family.evaluate(z, q)
        num = _fd(lambda x: family.evaluate(z, x).value, q, family)
        num2 = _fd(lambda x: family.evaluate(z, x).d_q, q, family)
        return max(_rel(e.d_q - num, e.d_q), _rel(e.d2_q - num2, e.d2_q))

    def fd_f0(p):
        _, q = p
        num = _fd(family.f0, q, family)
        a = family.f0_prime(q)
        return _rel(a - num, a)

    for name, tag, fn in (("F_finite_difference", "F = dR/dq, F' = dF/dq", fd_f), ("F0_prime", "dF0/dq", fd_f0)):
        res, k = sampler.run(fn, 2, samples)
        report.add(name, tag, res, tol)
        report.resampled += k
    return report


def suite_families(ntilde: int | None = None, tau=1j) -> list[RMatrixFamily]:
    """Belavin (Nt = 2, 3), Yang (Nt = 1, 2, 3) and XXZ, or just the ones of one rank."""
    fams = [BelavinElliptic(n, tau) for n in (2, 3)] + [YangRational(n) for n in (1, 2, 3)] + [TrigXXZ()]
    if ntilde is not None:
        fams = [f for f in fams if f.ntilde == ntilde]
    return fams


def check_rmatrix_suite(ntilde: int | None = None, tau=1j, seed: int = 0, samples: int = 50, tol: float = 1e-9) -> IdentityReport:
    rep = IdentityReport("rmatrix", environment={"seed": seed, "tau": complex(tau), "samples": samples, "ntilde": ntilde})
    fams = suite_families(ntilde, tau)
    runs = []
    for i, fam in enumerate(fams):
        label = f"{fam.kind}{fam.ntilde}"
        s = seed * 101 + 7 * i
        runs.append((label, check_aybe(fam, Sampler(s), tol, samples)))
        runs.append((label, check_unitarity_skew(fam, Sampler(s + 1), tol, samples)))
        runs.append((label, check_qybe(fam, Sampler(s + 2), tol, samples)))
        runs.append((label, check_pauli_structure(fam, Sampler(s + 3), tol, min(samples, 20))))
        runs.append((label, check_f0_routes(fam, Sampler(s + 4), tol, min(samples, 20))))
        runs.append((label, check_kzb_flatness(fam, Sampler(s + 5), max(tol, 1e-8), min(samples, 30))))
        runs.append((label, check_derivatives(fam, Sampler(s + 7), 1e-6, min(samples, 20))))
        if fam.kind == "belavin":
            runs.append((label, check_fourier(fam.ntilde, tau, Sampler(s + 6), tol, min(samples, 20))))
    if any(f.kind == "xxz" for f in fams):
        from rmlax.quantum import xxz_f0_residuals

        sampler = Sampler(seed * 101 + 999)
        vals, extra = sampler.run(lambda p: xxz_f0_residuals(complex(p[0])), 1, samples)
        xxz = IdentityReport("xxz", resampled=extra)
        xxz.add("f0_closed_form", "XXZ F0 = -(1/sin^2 q)(s0s0 + s3s3) - (cos q/sin^2 q)(s1s1 + s2s2)", [v[1] for v in vals], tol)
        runs.append(("xxz2", xxz))
    for label, r in runs:
        for e in r.entries:
            e.identity = f"{label}:{e.identity}"
            e.suite = rep.suite
        rep.merge(r)
    return rep
