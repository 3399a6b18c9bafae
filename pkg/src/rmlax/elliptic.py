"""Elliptic and degenerate Kronecker-function families.

The elliptic case is built on the odd theta function

    theta(z) = sum_k exp(pi i tau (k+1/2)^2 + 2 pi i (z+1/2)(k+1/2)),

with E1 = theta'/theta, E2 = -E1', wp = E2 + theta'''(0)/(3 theta'(0)) and the
Kronecker function phi(z, q) = theta'(0) theta(z+q) / (theta(z) theta(q)).
Rational (1/z) and trigonometric (coth, or cot when ``circular``) families
expose the same interface, so identities can be checked family-uniformly.

All derivatives are analytic. Arguments are reduced to the fundamental cell
before the series is summed and the quasi-periodicity factors are applied
exactly.
"""

from __future__ import annotations

import cmath
import math
import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from rmlax.report import IdentityReport, relative_residual

try:
    from rmlax._theta_core import theta_jet as _theta_jet_reduced

    BACKEND = "compiled"
except ImportError:  # pragma: no cover - exercised when the extension is not built
    from rmlax._theta_py import theta_jet as _theta_jet_reduced

    BACKEND = "python"

TAU_MIN = 0.05
TWO_PI_I = 2j * math.pi


class PoleError(ValueError):
    """An argument landed within the pole guard of a lattice point."""


class PrecisionError(ArithmeticError):
    """The requested evaluation cannot be carried out at double precision."""


def default_pole_guard() -> float:
    return float(os.environ.get("RMLAX_POLE_GUARD", "1e-6"))


@dataclass(frozen=True)
class ModulusTau:
    tau: complex

    def __post_init__(self):
        t = complex(self.tau)
        object.__setattr__(self, "tau", t)
        if t.imag <= TAU_MIN:
            raise PrecisionError(f"Im(tau)={t.imag:g} is below tau_min={TAU_MIN}")

    def __complex__(self):
        return self.tau


def as_tau(tau) -> complex:
    if isinstance(tau, ModulusTau):
        return tau.tau
    return ModulusTau(complex(tau)).tau


def _reduce(z: complex, tau: complex) -> tuple[complex, int, int]:
    n = round(z.imag / tau.imag)
    w = z - n * tau
    m = round(w.real)
    return w - m, m, n


@lru_cache(maxsize=64)
def _neighbours(tau: complex) -> tuple[complex, ...]:
    return tuple(a + b * tau for a in (-1, 0, 1) for b in (-1, 0, 1) if a or b)


def lattice_distance(z: complex, tau: complex) -> float:
    z0, _, _ = _reduce(complex(z), tau)
    best = abs(z0)
    for w in _neighbours(tau):
        d = abs(z0 - w)
        if d < best:
            best = d
    return best


@lru_cache(maxsize=65536)
def _reduced(z: complex, tau: complex):
    z0, m, n = _reduce(z, tau)
    return _theta_jet_reduced(z0, tau), z0, m, n


def theta_jet(z, tau) -> tuple[complex, complex, complex, complex]:
    """theta and its first three z-derivatives at an arbitrary point."""
    tau = as_tau(tau)
    (t0, t1, t2, t3), _, m, n = _reduced(complex(z), tau)
    # theta(z) = A(z) theta(z0), A(z) = (-1)^(m+n) exp(pi i tau n^2 - 2 pi i n z)
    a = (-1) ** (m + n) * cmath.exp(1j * math.pi * tau * n * n - TWO_PI_I * n * complex(z))
    c = -TWO_PI_I * n
    return (
        a * t0,
        a * (t1 + c * t0),
        a * (t2 + 2 * c * t1 + c * c * t0),
        a * (t3 + 3 * c * t2 + 3 * c * c * t1 + c**3 * t0),
    )


def theta(z, tau) -> complex:
    return theta_jet(z, tau)[0]


@lru_cache(maxsize=256)
def _theta_constants(tau: complex) -> tuple[complex, complex]:
    t = _theta_jet_reduced(0j, tau)
    return t[1], t[3]


def theta_prime0(tau) -> complex:
    return _theta_constants(as_tau(tau))[0]


def wp_constant(tau) -> complex:
    """theta'''(0) / (3 theta'(0)), the shift between E2 and wp."""
    d1, d3 = _theta_constants(as_tau(tau))
    return d3 / (3 * d1)


class FunctionFamily:
    """Kronecker function, Eisenstein functions and wp of one degeneration."""

    kind = "abstract"

    def __init__(self, pole_guard: float | None = None):
        self.pole_guard = default_pole_guard() if pole_guard is None else pole_guard

    def _guard(self, x: complex) -> complex:
        x = complex(x)
        if self.pole_distance(x) < self.pole_guard:
            raise PoleError(f"{self.kind}: argument {x} within {self.pole_guard:g} of a pole")
        return x

    def pole_distance(self, x: complex) -> float:
        raise NotImplementedError

    def E1(self, x):
        raise NotImplementedError

    def E2(self, x):
        raise NotImplementedError

    def wp(self, x):
        raise NotImplementedError

    def wp_prime(self, x):
        raise NotImplementedError

    def phi(self, z, q):
        raise NotImplementedError

    def f(self, z, q):
        """d/dq phi(z, q) = phi(z, q) (E1(z+q) - E1(q))."""
        return self.phi(z, q) * (self.E1(z + q) - self.E1(q))

    def f_prime(self, z, q):
        ph = self.phi(z, q)
        d = self.E1(z + q) - self.E1(q)
        return ph * d * d + ph * (self.E2(q) - self.E2(z + q))

    def f_z(self, z, q):
        """d/dz phi(z, q); the Kronecker function is symmetric so this is f(q, z)."""
        return self.f(q, z)

    def describe(self) -> dict:
        return {"kind": self.kind}


class EllipticFamily(FunctionFamily):
    kind = "elliptic"

    def __init__(self, tau, pole_guard: float | None = None):
        super().__init__(pole_guard)
        self.tau = as_tau(tau)

    def pole_distance(self, x):
        return lattice_distance(x, self.tau)

    def _logjet(self, x):
        x = self._guard(x)
        (t0, t1, t2, t3), _, _, n = _reduced(x, self.tau)
        l1 = t1 / t0
        l2 = t2 / t0
        l3 = t3 / t0
        return l1 - TWO_PI_I * n, l1, l2, l3

    def E1(self, x):
        return self._logjet(x)[0]

    def E2(self, x):
        _, l1, l2, _ = self._logjet(x)
        return l1 * l1 - l2

    def wp(self, x):
        return self.E2(x) + wp_constant(self.tau)

    def wp_prime(self, x):
        _, l1, l2, l3 = self._logjet(x)
        return -(l3 - 3 * l2 * l1 + 2 * l1**3)

    def theta(self, x):
        return theta(x, self.tau)

    def phi(self, z, q):
        z, q = self._guard(z), self._guard(q)
        s = self._guard(z + q)
        return theta_prime0(self.tau) * theta(s, self.tau) / (theta(z, self.tau) * theta(q, self.tau))

    def describe(self):
        return {"kind": self.kind, "tau": [self.tau.real, self.tau.imag]}


class RationalFamily(FunctionFamily):
    kind = "rational"

    def pole_distance(self, x):
        return abs(x)

    def E1(self, x):
        return 1 / self._guard(x)

    def E2(self, x):
        return 1 / self._guard(x) ** 2

    wp = E2

    def wp_prime(self, x):
        return -2 / self._guard(x) ** 3

    def phi(self, z, q):
        return 1 / self._guard(z) + 1 / self._guard(q)


class TrigonometricFamily(FunctionFamily):
    """coth-based family; ``circular=True`` switches to cot (period pi)."""

    kind = "trigonometric"

    def __init__(self, circular: bool = False, pole_guard: float | None = None):
        super().__init__(pole_guard)
        self.circular = circular

    def pole_distance(self, x):
        if self.circular:
            return abs(x - math.pi * round(x.real / math.pi))
        return abs(x - 1j * math.pi * round(x.imag / math.pi))

    def E1(self, x):
        x = self._guard(x)
        return 1 / cmath.tan(x) if self.circular else 1 / cmath.tanh(x)

    def E2(self, x):
        x = self._guard(x)
        return 1 / cmath.sin(x) ** 2 if self.circular else 1 / cmath.sinh(x) ** 2

    wp = E2

    def wp_prime(self, x):
        x = self._guard(x)
        if self.circular:
            return -2 * cmath.cos(x) / cmath.sin(x) ** 3
        return -2 * cmath.cosh(x) / cmath.sinh(x) ** 3

    def phi(self, z, q):
        return self.E1(z) + self.E1(q)

    def describe(self):
        return {"kind": self.kind, "circular": self.circular}


def _family(tau_or_family) -> FunctionFamily:
    if isinstance(tau_or_family, FunctionFamily):
        return tau_or_family
    return EllipticFamily(tau_or_family)


def eisenstein_E1(z, tau) -> complex:
    return _family(tau).E1(z)


def eisenstein_E2(z, tau) -> complex:
    return _family(tau).E2(z)


def wp(z, tau) -> complex:
    return _family(tau).wp(z)


def wp_prime(z, tau) -> complex:
    return _family(tau).wp_prime(z)


def kronecker_phi(z, q, family) -> complex:
    return _family(family).phi(z, q)


def kronecker_f(z, q, family) -> complex:
    return _family(family).f(z, q)


def kronecker_f_prime(z, q, family) -> complex:
    return _family(family).f_prime(z, q)


# -- identity suite -------------------------------------------------------------------


class Sampler:
    """Random complex points drawn from a seeded generator.

    ``draw(k)`` returns k points in a box around the origin; the checks
    resample whole configurations when any evaluation hits the pole guard.
    """

    def __init__(self, seed: int = 0, radius: float = 0.45, max_tries: int = 100):
        self.rng = np.random.default_rng(seed)
        self.radius = radius
        self.max_tries = max_tries

    def draw(self, k: int) -> np.ndarray:
        r = self.radius
        return self.rng.uniform(-r, r, k) + 1j * self.rng.uniform(-r, r, k)

    def run(self, fn, k: int, samples: int):
        """Evaluate ``fn(points)`` on ``samples`` configurations, resampling at poles."""
        results, resampled = [], 0
        for _ in range(samples):
            for _ in range(self.max_tries):
                try:
                    results.append(fn(self.draw(k)))
                    break
                except PoleError:
                    resampled += 1
            else:
                raise PoleError("could not find a configuration clear of poles")
        return results, resampled


SAMPLE_MARGIN = 0.05
CONTOUR_POINTS = 64


def _clear(fam: FunctionFamily, *xs):
    for x in xs:
        if fam.pole_distance(complex(x)) < SAMPLE_MARGIN:
            raise PoleError("sample too close to a pole")


def _rel(lhs, *rhs_terms) -> float:
    rhs = sum(rhs_terms)
    return relative_residual(abs(lhs - rhs), abs(lhs), *(abs(t) for t in rhs_terms))


def _period_min(fam: FunctionFamily) -> float:
    if isinstance(fam, EllipticFamily):
        return min(abs(w) for w in _neighbours(fam.tau))
    if isinstance(fam, TrigonometricFamily):
        return math.pi
    return math.inf


def laurent_coefficients(fn, radius: float, kmin: int, kmax: int, points: int = CONTOUR_POINTS) -> dict:
    """Coefficients c_k of fn(z) = sum c_k z^k around 0 by the trapezoid rule on |z| = radius."""
    zs = radius * np.exp(2j * np.pi * np.arange(points) / points)
    vals = np.array([fn(complex(z)) for z in zs])
    return {k: complex(np.mean(vals * zs ** (-k))) for k in range(kmin, kmax + 1)}


def check_fay_suite(family=1j, sampler=None, tol: float = 1e-10, samples: int = 100) -> IdentityReport:
    """Fay identity, its degenerations, the z -> 0 expansion of phi and the parity rules."""
    fam = _family(family)
    sampler = Sampler() if sampler is None else (Sampler(sampler) if isinstance(sampler, int) else sampler)
    rep = IdentityReport("elliptic", environment={"family": fam.describe()})
    period = _period_min(fam)

    def fay(x):
        z, q, w, u = x
        _clear(fam, z, q, w, u, z - w, q + u)
        return _rel(fam.phi(z, q) * fam.phi(w, u), fam.phi(z - w, q) * fam.phi(w, q + u), fam.phi(w - z, u) * fam.phi(z, q + u))

    def phi_f(x):
        z, a, b = x
        _clear(fam, z, a, b, z + a, z + b, a + b, a - b)
        lhs = fam.phi(z, a) * fam.f(z, b) - fam.phi(z, b) * fam.f(z, a)
        return _rel(lhs, fam.phi(z, a + b) * (fam.wp(a) - fam.wp(b)))

    def phi_pm(x):
        eta, z = x
        _clear(fam, eta, z, eta + z, eta - z)
        lhs = fam.phi(eta, z) * fam.phi(eta, -z)
        return max(_rel(lhs, fam.wp(eta), -fam.wp(z)), _rel(lhs, fam.E2(eta), -fam.E2(z)))

    def phi_same_q(x):
        z, w, q = x
        _clear(fam, z, w, q, z + w, z + q, w + q, z + w + q)
        lhs = fam.phi(z, q) * fam.phi(w, q)
        p = fam.phi(z + w, q)
        a = _rel(lhs, p * fam.E1(z), p * fam.E1(w), p * fam.E1(q), -p * fam.E1(z + w + q))
        b = _rel(lhs, p * (fam.E1(z) + fam.E1(w)), -fam.f(z + w, q))
        return max(a, b)

    def radius(q):
        return 0.4 * min(fam.pole_distance(q), period)

    def expansion(x):
        (q,) = x
        _clear(fam, q)
        c = laurent_coefficients(lambda z: fam.phi(z, q), radius(q), -2, 1)
        e1, w = fam.E1(q), fam.wp(q)
        want = {-2: 0, -1: 1, 0: e1, 1: (e1 * e1 - w) / 2}
        scale = max(1.0, abs(e1), abs(e1 * e1) / 2, abs(w) / 2)
        return max(abs(c[k] - want[k]) for k in want) / scale

    def f_at_zero(x):
        (q,) = x
        _clear(fam, q)
        c = laurent_coefficients(lambda z: fam.f(z, q), radius(q), -1, 0)
        e2 = fam.E2(q)
        return max(abs(c[-1]), abs(c[0] + e2)) / max(1.0, abs(e2))

    def parity(x):
        (z,) = x
        _clear(fam, z)
        out = [
            _rel(fam.E1(-z), -fam.E1(z)),
            _rel(fam.E2(-z), fam.E2(z)),
            _rel(fam.wp(-z), fam.wp(z)),
            _rel(fam.wp_prime(-z), -fam.wp_prime(z)),
        ]
        if isinstance(fam, EllipticFamily):
            out.append(_rel(fam.theta(-z), -fam.theta(z)))
        return max(out)

    checks = [
        ("fay", "Fay trisecant identity", fay, 4),
        ("phi_f_degeneration", "phi(z,x) f(z,y) - phi(z,y) f(z,x) = phi(z,x+y)(wp(x) - wp(y))", phi_f, 3),
        ("phi_phi_minus", "phi(eta,z) phi(eta,-z) = wp(eta) - wp(z) = E2(eta) - E2(z)", phi_pm, 2),
        ("phi_phi_same_q", "phi(z,q) phi(w,q) via E1 and via f", phi_same_q, 3),
        ("f_at_zero", "f(0,q) = -E2(q)", f_at_zero, 1),
        ("parity", "theta, E1, wp' odd; E2, wp even", parity, 1),
    ]
    # the coth family with wp = 1/sinh^2 has z-coefficient 1/3 instead of (E1^2 - wp)/2
    if not isinstance(fam, TrigonometricFamily):
        checks.insert(4, ("expansion", "phi(z,q) = 1/z + E1(q) + z (E1(q)^2 - wp(q))/2 + O(z^2)", expansion, 1))
    for name, tag, fn, k in checks:
        res, extra = sampler.run(fn, k, samples)
        rep.resampled += extra
        rep.add(f"{fam.kind}:{name}", tag, res, tol)
    return rep

