"""Quantum Lax equations, checked coefficient by coefficient.

A differential operator sum_I c_I(q) d^I with matrix coefficients is a map
from multi-indices I (sorted tuples of particle labels, order <= 2) to
coefficient fields. Operators are never applied to wavefunctions. Products
are expanded with the Leibniz rule at one point q, which only needs the jets
(value, gradient, Hessian) of the right-hand factor's coefficients.

With p_b -> hbar d_b the Lax matrix becomes L = C0(q) + hbar sum_b D_b d_b,
where D_b = dL/dp_b is constant, and the check is

    [H, L] - hbar [L, M] = 0

order by order in d.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from rmlax import elliptic as ell
from rmlax.laxpairs import ModelConfig, PhasePoint, random_state, structure
from rmlax.report import IdentityReport
from rmlax.rmatrix import TrigXXZ, _PAULI
from rmlax.tensor import embed_pair, max_abs, permutation_P

TRUNCATION_TOL = 1e-12

MultiIndex = tuple


class MissingDerivative(ValueError):
    pass


class TruncationError(ArithmeticError):
    """An order-3 (or order-2) coefficient that must cancel did not."""


@dataclass
class Jet:
    """Value and q-derivatives of one coefficient at a point.

    ``grad`` maps particle -> matrix and ``hess`` maps (b, c), b <= c, -> matrix;
    absent keys are zero. ``None`` means the derivative order is not supplied.
    """

    value: np.ndarray
    grad: dict | None = field(default_factory=dict)
    hess: dict | None = field(default_factory=dict)

    def derivative(self, idx: MultiIndex):
        if not idx:
            return self.value
        if len(idx) == 1:
            if self.grad is None:
                raise MissingDerivative("first derivative not supplied")
            return self.grad.get(idx[0])
        if len(idx) == 2:
            if self.hess is None:
                raise MissingDerivative("second derivative not supplied")
            return self.hess.get(tuple(sorted(idx)))
        raise MissingDerivative(f"derivative of order {len(idx)} not supported")


@dataclass(frozen=True)
class CoeffField:
    evaluator: Callable[[np.ndarray], Jet]

    def __call__(self, q) -> Jet:
        return self.evaluator(np.asarray(q, dtype=complex))

    @classmethod
    def constant(cls, value) -> "CoeffField":
        jet = Jet(np.asarray(value, dtype=complex))
        return cls(lambda q: jet)


@dataclass
class DiffOp:
    terms: dict
    dim: int
    hbar: complex = 1.0

    @property
    def order(self) -> int:
        return max((len(k) for k in self.terms), default=0)

    def at(self, q) -> dict:
        return {k: c(q) for k, c in self.terms.items()}


def _key(idx) -> MultiIndex:
    return tuple(sorted(idx))


def _leibniz(alpha: MultiIndex):
    """d^alpha (b .) = sum over sub-multisets gamma: (d^gamma b) d^(alpha - gamma)."""
    for mask in itertools.product((0, 1), repeat=len(alpha)):
        gamma = tuple(a for a, m in zip(alpha, mask) if m)
        rest = tuple(a for a, m in zip(alpha, mask) if not m)
        yield gamma, rest


def compose_at(A: DiffOp, B: DiffOp, q) -> dict:
    """Coefficients of A o B at q."""
    if A.order > 2:
        raise MissingDerivative("left factor of order > 2")
    ja, jb = A.at(q), B.at(q)
    out: dict = {}
    for alpha, a in ja.items():
        for beta, b in jb.items():
            for gamma, rest in _leibniz(alpha):
                db = b.derivative(gamma)
                if db is None:
                    continue
                k = _key(beta + rest)
                term = a.value @ db
                out[k] = out[k] + term if k in out else term
    return out


def _combine(x: dict, y: dict, sy=1.0) -> dict:
    out = dict(x)
    for k, v in y.items():
        out[k] = out[k] + sy * v if k in out else sy * v
    return out


def diffop_commutator(A: DiffOp, B: DiffOp, q) -> dict:
    """Coefficients of [A, B] at q, keyed by multi-index (orders 0..3)."""
    return _combine(compose_at(A, B, q), compose_at(B, A, q), -1.0)


def by_order(coeffs: dict) -> dict:
    """Largest coefficient magnitude for every derivative order."""
    out: dict = {}
    for k, v in coeffs.items():
        out[len(k)] = max(out.get(len(k), 0.0), max_abs(v))
    return out


# -- the quantum Lax pair -------------------------------------------------------------


def _structure_jets(config: ModelConfig, z):
    st = structure(config)
    cache: dict = {}

    def get(q):
        key = q.tobytes()
        if key not in cache:
            cache.clear()
            cache[key] = st.evaluate(PhasePoint(q, np.zeros_like(q)), z, need=("L", "M", "jets"))
        return cache[key]

    return st, get


def quantum_lax_operator(config: ModelConfig, z, hbar) -> DiffOp:
    """L with p_b replaced by hbar d_b."""
    st, get = _structure_jets(config, z)

    def c0(q):
        ev = get(q)
        return Jet(ev["C0"], dict(enumerate(ev["dC0"])), ev["hessC0"])

    terms = {(): CoeffField(c0)}
    for b in range(config.n):
        terms[(b,)] = CoeffField.constant(hbar * st.momentum_matrix(b))
    return DiffOp(terms, st.dim, hbar)


def _scalar_part(st, q):
    """nu F0 and its gradient placed on every diagonal block."""
    val, grad, _ = st.diagonal_jet(q, scalar_only=True)
    eye = np.eye(st.aux_dim)
    return np.kron(eye, val), [np.kron(eye, g) for g in grad]


def quantum_hamiltonian(config: ModelConfig, hbar, shifted: bool = False) -> DiffOp:
    """H(hbar d, q); with ``shifted`` the spin term hbar nu F0 is added."""
    st = structure(config)
    eye = np.eye(st.dim)

    def potential(q):
        st.check_state(q)
        val = st.potential_value(q) * eye
        grad = {b: g * eye for b, g in enumerate(st.potential_grad(q))}
        if shifted:
            f, df = _scalar_part(st, q)
            val = val + hbar * f
            for b, g in enumerate(df):
                grad[b] = grad[b] + hbar * g
        return Jet(val, grad, None)

    terms = {(): CoeffField(potential)}
    for b in range(config.n):
        terms[(b, b)] = CoeffField.constant(0.5 * hbar * hbar * eye)
    return DiffOp(terms, st.dim, hbar)


def quantum_m_operator(config: ModelConfig, z, split: bool = False) -> DiffOp:
    """M as an order-0 operator; ``split`` removes the nu F0 part."""
    st, get = _structure_jets(config, z)

    def m(q):
        ev = get(q)
        val, grad = ev["M"], list(ev["dM"])
        if split:
            f, df = _scalar_part(st, q)
            val = val - f
            grad = [g - d for g, d in zip(grad, df)]
        return Jet(val, dict(enumerate(grad)), None)

    return DiffOp({(): CoeffField(m)}, st.dim)


@dataclass
class QuantumLaxResult:
    order1: float
    order0: float
    higher: float  # largest absolute order-2/3 coefficient, must vanish
    hbar: complex
    per_order: dict

    @property
    def residual(self) -> float:
        return max(self.order0, self.order1)


def quantum_lax_residual(config: ModelConfig, q, z, hbar, split: bool = False) -> QuantumLaxResult:
    """Relative per-order residuals of [H, L] - hbar [L, M] at q.

    Each order is normalized by the largest coefficient of that order on
    either side. With ``split`` the F0 term moves from M into H.
    """
    q = np.asarray(q, dtype=complex)
    structure(config).check_state(q)
    H = quantum_hamiltonian(config, hbar, shifted=split)
    L = quantum_lax_operator(config, z, hbar)
    M = quantum_m_operator(config, z, split=split)
    left = diffop_commutator(H, L, q)
    right = {k: hbar * v for k, v in diffop_commutator(L, M, q).items()}
    diff = _combine(left, right, -1.0)
    res, sl, sr = by_order(diff), by_order(left), by_order(right)
    scale_all = max(list(sl.values()) + list(sr.values()) + [0.0])
    per_order = {}
    for k in sorted(res):
        scale = max(sl.get(k, 0.0), sr.get(k, 0.0))
        per_order[k] = res[k] / scale if scale > 0 else res[k]
    higher = max((res[k] for k in res if k >= 2), default=0.0)
    if higher > TRUNCATION_TOL * max(scale_all, 1.0):
        raise TruncationError(f"order >= 2 coefficient survives: {higher:.3e}")
    return QuantumLaxResult(per_order.get(1, 0.0), per_order.get(0, 0.0), higher, hbar, per_order)


def classical_split_residual(config: ModelConfig, state, z) -> float:
    """{H, L} + [nu F0, L] - [L, Mbar] with Mbar = M - nu F0, relative."""
    st = structure(config)
    state = state if isinstance(state, PhasePoint) else PhasePoint(*state)
    ev = st.evaluate(state, z, need=("L", "M", "Ldot"))
    L, M, Ld = ev["L"], ev["M"], ev["Ldot"]
    f, _ = _scalar_part(st, state.q)
    mbar = M - f
    lhs = Ld + f @ L - L @ f
    rhs = L @ mbar - mbar @ L
    scale = max(max_abs(Ld), max_abs(f @ L), max_abs(L @ mbar))
    return max_abs(lhs - rhs) / scale


@dataclass
class PDCommutation:
    residual: float
    rows: list  # auxiliary rows where the commutator does not vanish


def check_pd_commutation(config: ModelConfig, q, tol: float = 1e-9) -> PDCommutation:
    """[sum_a D_a d_a, diagonal part of M], relative to its largest single term."""
    st = structure(config)
    q = np.asarray(q, dtype=complex)
    st.check_state(q)
    val, grad, scale = st.diagonal_jet(q)
    X = DiffOp({(): CoeffField(lambda _q: Jet(val, dict(enumerate(grad)), None))}, st.dim)
    P = DiffOp({(b,): CoeffField.constant(st.momentum_matrix(b)) for b in range(config.n)}, st.dim)
    coeffs = diffop_commutator(P, X, q)
    worst = max(by_order(coeffs).values(), default=0.0)
    rel = worst / scale if scale > 0 else worst
    c0 = coeffs.get((), np.zeros((st.dim, st.dim)))
    d = st.site_dim
    rows = [r for r in range(st.aux_dim) if max_abs(c0[r * d : (r + 1) * d, r * d : (r + 1) * d]) > tol * scale]
    return PDCommutation(rel, rows)


# -- scalar reductions ----------------------------------------------------------------


_SCALAR_KINDS = {
    "rational": lambda tau: ell.RationalFamily(),
    "trigonometric": lambda tau: ell.TrigonometricFamily(),
    "elliptic": lambda tau: ell.EllipticFamily(tau),
}


@dataclass
class SumToZero:
    rows: float
    cols: float

    @property
    def residual(self) -> float:
        return max(self.rows, self.cols)


def check_sum_to_zero(kind, q, z, nu=1.0, tau=1j) -> SumToZero:
    """Row and column sums of the scalar M (diagonal nu d_i included).

    Relative to max(1, max|M_ij|). Zero for the rational and trigonometric
    functions, where f(z, q) does not depend on z.
    """
    from rmlax.laxpairs import krichever_pair

    fam = kind if isinstance(kind, ell.FunctionFamily) else _SCALAR_KINDS[kind](tau)
    q = np.asarray(q, dtype=complex)
    _, M = krichever_pair(q, np.zeros_like(q), z, nu, fam)
    scale = max(1.0, max_abs(M))
    return SumToZero(float(np.max(np.abs(M.sum(axis=1)))) / scale, float(np.max(np.abs(M.sum(axis=0)))) / scale)


def scalar_f0_constant(n: int, tau, divisor: int = 6) -> complex:
    """(n^2 - n) theta'''(0) / (divisor theta'(0)).

    F0 at Nt = 1 is -sum_{i>j} wp(q_ij) plus this constant with divisor 6.
    """
    t = ell.theta_jet(0.0, ell.as_tau(tau))
    return (n * n - n) * t[3] / (divisor * t[1])


def scalar_f0_residual(n: int, q, tau, divisor: int = 6) -> float:
    """|F0(q) - (-sum_{i>j} wp(q_ij) + const)| relative to |F0| at Nt = 1."""
    cfg = ModelConfig("A", n, ntilde=1, tau=tau)
    st = structure(cfg)
    q = np.asarray(q, dtype=complex)
    st.check_state(q)
    f0 = complex(st.f0_operator(q)[0, 0])
    fam = cfg.rfamily.scalar
    ref = -sum(fam.wp(q[i] - q[j]) for i in range(n) for j in range(i)) + scalar_f0_constant(n, tau, divisor)
    return abs(f0 - ref) / max(1.0, abs(f0))


def coupling_shift_residual(n: int, q, tau, nu, hbar) -> float:
    """Order-0 part of the shifted H at Nt = 1 against -nu (nu + hbar) sum wp + hbar nu const."""
    cfg = ModelConfig("A", n, ntilde=1, nu=nu, tau=tau)
    H = quantum_hamiltonian(cfg, hbar, shifted=True)
    q = np.asarray(q, dtype=complex)
    v = complex(H.terms[()](q).value[0, 0])
    fam = cfg.rfamily.scalar
    pairs = sum(fam.wp(q[i] - q[j]) for i in range(n) for j in range(i))
    ref = -nu * (nu + hbar) * pairs + hbar * nu * scalar_f0_constant(n, tau)
    return abs(v - ref) / max(1.0, abs(v))


def xxz_f0_reference(q) -> np.ndarray:
    """(1/sin^2 q)(s0 s0 + s3 s3) + (cos q / sin^2 q)(s1 s1 + s2 s2)."""
    s2 = np.sin(q) ** 2
    s = [np.kron(p, p) for p in _PAULI]
    return (s[0] + s[3]) / s2 + np.cos(q) * (s[1] + s[2]) / s2


def xxz_f0_residuals(q) -> tuple[float, float]:
    """Distance of the XXZ F0 from the reference expression and from its negative."""
    f0 = TrigXXZ().f0(q)
    ref = xxz_f0_reference(q)
    scale = max_abs(ref)
    return max_abs(f0 - ref) / scale, max_abs(f0 + ref) / scale


# -- spin exchange pair ---------------------------------------------------------------


@dataclass
class SpinPair:
    L: np.ndarray
    M: np.ndarray
    F0: np.ndarray  # -nu sum_{i>j} E2(q_ij) P_ij, a site operator


def spin_permutation_lax(n: int, ntilde: int, nu, state, z, tau=1j) -> SpinPair:
    """L_ij = p_i delta_ij + nu phi(z, q_ij) P_ij, M_ij = nu d_i delta_ij + nu f(z, q_ij) P_ij.

    d_i = sum_k E2(q_ik) P_ik; the F0 term is returned separately.
    """
    fam = ell.EllipticFamily(tau)
    state = state if isinstance(state, PhasePoint) else PhasePoint(*state)
    q, p = state.q, state.p
    d = ntilde**n
    P = {}
    for i in range(n):
        for j in range(n):
            if i != j:
                P[(i, j)] = embed_pair(permutation_P(ntilde), i, j, n, ntilde)
    eye = np.eye(d)
    L = np.zeros((n * d, n * d), complex)
    M = np.zeros((n * d, n * d), complex)

    def put(out, i, j, mat):
        out[i * d : (i + 1) * d, j * d : (j + 1) * d] += mat

    for i in range(n):
        put(L, i, i, p[i] * eye)
        put(M, i, i, nu * sum(fam.E2(q[i] - q[k]) * P[(i, k)] for k in range(n) if k != i))
        for j in range(n):
            if i != j:
                put(L, i, j, nu * fam.phi(z, q[i] - q[j]) * P[(i, j)])
                put(M, i, j, nu * fam.f(z, q[i] - q[j]) * P[(i, j)])
    F0 = -nu * sum(fam.E2(q[i] - q[j]) * P[(i, j)] for i in range(n) for j in range(i))
    return SpinPair(L, M, F0)


# -- suite -------------------------------------------------------------------------------


def _pass_configs(ntilde=2):
    return [
        ModelConfig("A", 2, ntilde=ntilde),
        ModelConfig("A", 3, ntilde=ntilde),
        ModelConfig("D", 2, ntilde=2),
        ModelConfig("D", 3, ntilde=2),
        ModelConfig("B", 2, ntilde=2),
        ModelConfig("B", 3, ntilde=2),
    ]


def _fail_configs():
    return [ModelConfig("C", 2, ntilde=2), ModelConfig("BC", 2, ntilde=2)]


def _label(cfg: ModelConfig) -> str:
    return f"{cfg.root_system}{cfg.n}_nt{cfg.ntilde}"


def check_quantum(seed: int = 0, samples: int = 3, tol: float = 1e-8, hbars=(0.1, 1.0, 2.0), tau=1j) -> IdentityReport:
    rng = np.random.default_rng(seed)
    report = IdentityReport("quantum", environment={"seed": seed, "tau": complex(tau), "hbars": list(hbars)})

    def z_draw():
        return complex(rng.uniform(0.1, 0.4) + 1j * rng.uniform(0.1, 0.4))

    for cfg, expect in [(c, "pass") for c in _pass_configs()] + [(c, "fail") for c in _fail_configs()]:
        cfg = cfg.with_(tau=tau)
        res, pd = [], []
        for _ in range(samples):
            st = random_state(cfg, rng)
            z = z_draw()
            for h in hbars:
                res.append(quantum_lax_residual(cfg, st.q, z, h).residual)
            pd.append(check_pd_commutation(cfg, st.q).residual)
        t = tol if expect == "pass" else 1e-3
        report.add(f"quantum_lax_{_label(cfg)}", "quantum Lax equation", res, t, expect=expect)
        report.add(f"pd_commutation_{_label(cfg)}", "momenta commute with D + F0", pd, 1e-9 if expect == "pass" else 1e-3, expect=expect)

    spin = ModelConfig("A", 2, ntilde=2, family="spin_exchange", tau=tau)
    res = []
    for _ in range(samples):
        st = random_state(spin, rng)
        res.append(quantum_lax_residual(spin, st.q, z_draw(), 1.0).residual)
    report.add("quantum_lax_spin_exchange", "spin exchange Lax pair", res, tol)

    rows = {"rational": [], "trigonometric": [], "elliptic": []}
    for _ in range(samples):
        q = rng.uniform(-0.4, 0.4, 3) + 1j * rng.uniform(-0.4, 0.4, 3)
        z = z_draw()
        for kind in rows:
            rows[kind].append(check_sum_to_zero(kind, q, z, tau=tau).residual)
    report.add("sum_to_zero_rational", "sum up to zero", rows["rational"], 1e-12)
    report.add("sum_to_zero_trigonometric", "sum up to zero", rows["trigonometric"], 1e-12)
    report.add("sum_to_zero_elliptic", "sum up to zero fails", rows["elliptic"], 1e-3, expect="fail")

    f0, printed = [], []
    for _ in range(samples):
        q = rng.uniform(-0.4, 0.4, 3) + 1j * rng.uniform(-0.4, 0.4, 3)
        f0.append(scalar_f0_residual(3, q, tau))
        printed.append(scalar_f0_residual(3, q, tau, divisor=3))
    report.add("scalar_f0_constant", "F0 at Nt = 1 with constant (N^2-N) theta'''(0)/(6 theta'(0))", f0, 1e-10)
    report.add("scalar_f0_printed_constant", "F0 at Nt = 1 with constant (N^2-N) theta'''(0)/(3 theta'(0))", printed, 1e-10)
    report.environment["scalar_f0_constant_n3"] = scalar_f0_constant(3, tau)
    return report
