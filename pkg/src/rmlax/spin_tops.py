"""Spin Calogero-Moser model, interacting elliptic tops and their quantization.

Spin variables come from canonical pairs xi_i^a, eta_i^a with
{xi_i^a, eta_j^b} = delta_ij delta_ab, so S_ij = xi_i . eta_j. Flows use the
same sign convention as for (p, q): xi plays the role of p.

Tops variables are N^2 matrices S^{ij} in Mat_Nt, expanded in the T-basis
as S^{ij} = sum_a S^{ij}_a T_a, S^{ij}_a = tr(S^{ij} T_{-a}) / Nt.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from rmlax import elliptic as ell
from rmlax.laxpairs import ModelConfig, krichever_pair, structure
from rmlax.report import IdentityReport
from rmlax.tensor import embed, index_set, kappa, max_abs, t_matrix

TWO_PI_I = 2j * math.pi
CONSTRAINT_TOL = 1e-12


class ConstraintError(ValueError):
    pass


def _close_all(vals, tol=CONSTRAINT_TOL) -> bool:
    vals = np.asarray(vals)
    return bool(np.max(np.abs(vals - vals[0])) <= tol * max(1.0, float(np.max(np.abs(vals)))))


# -- spin Calogero-Moser --------------------------------------------------------------


@dataclass(frozen=True)
class SpinState:
    q: np.ndarray
    p: np.ndarray
    xi: np.ndarray  # N x Nt
    eta: np.ndarray  # N x Nt

    def __post_init__(self):
        for name in ("q", "p", "xi", "eta"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=complex))
        if self.xi.shape != self.eta.shape or self.xi.shape[0] != len(self.q):
            raise ValueError("xi and eta must be N x Nt")
        if not _close_all(np.diag(self.S)):
            raise ConstraintError("S_ii must be equal for all i")

    @property
    def S(self) -> np.ndarray:
        return self.xi @ self.eta.T


def random_spin_state(n: int, ntilde: int, rng: np.random.Generator, s_ii=1.0, spread=0.4) -> SpinState:
    """A random state with S_ii = s_ii, obtained by rescaling each eta_i."""
    q = rng.uniform(-spread, spread, n) + 1j * rng.uniform(-spread, spread, n)
    p = rng.normal(size=n) + 1j * rng.normal(size=n)
    xi = rng.normal(size=(n, ntilde)) + 1j * rng.normal(size=(n, ntilde))
    eta = rng.normal(size=(n, ntilde)) + 1j * rng.normal(size=(n, ntilde))
    eta *= (s_ii / np.einsum("ia,ia->i", xi, eta))[:, None]
    return SpinState(q, p, xi, eta)


def _fam(tau) -> ell.EllipticFamily:
    return ell.EllipticFamily(tau)


def spin_cm_hamiltonian(state: SpinState, tau=1j) -> complex:
    fam = _fam(tau)
    q, S = state.q, state.S
    n = len(q)
    h = 0.5 * complex(np.sum(state.p**2))
    for i in range(n):
        for j in range(i):
            h -= S[i, j] * S[j, i] * fam.E2(q[i] - q[j])
    return h


def spin_cm_flow(state: SpinState, tau=1j):
    """(qdot, pdot, xidot, etadot) from H with xidot = -dH/deta, etadot = dH/dxi."""
    fam = _fam(tau)
    q, S = state.q, state.S
    n = len(q)
    W = np.zeros((n, n), complex)
    pdot = np.zeros(n, complex)
    for i in range(n):
        for j in range(n):
            if i != j:
                W[i, j] = -fam.E2(q[i] - q[j])
                # H contains -S_ij S_ji E2(q_ij) once per unordered pair
                pdot[i] += S[i, j] * S[j, i] * fam.wp_prime(q[i] - q[j])
    dH_dxi = (W * S.T) @ state.eta  # sum_j W_ij S_ji eta_j
    dH_deta = (W * S.T).T @ state.xi  # sum_i W_ij S_ji xi_i
    return state.p.copy(), pdot, -dH_deta, dH_dxi


def spin_cm_lax(state: SpinState, z, tau=1j) -> tuple[np.ndarray, np.ndarray]:
    fam = _fam(tau)
    q, S = state.q, state.S
    n = len(q)
    L = np.zeros((n, n), complex)
    M = np.zeros((n, n), complex)
    e1 = fam.E1(z)
    for i in range(n):
        L[i, i] = state.p[i] + S[i, i] * e1
        for j in range(n):
            if i != j:
                L[i, j] = S[i, j] * fam.phi(z, q[i] - q[j])
                M[i, j] = S[i, j] * fam.f(z, q[i] - q[j])
    return L, M


def spin_cm_residual(state: SpinState, z, tau=1j) -> float:
    fam = _fam(tau)
    q, S = state.q, state.S
    n = len(q)
    qd, pd, xd, ed = spin_cm_flow(state, tau)
    Sd = xd @ state.eta.T + state.xi @ ed.T
    L, M = spin_cm_lax(state, z, tau)
    Ld = np.zeros((n, n), complex)
    for i in range(n):
        Ld[i, i] = pd[i] + Sd[i, i] * fam.E1(z)
        for j in range(n):
            if i != j:
                x = q[i] - q[j]
                Ld[i, j] = Sd[i, j] * fam.phi(z, x) + S[i, j] * fam.f(z, x) * (qd[i] - qd[j])
    lm, ml = L @ M, M @ L
    scale = max(max_abs(Ld), max_abs(lm), max_abs(ml))
    return max_abs(Ld - lm + ml) / scale if scale > 0 else max_abs(Ld - lm + ml)


def spin_flow_fd_residual(state: SpinState, tau=1j, h=1e-5) -> float:
    """Compare spin_cm_flow with central differences of H (it is holomorphic)."""
    H = lambda s: spin_cm_hamiltonian(s, tau)  # noqa: E731
    qd, pd, xd, ed = spin_cm_flow(state, tau)
    worst = 0.0

    def shifted(field, idx, d):
        arrs = {k: getattr(state, k).copy() for k in ("q", "p", "xi", "eta")}
        arrs[field][idx] += d
        return SpinState(**arrs) if field in ("q", "p") else _unchecked(arrs)

    for field, sign, target in (("p", 1, qd), ("q", -1, pd), ("eta", -1, xd), ("xi", 1, ed)):
        it = np.ndindex(getattr(state, field).shape)
        for idx in it:
            d = (H(shifted(field, idx, h)) - H(shifted(field, idx, -h))) / (2 * h)
            worst = max(worst, abs(sign * d - target[idx]) / max(1.0, abs(target[idx])))
    return worst


def _unchecked(arrs) -> SpinState:
    # xi / eta perturbations break S_ii equality; skip the constraint check
    s = object.__new__(SpinState)
    for k, v in arrs.items():
        object.__setattr__(s, k, np.asarray(v, dtype=complex))
    return s


def lie_poisson_residual(state: SpinState) -> float:
    """Canonical brackets of S_ij = xi_i . eta_j against {S_ij, S_kl} = -S_il d_kj + S_kj d_il."""
    xi, eta, S = state.xi, state.eta, state.S
    n = len(state.q)
    worst = 0.0
    for i, j, k, l in np.ndindex(n, n, n, n):
        # {f, g} = sum_m,a (df/dxi dg/deta - df/deta dg/dxi)
        br = 0j
        for m in range(n):
            dxi_f = eta[j] if m == i else 0 * eta[j]
            deta_f = xi[i] if m == j else 0 * xi[i]
            dxi_g = eta[l] if m == k else 0 * eta[l]
            deta_g = xi[k] if m == l else 0 * xi[k]
            br += np.dot(dxi_f, deta_g) - np.dot(deta_f, dxi_g)
        rhs = -S[i, l] * (k == j) + S[k, j] * (i == l)
        worst = max(worst, abs(br - rhs))
    return worst / max(1.0, max_abs(S))


def spin_cm_reduction_residual(state: SpinState, z, nu, tau=1j) -> float:
    """At Nt = 1, L - S_ii E1(z) is the Krichever L conjugated by diag(xi)."""
    if state.xi.shape[1] != 1:
        raise ValueError("the reduction needs Nt = 1")
    L, _ = spin_cm_lax(state, z, tau)
    g = np.diag(state.xi[:, 0])
    lk, _ = krichever_pair(state.q, state.p, z, nu, _fam(tau))
    red = np.linalg.solve(g, (L - nu * _fam(tau).E1(z) * np.eye(len(state.q))) @ g)
    return max_abs(red - lk) / max_abs(lk)


# -- interacting tops ---------------------------------------------------------------------


def components(mat: np.ndarray) -> dict:
    """T-basis components M_a = tr(M T_{-a}) / Nt."""
    n = mat.shape[0]
    return {a: np.trace(mat @ t_matrix(-a[0], -a[1], n)) / n for a in index_set(n)}


def _omega(a, tau, n):
    return (a[0] + a[1] * tau) / n


def phi_alpha(z, u, a, n, fam) -> complex:
    """phi_a(z, u) = exp(2 pi i a2 z / Nt) phi(z, u)."""
    return cmath.exp(TWO_PI_I * a[1] * z / n) * fam.phi(z, u)


@dataclass(frozen=True)
class TopsState:
    q: np.ndarray
    p: np.ndarray
    S: np.ndarray  # N x N x Nt x Nt, block (i, j) is S^{ij}

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=complex))
        object.__setattr__(self, "p", np.asarray(self.p, dtype=complex))
        object.__setattr__(self, "S", np.asarray(self.S, dtype=complex))
        n = len(self.q)
        if self.S.shape[:2] != (n, n) or self.S.shape[2] != self.S.shape[3]:
            raise ValueError("S must have shape (N, N, Nt, Nt)")
        if not _close_all([np.trace(self.S[i, i]) for i in range(n)]):
            raise ConstraintError("S^{ii}_0 must be equal for all i")

    @property
    def ntilde(self) -> int:
        return self.S.shape[2]

    @property
    def B(self) -> np.ndarray:
        return np.stack([self.S[i, i] for i in range(len(self.q))])

    @classmethod
    def from_rank_one(cls, q, p, xi, eta) -> "TopsState":
        """S^{ij}_{ab} = xi_i^a eta_j^b."""
        xi, eta = np.asarray(xi, dtype=complex), np.asarray(eta, dtype=complex)
        return cls(q, p, np.einsum("ia,jb->ijab", xi, eta))

    @classmethod
    def from_spin(cls, state: SpinState) -> "TopsState":
        return cls.from_rank_one(state.q, state.p, state.xi, state.eta)


def random_tops_state(n: int, ntilde: int, rng: np.random.Generator, s_ii=1.0, spread=0.4) -> TopsState:
    return TopsState.from_spin(random_spin_state(n, ntilde, rng, s_ii, spread))


def tops_hamiltonian(state: TopsState, tau=1j, kernel: str = "E2") -> complex:
    """Kinetic term, single-top terms and the trace-form interaction of the B^i alone.

    ``kernel="wp"`` replaces E2 by wp everywhere (the form read off tr L^2).
    """
    fam = _fam(tau)
    k = fam.E2 if kernel == "E2" else fam.wp
    n, nt = len(state.q), state.ntilde
    B = state.B
    alphas = index_set(nt)
    T = {a: t_matrix(*a, nt) for a in alphas}
    Tm = {a: t_matrix(-a[0], -a[1], nt) for a in alphas}
    h = 0.5 * complex(np.sum(state.p**2))
    for i in range(n):
        c = components(B[i])
        for a in alphas[1:]:
            h -= 0.5 * c[a] * np.trace(B[i] @ T[a]) / nt * k(_omega(a, tau, nt))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            x = state.q[i] - state.q[j]
            for a in alphas:
                tr = np.trace(B[i] @ T[a] @ B[j] @ Tm[a])
                h -= 0.5 * tr / nt**2 * k(_omega(a, tau, nt) - x / nt)
    return complex(h)


def tops_hamiltonian_components(state: TopsState, tau=1j, kernel: str = "E2") -> complex:
    """The same Hamiltonian from the components S^{ij}_a of every block (no trace form)."""
    fam = _fam(tau)
    k = fam.E2 if kernel == "E2" else fam.wp
    n, nt = len(state.q), state.ntilde
    comp = {(i, j): components(state.S[i, j]) for i in range(n) for j in range(n)}
    h = 0.5 * complex(np.sum(state.p**2))
    for i in range(n):
        for a in index_set(nt):
            # S_{-a} taken with the integer negative of a, i.e. tr(S T_a) / Nt
            if a != (0, 0):
                s_neg = np.trace(state.S[i, i] @ t_matrix(*a, nt)) / nt
                h -= 0.5 * comp[(i, i)][a] * s_neg * k(_omega(a, tau, nt))
            for j in range(n):
                if j != i:
                    sj = np.trace(state.S[j, i] @ t_matrix(*a, nt)) / nt
                    h -= 0.5 * comp[(i, j)][a] * sj * k(_omega(a, tau, nt) - (state.q[i] - state.q[j]) / nt)
    return complex(h)


def tops_lax(state: TopsState, z, tau=1j) -> np.ndarray:
    """The Mat_{N Nt} Lax matrix; block (i, j) is L^{ij}(z)."""
    fam = _fam(tau)
    n, nt = len(state.q), state.ntilde
    alphas = index_set(nt)
    T = {a: t_matrix(*a, nt) for a in alphas}
    L = np.zeros((n * nt, n * nt), complex)
    for i in range(n):
        for j in range(n):
            c = components(state.S[i, j])
            if i == j:
                blk = state.p[i] * np.eye(nt) + c[(0, 0)] * T[(0, 0)] * fam.E1(z)
                for a in alphas[1:]:
                    blk = blk + c[a] * T[a] * phi_alpha(z, _omega(a, tau, nt), a, nt, fam)
            else:
                u = -(state.q[i] - state.q[j]) / nt
                blk = sum(c[a] * T[a] * phi_alpha(z, _omega(a, tau, nt) + u, a, nt, fam) for a in alphas)
            L[i * nt : (i + 1) * nt, j * nt : (j + 1) * nt] = blk
    return L


@dataclass
class TraceExtraction:
    h_wp: complex  # z-independent part of tr L^2 / (2 Nt)
    c_wp: complex  # coefficient of wp(z)
    residual: float  # against tops_hamiltonian(kernel="wp") and a third z point


def tops_trace_extraction(state: TopsState, z1, z2, z3=None, tau=1j) -> TraceExtraction:
    """tr L^2 / (2 Nt) = H_wp + A E1(z) + B E1(z)^2 + C wp(z); solve for H_wp, C at two points.

    A = sum_i p_i S^{ii}_0 and B = sum_i (S^{ii}_0)^2 / 2 follow from the diagonal blocks.
    """
    fam = _fam(tau)
    n, nt = len(state.q), state.ntilde
    s0 = [np.trace(state.S[i, i]) / nt for i in range(n)]
    A = sum(state.p[i] * s0[i] for i in range(n))
    Bc = 0.5 * sum(x * x for x in s0)

    def reduced(z):
        L = tops_lax(state, z, tau)
        t = np.trace(L @ L) / (2 * nt)
        e1 = fam.E1(z)
        return t - A * e1 - Bc * e1 * e1

    y1, y2 = reduced(z1), reduced(z2)
    w1, w2 = fam.wp(z1), fam.wp(z2)
    c = (y1 - y2) / (w1 - w2)
    h = y1 - c * w1
    ref = tops_hamiltonian(state, tau, kernel="wp")
    res = abs(h - ref) / max(1.0, abs(ref))
    if z3 is not None:
        res = max(res, abs(reduced(z3) - h - c * fam.wp(z3)) / max(1.0, abs(h)))
    return TraceExtraction(complex(h), complex(c), res)


# -- classical F0 and the Fourier reduction ----------------------------------------------


def classical_F0(q, B, tau=1j) -> complex:
    """1/2 sum_{i != j} (-E2(q_ij) B^i_0 B^j_0 + sum_{g != 0} phi_g(q_ij, w_g) K_g(q_ij) B^i_g B^j_{-g}).

    K_g(x) = E1(x + w_g) - E1(x) + 2 pi i d_tau w_g.
    """
    fam = _fam(tau)
    q = np.asarray(q, dtype=complex)
    B = np.asarray(B, dtype=complex)
    n, nt = len(q), B.shape[1]
    comp = [components(B[i]) for i in range(n)]
    neg = [{a: np.trace(B[i] @ t_matrix(*a, nt)) / nt for a in index_set(nt)} for i in range(n)]
    out = 0j
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            x = q[i] - q[j]
            out += -fam.E2(x) * comp[i][(0, 0)] * comp[j][(0, 0)]
            for g in index_set(nt)[1:]:
                w = _omega(g, tau, nt)
                kg = fam.E1(x + w) - fam.E1(x) + TWO_PI_I * g[1] / nt
                out += phi_alpha(x, w, g, nt, fam) * kg * comp[i][g] * neg[j][g]
    return 0.5 * out


def fourier_sides(q, B, tau=1j) -> dict:
    """Both sides of the Fourier reduction and the intermediate kappa^2 form.

    lhs   = 1/2 sum_{i != j} sum_a tr(B^i T_a B^j T_{-a}) E2(w_a - q_ij / Nt)
    kappa = 1/2 Nt sum_{i != j} sum_{a, m} kappa_{a,m}^2 B^i_m B^j_{-m} E2(w_a + q_ij / Nt)
    rhs   = -Nt^3 classical_F0
    """
    fam = _fam(tau)
    q = np.asarray(q, dtype=complex)
    B = np.asarray(B, dtype=complex)
    n, nt = len(q), B.shape[1]
    alphas = index_set(nt)
    T = {a: t_matrix(*a, nt) for a in alphas}
    Tm = {a: t_matrix(-a[0], -a[1], nt) for a in alphas}
    comp = [components(B[i]) for i in range(n)]
    neg = [{a: np.trace(B[i] @ T[a]) / nt for a in alphas} for i in range(n)]
    lhs = 0j
    kap = 0j
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            x = q[i] - q[j]
            for a in alphas:
                w = _omega(a, tau, nt)
                lhs += np.trace(B[i] @ T[a] @ B[j] @ Tm[a]) * fam.E2(w - x / nt)
                e = fam.E2(w + x / nt)
                for m in alphas:
                    kap += kappa(a, m, nt) ** 2 * comp[i][m] * neg[j][m] * e
    return {"lhs": 0.5 * lhs, "kappa": 0.5 * nt * kap, "rhs": -(nt**3) * classical_F0(q, B, tau)}


def check_fourier_reduction(state: TopsState, tau=1j, tol: float = 1e-9) -> IdentityReport:
    s = fourier_sides(state.q, state.B, tau)
    scale = max(1.0, abs(s["lhs"]))
    report = IdentityReport("fourier_reduction", environment={"tau": complex(tau), "ntilde": state.ntilde})
    report.add("kappa_form", "tr(B T B T) via kappa^2", [abs(s["lhs"] - s["kappa"]) / scale], tol)
    report.add("fourier_reduction", "tops interaction = -Nt^3 F0_class", [abs(s["lhs"] - s["rhs"]) / scale], tol)
    return report


# -- quantization -------------------------------------------------------------------------


def quantized_B(i: int, n: int, ntilde: int, c0, s, transpose: bool = True) -> np.ndarray:
    """B^i_{ab} -> c0 delta_ab + s (E_ba - delta_ab / Nt) at site i.

    Returned as an (Nt, Nt, D, D) array of site operators, D = Nt^n.
    ``transpose=False`` uses E_ab instead of E_ba.
    """
    d = ntilde**n
    out = np.zeros((ntilde, ntilde, d, d), complex)
    eye = np.eye(d)
    for a in range(ntilde):
        for b in range(ntilde):
            e = np.zeros((ntilde, ntilde))
            if transpose:
                e[b, a] = 1.0
            else:
                e[a, b] = 1.0
            op = embed(e, (i,), n, ntilde)
            out[a, b] = s * op + ((c0 - s / ntilde) * eye if a == b else 0)
    return out


def tops_potential_operator(q, ntilde: int, c0, s, tau=1j, transpose: bool = True) -> np.ndarray:
    """Single-top and interaction terms with B^i quantized at site i, by direct assembly."""
    fam = _fam(tau)
    q = np.asarray(q, dtype=complex)
    n, nt = len(q), ntilde
    alphas = index_set(nt)
    T = {a: t_matrix(*a, nt) for a in alphas}
    Tm = {a: t_matrix(-a[0], -a[1], nt) for a in alphas}
    Bq = [quantized_B(i, n, nt, c0, s, transpose) for i in range(n)]
    d = nt**n
    H = np.zeros((d, d), complex)

    def comp(b, mat):
        # sum_ab mat_ba b_ab / Nt, i.e. tr(B mat) / Nt as a site operator
        return np.einsum("ba,abxy->xy", mat, b) / nt

    def trace_form(bi, ta, bj, tb):
        # sum_{abcd} bi_ab ta_bc bj_cd tb_da
        return np.einsum("abxy,bc,cdyz,da->xz", bi, ta, bj, tb)

    for i in range(n):
        for a in alphas[1:]:
            H -= 0.5 * comp(Bq[i], Tm[a]) @ comp(Bq[i], T[a]) * fam.E2(_omega(a, tau, nt))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            x = q[i] - q[j]
            for a in alphas:
                H -= 0.5 / nt**2 * trace_form(Bq[i], T[a], Bq[j], Tm[a]) * fam.E2(_omega(a, tau, nt) - x / nt)
    return H


def fitted_couplings(ntilde: int, nu, hbar) -> tuple[complex, complex]:
    """(c0, s) with s^2 = Nt hbar nu and Nt c0^2 = Nt^2 nu^2 + hbar nu."""
    s = cmath.sqrt(ntilde * hbar * nu)
    c0 = cmath.sqrt((ntilde**2 * nu * nu + hbar * nu) / ntilde)
    return c0, s


@dataclass
class Proposition2Result:
    off_identity: float
    const: complex
    c0: complex
    s: complex


def proposition2_difference(q, ntilde: int, nu, hbar, tau=1j, transpose: bool = True) -> Proposition2Result:
    """Quantized tops potential minus the CM potential and hbar nu F0, split into identity and rest."""
    q = np.asarray(q, dtype=complex)
    n = len(q)
    c0, s = fitted_couplings(ntilde, nu, hbar)
    tops = tops_potential_operator(q, ntilde, c0, s, tau, transpose)
    cfg = ModelConfig("A", n, ntilde=ntilde, nu=nu, tau=tau)
    st = structure(cfg)
    st.check_state(q)
    d = ntilde**n
    cm = st.potential_value(q) * np.eye(d)
    f0 = hbar * nu * st.f0_operator(q)
    diff = tops - cm - f0
    const = np.trace(diff) / d
    scale = max(1.0, max_abs(tops))
    return Proposition2Result(max_abs(diff - const * np.eye(d)) / scale, complex(const), c0, s)


def check_proposition2(n: int, ntilde: int, qs, nu, hbar, tau=1j, tol: float = 1e-9) -> IdentityReport:
    """Off-identity residual at every position set and the spread of the constant."""
    results = [proposition2_difference(q, ntilde, nu, hbar, tau) for q in qs]
    consts = [r.const for r in results]
    spread = max(abs(c - consts[0]) for c in consts)
    report = IdentityReport(
        "proposition2",
        environment={
            "n": n,
            "ntilde": ntilde,
            "nu": complex(nu),
            "hbar": complex(hbar),
            "tau": complex(tau),
            "c0": results[0].c0,
            "s": results[0].s,
            "const": consts[0],
            "coupling_relation": "s^2 = Nt hbar nu, Nt c0^2 = Nt^2 nu^2 + hbar nu",
        },
    )
    report.add("off_identity", "H_tops - H_CM - hbar nu F0 is scalar", [r.off_identity for r in results], tol)
    report.add("constant_spread", "the scalar does not depend on q", [spread / max(1.0, abs(consts[0]))], tol)
    return report


def check_tops(seed: int = 0, samples: int = 5, tol: float = 1e-9, tau=1j) -> IdentityReport:
    rng = np.random.default_rng(seed)
    report = IdentityReport("tops", environment={"seed": seed, "tau": complex(tau)})
    spin, fd, lp = [], [], []
    for _ in range(samples):
        st = random_spin_state(2, 2, rng)
        z = complex(rng.uniform(0.1, 0.4) + 1j * rng.uniform(0.1, 0.4))
        spin.append(spin_cm_residual(st, z, tau))
        fd.append(spin_flow_fd_residual(st, tau))
        lp.append(lie_poisson_residual(st))
    report.add("spin_cm_lax", "spin Calogero-Moser Lax equation", spin, 1e-8)
    report.add("spin_flow_fd", "spin flow vs finite differences", fd, 1e-6)
    report.add("lie_poisson", "rank-one realization of the Lie-Poisson bracket", lp, 1e-12)
    fr, tr, ham = [], [], []
    for _ in range(samples):
        ts = random_tops_state(2, 2, rng)
        s = fourier_sides(ts.q, ts.B, tau)
        scale = max(1.0, abs(s["lhs"]))
        fr.append(abs(s["lhs"] - s["rhs"]) / scale)
        ham.append(abs(tops_hamiltonian(ts, tau) - tops_hamiltonian_components(ts, tau)))
        tr.append(tops_trace_extraction(ts, 0.21 + 0.13j, 0.33 - 0.07j, 0.12 + 0.3j, tau).residual)
    report.add("fourier_reduction", "tops interaction = -Nt^3 F0_class", fr, tol)
    report.add("tops_hamiltonian_oracle", "trace form vs components", ham, tol)
    report.add("tops_trace_extraction", "tr L^2 coefficients", tr, tol)
    for n in (2, 3):
        qs = [rng.uniform(-0.4, 0.4, n) + 1j * rng.uniform(-0.4, 0.4, n) for _ in range(5)]
        sub = check_proposition2(n, 2, qs, 0.8, 0.3, tau, tol)
        for e in sub.entries:
            e.identity = f"proposition2_n{n}_{e.identity}"
        report.merge(sub)
        report.environment[f"proposition2_n{n}"] = sub.environment
    return report
