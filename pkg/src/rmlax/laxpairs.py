"""R-matrix-valued Lax pairs for the A, B, C, D and BC root systems.

Every pair is described as data: a list of R-terms (an R-matrix placed in an
auxiliary block, acting on two sites, with an argument that is an integer
combination of the positions), diagonal terms of M, momentum rows and the
potential. L, M, their q-derivatives, H and the equations of motion are all
evaluated from that one description.

Indices are 0-based. For the full-site schemes (C, BC) particle a owns the
sites a and a+N, with positions u_a = q_a, u_{a+N} = -q_a and, for BC, an
extra site 2N with u = 0; every block is R_st(u_s - u_t). The half-site
schemes (D, B) use site a for particle a and, for B, an extra site N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from rmlax.elliptic import EllipticFamily, PoleError
from rmlax.report import IdentityReport
from rmlax.rmatrix import RMatrixFamily, make_family
from rmlax.tensor import SiteOperator, embed_pair, max_abs

ROOT_SYSTEMS = ("A", "B", "C", "D", "BC", "ScalarDP")
SCHEMES = {"A": "N", "D": "HalfSites", "B": "HalfSites", "C": "FullSites", "BC": "FullSites", "ScalarDP": "Scalar"}
COUPLING_TOL = 1e-12


class InadmissibleConfig(ValueError):
    """The couplings, rank or scheme violate the admissibility table."""


class DegenerateState(PoleError):
    """A position combination used by the Lax pair sits on a pole."""


# -- admissibility ----------------------------------------------------------------------

ADMISSIBILITY = {
    "A": {"group": "GL(N)", "sites": "N", "ntilde": "any", "g": "-", "mu": "-"},
    "D": {"group": "SO(2N)", "sites": "N", "ntilde": "2", "g": "0", "mu": "0"},
    "B": {"group": "SO(2N+1)", "sites": "N+1", "ntilde": "2", "g": "±√2ν", "mu": "0"},
    "C": {"group": "Sp(2N)", "sites": "2N", "ntilde": "any", "g": "0", "mu": "ν"},
    "BC": {"group": "BC(N)", "sites": "2N+1", "ntilde": "any", "g": "±ν", "mu": "ν"},
    "ScalarDP": {"group": "BC(N), scalar", "sites": "-", "ntilde": "1", "g": "g(g²-2ν²+νμ)=0", "mu": "free"},
}

TABLE_COLUMNS = ("N", "N+1", "2N", "2N+1")
TABLE_ROWS = ("D", "B", "C", "BC")


def admissibility_table() -> dict:
    return {k: dict(v) for k, v in ADMISSIBILITY.items()}


def lookup(root_system: str) -> dict:
    try:
        return dict(ADMISSIBILITY[root_system])
    except KeyError:
        raise InadmissibleConfig(f"unknown root system {root_system!r}") from None


def format_table() -> str:
    """Text rendering laid out like the published table: groups by number of sites."""
    width = 22
    lines = [" " * 10 + "|" + "|".join(c.center(width) for c in TABLE_COLUMNS) + "|"]
    for key in TABLE_ROWS:
        row = ADMISSIBILITY[key]
        cells_c, cells_n = [], []
        for col in TABLE_COLUMNS:
            if col == row["sites"]:
                g = "g = 0" if row["g"] == "0" else f"g = {row['g']}"
                mu = "μ = 0" if row["mu"] == "0" else f"μ = {row['mu']}"
                cells_c.append(f"{g}, {mu}".center(width))
                cells_n.append(f"Ñ = {row['ntilde']}".center(width))
            else:
                cells_c.append(" " * width)
                cells_n.append(" " * width)
        lines.append(" " * 10 + "|" + "|".join(cells_c) + "|")
        lines.append(row["group"].ljust(10) + "|" + "|".join(cells_n) + "|")
    return "\n".join(lines)


# -- configuration and state ---------------------------------------------------------------


@dataclass(frozen=True)
class ModelConfig:
    root_system: str
    n: int
    ntilde: int = 1
    nu: complex = 1.0
    mu: complex | None = None
    g: complex | None = None
    tau: complex = 1j
    family: str = "belavin"
    scheme: str | None = None
    override: bool = False
    d0_subtract: bool = False

    def __post_init__(self):
        if self.root_system not in ROOT_SYSTEMS:
            raise InadmissibleConfig(f"unknown root system {self.root_system!r}")
        if self.n < 1 or (self.root_system == "A" and self.n < 2):
            raise InadmissibleConfig("too few particles")
        nu = complex(self.nu)
        object.__setattr__(self, "nu", nu)
        defaults = {
            "A": (0, 0),
            "D": (0, 0),
            "B": (0, math.sqrt(2) * nu),
            "C": (nu, 0),
            "BC": (nu, nu),
            "ScalarDP": (nu, nu),
        }[self.root_system]
        object.__setattr__(self, "mu", complex(defaults[0] if self.mu is None else self.mu))
        object.__setattr__(self, "g", complex(defaults[1] if self.g is None else self.g))
        expected = SCHEMES[self.root_system]
        if self.scheme is None:
            object.__setattr__(self, "scheme", expected)
        if self.root_system == "ScalarDP" and self.ntilde != 1:
            raise InadmissibleConfig("ScalarDP is the scalar pair: ntilde must be 1")
        if self.root_system in ("D", "B") and abs(self.mu) > 0:
            # no half-site block can carry R_aa(2 q_a)
            raise InadmissibleConfig(f"{self.root_system}: mu must be 0 with one site per particle")
        if not self.override:
            for problem in self.violations():
                raise InadmissibleConfig(problem)

    def violations(self) -> list[str]:
        out = []
        rs, nu, mu, g = self.root_system, self.nu, self.mu, self.g

        def close(a, b):
            return abs(a - b) <= COUPLING_TOL * max(1.0, abs(a), abs(b))

        if self.scheme != SCHEMES[rs]:
            out.append(f"{rs}: scheme must be {SCHEMES[rs]}, got {self.scheme}")
        if rs in ("D", "B") and self.ntilde != 2:
            out.append(f"{rs}: requires ntilde = 2 (condition RR), got {self.ntilde}")
        if rs == "D" and not close(g, 0):
            out.append("D: requires g = 0")
        if rs == "B" and not close(g * g, 2 * nu * nu):
            out.append("B: requires g = ±sqrt(2) nu")
        if rs in ("C", "BC") and not close(mu, nu):
            out.append(f"{rs}: requires mu = nu")
        if rs == "C" and not close(g, 0):
            out.append("C: requires g = 0")
        if rs == "BC" and not (close(g, nu) or close(g, -nu)):
            out.append("BC: requires g = ±nu")
        if rs == "ScalarDP" and not close(g * (g * g - 2 * nu * nu + nu * mu), 0):
            out.append("ScalarDP: requires g (g^2 - 2 nu^2 + nu mu) = 0")
        if self.family == "xxz" and self.ntilde != 2:
            out.append("the XXZ R-matrix has ntilde = 2")
        if self.family in ("spin_exchange", "permutation") and rs != "A":
            out.append("the spin-exchange pair exists for A only")
        return out

    @property
    def admissible(self) -> bool:
        return not self.violations()

    def with_(self, **kw) -> "ModelConfig":
        return replace(self, **kw)

    @cached_property
    def rfamily(self) -> RMatrixFamily:
        return make_family(self.family, self.ntilde, self.tau)

    def describe(self) -> dict:
        return {
            "root_system": self.root_system,
            "n": self.n,
            "ntilde": self.ntilde,
            "nu": self.nu,
            "mu": self.mu,
            "g": self.g,
            "tau": complex(self.tau),
            "family": self.family,
            "scheme": self.scheme,
            "override": self.override,
        }


@dataclass(frozen=True)
class PhasePoint:
    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=complex)
        p = np.asarray(self.p, dtype=complex)
        if q.shape != p.shape or q.ndim != 1:
            raise ValueError("q and p must be 1-d arrays of equal length")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)


# -- structure -----------------------------------------------------------------------------


@dataclass(frozen=True)
class RTerm:
    row: int
    col: int
    coef: complex
    s: int
    t: int
    arg: tuple


@dataclass(frozen=True)
class DiagTerm:
    row: int | None  # None: the scalar-in-aux part, added to every diagonal block
    coef: complex
    s: int
    t: int
    arg: tuple
    kind: str = "F0"  # "F0": F0_st(arg.q); "WP": wp(arg.q) times identity


@dataclass
class LaxStructure:
    config: ModelConfig
    aux_dim: int
    num_sites: int
    rterms: list[RTerm] = field(default_factory=list)
    dterms: list[DiagTerm] = field(default_factory=list)
    momenta: list[tuple[int, int, int]] = field(default_factory=list)  # (row, sign, particle)
    potential: list[tuple[complex, tuple]] = field(default_factory=list)

    @property
    def family(self) -> RMatrixFamily:
        return self.config.rfamily

    @property
    def site_dim(self) -> int:
        return self.family.ntilde**self.num_sites

    @property
    def dim(self) -> int:
        return self.aux_dim * self.site_dim

    def arguments(self) -> set:
        args = {t.arg for t in self.rterms} | {t.arg for t in self.dterms} | {a for _, a in self.potential}
        return args

    # -- evaluation helpers --

    def _x(self, arg, q):
        return complex(np.dot(arg, q))

    def _embed(self, mat, s, t):
        return embed_pair(mat, s, t, self.num_sites, self.family.ntilde)

    def _zeros(self):
        return np.zeros((self.dim, self.dim), complex)

    def _place(self, out, row, col, mat):
        d = self.site_dim
        out[row * d : (row + 1) * d, col * d : (col + 1) * d] += mat

    def _place_diag(self, out, row, mat):
        if row is None:
            for r in range(self.aux_dim):
                self._place(out, r, r, mat)
        else:
            self._place(out, row, row, mat)

    def check_state(self, q):
        fam = self.family
        for arg in self.arguments():
            if not any(arg):
                continue
            x = self._x(arg, q)
            if fam.pole_distance(x) < fam.scalar.pole_guard:
                raise DegenerateState(f"argument {arg}.q = {x:.6g} is on a pole")

    def momentum_matrix(self, b: int) -> np.ndarray:
        """d L / d p_b: the aux-diagonal sign pattern of particle b, times the identity."""
        out = self._zeros()
        eye = np.eye(self.site_dim)
        for row, sign, particle in self.momenta:
            if particle == b:
                self._place(out, row, row, sign * eye)
        return out

    def _diag_value(self, term, q, order=0):
        """Value (order 0) or q-derivative along the term argument (order 1)."""
        x = self._x(term.arg, q)
        fam = self.family
        if term.kind == "WP":
            val = fam.wp(x) if order == 0 else fam.wp_prime(x)
            return val * np.eye(self.site_dim)
        mat = fam.f0(x) if order == 0 else fam.f0_prime(x)
        return self._embed(mat, term.s, term.t)

    def evaluate(self, state: PhasePoint, z, need=("L", "M")) -> dict:
        """Assemble the requested pieces.

        need may contain: "L", "M", "Ldot" (with the Hamiltonian flow),
        "jets" (q-derivatives for the quantum check: C0 is L at p = 0 and
        hessC0 is keyed by (b, c) with b <= c).
        """
        q, p = state.q, state.p
        self.check_state(q)
        n = self.config.n
        out = {}
        L, M = self._zeros(), self._zeros()
        want_jets = "jets" in need
        want_dot = "Ldot" in need
        if want_jets:
            dC = [self._zeros() for _ in range(n)]
            hC = {}
            dM = [self._zeros() for _ in range(n)]
        if want_dot:
            qdot, pdot = self.eom(state)
            Ldot = self._zeros()
        eye = np.eye(self.site_dim)
        for row, sign, b in self.momenta:
            self._place(L, row, row, sign * p[b] * eye)
        for t in self.rterms:
            x = self._x(t.arg, q)
            ev = self.family.evaluate(z, x)
            R = t.coef * self._embed(ev.value, t.s, t.t)
            F = t.coef * self._embed(ev.d_q, t.s, t.t)
            self._place(L, t.row, t.col, R)
            self._place(M, t.row, t.col, F)
            if want_dot:
                self._place(Ldot, t.row, t.col, complex(np.dot(t.arg, qdot)) * F)
            if want_jets:
                F2 = t.coef * self._embed(ev.d2_q, t.s, t.t)
                for b, kb in enumerate(t.arg):
                    if kb:
                        self._place(dC[b], t.row, t.col, kb * F)
                        self._place(dM[b], t.row, t.col, kb * F2)
                        for c in range(b, n):
                            if t.arg[c]:
                                h = hC.setdefault((b, c), self._zeros())
                                self._place(h, t.row, t.col, kb * t.arg[c] * F2)
        for t in self.dterms:
            self._place_diag(M, t.row, t.coef * self._diag_value(t, q))
            if want_jets and any(t.arg):
                d1 = t.coef * self._diag_value(t, q, order=1)
                for b, kb in enumerate(t.arg):
                    if kb:
                        self._place_diag(dM[b], t.row, kb * d1)
        if want_dot:
            for b in range(n):
                Ldot += pdot[b] * self.momentum_matrix(b)
            out["Ldot"] = Ldot
        if want_jets:
            C0 = L.copy()
            for row, sign, b in self.momenta:
                self._place(C0, row, row, -sign * p[b] * eye)
            out.update(C0=C0, dC0=dC, hessC0=hC, dM=dM, D=[self.momentum_matrix(b) for b in range(n)])
        out["L"], out["M"] = L, M
        return out

    # -- Hamiltonian --

    def potential_value(self, q) -> complex:
        return sum(c * self.family.wp(self._x(a, q)) for c, a in self.potential)

    def potential_grad(self, q) -> np.ndarray:
        g = np.zeros(self.config.n, complex)
        for c, a in self.potential:
            w = self.family.wp_prime(self._x(a, q))
            g += c * w * np.asarray(a)
        return g

    def hamiltonian(self, state: PhasePoint) -> complex:
        return 0.5 * complex(np.sum(state.p**2)) + self.potential_value(state.q)

    def eom(self, state: PhasePoint):
        return state.p.copy(), -self.potential_grad(state.q)

    def diagonal_jet(self, q, scalar_only=False):
        """The aux-diagonal part of M and its gradient in q.

        With ``scalar_only`` just the part shared by every diagonal block
        (nu F0), returned as a site operator. The third entry is the largest
        single-term gradient, a scale for cancellations.
        """
        n = self.config.n
        size = self.site_dim if scalar_only else self.dim
        val = np.zeros((size, size), complex)
        grad = [np.zeros((size, size), complex) for _ in range(n)]
        term_scale = 0.0
        for t in self.dterms:
            if scalar_only and t.row is not None:
                continue
            v = t.coef * self._diag_value(t, q)
            d1 = t.coef * self._diag_value(t, q, order=1) if any(t.arg) else None
            if d1 is not None:
                term_scale = max(term_scale, max_abs(d1) * max(abs(k) for k in t.arg))
            if scalar_only:
                val += v
            else:
                self._place_diag(val, t.row, v)
            for b, kb in enumerate(t.arg):
                if kb:
                    if scalar_only:
                        grad[b] += kb * d1
                    else:
                        self._place_diag(grad[b], t.row, kb * d1)
        return val, grad, term_scale

    def f0_operator(self, q) -> np.ndarray:
        """The site-space operator F0 (scalar in aux), i.e. the 'None' diagonal terms over nu."""
        return self.diagonal_jet(q, scalar_only=True)[0] / self.config.nu

    def hamiltonian_terms(self) -> list[dict]:
        """The potential as a list of (coefficient, argument) pairs, for reports."""
        return [{"coef": c, "arg": list(a)} for c, a in self.potential]


def _unit(n, i, sign=1):
    v = [0] * n
    v[i] = sign
    return v


def _vec(*vs):
    return tuple(int(sum(x)) for x in zip(*vs))


def _structure_A(cfg: ModelConfig) -> LaxStructure:
    n, nu = cfg.n, cfg.nu
    k = cfg.rfamily.unitarity_factor
    st = LaxStructure(cfg, n, n)
    e = [_unit(n, i) for i in range(n)]
    neg = lambda v: [-x for x in v]  # noqa: E731
    for i in range(n):
        st.momenta.append((i, 1, i))
        for j in range(n):
            if i == j:
                continue
            arg = _vec(e[i], neg(e[j]))
            st.rterms.append(RTerm(i, j, nu, i, j, arg))
            st.dterms.append(DiagTerm(i, -nu, i, j, arg))
            if i > j:
                st.dterms.append(DiagTerm(None, nu, i, j, arg))
            if i < j:
                st.potential.append((-k * nu * nu, arg))
    return st


def _bcd_potential(st: LaxStructure, cfg: ModelConfig, mu2_half=True):
    n, nt = cfg.n, cfg.ntilde
    nu, mu, g = cfg.nu, cfg.mu, cfg.g
    k = nt * nt
    for a in range(n):
        for b in range(a + 1, n):
            st.potential.append((-k * nu * nu, _vec(_unit(n, a), _unit(n, b, -1))))
            st.potential.append((-k * nu * nu, _vec(_unit(n, a), _unit(n, b))))
        if mu != 0:
            st.potential.append((-k * mu * mu / (2 if mu2_half else 1), tuple(2 * x for x in _unit(n, a))))
        if g != 0:
            st.potential.append((-k * g * g, tuple(_unit(n, a))))


def _structure_full(cfg: ModelConfig) -> LaxStructure:
    """C, BC and the scalar pair: the u-reduction of the gl(2N) / gl(2N+1) pair."""
    n, nu, mu, g = cfg.n, cfg.nu, cfg.mu, cfg.g
    scalar = cfg.root_system == "ScalarDP"
    has_extra = cfg.root_system == "BC" or (scalar and not (cfg.d0_subtract and g == 0))
    size = 2 * n + (1 if has_extra else 0)
    extra = 2 * n if has_extra else None
    st = LaxStructure(cfg, size, 2 if scalar else size)

    def u(s):
        if s == extra:
            return [0] * n
        return _unit(n, s % n, 1 if s < n else -1)

    def arg(s, t):
        return _vec(u(s), [-x for x in u(t)])

    def weight(s, t):
        if extra in (s, t):
            return g / nu
        if abs(s - t) == n:
            return mu / nu
        return 1.0

    def sites(s, t):
        return (0, 1) if scalar else (s, t)

    for a in range(n):
        st.momenta += [(a, 1, a), (a + n, -1, a)]
    for s in range(size):
        for t in range(size):
            if s == t:
                continue
            w = weight(s, t)
            if w == 0:
                continue
            st.rterms.append(RTerm(s, t, nu * w, *sites(s, t), arg(s, t)))

    if scalar:
        _scalar_dp_diagonal(st, cfg, extra)
    else:
        for s in range(size):
            for t in range(size):
                if s == t:
                    continue
                w = weight(s, t)
                if s == extra:
                    x = 1.0
                elif t == extra:
                    x = w * w
                else:
                    x = w
                if x != 0:
                    st.dterms.append(DiagTerm(s, -nu * x, s, t, arg(s, t)))
                if extra in (s, t):
                    if t == extra:
                        st.dterms.append(DiagTerm(None, nu, s, t, arg(s, t)))
                else:
                    y = mu / nu if abs(s - t) == n else 1.0
                    if y != 0:
                        st.dterms.append(DiagTerm(None, 0.5 * nu * y, s, t, arg(s, t)))
    _bcd_potential(st, cfg)
    return st


def _scalar_dp_diagonal(st: LaxStructure, cfg: ModelConfig, extra):
    n, nu, mu, g = cfg.n, cfg.nu, cfg.mu, cfg.g
    for a in range(n):
        terms = []
        if g != 0:
            terms.append((g * g / nu, tuple(_unit(n, a))))
        if mu != 0:
            terms.append((mu, tuple(2 * x for x in _unit(n, a))))
        for b in range(n):
            if b != a:
                terms.append((nu, _vec(_unit(n, a), _unit(n, b, -1))))
                terms.append((nu, _vec(_unit(n, a), _unit(n, b))))
        for row in (a, a + n):
            for c, ar in terms:
                st.dterms.append(DiagTerm(row, c, 0, 1, ar, kind="WP"))
    d0 = [(2 * nu, tuple(_unit(n, c))) for c in range(n)]
    if extra is not None:
        for c, ar in d0:
            st.dterms.append(DiagTerm(extra, c, 0, 1, ar, kind="WP"))
    if cfg.d0_subtract:
        for c, ar in d0:
            st.dterms.append(DiagTerm(None, -c, 0, 1, ar, kind="WP"))


def _structure_half(cfg: ModelConfig) -> LaxStructure:
    """D and B with one site per particle (plus site N for B)."""
    n, nu, g = cfg.n, cfg.nu, cfg.g
    is_b = cfg.root_system == "B"
    st = LaxStructure(cfg, 2 * n + (1 if is_b else 0), n + (1 if is_b else 0))
    e = lambda i, s=1: _unit(n, i, s)  # noqa: E731
    for a in range(n):
        st.momenta += [(a, 1, a), (a + n, -1, a)]
        for b in range(n):
            if a == b:
                continue
            st.rterms += [
                RTerm(a, b, nu, a, b, _vec(e(a), e(b, -1))),
                RTerm(a + n, b + n, nu, a, b, _vec(e(a, -1), e(b))),
                RTerm(a, b + n, nu, a, b, _vec(e(a), e(b))),
                RTerm(a + n, b, nu, a, b, _vec(e(a, -1), e(b, -1))),
            ]
            for row in (a, a + n):
                st.dterms.append(DiagTerm(row, -nu, a, b, _vec(e(a), e(b, -1))))
                st.dterms.append(DiagTerm(row, -nu, a, b, _vec(e(a), e(b))))
            st.dterms.append(DiagTerm(None, 0.5 * nu, a, b, _vec(e(a), e(b, -1))))
            st.dterms.append(DiagTerm(None, 0.5 * nu, a, b, _vec(e(a), e(b))))
    if is_b:
        x = 2 * n
        for a in range(n):
            st.rterms += [
                RTerm(a, x, g, a, n, tuple(e(a))),
                RTerm(a + n, x, g, a, n, tuple(e(a, -1))),
                RTerm(x, a, g, n, a, tuple(e(a, -1))),
                RTerm(x, a + n, g, n, a, tuple(e(a))),
            ]
            for row in (a, a + n):
                st.dterms.append(DiagTerm(row, -g * g / nu, a, n, tuple(e(a))))
            st.dterms.append(DiagTerm(x, -g * g / nu, a, n, tuple(e(a))))
            st.dterms.append(DiagTerm(None, g * g / nu, a, n, tuple(e(a))))
    _bcd_potential(st, cfg)
    return st


_BUILDERS = {
    "A": _structure_A,
    "C": _structure_full,
    "BC": _structure_full,
    "ScalarDP": _structure_full,
    "D": _structure_half,
    "B": _structure_half,
}

_STRUCTURES: dict = {}


def structure(config: ModelConfig) -> LaxStructure:
    key = config
    if key not in _STRUCTURES:
        _STRUCTURES[key] = _BUILDERS[config.root_system](config)
    return _STRUCTURES[key]


def _as_state(state) -> PhasePoint:
    if isinstance(state, PhasePoint):
        return state
    q, p = state
    return PhasePoint(q, p)


def _wrap(config, st, data):
    return SiteOperator(st.aux_dim, config.ntilde, st.num_sites, data)


def build_L(config: ModelConfig, state, z) -> SiteOperator:
    st = structure(config)
    return _wrap(config, st, st.evaluate(_as_state(state), z, need=("L",))["L"])


def build_M(config: ModelConfig, state, z) -> SiteOperator:
    st = structure(config)
    return _wrap(config, st, st.evaluate(_as_state(state), z, need=("M",))["M"])


def build_pair(config: ModelConfig, state, z) -> tuple[SiteOperator, SiteOperator]:
    st = structure(config)
    ev = st.evaluate(_as_state(state), z)
    return _wrap(config, st, ev["L"]), _wrap(config, st, ev["M"])


def hamiltonian(config: ModelConfig, state) -> complex:
    return structure(config).hamiltonian(_as_state(state))


def eom(config: ModelConfig, state):
    return structure(config).eom(_as_state(state))


def lax_residual(config: ModelConfig, state, z) -> float:
    """max |Ldot - [L, M]| relative to the largest of |Ldot|, |LM|, |ML|."""
    st = structure(config)
    ev = st.evaluate(_as_state(state), z, need=("L", "M", "Ldot"))
    L, M, Ld = ev["L"], ev["M"], ev["Ldot"]
    lm, ml = L @ M, M @ L
    scale = max(max_abs(Ld), max_abs(lm), max_abs(ml))
    res = max_abs(Ld - lm + ml)
    return res / scale if scale > 0 else res


def random_state(config: ModelConfig, rng: np.random.Generator, spread: float = 0.4, max_tries: int = 200):
    """A pole-clear random phase point for the config."""
    st = structure(config)
    n = config.n
    for _ in range(max_tries):
        q = rng.uniform(-spread, spread, n) + 1j * rng.uniform(-spread, spread, n)
        p = rng.normal(size=n) + 1j * rng.normal(size=n)
        try:
            st.check_state(q)
            _check_clear(st, q)
        except PoleError:
            continue
        return PhasePoint(q, p)
    raise DegenerateState("could not draw a pole-clear state")


def _check_clear(st: LaxStructure, q, margin: float = 0.05):
    fam = st.family
    for arg in st.arguments():
        if any(arg) and fam.pole_distance(complex(np.dot(arg, q))) < margin:
            raise DegenerateState("too close to a pole for sampling")


def krichever_pair(q, p, z, nu, scalar) -> tuple[np.ndarray, np.ndarray]:
    """The scalar N x N pair with phi and f, d_i = sum_k E2(q_ik)."""
    q = np.asarray(q, complex)
    n = len(q)
    L = np.diag(np.asarray(p, complex))
    M = np.zeros((n, n), complex)
    for i in range(n):
        for j in range(n):
            if i != j:
                L[i, j] = nu * scalar.phi(z, q[i] - q[j])
                M[i, j] = nu * scalar.f(z, q[i] - q[j])
        M[i, i] = nu * sum(scalar.E2(q[i] - q[k]) for k in range(n) if k != i)
    return L, M


def hamiltonian_formula(config: ModelConfig) -> str:
    """Human-readable form of the Hamiltonian used for the equations of motion."""
    if config.root_system == "A":
        return "H = 1/2 sum p_i^2 - Nt^2 nu^2 sum_{i<j} wp(q_i - q_j)"
    return (
        "H = 1/2 sum p_a^2 - Nt^2 [ nu^2 sum_{a<b} (wp(q_a - q_b) + wp(q_a + q_b))"
        " + mu^2/2 sum wp(2 q_a) + g^2 sum wp(q_a) ]"
    )


# -- verification suites -------------------------------------------------------------------


def _z_draw(rng) -> complex:
    return complex(rng.uniform(0.08, 0.42) + 1j * rng.uniform(0.08, 0.42))


def _samples(config: ModelConfig, rng, samples: int, fn):
    """fn(state, z) over ``samples`` random pole-clear points; returns (values, resampled)."""
    out, resampled = [], 0
    while len(out) < samples:
        if resampled > 50 * samples:
            raise DegenerateState("too many pole hits while sampling")
        try:
            out.append(fn(random_state(config, rng), _z_draw(rng)))
        except PoleError:
            resampled += 1
    return out, resampled


def config_label(config: ModelConfig) -> str:
    parts = [f"{config.root_system}{config.n}", f"nt{config.ntilde}"]
    if config.family != "belavin":
        parts.append(config.family)
    if config.root_system in ("B", "BC", "ScalarDP"):
        parts.append(f"g{_fmt(config.g / config.nu)}nu")
    if config.root_system == "ScalarDP":
        parts.append(f"mu{_fmt(config.mu / config.nu)}nu")
    return "_".join(parts)


def _fmt(x: complex) -> str:
    x = complex(x)
    v = x.real if abs(x.imag) < 1e-12 else x
    return f"{v:.4g}"


def check_lax(config: ModelConfig, seed: int = 0, samples: int = 20, tol: float = 1e-8, expect: str | None = None) -> IdentityReport:
    """Lax residual at random (state, z). ``expect`` defaults to the admissibility verdict."""
    rng = np.random.default_rng(seed)
    expect = expect or ("pass" if config.admissible else "fail")
    rep = IdentityReport("lax", environment={"seed": seed, "config": config.describe()})
    res, extra = _samples(config, rng, samples, lambda s, z: lax_residual(config, s, z))
    rep.resampled += extra
    t = tol if expect == "pass" else max(tol, 1e-3)
    tag = "Lax equation" if config.admissible else "Lax equation outside the admissible couplings"
    rep.add(f"lax_{config_label(config)}", tag, res, t, expect=expect, hamiltonian=hamiltonian_formula(config))
    return rep


def krichever_reduction_residual(n: int, state, z, tau=1j) -> float:
    """Nt = 1 A pair against the scalar pair: L exactly, M up to the scalar nu F0."""
    cfg = ModelConfig("A", n, ntilde=1, tau=tau, nu=1.0)
    st = structure(cfg)
    state = _as_state(state)
    ev = st.evaluate(state, z, need=("L", "M"))
    Lk, Mk = krichever_pair(state.q, state.p, z, cfg.nu, EllipticFamily(tau))
    shift = cfg.nu * st.f0_operator(state.q)[0, 0]
    dl = max_abs(ev["L"] - Lk) / max(1.0, max_abs(Lk))
    dm = max_abs(ev["M"] - shift * np.eye(n) - Mk) / max(1.0, max_abs(Mk))
    return max(dl, dm)


def lax_configs(tau=1j) -> list[tuple[ModelConfig, str]]:
    """The admissible systems and the negative controls, with their expected outcome."""
    r2 = math.sqrt(2)
    good = [ModelConfig("A", n, ntilde=nt, tau=tau) for n in (2, 3) for nt in (1, 2, 3)]
    good += [
        ModelConfig("C", 2, ntilde=2, tau=tau),
        ModelConfig("BC", 2, ntilde=2, g=1.0, tau=tau),
        ModelConfig("BC", 2, ntilde=2, g=-1.0, tau=tau),
        ModelConfig("D", 2, ntilde=2, tau=tau),
        ModelConfig("D", 3, ntilde=2, tau=tau),
        ModelConfig("B", 2, ntilde=2, g=r2, tau=tau),
        ModelConfig("B", 2, ntilde=2, g=-r2, tau=tau),
        ModelConfig("ScalarDP", 2, g=0.0, mu=0.3, tau=tau),
        ModelConfig("ScalarDP", 2, g=1.0, mu=1.0, tau=tau),
        ModelConfig("ScalarDP", 2, g=math.sqrt(1.7), mu=0.3, tau=tau),
    ]
    bad = [
        ModelConfig("D", 2, ntilde=3, tau=tau, override=True),
        ModelConfig("BC", 2, ntilde=2, g=0.7, tau=tau, override=True),
        ModelConfig("ScalarDP", 2, g=0.5, mu=0.3, tau=tau, override=True),
    ]
    return [(c, "pass") for c in good] + [(c, "fail") for c in bad]


def check_lax_suite(seed: int = 0, samples: int = 20, tol: float = 1e-8, tau=1j, negative_samples: int = 5) -> IdentityReport:
    rep = IdentityReport("lax", environment={"seed": seed, "tau": complex(tau), "samples": samples})
    for i, (cfg, expect) in enumerate(lax_configs(tau)):
        k = samples if expect == "pass" else negative_samples
        rep.merge(check_lax(cfg, seed + i, k, tol, expect))
    rng = np.random.default_rng(seed + 1000)
    red = []
    for n in (2, 3):
        cfg = ModelConfig("A", n, ntilde=1, tau=tau)
        vals, extra = _samples(cfg, rng, samples, lambda s, z, n=n: krichever_reduction_residual(n, s, z, tau))
        red += vals
        rep.resampled += extra
    rep.add("krichever_reduction", "Nt = 1 A pair equals the scalar pair", red, 1e-12)
    return rep

