import math

import numpy as np
import pytest

from rmlax import elliptic as ell
from rmlax import laxpairs as lp

SQRT2 = math.sqrt(2)


def test_lookup_examples():
    b = lp.lookup("B")
    assert (b["ntilde"], b["g"], b["mu"], b["sites"]) == ("2", "±√2ν", "0", "N+1")
    c = lp.lookup("C")
    assert (c["ntilde"], c["g"], c["mu"], c["sites"]) == ("any", "0", "ν", "2N")
    assert lp.lookup("A")["ntilde"] == "any"
    with pytest.raises(lp.InadmissibleConfig):
        lp.lookup("E8")


@pytest.mark.parametrize(
    "kw,match",
    [
        (dict(root_system="D", n=2, ntilde=3), "ntilde = 2"),
        (dict(root_system="B", n=2, ntilde=2, g=1.0), "sqrt"),
        (dict(root_system="BC", n=2, ntilde=2, g=0.7), "±nu"),
        (dict(root_system="C", n=2, ntilde=2, mu=0.5), "mu = nu"),
        (dict(root_system="ScalarDP", n=2, g=0.5, mu=0.3), "g \\(g\\^2"),
    ],
)
def test_inadmissible_configs_name_the_constraint(kw, match):
    with pytest.raises(lp.InadmissibleConfig, match=match):
        lp.ModelConfig(**kw)
    assert not lp.ModelConfig(**kw, override=True).admissible


def test_defaults_fill_admissible_couplings():
    cfg = lp.ModelConfig("B", 2, ntilde=2, nu=0.5)
    assert cfg.g == pytest.approx(SQRT2 * 0.5)
    assert lp.ModelConfig("BC", 2, ntilde=2).mu == 1


def test_aux_dims_and_sites():
    st = np.random.default_rng(0)
    for cfg, aux, sites in [
        (lp.ModelConfig("A", 3, ntilde=2), 3, 3),
        (lp.ModelConfig("C", 2, ntilde=2), 4, 4),
        (lp.ModelConfig("BC", 2, ntilde=2), 5, 5),
        (lp.ModelConfig("D", 2, ntilde=2), 4, 2),
        (lp.ModelConfig("B", 2, ntilde=2), 5, 3),
    ]:
        L = lp.build_L(cfg, lp.random_state(cfg, st), 0.2 + 0.1j)
        assert (L.aux_dim, L.num_sites, L.site_dim) == (aux, sites, 2)


def test_rank_one_A_matches_krichever_entries():
    cfg = lp.ModelConfig("A", 3, ntilde=1, tau=0.8j)
    state = lp.PhasePoint([0.1, 0.37 + 0.05j, -0.22], [0.5, -0.3, 0.2j])
    z = 0.17 + 0.09j
    L, M = lp.build_pair(cfg, state, z)
    fam = ell.EllipticFamily(0.8j)
    q = state.q
    for i in range(3):
        assert abs(L.data[i, i] - state.p[i]) < 1e-14
        for j in range(3):
            if i != j:
                assert abs(L.data[i, j] - fam.phi(z, q[i] - q[j])) < 1e-12
                assert abs(M.data[i, j] - fam.f(z, q[i] - q[j])) < 1e-12
    # d_i = sum_k E2(q_ik); M diagonal carries it up to a shift common to every row
    d = [sum(fam.E2(q[i] - q[k]) for k in range(3) if k != i) for i in range(3)]
    for i in (1, 2):
        assert abs((M.data[i, i] - M.data[0, 0]) - (d[i] - d[0])) < 1e-12


def test_krichever_reduction():
    rng = np.random.default_rng(4)
    for n in (2, 3):
        cfg = lp.ModelConfig("A", n, ntilde=1)
        state = lp.random_state(cfg, rng)
        assert lp.krichever_reduction_residual(n, state, 0.21 + 0.13j) < 1e-12


def test_D_B1_block_has_zero_diagonal():
    cfg = lp.ModelConfig("D", 2, ntilde=2)
    state = lp.random_state(cfg, np.random.default_rng(2))
    L = lp.build_L(cfg, state, 0.3 + 0.1j)
    for a in range(2):
        assert np.max(np.abs(L.block(a, a + 2))) == 0
        assert np.max(np.abs(L.block(a + 2, a))) == 0


def test_A_newton_equation_rank_one():
    cfg = lp.ModelConfig("A", 2, ntilde=1, nu=0.7)
    state = lp.PhasePoint([0.13, -0.31 + 0.1j], [0.0, 0.0])
    _, pdot = lp.eom(cfg, state)
    q12 = state.q[0] - state.q[1]
    assert abs(pdot[0] - 0.49 * ell.wp_prime(q12, 1j)) < 1e-12
    assert abs(pdot[0] + pdot[1]) < 1e-12


def test_bc_hamiltonian_direct_oracle():
    nu, nt = 0.8, 2
    cfg = lp.ModelConfig("BC", 2, ntilde=nt, nu=nu, g=-nu, mu=nu)
    q = np.array([0.13 + 0.02j, 0.41 - 0.05j])
    p = np.array([0.3, -1.1j])
    wp = lambda x: ell.wp(x, 1j)
    pot = nu**2 * (wp(q[0] - q[1]) + wp(q[0] + q[1]))
    pot += nu**2 / 2 * (wp(2 * q[0]) + wp(2 * q[1]))
    pot += nu**2 * (wp(q[0]) + wp(q[1]))
    expected = 0.5 * np.sum(p**2) - nt**2 * pot
    assert abs(lp.hamiltonian(cfg, lp.PhasePoint(q, p)) - expected) < 1e-12 * abs(expected)


def test_weyl_reflection_symmetry():
    cfg = lp.ModelConfig("BC", 2, ntilde=2)
    state = lp.PhasePoint([0.12, 0.33], [0, 0])
    flipped = lp.PhasePoint(-state.q, state.p)
    _, a = lp.eom(cfg, state)
    _, b = lp.eom(cfg, flipped)
    assert np.allclose(a, -b, atol=1e-12)


@pytest.mark.parametrize("cfg,expect", lp.lax_configs(), ids=lambda v: lp.config_label(v) if isinstance(v, lp.ModelConfig) else v)
def test_lax_configs(cfg, expect):
    rep = lp.check_lax(cfg, seed=1, samples=3, expect=expect)
    assert rep.passed, rep.summary_lines()


def test_negative_controls_are_far_from_zero():
    for cfg in (
        lp.ModelConfig("D", 2, ntilde=3, override=True),
        lp.ModelConfig("BC", 2, ntilde=2, g=0.7, override=True),
        lp.ModelConfig("ScalarDP", 2, g=0.5, mu=0.3, override=True),
    ):
        rep = lp.check_lax(cfg, seed=0, samples=5, expect="fail")
        e = rep.entries[0]
        assert e.min_residual > 1e-3, rep.summary_lines()


def test_degenerate_state_rejected():
    cfg = lp.ModelConfig("A", 2, ntilde=2)
    with pytest.raises(ell.PoleError):
        lp.lax_residual(cfg, lp.PhasePoint([0.2, 0.2], [0, 0]), 0.3j)


def test_table_layout():
    text = lp.format_table()
    assert "g = ±√2ν, μ = 0" in text and "SO(2N+1)" in text
