import numpy as np
import pytest

from rmlax import elliptic as ell
from rmlax import spin_tops as tops
from rmlax.tensor import comm, t_matrix

RNG = np.random.default_rng


def test_constraint_enforced():
    with pytest.raises(tops.ConstraintError):
        tops.SpinState([0.1, 0.3], [0, 0], np.eye(2), [[1, 0], [0, 2]])
    S = np.zeros((2, 2, 2, 2), complex)
    S[0, 0] = np.eye(2)
    with pytest.raises(tops.ConstraintError):
        tops.TopsState([0.1, 0.3], [0, 0], S)


def test_spin_cm_lax_random_state():
    for seed in range(3):
        st = tops.random_spin_state(2, 2, RNG(seed))
        assert tops.spin_cm_residual(st, 0.23 + 0.1j) < 1e-8


def test_spin_cm_free_motion():
    # xi orthogonal to every eta: S = 0 and the particles decouple
    st = tops.SpinState([0.1, 0.4], [0.3, -0.5], [[1, 0], [1, 0]], [[0, 1], [0, 2]])
    assert np.allclose(st.S, 0)
    L, M = tops.spin_cm_lax(st, 0.2 + 0.1j)
    assert np.max(np.abs(comm(L, M))) < 1e-14
    qdot, pdot, *_ = tops.spin_cm_flow(st)
    assert np.allclose(pdot, 0)


def test_spin_flow_and_lie_poisson():
    st = tops.random_spin_state(3, 2, RNG(5))
    assert tops.spin_flow_fd_residual(st) < 1e-6
    assert tops.lie_poisson_residual(st) < 1e-12


def test_tops_hamiltonian_without_spins():
    S = np.zeros((2, 2, 2, 2), complex)
    st = tops.TopsState([0.1, 0.4], [0.3, -0.5], S)
    assert tops.tops_hamiltonian(st) == pytest.approx(0.5 * (0.09 + 0.25))


def test_single_top():
    rng = RNG(1)
    B = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    st = tops.TopsState([0.2], [0.7], B[None, None])
    comp = tops.components(B)
    neg = {a: np.trace(B @ t_matrix(*a, 2)) / 2 for a in comp}
    fam = ell.EllipticFamily(1j)
    expected = 0.5 * 0.49 - 0.5 * sum(
        comp[a] * neg[a] * fam.E2(tops._omega(a, 1j, 2)) for a in comp if a != (0, 0)
    )
    assert abs(tops.tops_hamiltonian(st) - expected) < 1e-12 * abs(expected)


def test_tops_hamiltonian_two_routes():
    st = tops.random_tops_state(2, 2, RNG(2))
    a, b = tops.tops_hamiltonian(st), tops.tops_hamiltonian_components(st)
    assert abs(a - b) < 1e-12 * abs(a)


def test_tops_lax_zero_spin_is_diagonal():
    S = np.zeros((2, 2, 2, 2), complex)
    st = tops.TopsState([0.1, 0.4], [0.3, -0.5], S)
    L = tops.tops_lax(st, 0.3 + 0.1j)
    assert np.allclose(L, np.diag(np.repeat([0.3, -0.5], 2)))


def test_trace_extraction():
    st = tops.random_tops_state(2, 2, RNG(3))
    ex = tops.tops_trace_extraction(st, 0.21 + 0.1j, -0.17 + 0.23j, 0.05 - 0.31j)
    ref = tops.tops_hamiltonian(st, kernel="wp")
    assert abs(ex.h_wp - ref) < 1e-9 * abs(ref)
    assert ex.residual < 1e-9


def test_fourier_reduction_random():
    for seed in range(3):
        assert tops.check_fourier_reduction(tops.random_tops_state(2, 2, RNG(seed))).passed


def test_fourier_reduction_identity_blocks():
    q = [0.1 + 0.05j, 0.37]
    B = np.stack([np.eye(2), np.eye(2)]).astype(complex)
    s = tops.fourier_sides(q, B)
    assert abs(s["lhs"] - s["rhs"]) < 1e-12 * abs(s["lhs"])
    # only the scalar channel survives: -Nt^3 * (1/2) sum_{i != j} (-E2(q_ij))
    x = q[0] - q[1]
    expected = 8 * 0.5 * 2 * ell.eisenstein_E2(x, 1j)
    assert abs(s["rhs"] - expected) < 1e-12 * abs(expected)


@pytest.mark.parametrize("n,nt", [(2, 1), (2, 2), (3, 2)])
def test_proposition2(n, nt):
    rng = RNG(7)
    qs = [rng.uniform(-0.4, 0.4, n) + 1j * rng.uniform(-0.4, 0.4, n) for _ in range(5)]
    rep = tops.check_proposition2(n, nt, qs, nu=0.8, hbar=0.3)
    assert rep.passed, rep.summary_lines()
    assert np.isfinite(rep.environment["const"])


def test_check_tops_suite():
    assert tops.check_tops(samples=2).passed
