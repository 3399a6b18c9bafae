import numpy as np
import pytest

from rmlax import laxpairs as lp
from rmlax import quantum as qm
from rmlax.elliptic import PoleError

Z = 0.21 + 0.1j
Q2 = [0.13 + 0.02j, 0.37 - 0.04j]
Q3 = [0.1, 0.3 + 0.05j, -0.2j]


def _scalar(fn, grad=None):
    def ev(q):
        return qm.Jet(np.array([[fn(q)]], complex), {0: np.array([[grad(q)]], complex)} if grad else {})

    return qm.CoeffField(ev)


def test_leibniz_derivative_times_function():
    d = qm.DiffOp({(0,): qm.CoeffField.constant([[1.0]])}, dim=1)
    f = qm.DiffOp({(): _scalar(lambda q: q[0] ** 2, lambda q: 2 * q[0])}, dim=1)
    c = qm.diffop_commutator(d, f, [0.7])
    assert abs(c[()][0, 0] - 1.4) < 1e-15
    assert abs(c[(0,)][0, 0]) < 1e-15


def test_leibniz_second_order():
    d2 = qm.DiffOp({(0, 0): qm.CoeffField.constant([[1.0]])}, dim=1)

    def ev(q):
        return qm.Jet(np.array([[q[0] ** 3]]), {0: np.array([[3 * q[0] ** 2]])}, {(0, 0): np.array([[6 * q[0]]])})

    f = qm.DiffOp({(): qm.CoeffField(ev)}, dim=1)
    c = qm.compose_at(d2, f, [0.5])
    # d^2 (f .) = f'' + 2 f' d + f d^2
    assert c[()][0, 0] == pytest.approx(3.0)
    assert c[(0,)][0, 0] == pytest.approx(1.5)
    assert c[(0, 0)][0, 0] == pytest.approx(0.125)


def test_missing_derivative():
    d2 = qm.DiffOp({(0, 0): qm.CoeffField.constant([[1.0]])}, dim=1)
    f = qm.DiffOp({(): qm.CoeffField(lambda q: qm.Jet(np.eye(1), {0: np.eye(1)}, None))}, dim=1)
    with pytest.raises(qm.MissingDerivative):
        qm.compose_at(d2, f, [0.1])


@pytest.mark.parametrize(
    "cfg,q",
    [
        (lp.ModelConfig("A", 2, ntilde=2), Q2),
        (lp.ModelConfig("A", 3, ntilde=2), Q3),
        (lp.ModelConfig("D", 2, ntilde=2), Q2),
        (lp.ModelConfig("D", 3, ntilde=2), Q3),
        (lp.ModelConfig("A", 3, ntilde=1, tau=0.8j), Q3),
    ],
)
@pytest.mark.parametrize("hbar", [0.1, 1.0, 2.0])
def test_quantum_lax_holds(cfg, q, hbar):
    r = qm.quantum_lax_residual(cfg, q, Z, hbar)
    assert r.residual < 1e-12
    assert r.higher == 0 or r.higher < 1e-12


@pytest.mark.parametrize("cfg", [lp.ModelConfig("C", 2, ntilde=2), lp.ModelConfig("BC", 2, ntilde=2)])
def test_quantum_lax_fails_for_C_and_BC(cfg):
    for hbar in (0.1, 1.0, 2.0):
        assert qm.quantum_lax_residual(cfg, Q2, Z, hbar).residual > 1e-3
    pd = qm.check_pd_commutation(cfg, Q2)
    assert pd.residual > 1e-3 and pd.rows


@pytest.mark.parametrize("cfg", [lp.ModelConfig("A", 3, ntilde=2), lp.ModelConfig("D", 2, ntilde=2), lp.ModelConfig("B", 2, ntilde=2)])
def test_pd_commutation_vanishes(cfg):
    q = Q3 if cfg.n == 3 else Q2
    pd = qm.check_pd_commutation(cfg, q)
    assert pd.residual < 1e-12 and not pd.rows


def test_B_residual_is_a_pure_hbar_squared_anomaly():
    # classical B closes, and the quantum defect is one hbar^2 term measured against
    # hbar-linear coefficients, so the relative order-0 residual is linear in hbar
    cfg = lp.ModelConfig("B", 2, ntilde=2)
    assert lp.lax_residual(cfg, lp.PhasePoint(Q2, [0.4, -0.2]), Z) < 1e-12
    r = {h: qm.quantum_lax_residual(cfg, Q2, Z, h) for h in (0.1, 1.0, 2.0)}
    assert all(x.order1 < 1e-12 for x in r.values())
    assert r[1.0].order0 > 1e-3
    assert r[2.0].order0 / r[1.0].order0 == pytest.approx(2.0, rel=1e-9)
    assert r[0.1].order0 / r[1.0].order0 == pytest.approx(0.1, rel=1e-9)


def test_split_form_is_equivalent():
    cfg = lp.ModelConfig("A", 3, ntilde=2)
    a = qm.quantum_lax_residual(cfg, Q3, Z, 0.5, split=True)
    assert a.residual < 1e-12
    assert qm.classical_split_residual(cfg, lp.PhasePoint(Q3, [0.2, 0.1, -0.3]), Z) < 1e-12


def test_sum_to_zero():
    q = [0.1, 0.4, -0.3]
    assert qm.check_sum_to_zero("rational", q, Z).residual < 1e-12
    assert qm.check_sum_to_zero("trigonometric", q, Z).residual < 1e-12
    assert qm.check_sum_to_zero("elliptic", q, Z).residual > 1e-3


def test_scalar_f0_constant():
    q = [0.1, 0.3, -0.25]
    assert qm.scalar_f0_residual(3, q, 1j) < 1e-12
    assert qm.scalar_f0_residual(3, q, 1j, divisor=3) > 1e-2
    assert qm.coupling_shift_residual(3, q, 1j, 0.7, 0.3) < 1e-12


def test_spin_exchange_pair():
    cfg = lp.ModelConfig("A", 3, ntilde=2, family="spin_exchange")
    for hbar in (0.1, 2.0):
        assert qm.quantum_lax_residual(cfg, Q3, Z, hbar).residual < 1e-12
    pair = qm.spin_permutation_lax(3, 2, 1.0, lp.PhasePoint(Q3, [0.1, 0.2, 0.3]), Z)
    L = lp.build_L(cfg, lp.PhasePoint(Q3, [0.1, 0.2, 0.3]), Z)
    assert np.max(np.abs(pair.L - L.data)) < 1e-12


def test_pole_guard_in_quantum_check():
    with pytest.raises(PoleError):
        qm.quantum_lax_residual(lp.ModelConfig("A", 2, ntilde=2), [0.2, 0.2], Z, 1.0)


def test_check_quantum_report():
    rep = qm.check_quantum(samples=1)
    failing = {e.identity for e in rep.failures()}
    assert failing == {"quantum_lax_B2_nt2", "quantum_lax_B3_nt2", "scalar_f0_printed_constant"}
