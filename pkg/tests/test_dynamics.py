import csv
import json

import numpy as np
import pytest

from rmlax import dynamics as dyn
from rmlax.laxpairs import ModelConfig, PhasePoint


def test_stationary_point_stays_put():
    cfg, st = dyn.stationary_run()
    traj = dyn.integrate(cfg, st, 0.2, 0.01)
    assert np.max(np.abs(traj.q - st.q)) < 1e-14
    assert np.max(np.abs(traj.p)) < 1e-14


def test_short_reference_run_conserves():
    cfg, st = dyn.reference_run()
    rep = dyn.conserved_report(dyn.integrate(cfg, st, 0.2, 1e-3, record_every=10))
    assert rep["samples"] == 21
    assert all(v < 1e-9 for v in rep["drift"].values()), rep["drift"]


def test_rank_two_run_conserves():
    cfg = ModelConfig("A", 2, ntilde=2, nu=0.5j)
    traj = dyn.integrate(cfg, PhasePoint([0.1, 0.55], [2.0, -0.7]), 0.1, 1e-3, kmax=3)
    assert traj.traces.shape == (101, 1, 3)
    assert max(dyn.conserved_report(traj)["drift"].values()) < 1e-9


def test_exports(tmp_path):
    cfg, st = dyn.reference_run()
    traj = dyn.integrate(cfg, st, 0.01, 1e-3, z_probe=(0.3 + 0.1j, 0.1 - 0.2j), kmax=2)
    path = tmp_path / "run.csv"
    traj.to_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0][0] == "time" and "trL2_z1_im" in rows[0]
    assert len(rows) == 12 and all(len(r) == len(rows[0]) for r in rows)
    doc = json.loads(traj.to_json())
    assert doc["z_probe"] == ["0.3+0.1i", "0.1-0.2i"]
    assert set(doc["drift"]) == {"H", "trL1_z0", "trL2_z0", "trL1_z1", "trL2_z1", "spectrum_z0", "spectrum_z1"}


def test_collision_raises():
    # attractive coupling, particles aimed at each other
    cfg = ModelConfig("A", 2, ntilde=1, nu=1.0)
    with pytest.raises((dyn.PoleApproach, dyn.StepUnderflow)):
        dyn.integrate(cfg, PhasePoint([0.0, 0.05], [1.0, -1.0]), 1.0, 0.01)


def test_initial_pole_rejected():
    cfg, _ = dyn.reference_run()
    with pytest.raises(dyn.PoleApproach):
        dyn.integrate(cfg, PhasePoint([0.2, 0.2], [0, 0]), 0.1, 0.01)


def test_bad_step():
    cfg, st = dyn.reference_run()
    with pytest.raises(ValueError):
        dyn.integrate(cfg, st, 1.0, 0.0)


def test_match_reorders_to_nearest():
    prev = np.array([1.0, 2.0, 3.0])
    cur = np.array([3.01, 0.99, 2.02])
    assert np.allclose(dyn._match(prev, cur), [0.99, 2.02, 3.01])


def test_fmt():
    assert dyn._fmt(0.5 - 2j) == "0.5-2.0i"
