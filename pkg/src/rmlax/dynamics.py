"""Classical trajectories and their conserved quantities.

Fixed-step RK4 on the equations of motion of a Lax structure. Each outer step
is checked against two half steps; if they disagree by more than the local
bound the step is redone as two halves (recursively, down to ``min_dt``), so
samples stay on the requested time grid.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from rmlax.elliptic import PoleError
from rmlax.laxpairs import ModelConfig, PhasePoint, structure

DEFAULT_PROBES = (0.31 + 0.17j,)


class PoleApproach(PoleError):
    """The trajectory ran into the pole guard of some Lax argument."""


class StepUnderflow(ArithmeticError):
    """Error control asked for a step below the minimum."""


@dataclass
class Trajectory:
    config: ModelConfig
    dt: float
    z_probe: tuple
    times: np.ndarray
    q: np.ndarray
    p: np.ndarray
    H: np.ndarray
    traces: np.ndarray  # [sample, probe, k-1] for k = 1..kmax
    spectra: np.ndarray  # [sample, probe, dim], tracked continuously
    halvings: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def kmax(self) -> int:
        return self.traces.shape[2]

    def state(self, i) -> PhasePoint:
        return PhasePoint(self.q[i], self.p[i])

    def to_csv(self, path) -> None:
        """One row per sample; complex values as (re, im) column pairs."""
        n = self.q.shape[1]
        cols = ["time"]
        for name in ("q", "p"):
            for i in range(n):
                cols += [f"{name}{i}_re", f"{name}{i}_im"]
        cols += ["H_re", "H_im"]
        for j in range(len(self.z_probe)):
            for k in range(1, self.kmax + 1):
                cols += [f"trL{k}_z{j}_re", f"trL{k}_z{j}_im"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for s, t in enumerate(self.times):
                vals = list(self.q[s]) + list(self.p[s]) + [self.H[s]] + list(self.traces[s].ravel())
                row = [repr(float(t))]
                for v in vals:
                    row += [repr(float(v.real)), repr(float(v.imag))]
                w.writerow(row)

    def to_json(self) -> str:
        return json.dumps(conserved_report(self), indent=2, sort_keys=True)


def _rk4(f, q, p, h, k1=None):
    k1q, k1p = f(q, p) if k1 is None else k1
    k2q, k2p = f(q + 0.5 * h * k1q, p + 0.5 * h * k1p)
    k3q, k3p = f(q + 0.5 * h * k2q, p + 0.5 * h * k2p)
    k4q, k4p = f(q + h * k3q, p + h * k3p)
    return (
        q + h / 6 * (k1q + 2 * k2q + 2 * k3q + k4q),
        p + h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p),
    )


def _match(prev, cur):
    """Reorder cur so that each entry sits next to its closest predecessor (greedy)."""
    d = np.abs(prev[:, None] - cur[None, :])
    out = np.empty_like(cur)
    used_r, used_c = set(), set()
    for flat in np.argsort(d, axis=None):
        r, c = divmod(int(flat), len(cur))
        if r in used_r or c in used_c:
            continue
        out[r] = cur[c]
        used_r.add(r)
        used_c.add(c)
        if len(used_r) == len(cur):
            break
    return out


def integrate(
    config: ModelConfig,
    state0,
    t_end: float,
    dt: float,
    z_probe=DEFAULT_PROBES,
    kmax: int = 4,
    local_tol: float | None = 1e-8,
    min_dt: float | None = None,
    record_every: int = 1,
) -> Trajectory:
    """Integrate Hamilton's equations and record H, tr L^k(z) and spec L(z).

    ``local_tol`` bounds the step-doubling error estimate (relative to the
    state size); ``None`` turns the control off.
    """
    if dt <= 0 or t_end < 0:
        raise ValueError("dt must be positive and t_end non-negative")
    st = structure(config)
    if not isinstance(state0, PhasePoint):
        state0 = PhasePoint(*state0)
    z_probe = tuple(complex(z) for z in z_probe)
    min_dt = dt / 2**12 if min_dt is None else min_dt

    def rhs(q, p):
        # the potential touches every Lax argument, so its guard is the pole check
        try:
            return st.eom(PhasePoint(q, p))
        except PoleError as exc:
            raise PoleApproach(f"pole approach at q = {q}: {exc}") from None

    halvings = 0

    def advance(q, p, h):
        nonlocal halvings
        k1 = rhs(q, p)
        q1, p1 = _rk4(rhs, q, p, h, k1)
        if local_tol is None:
            return q1, p1
        qh, ph = _rk4(rhs, q, p, 0.5 * h, k1)
        q2, p2 = _rk4(rhs, qh, ph, 0.5 * h)
        scale = max(1.0, np.max(np.abs(q2)), np.max(np.abs(p2)))
        err = max(np.max(np.abs(q2 - q1)), np.max(np.abs(p2 - p1))) / scale
        if err <= local_tol:
            return q1, p1
        if 0.5 * h < min_dt:
            raise StepUnderflow(f"step {h / 2:g} below minimum {min_dt:g}")
        halvings += 1
        qm, pm = advance(q, p, 0.5 * h)
        return advance(qm, pm, 0.5 * h)

    def observe(q, p, prev_spec):
        s = PhasePoint(q, p)
        tr = np.empty((len(z_probe), kmax), complex)
        sp = []
        for j, z in enumerate(z_probe):
            L = st.evaluate(s, z, need=("L",))["L"]
            P = np.eye(L.shape[0], dtype=complex)
            for k in range(kmax):
                P = P @ L
                tr[j, k] = np.trace(P)
            ev = np.linalg.eigvals(L)
            sp.append(ev if prev_spec is None else _match(prev_spec[j], ev))
        return st.hamiltonian(s), tr, np.array(sp)

    steps = int(round(t_end / dt))
    q, p = state0.q.copy(), state0.p.copy()
    rhs(q, p)  # pole check on the initial point
    times, qs, ps, Hs, trs, sps = [], [], [], [], [], []
    spec = None
    for i in range(steps + 1):
        if i % record_every == 0 or i == steps:
            H, tr, spec = observe(q, p, spec)
            times.append(i * dt)
            qs.append(q.copy())
            ps.append(p.copy())
            Hs.append(H)
            trs.append(tr)
            sps.append(spec)
        if i < steps:
            q, p = advance(q, p, dt)
    return Trajectory(
        config=config,
        dt=dt,
        z_probe=z_probe,
        times=np.array(times),
        q=np.array(qs),
        p=np.array(ps),
        H=np.array(Hs),
        traces=np.array(trs),
        spectra=np.array(sps),
        halvings=halvings,
    )


def _drift(series) -> float:
    ref = abs(series[0])
    dev = np.max(np.abs(series - series[0]))
    return float(dev / ref) if ref > 0 else float(dev)


def _fmt(z: complex) -> str:
    return f"{z.real!r}{'+' if z.imag >= 0 else '-'}{abs(z.imag)!r}i"


def conserved_report(traj: Trajectory) -> dict:
    """Maximum relative drift of every monitored quantity."""
    quantities = {"H": _drift(traj.H)}
    for j in range(len(traj.z_probe)):
        for k in range(1, traj.kmax + 1):
            quantities[f"trL{k}_z{j}"] = _drift(traj.traces[:, j, k - 1])
        sp = traj.spectra[:, j, :]
        scale = max(1.0, float(np.max(np.abs(sp[0]))))
        quantities[f"spectrum_z{j}"] = float(np.max(np.abs(sp - sp[0])) / scale)
    return {
        "config": {k: (_fmt(v) if isinstance(v, complex) else v) for k, v in traj.config.describe().items()},
        "dt": traj.dt,
        "t_end": float(traj.times[-1]),
        "samples": len(traj.times),
        "z_probe": [_fmt(z) for z in traj.z_probe],
        "halvings": traj.halvings,
        "drift": quantities,
    }


def drift_ratio(config, state0, t_end, dt, z_probe=DEFAULT_PROBES, kmax=4) -> dict:
    """drift(dt) / drift(dt/2) for every quantity (16 for a clean fourth-order method)."""
    a = conserved_report(integrate(config, state0, t_end, dt, z_probe, kmax))["drift"]
    b = conserved_report(integrate(config, state0, t_end, dt / 2, z_probe, kmax))["drift"]
    return {k: (a[k], b[k], a[k] / b[k] if b[k] > 0 else float("inf")) for k in a}


def reference_run(ntilde: int = 1):
    """The conservation benchmark: A, N = 2, repulsive coupling, real initial data."""
    cfg = ModelConfig("A", 2, ntilde=ntilde, nu=0.5j, tau=1j)
    return cfg, PhasePoint([0.1, 0.55], [2.0, -0.7])


def stationary_run():
    """p = 0 with the separation at the half period, a critical point of wp."""
    cfg = ModelConfig("A", 2, ntilde=1, nu=0.5j, tau=1j)
    return cfg, PhasePoint([0.0, 0.5], [0.0, 0.0])
