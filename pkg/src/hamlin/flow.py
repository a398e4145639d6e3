"""Trajectory integration with the reparametrized time s as augmented state.

The integrated system is (x' = X(x), s' = -div(X)(x)) so s shares the step
sequence and error control with x.  Two methods: classic fixed-step RK4 and
an adaptive Dormand-Prince 5(4) pair with PI step-size control.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EvalDomainError, IntegrationError
from .model import IntegrableSystem, rescaled_system
from .report import dumps17

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "integrate",
    "integrate_rescaled",
    "conservation_drift",
    "write_trajectory_csv",
]


@dataclass(frozen=True)
class IntegratorConfig:
    """Integration settings.

    t1 == t0 is allowed and produces a single-sample trajectory (a zero
    t-span is meaningful for degenerate certification runs).
    """

    t1: float
    t0: float = 0.0
    method: str = "rk45"  # "rk4" (fixed step) or "rk45" (adaptive)
    step: float | None = None  # fixed step size, rk4 only
    rtol: float = 1e-10
    atol: float = 1e-12
    max_steps: int = 100000

    def __post_init__(self):
        if self.method not in ("rk4", "rk45"):
            raise ValueError(f"unknown method {self.method!r}")
        if not (self.t1 >= self.t0):
            raise ValueError("t1 must be >= t0")
        if self.method == "rk4":
            if self.step is None or not (self.step > 0):
                raise ValueError("rk4 needs a positive fixed step")
        else:
            if not (self.rtol > 0 and self.atol > 0):
                raise ValueError("rk45 needs positive rtol and atol")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")

    def meta(self) -> dict:
        doc = {"method": self.method, "t0": self.t0, "t1": self.t1,
               "max_steps": self.max_steps}
        if self.method == "rk4":
            doc["step"] = self.step
        else:
            doc["rtol"] = self.rtol
            doc["atol"] = self.atol
        return doc


@dataclass
class Trajectory:
    """Accepted samples (t, x, s) with s(t0) = 0.

    ``truncated`` is None for a complete run, otherwise a short
    machine-readable reason ("max-steps-exceeded", "step-size-underflow",
    "evaluation-domain: ...").
    """

    t: np.ndarray
    x: np.ndarray
    s: np.ndarray
    system_name: str
    method: str
    meta: dict = field(default_factory=dict)
    truncated: str | None = None

    def __len__(self):
        return self.t.shape[0]


class _Augmented:
    """Right-hand side (X(x), -div X(x)) with fast tape access."""

    def __init__(self, system: IntegrableSystem):
        self.n = system.n
        comps = system.vector_field.components
        self._eqs = [(c.expression, c._pvec) for c in comps]
        # fields whose evaluability defines the trajectory domain
        self._domain = [(f.expression, f._pvec)
                        for f in (*system.conserved_fields, system.nu_field)]
        if system.mu_field is not None:
            self._domain.append((system.mu_field.expression,
                                 system.mu_field._pvec))

    def __call__(self, y: np.ndarray, out: np.ndarray) -> None:
        x = y[: self.n]
        div = 0.0
        for i, (expr, pvec) in enumerate(self._eqs):
            v, d = expr.eval_dual_raw(x, pvec, i)
            out[i] = v
            div += d
        out[self.n] = -div

    def check_domain(self, x: np.ndarray) -> None:
        for expr, pvec in self._domain:
            expr.eval_raw(x, pvec)


def _rk4_step(f: _Augmented, y: np.ndarray, h: float, work) -> np.ndarray:
    k1, k2, k3, k4 = work
    f(y, k1)
    f(y + (h / 2.0) * k1, k2)
    f(y + (h / 2.0) * k2, k3)
    f(y + h * k3, k4)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


# Dormand-Prince 5(4) tableau.  The 7th stage equals the next step's first
# stage (FSAL); E holds the difference between the 5th and 4th order weights.
_DP_C = (0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0)
_DP_A = (
    (0.2,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0,
     -5103.0 / 18656.0),
    (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0,
     11.0 / 84.0),
)
_DP_E = (71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0,
         -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)


def _hinit(f: _Augmented, y0, f0, span, rtol, atol) -> float:
    """Hairer-style starting step estimate for the 5th order pair."""
    sk = atol + rtol * np.abs(y0)
    dnf = float(np.sum((f0 / sk) ** 2))
    dny = float(np.sum((y0 / sk) ** 2))
    if dnf <= 1e-10 or dny <= 1e-10:
        h = 1e-6
    else:
        h = math.sqrt(dny / dnf) * 0.01
    h = min(h, span)
    y1 = y0 + h * f0
    f1 = np.empty_like(f0)
    try:
        f(y1, f1)
    except EvalDomainError:
        return max(h * 1e-3, 1e-12)
    der2 = math.sqrt(float(np.sum(((f1 - f0) / sk) ** 2))) / h
    der12 = max(der2, math.sqrt(dnf))
    if der12 <= 1e-15:
        h1 = max(1e-6, h * 1e-3)
    else:
        h1 = (0.01 / der12) ** 0.2
    return min(100.0 * h, h1, span)


def integrate(system: IntegrableSystem, x0, cfg: IntegratorConfig) -> Trajectory:
    """Integrate the augmented system from x0 over cfg's t-span.

    Raises an evaluation-domain error if any system field fails at x0
    itself.  Later failures truncate the trajectory with a recorded reason.
    The run is deterministic: identical inputs give bit-identical samples.
    """
    n = system.n
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    if x0.shape != (n,):
        raise ValueError(f"x0 has shape {x0.shape}, expected ({n},)")
    f = _Augmented(system)
    f.check_domain(x0)  # immediate error on a bad start point
    y = np.zeros(n + 1, dtype=np.float64)
    y[:n] = x0
    probe = np.empty(n + 1, dtype=np.float64)
    f(y, probe)

    ts = [cfg.t0]
    ys = [y.copy()]
    truncated = None
    span = cfg.t1 - cfg.t0
    meta = cfg.meta()

    if span == 0.0:
        pass
    elif cfg.method == "rk4":
        truncated = _run_rk4(f, y, cfg, ts, ys)
    else:
        truncated = _run_rk45(f, y, cfg, ts, ys, probe)

    t_arr = np.array(ts, dtype=np.float64)
    y_arr = np.vstack(ys)
    meta["n_samples"] = len(ts)
    return Trajectory(
        t=t_arr,
        x=y_arr[:, :n].copy(),
        s=y_arr[:, n].copy(),
        system_name=system.name,
        method=cfg.method,
        meta=meta,
        truncated=truncated,
    )


def _run_rk4(f: _Augmented, y, cfg, ts, ys) -> str | None:
    span = cfg.t1 - cfg.t0
    h = cfg.step
    n_full = int(span / h)  # full steps that certainly fit
    work = tuple(np.empty_like(y) for _ in range(4))
    k = 0
    t = cfg.t0
    while t < cfg.t1:
        if k >= cfg.max_steps:
            return "max-steps-exceeded"
        if k < n_full:
            t_next = min(cfg.t0 + (k + 1) * h, cfg.t1)
        else:
            t_next = cfg.t1
        step = t_next - t
        if step <= 0.0:
            break
        try:
            y_new = _rk4_step(f, y, step, work)
            f.check_domain(y_new[: f.n])
        except EvalDomainError as exc:
            return f"evaluation-domain: {exc}"
        if not np.all(np.isfinite(y_new)):
            return "non-finite state"
        y[:] = y_new
        t = t_next
        k += 1
        ts.append(t)
        ys.append(y.copy())
    return None


def _run_rk45(f: _Augmented, y, cfg, ts, ys, f0) -> str | None:
    """Dormand-Prince 5(4) with PI control (stabilized step factors)."""
    safe, beta = 0.9, 0.04
    expo1 = 0.2 - beta * 0.75
    facc1, facc2 = 1.0 / 0.2, 1.0 / 10.0  # step factor window [1/5, 10]
    facold = 1e-4
    span = cfg.t1 - cfg.t0
    hmin = 1e3 * np.finfo(np.float64).eps * max(abs(cfg.t0), abs(cfg.t1), 1.0)

    t = cfg.t0
    h = _hinit(f, y, f0, span, cfg.rtol, cfg.atol)
    k = [f0] + [np.empty_like(y) for _ in range(6)]
    rejected_last = False
    n_steps = 0

    while t < cfg.t1:
        if n_steps >= cfg.max_steps:
            return "max-steps-exceeded"
        if h < hmin:
            return "step-size-underflow"
        remaining = cfg.t1 - t
        is_last = h >= remaining
        h_att = remaining if is_last else h
        n_steps += 1
        try:
            for i in range(6):
                a = _DP_A[i]
                yi = y + h_att * sum(a[j] * k[j] for j in range(len(a)))
                f(yi, k[i + 1])
            y_new = yi  # stage 7 input is the 5th order solution (FSAL)
            err_vec = h_att * sum(e * ki for e, ki in zip(_DP_E, k))
        except EvalDomainError as exc:
            # a stage left the domain: treat as a failed step and shrink
            h = 0.5 * h_att
            rejected_last = True
            if h < hmin:
                return f"evaluation-domain: {exc}"
            continue
        if not np.all(np.isfinite(y_new)):
            h = 0.5 * h_att
            rejected_last = True
            continue
        sk = cfg.atol + cfg.rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = math.sqrt(float(np.mean((err_vec / sk) ** 2)))

        if err <= 1.0:
            try:
                f.check_domain(y_new[: f.n])
            except EvalDomainError as exc:
                return f"evaluation-domain: {exc}"
            facold = max(err, 1e-4)
            fac11 = err ** expo1
            fac = fac11 / facold ** beta
            fac = max(facc2, min(facc1, fac / safe))
            h_new = h_att / fac
            if rejected_last:
                h_new = min(h_new, h_att)
            t = cfg.t1 if is_last else t + h_att
            y[:] = y_new
            k[0][:] = k[6]  # FSAL
            ts.append(t)
            ys.append(y.copy())
            rejected_last = False
            h = h_new
        else:
            fac11 = err ** expo1
            h = h_att / min(facc1, fac11 / safe)
            rejected_last = True
    return None


def integrate_rescaled(system: IntegrableSystem, x0,
                       cfg: IntegratorConfig) -> Trajectory:
    """Integrate dx/dt' = mu(x) X(x) with s' = -div(mu X).

    Requires a declared mu; the effective bracket scaling becomes nu*mu.
    """
    return integrate(rescaled_system(system), x0, cfg)


def conservation_drift(system: IntegrableSystem, traj: Trajectory) -> dict:
    """Max |Q(x(t)) - Q(x(t0))| along the trajectory for each conserved Q."""
    if len(traj) == 0:
        raise IntegrationError("empty trajectory")
    labels = [f"C{i+1}" for i in range(len(system.casimir_fields))] + ["H"]
    out = {}
    for label, fld in zip(labels, system.conserved_fields):
        ref = fld.value(traj.x[0])
        worst = 0.0
        for row in traj.x[1:]:
            worst = max(worst, abs(fld.value(row) - ref))
        out[label] = worst
    return out


def write_trajectory_csv(path: str, traj: Trajectory,
                         chart=None) -> None:
    """CSV with header t,x1,...,xn,s and one row per accepted sample.

    With ``chart`` (a callable point -> u vector), u columns are appended;
    samples where the chart is undefined get nan cells.
    """
    import os

    n = traj.x.shape[1]
    header = ["t"] + [f"x{i+1}" for i in range(n)] + ["s"]
    if chart is not None:
        header += [f"u{i+1}" for i in range(n)]
    lines = [",".join(header)]
    for row_i in range(len(traj)):
        cells = [format(traj.t[row_i], ".17g")]
        cells += [format(v, ".17g") for v in traj.x[row_i]]
        cells.append(format(traj.s[row_i], ".17g"))
        if chart is not None:
            try:
                u = chart(traj.x[row_i])
                cells += [format(v, ".17g") for v in u]
            except Exception:
                cells += ["nan"] * n
        lines.append(",".join(cells))
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")
    os.replace(tmp, path)
