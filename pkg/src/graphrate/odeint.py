"""Fixed-step RK4 for the linear systems produced by expansion and by master equations."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .greg import CONSTANT_KEY, OdeSystem


class IntegrationError(ArithmeticError):
    def __init__(self, t: float, msg: str = "non-finite value"):
        super().__init__(f"{msg} at t = {t:g}")
        self.t = t


@dataclass
class OdeProblem:
    """dy/dt = A y + c with sparse A."""

    variables: list
    matrix: sparse.csr_matrix
    constant: np.ndarray
    initial: np.ndarray
    t_end: float = 1.0
    dt: float = 1e-3
    names: list = field(default_factory=list)

    def __post_init__(self):
        n = len(self.variables)
        self.matrix = sparse.csr_matrix(self.matrix, dtype=float)
        self.constant = np.asarray(self.constant, dtype=float).reshape(n)
        self.initial = np.asarray(self.initial, dtype=float).reshape(n)
        if self.matrix.shape != (n, n):
            raise ValueError("matrix shape does not match the variables")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.names:
            self.names = [str(v) for v in self.variables]

    @classmethod
    def from_system(cls, system: OdeSystem, initial: dict | None = None, t_end: float = 1.0, dt: float = 1e-3) -> "OdeProblem":
        """Build the problem for a closed system.

        ``initial`` maps keys (or variable names) to values and overrides the
        system's recorded initial expectations.
        """
        if not system.closed:
            raise ValueError("system is not closed; cannot integrate an open frontier")
        variables = system.variables
        index = {k: i for i, k in enumerate(variables)}
        rows, cols, vals = [], [], []
        const = np.zeros(len(variables))
        for i, k in enumerate(variables):
            for key, c in system.equations[k].coeffs.items():
                if key == CONSTANT_KEY:
                    const[i] += float(c)
                elif key in index:
                    rows.append(i)
                    cols.append(index[key])
                    vals.append(float(c))
                else:
                    raise ValueError(f"equation for {system.name(k)} mentions an unknown observable")
        by_name = {system.name(k): k for k in variables}
        init = np.array([float(system.initial.get(k, 0.0)) for k in variables])
        for k, v in (initial or {}).items():
            k = by_name.get(k, k)
            if k not in index:
                raise KeyError(f"unknown variable {k!r}")
            init[index[k]] = float(v)
        m = sparse.csr_matrix((vals, (rows, cols)), shape=(len(variables),) * 2)
        return cls(variables, m, const, init, t_end, dt, [system.name(k) for k in variables])

    def rhs(self, y: np.ndarray) -> np.ndarray:
        return self.matrix @ y + self.constant


def _rk4_step(p: OdeProblem, y: np.ndarray, h: float) -> np.ndarray:
    k1 = p.rhs(y)
    k2 = p.rhs(y + 0.5 * h * k1)
    k3 = p.rhs(y + 0.5 * h * k2)
    k4 = p.rhs(y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(problem: OdeProblem, t_end: float | None = None, dt: float | None = None):
    """Integrate from t = 0; returns (times, values) with one row per step.

    The last step is shortened so that the final time is exactly t_end.
    """
    t_end = problem.t_end if t_end is None else t_end
    dt = problem.dt if dt is None else dt
    if t_end < 0 or not dt > 0:
        raise ValueError("need t_end >= 0 and dt > 0")
    n = int(np.ceil(t_end / dt - 1e-9))
    times = np.empty(n + 1)
    ys = np.empty((n + 1, len(problem.variables)))
    times[0] = 0.0
    ys[0] = problem.initial
    y = problem.initial.copy()
    for i in range(1, n + 1):
        t_next = min(i * dt, t_end)
        y = _rk4_step(problem, y, t_next - times[i - 1])
        if not np.all(np.isfinite(y)):
            raise IntegrationError(t_next)
        times[i] = t_next
        ys[i] = y
    return times, ys


@dataclass
class SteadyState:
    values: np.ndarray
    converged: bool
    t_converged: float | None

    def to_json(self, names=None) -> dict:
        vals = [float(v) for v in self.values]
        return {
            "values": dict(zip(names, vals)) if names is not None else vals,
            "converged": self.converged,
            "t_converged": self.t_converged,
        }


def steady_state(problem: OdeProblem, tol: float = 1e-9, window: int = 100, t_max: float = 1e4, dt: float | None = None) -> SteadyState:
    """Integrate until the max relative change over ``window`` steps drops below tol.

    Relative change is measured against max(|y|_inf, 1) so that states near
    zero do not stall convergence.  Returns converged=False at t_max.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    dt = problem.dt if dt is None else dt
    y = problem.initial.copy()
    ref = y.copy()
    t = 0.0
    step = 0
    while t < t_max:
        y = _rk4_step(problem, y, dt)
        t += dt
        step += 1
        if not np.all(np.isfinite(y)):
            raise IntegrationError(t)
        if step % window == 0:
            scale = max(float(np.max(np.abs(y))) if len(y) else 0.0, 1.0)
            if float(np.max(np.abs(y - ref), initial=0.0)) / scale < tol:
                return SteadyState(y, True, t)
            ref = y.copy()
    return SteadyState(y, False, None)


def evaluate_outputs_series(outputs: dict, variables: list, ys: np.ndarray) -> dict:
    """Evaluate named linear combinations along a time series (one row per time)."""
    index = {k: i for i, k in enumerate(variables)}
    out = {}
    for name, lc in outputs.items():
        col = np.zeros(ys.shape[0])
        for key, c in lc.coeffs.items():
            if key == CONSTANT_KEY:
                col += float(c)
            elif key in index:
                col += float(c) * ys[:, index[key]]
            else:
                raise KeyError(f"output {name!r} mentions an observable outside the system")
        out[name] = col
    return out


def evaluate_outputs(outputs: dict, variables: list, values: np.ndarray) -> dict:
    """Evaluate named linear combinations at a single vector of expectations."""
    row = np.asarray(values, dtype=float).reshape(1, len(variables))
    return {name: float(col[0]) for name, col in evaluate_outputs_series(outputs, variables, row).items()}


def write_csv(path_or_file, names: list, times: np.ndarray, ys: np.ndarray, every: int = 1) -> None:
    own = isinstance(path_or_file, str)
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh)
        w.writerow(["t", *names])
        last = len(times) - 1
        for i in range(len(times)):
            if i % every == 0 or i == last:
                w.writerow([repr(float(times[i])), *(repr(float(v)) for v in ys[i])])
    finally:
        if own:
            fh.close()


__all__ = [
    "IntegrationError",
    "OdeProblem",
    "SteadyState",
    "evaluate_outputs",
    "evaluate_outputs_series",
    "integrate",
    "steady_state",
    "write_csv",
]
