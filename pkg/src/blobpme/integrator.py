"""Time integration of the particle system with output at requested times."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.integrate import BDF, RK45
from scipy.linalg import lapack, lu_factor, lu_solve

from .errors import NonConvergence, StepSizeUnderflow


class IntegratorMethod(str, Enum):
    ADAPTIVE_EXPLICIT = "explicit"   # Dormand-Prince 5(4)
    IMPLICIT_STIFF = "implicit"      # variable-order BDF, Newton with the analytic Jacobian


@dataclass(frozen=True)
class IntegratorConfig:
    method: IntegratorMethod = IntegratorMethod.IMPLICIT_STIFF
    rel_tol: float = 1e-6
    abs_tol: float = 1e-9
    max_step: float | None = None  # None: unbounded, the error control picks the step
    initial_step: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "method", IntegratorMethod(self.method))
        if not (0 < self.rel_tol < 1 and 0 < self.abs_tol < 1):
            raise ValueError("tolerances must lie in (0, 1)")
        if self.max_step is not None and not self.max_step > 0:
            raise ValueError("max_step must be positive")
        if self.initial_step is not None and not self.initial_step > 0:
            raise ValueError("initial_step must be positive")

    @property
    def resolved_max_step(self) -> float:
        if self.max_step is not None:
            return float(self.max_step)
        return math.inf


# Conservative step cap for stiff runs at large k; opt in via max_step.
STIFF_MAX_STEP = 1e-5
# Systems at least this large use the sparse Jacobian when one is offered.
SPARSE_MIN_SIZE = 64


def _banded_lu(A):
    """Factor a sparse matrix with LAPACK's banded LU, or densely when the band is wide."""
    n = A.shape[0]
    coo = A.tocoo()
    off = coo.row - coo.col
    kl = int(max(off.max(initial=0), 0))
    ku = int(max(-off.min(initial=0), 0))
    if 3 * max(kl, ku) > n:
        return ("dense", lu_factor(A.toarray(), overwrite_a=True))
    ab = np.zeros((2 * kl + ku + 1, n))
    np.add.at(ab, (kl + ku + off, coo.col), coo.data)
    lub, piv, info = lapack.dgbtrf(ab, kl, ku)
    if info < 0:
        raise NonConvergence(f"banded LU failed (info={info})")
    return ("band", (lub, kl, ku, piv))


def _banded_solve(lu, b):
    kind, data = lu
    if kind == "dense":
        return lu_solve(data, b)
    lub, kl, ku, piv = data
    x, info = lapack.dgbtrs(lub, kl, ku, b, piv)
    return x


@dataclass
class Trajectory:
    sample_times: np.ndarray
    states: np.ndarray          # (len(sample_times), N)
    step_count: int = 0
    rhs_eval_count: int = 0
    jac_eval_count: int = 0
    complete: bool = True

    def __len__(self):
        return len(self.sample_times)

    def at(self, t: float) -> np.ndarray:
        idx = int(np.argmin(np.abs(self.sample_times - t)))
        if not math.isclose(self.sample_times[idx], t, rel_tol=1e-12, abs_tol=1e-15):
            raise KeyError(f"t={t} is not a sample time")
        return self.states[idx]


def integrate(system, x0, config: IntegratorConfig, sample_times) -> Trajectory:
    """Integrate ``dx/dt = system.rhs(x)`` from ``t = sample_times[0]``.

    ``system`` needs ``rhs(x)``; a ``jacobian(x)`` method is used by the
    implicit method when present, and ``jacobian_sparse(x)`` is preferred for
    large systems (the Newton matrices are then factored as banded). Raises :class:`StepSizeUnderflow` or
    :class:`NonConvergence` with the partial trajectory attached.
    """
    times = np.asarray(sample_times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("sample_times must be a non-empty 1-D array")
    if times[0] < 0 or np.any(np.diff(times) <= 0):
        raise ValueError("sample_times must be strictly increasing and start at t >= 0")
    y0 = np.array(x0, dtype=float)
    states = np.empty((times.size, y0.size))
    states[0] = y0
    counts = {"rhs": 0, "jac": 0}

    def fun(t, y):
        counts["rhs"] += 1
        return system.rhs(y)

    def jac(t, y):
        counts["jac"] += 1
        return system.jacobian(y)

    def sparse_jac(t, y):
        counts["jac"] += 1
        return system.jacobian_sparse(y)

    def partial(filled, steps):
        return Trajectory(times[:filled], states[:filled].copy(), steps, counts["rhs"],
                          counts["jac"], complete=False)

    if times.size == 1:
        return Trajectory(times, states, 0, 0)

    kwargs = dict(rtol=config.rel_tol, atol=config.abs_tol, max_step=config.resolved_max_step)
    if config.initial_step is not None:
        kwargs["first_step"] = config.initial_step
    if config.method is IntegratorMethod.IMPLICIT_STIFF:
        sparse = hasattr(system, "jacobian_sparse") and y0.size >= SPARSE_MIN_SIZE
        if sparse:
            kwargs["jac"] = sparse_jac
        elif hasattr(system, "jacobian"):
            kwargs["jac"] = jac
        solver = BDF(fun, times[0], y0, times[-1], **kwargs)
        # rows above the first two are allocated uninitialised and one is read
        # before it is written; zero them so runs never touch stale memory
        solver.D[2:] = 0.0
        if sparse:
            def lu(A):
                solver.nlu += 1
                return _banded_lu(A)

            solver.lu = lu
            solver.solve_lu = _banded_solve
    else:
        solver = RK45(fun, times[0], y0, times[-1], **kwargs)

    filled = 1
    steps = 0
    while filled < times.size:
        message = solver.step()
        steps += 1
        if solver.status == "failed":
            err = StepSizeUnderflow if "step size" in str(message).lower() else NonConvergence
            raise err(f"integration failed at t={solver.t:.6g}: {message}", partial(filled, steps))
        if not np.all(np.isfinite(solver.y)):
            raise NonConvergence(f"non-finite state at t={solver.t:.6g}", partial(filled, steps))
        if filled < times.size and times[filled] <= solver.t:
            dense = solver.dense_output()
            while filled < times.size and times[filled] <= solver.t:
                t = times[filled]
                states[filled] = solver.y if t == solver.t else dense(t)
                filled += 1
        if solver.status == "finished" and filled < times.size:
            states[filled:] = solver.y
            filled = times.size
    return Trajectory(times, states, steps, counts["rhs"], counts["jac"])
