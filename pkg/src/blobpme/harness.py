"""Experiment orchestration: configs, single runs, N-sweeps and CSV output."""

from __future__ import annotations

import hashlib
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import targets as _targets
from .dynamics import DynamicsContext
from .ensemble import InitialDensity, ParticleEnsemble, init_from_density
from .errors import ConfigError, IntegrationError
from .integrator import IntegratorConfig, Trajectory, integrate
from .mollifier import Mollifier
from .observables import (
    DiagnosticsRecord, KdeSnapshot, fit_convergence_order, kl_divergence, l1_kde_distance,
    mass_in_omega,
)
from .oracle import ExactSolution
from .potentials import ConfiningPotential, ExternalPotential
from .targets import TargetDensity, TargetKind, build_kernel_table

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

DEFAULT_K = 1e9
DEFAULT_SAMPLE_COUNT = 64
DEFAULT_N_GRID = (20, 40, 80, 160, 320, 640)
DEFAULT_N_MAX = 1280
WORKERS_ENV = "BLOBPME_WORKERS"

DIAGNOSTICS_COLUMNS = ("time", "kl", "energy", "mass_in_omega", "l1_vs_reference")


def resolve_epsilon(n: int) -> float:
    """Blob width giving overlapping mollifiers: ``4 / N**0.99``."""
    if n < 1:
        raise ConfigError("N must be at least 1")
    return 4.0 / n ** 0.99


def default_sample_times(t_final: float, count: int = DEFAULT_SAMPLE_COUNT) -> np.ndarray:
    """``t = 0`` followed by ``count`` log-spaced times ending at ``t_final``."""
    if count <= 1:
        return np.array([0.0, t_final])
    return np.concatenate([[0.0], np.geomspace(t_final * 1e-3, t_final, count)])


class Reference(str, Enum):
    """What the ``l1_vs_reference`` diagnostic column compares against."""

    NONE = "none"
    TARGET = "target"   # the target density on the domain
    EXACT = "exact"     # the Barenblatt solution started from the initial profile


@dataclass(frozen=True)
class SimConfig:
    target: TargetDensity
    initial: InitialDensity
    n: int
    t_final: float
    epsilon: float | str = "auto"
    k: float = DEFAULT_K
    omega: tuple[float, float] = (-1.0, 1.0)
    sample_times: Sequence[float] | int | None = None
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    output: str | None = None
    reference: Reference = Reference.NONE
    external: ExternalPotential = field(default_factory=ExternalPotential.zero)

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ConfigError(f"N must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if not (isinstance(self.t_final, (int, float)) and self.t_final > 0):
            raise ConfigError("t_final must be positive")
        if isinstance(self.epsilon, str):
            if self.epsilon != "auto":
                raise ConfigError(f"epsilon must be a positive number or 'auto', got {self.epsilon!r}")
        elif not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if not self.k >= 0:
            raise ConfigError("k must be non-negative")
        a, b = (float(v) for v in self.omega)
        if not a < b:
            raise ConfigError("omega must satisfy a < b")
        object.__setattr__(self, "omega", (a, b))
        try:
            object.__setattr__(self, "reference", Reference(self.reference))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.sample_times is not None and not isinstance(self.sample_times, (int, np.integer)):
            times = tuple(float(t) for t in self.sample_times)
            if not times or times[0] < 0 or any(u <= s for s, u in zip(times, times[1:])):
                raise ConfigError("sample_times must be strictly increasing and non-negative")
            if times[-1] > self.t_final * (1 + 1e-12):
                raise ConfigError("sample_times extend beyond t_final")
            object.__setattr__(self, "sample_times", times)

    @property
    def resolved_epsilon(self) -> float:
        return resolve_epsilon(self.n) if self.epsilon == "auto" else float(self.epsilon)

    @property
    def resolved_sample_times(self) -> np.ndarray:
        st = self.sample_times
        if st is None:
            return default_sample_times(self.t_final)
        if isinstance(st, (int, np.integer)):
            return default_sample_times(self.t_final, int(st))
        times = np.asarray(st, dtype=float)
        if times[0] > 0:
            times = np.concatenate([[0.0], times])
        return times

    def with_n(self, n: int) -> SimConfig:
        return replace(self, n=n, output=None)


class SweepObservable(str, Enum):
    L1_VS_REFERENCE_AT_T = "l1_vs_reference_at_t"   # against the N_max run at t_final
    L1_VS_TARGET_AT_T = "l1_vs_target_at_T"         # against the target density
    L1_VS_EXACT_AT_T = "l1_vs_exact_at_t"           # against the Barenblatt solution


@dataclass(frozen=True)
class SweepConfig:
    base: SimConfig
    n_values: tuple[int, ...] = DEFAULT_N_GRID
    n_max: int = DEFAULT_N_MAX
    observable: SweepObservable = SweepObservable.L1_VS_REFERENCE_AT_T

    def __post_init__(self):
        ns = tuple(int(n) for n in self.n_values)
        if not ns or any(b <= a for a, b in zip(ns, ns[1:])) or ns[0] < 1:
            raise ConfigError("n_values must be positive and strictly increasing")
        object.__setattr__(self, "n_values", ns)
        try:
            object.__setattr__(self, "observable", SweepObservable(self.observable))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.needs_reference and not self.n_max > ns[-1]:
            raise ConfigError("n_max must exceed every value in n_values")

    @property
    def needs_reference(self) -> bool:
        return self.observable is SweepObservable.L1_VS_REFERENCE_AT_T


@dataclass
class RunResult:
    config: SimConfig
    ensemble: ParticleEnsemble
    trajectory: Trajectory
    diagnostics: list[DiagnosticsRecord]
    context: DynamicsContext

    def snapshot(self, index: int = -1) -> KdeSnapshot:
        return KdeSnapshot(self.trajectory.states[index], self.ensemble.weights,
                           self.context.mollifier)

    def final_snapshot(self) -> KdeSnapshot:
        return self.snapshot(-1)


@dataclass
class SweepResult:
    n_values: tuple[int, ...]
    epsilons: tuple[float, ...]
    errors: tuple[float, ...]
    order: float
    intercept: float
    observable: SweepObservable
    n_max: int | None = None

    def rows(self):
        return list(zip(self.n_values, self.epsilons, self.errors))


def build_context(config: SimConfig) -> tuple[ParticleEnsemble, DynamicsContext]:
    ensemble = init_from_density(config.initial, config.n, config.omega)
    kernels = build_kernel_table(config.target, Mollifier(config.resolved_epsilon))
    confine = ConfiningPotential(config.k, config.omega)
    ctx = DynamicsContext(kernels, confine, ensemble.weights, config.external)
    return ensemble, ctx


def _reference_density(config: SimConfig) -> Callable | None:
    if config.reference is Reference.NONE:
        return None
    if config.reference is Reference.TARGET:
        return config.target.density
    return exact_reference(config)


def exact_reference(config: SimConfig):
    """Exact solution for a Barenblatt start under the uniform-1/2, V=0, k=0 reduction."""
    ok = (config.initial.kind == "barenblatt" and config.target.kind is TargetKind.UNIFORM
          and math.isclose(float(config.target.values[0]), 0.5) and config.k == 0
          and config.external.is_zero)
    if not ok:
        raise ConfigError("the exact reference needs a Barenblatt start, uniform target c=1/2, "
                          "k=0 and no external potential")
    sol = ExactSolution(config.initial.tau)
    return lambda t: (lambda x: sol(x, t))


def diagnostics_for(config: SimConfig, ctx: DynamicsContext, ensemble: ParticleEnsemble,
                    times, states) -> list[DiagnosticsRecord]:
    ref = _reference_density(config)
    out = []
    for t, x in zip(times, states):
        snap = KdeSnapshot(x, ensemble.weights, ctx.mollifier)
        l1 = math.nan
        if ref is not None:
            dens = ref(float(t)) if config.reference is Reference.EXACT else ref
            l1 = l1_kde_distance(snap, dens, config.omega,
                                 breakpoints=config.target.finite_breakpoints)
        out.append(DiagnosticsRecord(
            time=float(t), kl=kl_divergence(snap, config.target, config.omega),
            energy=ctx.energy(x), mass_in_omega=mass_in_omega(snap, config.omega),
            l1_vs_reference=l1))
    return out


def simulate(config: SimConfig) -> tuple[ParticleEnsemble, DynamicsContext, Trajectory]:
    """Integrate without diagnostics or output (the cheap path used by sweeps)."""
    ensemble, ctx = build_context(config)
    traj = integrate(ctx, ensemble.positions, config.integrator, config.resolved_sample_times)
    return ensemble, ctx, traj


def run(config: SimConfig) -> RunResult:
    """Initialise, integrate, compute diagnostics at every sample and write CSVs.

    On an integration failure the samples reached so far are still written,
    together with an ``INCOMPLETE`` marker file, and the error is re-raised.
    """
    ensemble, ctx = build_context(config)
    out_dir = Path(config.output) if config.output else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "INCOMPLETE").unlink(missing_ok=True)
    try:
        traj = integrate(ctx, ensemble.positions, config.integrator, config.resolved_sample_times)
    except IntegrationError as exc:
        if out_dir is not None and exc.partial is not None:
            diags = diagnostics_for(config, ctx, ensemble, exc.partial.sample_times,
                                    exc.partial.states)
            write_outputs(out_dir, exc.partial, ensemble.weights, diags)
            (out_dir / "INCOMPLETE").write_text(f"{type(exc).__name__}: {exc}\n")
        raise
    diags = diagnostics_for(config, ctx, ensemble, traj.sample_times, traj.states)
    if out_dir is not None:
        write_outputs(out_dir, traj, ensemble.weights, diags)
    return RunResult(config, ensemble, traj, diags, ctx)


# -- output -----------------------------------------------------------------

def fmt(v: float) -> str:
    return f"{float(v):.17g}"


def write_outputs(out_dir: Path, traj: Trajectory, weights, diags) -> None:
    n = traj.states.shape[1] if traj.states.ndim == 2 else len(weights)
    lines = [",".join(["time"] + [f"x_{i + 1}" for i in range(n)])]
    lines.append(",".join(["weights"] + [fmt(w) for w in weights]))
    for t, row in zip(traj.sample_times, traj.states):
        lines.append(",".join([fmt(t)] + [fmt(v) for v in row]))
    (out_dir / "trajectory.csv").write_text("\n".join(lines) + "\n")
    lines = [",".join(DIAGNOSTICS_COLUMNS)]
    lines += [",".join(fmt(v) for v in d.row()) for d in diags]
    (out_dir / "diagnostics.csv").write_text("\n".join(lines) + "\n")


def read_trajectory(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of the trajectory writer: ``(times, weights, states)``."""
    rows = Path(path).read_text().strip().splitlines()
    weights = np.array([float(v) for v in rows[1].split(",")[1:]])
    body = np.array([[float(v) for v in r.split(",")] for r in rows[2:]]).reshape(-1, weights.size + 1)
    return body[:, 0], weights, body[:, 1:]


def write_sweep(out_dir: Path, result: SweepResult) -> None:
    lines = ["N,epsilon,error"] + [f"{n},{fmt(e)},{fmt(err)}" for n, e, err in result.rows()]
    lines.append(f"# order={fmt(result.order)} intercept={fmt(result.intercept)}")
    (out_dir / "sweep.csv").write_text("\n".join(lines) + "\n")


# -- sweeps -----------------------------------------------------------------

def final_snapshot(config: SimConfig) -> KdeSnapshot:
    """Default sweep runner: the estimate at ``t_final`` (only that time is sampled)."""
    cfg = replace(config, sample_times=(0.0, config.t_final), output=None)
    ensemble, ctx, traj = simulate(cfg)
    return KdeSnapshot(traj.states[-1], ensemble.weights, ctx.mollifier)


def _config_key(config: SimConfig) -> str:
    t = config.target
    payload = {
        "target": [t.kind.value, list(map(float, t.breakpoints)), list(map(float, t.values)),
                   float(t.normalization), t.name],
        "initial": [config.initial.kind, config.initial.tau], "n": config.n,
        "epsilon": config.resolved_epsilon, "k": config.k, "omega": list(config.omega),
        "t": config.t_final, "integrator": [config.integrator.method.value,
                                            config.integrator.rel_tol, config.integrator.abs_tol,
                                            str(config.integrator.max_step)],
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


_REFERENCE_CACHE: dict[str, KdeSnapshot] = {}


def reference_snapshot(config: SimConfig, runner=final_snapshot, cache_dir=None) -> KdeSnapshot:
    """The (expensive) reference estimate, memoised in-process and optionally on disk.

    Custom targets and external potentials are not part of the cache key, so
    they bypass the cache.
    """
    cacheable = config.target.kind is not TargetKind.CUSTOM and config.external.is_zero \
        and config.initial.kind != "custom" and runner is final_snapshot
    key = _config_key(config) if cacheable else None
    if key is not None and key in _REFERENCE_CACHE:
        return _REFERENCE_CACHE[key]
    path = Path(cache_dir) / f"reference_{config.n}_{key}.npz" if (cache_dir and key) else None
    if path is not None and path.exists():
        data = np.load(path)
        snap = KdeSnapshot(data["positions"], data["weights"], Mollifier(float(data["epsilon"])))
    else:
        snap = runner(config)
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            np.savez(path, positions=snap.positions, weights=snap.weights,
                     epsilon=snap.epsilon)
    if key is not None:
        _REFERENCE_CACHE[key] = snap
    return snap


def sweep_error(sweep: SweepConfig, snap: KdeSnapshot, reference: KdeSnapshot | None) -> float:
    base = sweep.base
    if sweep.observable is SweepObservable.L1_VS_REFERENCE_AT_T:
        return l1_kde_distance(snap, reference, base.omega,
                               breakpoints=base.target.finite_breakpoints)
    if sweep.observable is SweepObservable.L1_VS_TARGET_AT_T:
        return l1_kde_distance(snap, base.target.density, base.omega,
                               breakpoints=base.target.finite_breakpoints)
    dens = exact_reference(base)(base.t_final)
    return l1_kde_distance(snap, dens, base.omega)


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def run_sweep(sweep: SweepConfig, runner: Callable[[SimConfig], object] = final_snapshot,
              measure: Callable | None = None, workers: int | None = None,
              cache_dir=None) -> SweepResult:
    """Run the reference once (if needed), then every N, and fit the convergence order.

    ``runner(config)`` produces whatever ``measure(sweep, result, reference)``
    turns into an error; the defaults integrate and take an L1 distance.
    Members run in a process pool when more than one worker is requested
    (``BLOBPME_WORKERS``); results do not depend on the worker count.
    """
    measure = measure or sweep_error
    workers = worker_count() if workers is None else max(1, int(workers))
    reference = None
    if sweep.needs_reference:
        reference = reference_snapshot(sweep.base.with_n(sweep.n_max), runner, cache_dir)
    configs = [sweep.base.with_n(n) for n in sweep.n_values]
    if workers > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(configs))) as pool:
            results = list(pool.map(runner, configs))
    else:
        results = [runner(c) for c in configs]
    errors = tuple(float(measure(sweep, r, reference)) for r in results)
    order, intercept = fit_convergence_order(sweep.n_values, errors)
    return SweepResult(sweep.n_values, tuple(c.resolved_epsilon for c in configs), errors,
                       order, intercept, sweep.observable,
                       sweep.n_max if sweep.needs_reference else None)


# -- config files -----------------------------------------------------------

def _target_from(table: dict) -> TargetDensity:
    kind = table.get("kind")
    params = {k: v for k, v in table.items() if k != "kind"}
    try:
        if kind == "uniform":
            return _targets.uniform(float(params.pop("c", 0.5)))
        if kind == "log_concave":
            return _targets.log_concave(float(params.pop("normalization", 2.0 / math.pi)))
        if kind == "piecewise_constant":
            if "values" not in params:
                return _targets.default_piecewise()
            return _targets.piecewise_constant(params.pop("breakpoints"), params.pop("values"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad target table: {exc}") from None
    raise ConfigError(f"unknown target kind {kind!r} (uniform, log_concave, piecewise_constant)")


def _initial_from(table: dict) -> InitialDensity:
    kind = table.get("kind", "barenblatt")
    if kind == "barenblatt":
        return InitialDensity.barenblatt(float(table.get("tau", 0.0625)))
    if kind == "uniform":
        return InitialDensity.uniform()
    raise ConfigError(f"unknown initial kind {kind!r} (barenblatt, uniform)")


def _integrator_from(table: dict) -> IntegratorConfig:
    allowed = {"method", "rel_tol", "abs_tol", "max_step", "initial_step"}
    extra = set(table) - allowed
    if extra:
        raise ConfigError(f"unknown integrator keys: {sorted(extra)}")
    try:
        return IntegratorConfig(**table)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad integrator table: {exc}") from None


SIM_KEYS = {"N", "epsilon", "k", "omega", "t_final", "sample_times", "output", "reference",
            "target", "initial", "integrator", "sweep"}


def sim_config_from_dict(data: dict, base_dir: Path | None = None) -> SimConfig:
    extra = set(data) - SIM_KEYS
    if extra:
        raise ConfigError(f"unknown config keys: {sorted(extra)}")
    for key in ("N", "t_final", "target"):
        if key not in data:
            raise ConfigError(f"missing required key {key!r}")
    output = data.get("output")
    if output is not None and base_dir is not None and not Path(output).is_absolute():
        output = str(base_dir / output)
    try:
        return SimConfig(
            target=_target_from(dict(data["target"])),
            initial=_initial_from(dict(data.get("initial", {}))),
            n=data["N"], t_final=data["t_final"], epsilon=data.get("epsilon", "auto"),
            k=float(data.get("k", DEFAULT_K)), omega=tuple(data.get("omega", (-1.0, 1.0))),
            sample_times=data.get("sample_times"),
            integrator=_integrator_from(dict(data.get("integrator", {}))),
            output=output, reference=data.get("reference", "none"))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def sweep_config_from_dict(data: dict, base_dir: Path | None = None) -> SweepConfig:
    base = sim_config_from_dict(data, base_dir)
    table = dict(data.get("sweep", {}))
    extra = set(table) - {"n_values", "n_max", "observable"}
    if extra:
        raise ConfigError(f"unknown sweep keys: {sorted(extra)}")
    return SweepConfig(base, tuple(table.get("n_values", DEFAULT_N_GRID)),
                       int(table.get("n_max", DEFAULT_N_MAX)),
                       table.get("observable", SweepObservable.L1_VS_REFERENCE_AT_T.value))


def load_toml(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        return tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def load_config(path) -> SimConfig:
    return sim_config_from_dict(load_toml(path))


def load_sweep(path) -> SweepConfig:
    return sweep_config_from_dict(load_toml(path))


CONFIG_SCHEMA = """\
Config files are TOML. Top-level keys:
  N             integer >= 1                     (required)
  t_final       real > 0                         (required)
  epsilon       real > 0 or "auto"               (auto: 4 / N^0.99)
  k             real >= 0, default 1e9           confinement strength
  omega         [a, b], default [-1, 1]
  sample_times  list of times, or an integer count of log-spaced times (default 64)
  output        directory for trajectory.csv and diagnostics.csv
  reference     "none" | "target" | "exact"      fills the l1_vs_reference column
[target]      kind = "uniform" (c) | "log_concave" (normalization)
              | "piecewise_constant" (breakpoints, values; omit both for the default profile)
[initial]     kind = "barenblatt" (tau, default 0.0625) | "uniform"
[integrator]  method = "implicit" | "explicit", rel_tol, abs_tol, max_step, initial_step
[sweep]       n_values (default [20, 40, 80, 160, 320, 640]), n_max (default 1280),
              observable = "l1_vs_reference_at_t" | "l1_vs_target_at_T" | "l1_vs_exact_at_t"
"""


__all__ = [
    "SimConfig", "SweepConfig", "SweepObservable", "SweepResult", "RunResult", "Reference",
    "resolve_epsilon", "default_sample_times", "run", "run_sweep", "simulate", "build_context",
    "diagnostics_for", "final_snapshot", "reference_snapshot", "exact_reference", "write_outputs",
    "read_trajectory", "write_sweep", "load_config", "load_sweep", "sim_config_from_dict",
    "sweep_config_from_dict", "CONFIG_SCHEMA", "DIAGNOSTICS_COLUMNS", "DEFAULT_N_GRID",
    "DEFAULT_N_MAX", "WORKERS_ENV",
]
