"""Integration of ``dh/dt = h#`` with blow-up detection.

The stepper is a Dormand-Prince 5(4) pair with a PI step-size controller,
written against plain numpy arrays so that the same code drives both the
full matrix flow and the three-scalar su(2) eigenvalue system used as its
oracle.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Mapping

import numpy as np

from hcflow.errors import IntegrationError
from hcflow.forms import HermitianForm, positivity, sharp_matrix, sup_norm
from hcflow.lie import LieAlgebra

log = logging.getLogger(__name__)

REACHED_T_END = "ReachedTEnd"
BLOWUP = "BlowupDetected"
STEP_UNDERFLOW = "StepUnderflow"
MAX_STEPS = "MaxSteps"

MAX_SAMPLES = 10_000

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 10.0
_BETA = 0.04
_ALPHA = 0.2 - 0.75 * _BETA
# norm growth (relative to the start) that turns a step underflow into a blow-up
_UNDERFLOW_GROWTH = 100.0


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    t_end: float | None = None
    max_steps: int = 1_000_000
    blowup_norm: float = 1e12
    min_step: float = 1e-14
    sample_interval: float | None = None  # None: sample every accepted step
    max_samples: int = MAX_SAMPLES

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "blowup_norm", "min_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.sample_interval is not None and not self.sample_interval > 0:
            raise ValueError("sample_interval must be positive")
        if self.t_end is not None and self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")

    def replace(self, **changes) -> "IntegratorConfig":
        return IntegratorConfig(**{**asdict(self), **changes})

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Termination:
    kind: str
    t_last: float

    def __str__(self):
        return self.kind if self.kind in (REACHED_T_END, MAX_STEPS) else f"{self.kind}({self.t_last!r})"


@dataclass(eq=False)
class _RawSolution:
    times: np.ndarray
    states: np.ndarray
    termination: Termination
    steps: int
    rejected: int


def _thin(times: list, states: list, limit: int) -> None:
    # keep the first sample and every other one after it; always keep the last
    while len(times) > max(limit, 2):
        last_t, last_y = times[-1], states[-1]
        del times[1::2]
        del states[1::2]
        if times[-1] != last_t:
            times.append(last_t)
            states.append(last_y)


def _initial_step(rhs, t0, y0, f0, scale_fn, order=5) -> float:
    sc = scale_fn(y0, y0)
    d0 = np.sqrt(np.mean(np.abs(y0 / sc) ** 2))
    d1 = np.sqrt(np.mean(np.abs(f0 / sc) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = rhs(t0 + h0, y1)
    d2 = np.sqrt(np.mean(np.abs((f1 - f0) / sc) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / order)
    return float(min(100 * h0, h1))


def dopri54(rhs: Callable, y0: np.ndarray, cfg: IntegratorConfig,
            size: Callable[[np.ndarray], float],
            project: Callable[[np.ndarray], np.ndarray] | None = None) -> _RawSolution:
    """Adaptive Dormand-Prince 5(4) from ``t = 0``.

    ``size`` measures the state for blow-up detection; ``project`` (if given)
    is applied to every accepted state.
    """
    y = np.array(y0, dtype=np.result_type(y0, float))
    t = 0.0
    t_end = math.inf if cfg.t_end is None else float(cfg.t_end)
    size0 = size(y)
    times, states = [0.0], [y.copy()]
    interval = cfg.sample_interval
    next_sample_index = 1

    def scale(a, b):
        return cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(a), np.abs(b))

    f = rhs(t, y)
    if t_end == 0.0:
        return _RawSolution(np.array(times), np.array(states), Termination(REACHED_T_END, 0.0), 0, 0)
    h = _initial_step(rhs, t, y, f, scale)
    err_prev = 1e-4
    steps = rejected = 0
    termination = None
    k = [None] * 7

    while termination is None:
        if steps >= cfg.max_steps:
            termination = Termination(MAX_STEPS, t)
            break
        target = t_end
        if interval is not None:
            target = min(target, next_sample_index * interval)
        h_try = min(h, target - t)
        clamped = h_try < h
        if h < cfg.min_step * max(1.0, abs(t)):
            grown = size(y) > _UNDERFLOW_GROWTH * max(size0, np.finfo(float).tiny)
            termination = Termination(BLOWUP if grown else STEP_UNDERFLOW, t)
            break

        k[0] = f
        with np.errstate(over="ignore", invalid="ignore"):
            for s in range(1, 7):
                dy = sum(a * k[j] for j, a in enumerate(_A[s]) if a != 0.0)
                k[s] = rhs(t + _C[s] * h_try, y + h_try * dy)
            y_new = y + h_try * sum(b * k[j] for j, b in enumerate(_B) if b != 0.0)
            err_vec = h_try * sum(e * k[j] for j, e in enumerate(_E) if e != 0.0)
            err = float(np.sqrt(np.mean(np.abs(err_vec / scale(y, y_new)) ** 2)))
        steps += 1
        if not np.isfinite(err) or not np.all(np.isfinite(y_new)):
            err = math.inf

        if err <= 1.0:
            t_new = target if clamped or h_try == target - t else t + h_try
            if project is not None:
                y_new = project(y_new)
            t, y = t_new, y_new
            f = rhs(t, y) if project is not None else k[6]
            fac = _SAFETY * max(err, 1e-10) ** (-_ALPHA) * err_prev ** _BETA
            fac = min(_FAC_MAX, max(_FAC_MIN, fac))
            err_prev = max(err, 1e-4)
            h_new = h_try * fac
            h = max(h_new, h) if clamped else h_new

            on_grid = interval is not None and t == target and target < t_end
            if on_grid:
                next_sample_index += 1
            if interval is None or on_grid or t >= t_end:
                times.append(t)
                states.append(y.copy())
                if len(times) > 2 * cfg.max_samples:
                    _thin(times, states, cfg.max_samples)

            if size(y) > cfg.blowup_norm:
                termination = Termination(BLOWUP, t)
            elif t >= t_end:
                termination = Termination(REACHED_T_END, t)
        else:
            rejected += 1
            fac = _SAFETY * err ** (-_ALPHA) if np.isfinite(err) else _FAC_MIN
            h = h_try * min(1.0, max(_FAC_MIN, fac))

    if times[-1] != t:
        times.append(t)
        states.append(y.copy())
    _thin(times, states, cfg.max_samples)
    return _RawSolution(np.array(times), np.array(states), termination, steps, rejected)


# ---------------------------------------------------------------------------
# matrix flow
# ---------------------------------------------------------------------------

def _min_eigenvalue(m: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(m)[0])


@dataclass(eq=False)
class Trajectory:
    """Sampled solution of the flow.

    ``forms[i]`` is the coefficient matrix at ``times[i]``; ``monitors`` maps
    a name to one value per sample (always ``sup_norm`` and
    ``min_eigenvalue``, plus any user-registered quantities).
    """

    algebra: LieAlgebra
    times: np.ndarray
    forms: np.ndarray
    termination: Termination
    monitors: dict[str, np.ndarray] = field(default_factory=dict)
    config: IntegratorConfig | None = None
    steps: int = 0
    rejected: int = 0

    def __len__(self):
        return len(self.times)

    @property
    def samples(self) -> list[tuple[float, HermitianForm]]:
        return [(float(t), HermitianForm(m)) for t, m in zip(self.times, self.forms)]

    @property
    def final(self) -> HermitianForm:
        return HermitianForm(self.forms[-1])

    def form_at_sample(self, t: float) -> HermitianForm:
        """Form at the sample whose time equals ``t`` (to 1e-12 relative)."""
        idx = np.flatnonzero(np.isclose(self.times, t, rtol=1e-12, atol=1e-12))
        if idx.size == 0:
            raise KeyError(f"no sample at t = {t}")
        return HermitianForm(self.forms[idx[0]])

    @property
    def sup_norms(self) -> np.ndarray:
        return self.monitors["sup_norm"]


def _hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def integrate(alg: LieAlgebra, h0: HermitianForm, cfg: IntegratorConfig | None = None,
              conserved: Mapping[str, Callable[[np.ndarray], float]] | None = None) -> Trajectory:
    """Solve ``dh/dt = h#``, ``h(0) = h0``.

    Blow-up is a normal termination.  A step underflow without norm growth
    raises :class:`IntegrationError`, carrying the partial trajectory.
    """
    cfg = cfg or IntegratorConfig()
    if h0.dim != alg.dim:
        raise ValueError(f"form of dimension {h0.dim} on algebra of dimension {alg.dim}")
    if positivity(h0).status == "Indefinite":
        warnings.warn("initial form is indefinite; integrating anyway", RuntimeWarning, stacklevel=2)
    c = alg.c

    def rhs(_t, m):
        return 0.5 * sharp_matrix(c, m, m)

    raw = dopri54(rhs, h0.m.copy(), cfg, size=sup_norm, project=_hermitize)
    traj = _wrap(alg, raw, cfg, conserved)
    if raw.termination.kind == STEP_UNDERFLOW:
        raise IntegrationError(
            f"step size underflow at t = {raw.termination.t_last} without norm growth", traj)
    return traj


def _wrap(alg, raw: _RawSolution, cfg, conserved) -> Trajectory:
    monitors = {
        "sup_norm": np.array([sup_norm(m) for m in raw.states]),
        "min_eigenvalue": np.array([_min_eigenvalue(m) for m in raw.states]),
    }
    for name, fn in (conserved or {}).items():
        monitors[name] = np.array([float(fn(m)) for m in raw.states])
    return Trajectory(alg, raw.times, raw.states, raw.termination, monitors, cfg, raw.steps, raw.rejected)


# ---------------------------------------------------------------------------
# su(2) eigenvalue system
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class EigenTrajectory:
    times: np.ndarray
    values: np.ndarray  # shape (N, 3)
    termination: Termination

    def conserved(self, i: int, j: int) -> np.ndarray:
        return self.values[:, i] ** 2 - self.values[:, j] ** 2


def su2_diagonal_flow(lambda0, cfg: IntegratorConfig | None = None) -> EigenTrajectory:
    """Integrate ``l1' = l2 l3``, ``l2' = l1 l3``, ``l3' = l1 l2`` directly."""
    cfg = cfg or IntegratorConfig()
    lam = np.asarray(lambda0, dtype=float)
    if lam.shape != (3,) or np.any(lam <= 0):
        raise ValueError("lambda0 must be three positive reals")

    def rhs(_t, v):
        return np.array([v[1] * v[2], v[0] * v[2], v[0] * v[1]])

    raw = dopri54(rhs, lam, cfg, size=lambda v: float(np.max(np.abs(v))))
    out = EigenTrajectory(raw.times, raw.states, raw.termination)
    if raw.termination.kind == STEP_UNDERFLOW:
        raise IntegrationError(f"step size underflow at t = {raw.termination.t_last}", out)
    return out


# ---------------------------------------------------------------------------
# comparison principle
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class ComparisonSeries:
    times: np.ndarray
    min_eigenvalue: np.ndarray  # of h(t) - k(t)
    upper: Trajectory
    lower: Trajectory


def comparison_monitor(alg: LieAlgebra, h0: HermitianForm, k0: HermitianForm,
                       cfg: IntegratorConfig | None = None, tol: float = 1e-10) -> ComparisonSeries:
    """Integrate ``h`` and ``k`` on one time grid and track ``min eig(h - k)``.

    Requires ``h0 >= k0 >= 0`` up to ``tol``.  The grid is
    ``cfg.sample_interval`` or, when unset, ``t_end / 1000``.
    """
    cfg = cfg or IntegratorConfig()
    gap = _min_eigenvalue((h0 - k0).m)
    if gap < -tol:
        raise ValueError(f"h0 >= k0 fails: min eigenvalue of h0 - k0 is {gap:.3e}")
    low = _min_eigenvalue(k0.m)
    if low < -tol:
        raise ValueError(f"k0 >= 0 fails: min eigenvalue of k0 is {low:.3e}")
    if cfg.sample_interval is None:
        if cfg.t_end is None:
            raise ValueError("comparison needs a sample_interval or a finite t_end")
        cfg = cfg.replace(sample_interval=cfg.t_end / 1000)
    upper = integrate(alg, h0, cfg)
    lower = integrate(alg, k0, cfg)
    common, iu, il = np.intersect1d(upper.times, lower.times, return_indices=True)
    diffs = np.array([_min_eigenvalue(upper.forms[a] - lower.forms[b]) for a, b in zip(iu, il)])
    return ComparisonSeries(common, diffs, upper, lower)
