"""Growth-regime classification, blow-up times, pinching and Einstein residuals."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from hcflow.errors import InsufficientDataError
from hcflow.flow import BLOWUP, Trajectory
from hcflow.forms import (
    HermitianForm,
    POSITIVE_DEFINITE,
    frobenius,
    frobenius_inner,
    positivity,
    sharp,
    sharp_square,
    sup_norm,
)
from hcflow.lie import LieAlgebra, annihilator, classify_algebra

POLYNOMIAL = "Polynomial"
EXPONENTIAL = "Exponential"
FINITE_TIME_BLOWUP = "FiniteTimeBlowup"

MIN_SAMPLES_PAST_ONE = 50
MIN_BLOWUP_SAMPLES = 8
SIMPLER_MODEL_MARGIN = 0.05
KERNEL_TOL = 1e-8


@dataclass
class GrowthReport:
    regime: str
    parameter: float  # degree, rate or t_star depending on regime
    fit_quality: float
    window: tuple[float, float]
    diagnostics: dict = field(default_factory=dict)

    @property
    def degree(self) -> float:
        if self.regime != POLYNOMIAL:
            raise AttributeError("degree is defined for polynomial growth only")
        return self.parameter

    @property
    def rate(self) -> float:
        if self.regime != EXPONENTIAL:
            raise AttributeError("rate is defined for exponential growth only")
        return self.parameter

    @property
    def t_star(self) -> float:
        if self.regime != FINITE_TIME_BLOWUP:
            raise AttributeError("t_star is defined for finite-time blow-up only")
        return self.parameter

    def to_dict(self) -> dict:
        key = {POLYNOMIAL: "degree", EXPONENTIAL: "rate", FINITE_TIME_BLOWUP: "t_star"}[self.regime]
        out = asdict(self)
        out.pop("parameter")
        out[key] = self.parameter
        out["window"] = list(self.window)
        return out


@dataclass
class EinsteinReport:
    lambda_star: float
    residual: float

    def to_dict(self) -> dict:
        return asdict(self)


def _linear_fit(x: np.ndarray, y: np.ndarray):
    a = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    resid = y - a @ coef
    return float(coef[0]), float(coef[1]), float(np.mean(resid ** 2))


def _r_squared(y: np.ndarray, mse: float) -> float:
    var = float(np.var(y))
    if var <= 1e-300:
        return 1.0
    return min(1.0, max(0.0, 1.0 - mse / var))


def _blowup_fit(t: np.ndarray, s: np.ndarray, t_last: float):
    """Fit ``s = -beta log(t* - t) + c`` with ``t*`` in ``(t_last, t_last + span]``."""
    span = max(t[-1] - t[0], 1e-12)
    lo = math.log(8 * np.finfo(float).eps * max(1.0, abs(t_last)))
    hi = math.log(span)

    def mse_at(x):
        gap = t_last + math.exp(x) - t
        if np.any(gap <= 0):
            return math.inf
        return _linear_fit(-np.log(gap), s)[2]

    grid = np.linspace(lo, hi, 241)
    vals = [mse_at(x) for x in grid]
    best = int(np.argmin(vals))
    a, b = grid[max(best - 1, 0)], grid[min(best + 1, len(grid) - 1)]
    res = minimize_scalar(mse_at, bounds=(a, b), method="bounded", options={"xatol": 1e-10})
    x = res.x if res.fun <= vals[best] else grid[best]
    t_star = t_last + math.exp(x)
    beta, c, mse = _linear_fit(-np.log(t_star - t), s)
    return t_star, beta, c, mse


def classify_growth(traj: Trajectory) -> GrowthReport:
    """Pick polynomial, exponential or finite-time blow-up for ``log sup_norm``.

    Non-blow-up runs use the trailing half of the samples; blow-up runs the
    trailing quarter.  The blow-up model is a candidate only for trajectories
    that terminated by blow-up.  The polynomial model wins whenever its mean
    squared residual is within 5% of the best competitor.
    """
    t = np.asarray(traj.times, dtype=float)
    norms = np.asarray(traj.sup_norms, dtype=float)
    blowup = traj.termination.kind == BLOWUP

    if blowup:
        n = len(t)
        if n < MIN_BLOWUP_SAMPLES:
            raise InsufficientDataError(f"blow-up fit needs >= {MIN_BLOWUP_SAMPLES} samples, got {n}")
        start = max(0, n - max(MIN_BLOWUP_SAMPLES, n // 4))
    else:
        past_one = int(np.sum(t > 1.0))
        if past_one < MIN_SAMPLES_PAST_ONE:
            raise InsufficientDataError(
                f"growth fit needs >= {MIN_SAMPLES_PAST_ONE} samples past t = 1, got {past_one}")
        start = len(t) // 2
    tw = t[start:]
    sw = np.log(np.maximum(norms[start:], np.finfo(float).tiny))
    keep = tw > 0
    tw, sw = tw[keep], sw[keep]

    degree, c_poly, mse_poly = _linear_fit(np.log(tw), sw)
    rate, c_exp, mse_exp = _linear_fit(tw, sw)
    diagnostics = {
        "polynomial": {"degree": degree, "intercept": c_poly, "mse": mse_poly},
        "exponential": {"rate": rate, "intercept": c_exp, "mse": mse_exp},
    }
    candidates = {EXPONENTIAL: (mse_exp, rate)}
    if blowup:
        t_star, beta, c_bl, mse_bl = _blowup_fit(tw, sw, float(traj.termination.t_last))
        diagnostics["blowup"] = {"t_star": t_star, "beta": beta, "intercept": c_bl, "mse": mse_bl}
        candidates[FINITE_TIME_BLOWUP] = (mse_bl, t_star)

    best_other = min(candidates, key=lambda k: candidates[k][0])
    if mse_poly <= (1.0 + SIMPLER_MODEL_MARGIN) * candidates[best_other][0]:
        regime, param, mse = POLYNOMIAL, degree, mse_poly
    else:
        regime = best_other
        mse, param = candidates[best_other]
    return GrowthReport(regime, float(param), _r_squared(sw, mse),
                        (float(tw[0]), float(tw[-1])), diagnostics)


def estimate_blowup_time(traj: Trajectory) -> float:
    """Root of a linear fit to ``1 / sup_norm`` over the trailing quarter of samples."""
    if traj.termination.kind != BLOWUP:
        raise ValueError(f"trajectory terminated with {traj.termination.kind}, not a blow-up")
    t = np.asarray(traj.times, dtype=float)
    n = len(t)
    if n < MIN_BLOWUP_SAMPLES:
        raise InsufficientDataError(f"need >= {MIN_BLOWUP_SAMPLES} samples, got {n}")
    start = max(0, n - max(MIN_BLOWUP_SAMPLES, n // 4))
    inv = 1.0 / np.asarray(traj.sup_norms[start:], dtype=float)
    slope, intercept, _ = _linear_fit(t[start:], inv)
    if slope >= 0:
        raise ValueError("inverse norm is not decreasing; no blow-up time can be extrapolated")
    return -intercept / slope


def pinching_distance(h: np.ndarray, target: np.ndarray) -> float:
    x = h / sup_norm(h)
    unit = target / np.linalg.norm(target)
    s = max(0.0, frobenius_inner(x, unit).real)
    return float(np.linalg.norm(x - s * unit))


def pinching_series(traj: Trajectory, target: HermitianForm) -> np.ndarray:
    """Distance of ``h(t) / sup_norm(h(t))`` to the ray through ``target``.

    The target is normalized to unit Frobenius norm, so the series does not
    depend on its scale.  No Ad-orbit search is done.
    """
    if frobenius(target) == 0.0:
        raise ValueError("pinching target must be nonzero")
    return np.array([pinching_distance(m, target.m) for m in traj.forms])


def einstein_residual(alg: LieAlgebra, h: HermitianForm) -> EinsteinReport:
    """Best ``lambda`` with ``h# ~ lambda h`` and the relative Frobenius residual.

    The residual is ``|h# - lambda h| / |lambda h|``, which is invariant under
    ``h -> c h`` (``h#`` is quadratic, so ``lambda`` scales by ``c``).  When
    ``h# = 0`` it is 0; when ``lambda <= 0`` but ``h# != 0`` it is measured
    against ``|h#|`` instead (1 for ``lambda = 0``).
    """
    norm = frobenius(h)
    if norm == 0.0:
        raise ValueError("einstein_residual needs a nonzero form")
    hs = sharp_square(alg, h)
    lam = frobenius_inner(hs, h).real / norm ** 2
    miss = frobenius(hs.m - lam * h.m)
    if miss == 0.0:
        residual = 0.0
    elif lam > 0:
        residual = miss / (lam * norm)
    else:
        residual = miss / frobenius(hs)
    return EinsteinReport(float(lam), float(residual))


def einstein_normalize(alg: LieAlgebra, h: HermitianForm) -> HermitianForm:
    """Rescale ``h`` so that its Einstein constant becomes 1.

    Uses ``(c h)# = c^2 h#``: dividing by ``lambda*`` fixes the constant.
    """
    lam = einstein_residual(alg, h).lambda_star
    if lam <= 0:
        raise ValueError("Einstein constant is not positive; cannot normalize")
    return h * (1.0 / lam)


@dataclass
class KernelCheck:
    agree: bool
    kernel_dim: int
    expected_dim: int
    kernel_basis: np.ndarray
    annihilator_basis: np.ndarray


def _rank(m: np.ndarray, tol: float) -> int:
    if m.size == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    return int(np.sum(s > tol))


def kernel_annihilator_check(alg: LieAlgebra, h: HermitianForm, k: HermitianForm) -> KernelCheck:
    """Compare ``ker(h # k)`` with the annihilator of ``[g, g]`` by rank tests."""
    for name, f in (("h", h), ("k", k)):
        if positivity(f).status != POSITIVE_DEFINITE:
            raise ValueError(f"{name} must be positive definite")
    prod = sharp(alg, h, k)
    top = float(np.max(np.abs(np.linalg.eigvalsh(prod.m)))) if alg.dim else 0.0
    rep = positivity(prod, tol=KERNEL_TOL * max(1.0, top))
    kern = np.column_stack(rep.kernel_basis) if rep.kernel_basis else np.zeros((alg.dim, 0), complex)
    derived = classify_algebra(alg).derived_subalgebra_basis
    ann = annihilator(derived, alg.dim)
    rk, ra = _rank(kern, KERNEL_TOL), _rank(ann, KERNEL_TOL)
    joint = _rank(np.hstack([kern, ann]), KERNEL_TOL)
    agree = rk == ra == joint
    return KernelCheck(agree, kern.shape[1], ann.shape[1], kern, ann)
