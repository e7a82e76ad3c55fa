"""Homogeneous models as families of affine holomorphic vector fields on C^n.

Each basis element of the algebra acts by a field ``s(z) = A z + b``.  The
induced (co)metric is ``g_upper = E h E*`` with ``E[i, a] = s_a(z)^i``.  The
torsion-twisted Chern-Ricci form of the induced metric is computed two
independent ways:

* ``theta_coordinate`` evaluates the coordinate formula in the derivatives of
  ``g_upper`` (exact for affine fields, with a finite-difference fallback);
* ``theta_brackets`` sums ``[s_a, s_b] (x) conj([s_a, s_b]) / 2`` over an
  ``h``-orthonormal frame.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from hcflow.errors import EvaluationError, ValidationError
from hcflow.forms import HermitianForm, sharp_square
from hcflow.lie import LieAlgebra, construct_algebra, parse_spec

BRACKET_TOL = 1e-10
HOPF_GUARD = 1e-6


@dataclass(frozen=True, eq=False)
class AffineField:
    """The holomorphic field ``z -> A z + b``."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.array(self.A, dtype=complex)
        b = np.array(self.b, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or b.shape != (a.shape[0],):
            raise ValueError(f"incompatible field shapes A {a.shape}, b {b.shape}")
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.b.shape[0]

    def __call__(self, z) -> np.ndarray:
        return self.A @ np.asarray(z, dtype=complex) + self.b

    def __add__(self, other):
        return AffineField(self.A + other.A, self.b + other.b)

    def scale(self, s: complex) -> "AffineField":
        return AffineField(s * self.A, s * self.b)


def field_bracket(x: AffineField, y: AffineField) -> AffineField:
    """``[Az + b, Cz + d] = (CA - AC) z + (Cb - Ad)``."""
    return AffineField(y.A @ x.A - x.A @ y.A, y.A @ x.b - x.A @ y.b)


@dataclass(frozen=True, eq=False)
class HomogeneousModel:
    alg: LieAlgebra
    fields: tuple[AffineField, ...]
    ambient_dim: int
    sign_convention: int
    guard_radius: float = 0.0  # points with |z| <= guard_radius are excluded
    spec: dict = field(default_factory=dict)
    bracket_residual: float = 0.0

    def in_domain(self, z) -> bool:
        if self.guard_radius <= 0:
            return True
        return bool(np.linalg.norm(np.asarray(z, dtype=complex)) > self.guard_radius)

    @property
    def name(self) -> str:
        kind = self.spec.get("kind", "custom")
        return f"{kind}:{self.spec['n']}" if "n" in self.spec else kind

    @property
    def linear_parts(self) -> np.ndarray:
        return np.stack([f.A for f in self.fields])  # (dim, n, n)

    def evaluation_matrix(self, z) -> np.ndarray:
        """``E[i, a] = s_a(z)^i``, shape (n, dim)."""
        z = np.asarray(z, dtype=complex)
        return np.column_stack([f(z) for f in self.fields])


def _measure_sign(alg: LieAlgebra, fields: Sequence[AffineField]) -> tuple[int, float, tuple]:
    """Return the sign making field brackets match the algebra, its residual and worst pair."""
    best = None
    for sign in (1, -1):
        worst, pair = 0.0, None
        for a, b in itertools.combinations(range(alg.dim), 2):
            fb = field_bracket(fields[a], fields[b])
            expect_A = sign * sum(alg.c[a, b, g] * fields[g].A for g in range(alg.dim))
            expect_b = sign * sum(alg.c[a, b, g] * fields[g].b for g in range(alg.dim))
            dev = max(np.abs(fb.A - expect_A).max(initial=0.0), np.abs(fb.b - expect_b).max(initial=0.0))
            if dev > worst:
                worst, pair = dev, (alg.basis_labels[a], alg.basis_labels[b])
        if best is None or worst < best[1]:
            best = (sign, worst, pair)
    return best


def make_model(alg: LieAlgebra, fields: Sequence[AffineField], guard_radius: float = 0.0,
               spec: dict | None = None) -> HomogeneousModel:
    """Validate bracket compatibility (sign measured) and assemble a model."""
    fields = tuple(fields)
    if len(fields) != alg.dim:
        raise ValidationError(f"{len(fields)} fields for an algebra of dimension {alg.dim}")
    dims = {f.n for f in fields}
    if len(dims) != 1:
        raise ValidationError(f"fields act on different ambient dimensions {sorted(dims)}")
    sign, worst, pair = _measure_sign(alg, fields)
    if worst > BRACKET_TOL:
        raise ValidationError(
            f"field brackets do not realize the algebra: worst pair {pair}, residual {worst:.3e}")
    return HomogeneousModel(alg, fields, dims.pop(), sign, guard_radius, dict(spec or {}), worst)


def _hopf_sl2() -> HomogeneousModel:
    sigma = [
        np.array([[0, 1], [1, 0]], dtype=complex),
        np.array([[0, -1j], [1j, 0]], dtype=complex),
        np.array([[1, 0], [0, -1]], dtype=complex),
    ]
    fields = [AffineField(-0.5j * s, np.zeros(2)) for s in sigma]
    return make_model(construct_algebra("su2c"), fields, HOPF_GUARD, {"kind": "hopf_sl2"})


def _heisenberg_left() -> HomogeneousModel:
    # coordinates (a, c, b); basis (E12, E23, E13) acts by d_a, d_c + a d_b, d_b
    zero = np.zeros((3, 3))
    second = np.zeros((3, 3))
    second[2, 0] = 1.0
    fields = [
        AffineField(zero, [1, 0, 0]),
        AffineField(second, [0, 1, 0]),
        AffineField(zero, [0, 0, 1]),
    ]
    return make_model(construct_algebra("strict_upper:3"), fields, 0.0, {"kind": "heisenberg_left"})


def _translations(n: int) -> HomogeneousModel:
    fields = [AffineField(np.zeros((n, n)), np.eye(n)[k]) for k in range(n)]
    return make_model(construct_algebra({"kind": "abelian", "n": n}), fields, 0.0,
                      {"kind": "translations", "n": n})


def _pairs_to_complex(flat) -> np.ndarray:
    arr = np.asarray(flat, dtype=float)
    if arr.size % 2:
        raise ValueError("expected interleaved re/im values")
    return arr[0::2] + 1j * arr[1::2]


def build_model(spec) -> HomogeneousModel:
    """Build a model from a spec: ``hopf_sl2``, ``heisenberg_left``,
    ``translations:n`` or ``{"kind": "custom", "algebra": ..., "fields": ...}``.

    Custom fields are ``[A, b]`` pairs of flat interleaved re/im lists, ``A``
    row-major; an optional ``guard_radius`` excludes a ball around 0.
    """
    spec = parse_spec(spec)
    kind = spec.get("kind")
    if kind == "hopf_sl2":
        return _hopf_sl2()
    if kind == "heisenberg_left":
        return _heisenberg_left()
    if kind == "translations":
        n = int(spec.get("n", 0))
        if n < 1:
            raise ValueError("translations requires n >= 1")
        return _translations(n)
    if kind == "custom":
        alg = construct_algebra(spec["algebra"])
        fields = []
        for a_flat, b_flat in spec["fields"]:
            b = _pairs_to_complex(b_flat)
            a = _pairs_to_complex(a_flat).reshape(b.size, b.size)
            fields.append(AffineField(a, b))
        return make_model(alg, fields, float(spec.get("guard_radius", 0.0)), spec)
    raise ValueError(f"unknown model kind {kind!r}")


def model_to_spec(model: HomogeneousModel) -> dict:
    if model.spec.get("kind") in ("hopf_sl2", "heisenberg_left", "translations"):
        return dict(model.spec)

    def flat(v):
        v = np.asarray(v).ravel()
        return [float(x) for pair in zip(v.real, v.imag) for x in pair]

    return {
        "kind": "custom",
        "algebra": model.alg.spec,
        "fields": [[flat(f.A), flat(f.b)] for f in model.fields],
        "guard_radius": model.guard_radius,
    }


# ---------------------------------------------------------------------------
# metrics and Theta
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MetricSample:
    z: np.ndarray
    g_upper: np.ndarray
    g_lower: np.ndarray


def _check_point(model: HomogeneousModel, h: HermitianForm, z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if z.shape != (model.ambient_dim,):
        raise ValueError(f"point must have {model.ambient_dim} coordinates")
    if h.dim != model.alg.dim:
        raise ValueError(f"form of dimension {h.dim} on a model of dimension {model.alg.dim}")
    if not model.in_domain(z):
        raise EvaluationError(f"point {z} is outside the model domain")
    return z


def ev_pushforward(model: HomogeneousModel, h: HermitianForm, z) -> np.ndarray:
    """``E h E*`` at ``z``."""
    e = model.evaluation_matrix(z)
    return e @ h.m @ e.conj().T


def induced_metric(model: HomogeneousModel, h: HermitianForm, z) -> MetricSample:
    z = _check_point(model, h, z)
    upper = ev_pushforward(model, h, z)
    upper = 0.5 * (upper + upper.conj().T)
    w = np.linalg.eigvalsh(upper)
    if w[0] <= 1e-14 * max(abs(w[-1]), 1e-300):
        raise EvaluationError(f"induced metric is singular at z = {z} (eigenvalues {w})")
    lower = np.linalg.inv(upper)
    return MetricSample(z, upper, 0.5 * (lower + lower.conj().T))


def _analytic_derivatives(model, h, z):
    A = model.linear_parts  # A[a, i, m] = d_m s_a^i
    E = model.evaluation_matrix(z)  # E[m, a]
    hm = h.m
    d = np.einsum("ab,aim,nb->inm", hm, A, E.conj())  # d_m g^{i nbar}
    dbar = np.einsum("ab,ma,bjn->mjn", hm, E, A.conj())  # d_nbar g^{m jbar}
    dd = np.einsum("ab,aim,bjn->ijmn", hm, A, A.conj())  # d_m d_nbar g^{i jbar}
    return d, dbar, dd


def _fd_derivatives(model, h, z, step=None):
    n = model.ambient_dim
    step = 1e-5 * (1.0 + np.linalg.norm(z)) if step is None else step

    def g(w):
        return ev_pushforward(model, h, w)

    dirs = [np.eye(n, dtype=complex)[k] for k in range(n)]
    dx = [(g(z + step * e) - g(z - step * e)) / (2 * step) for e in dirs]
    dy = [(g(z + 1j * step * e) - g(z - 1j * step * e)) / (2 * step) for e in dirs]
    # Wirtinger: d_m = (d_x - i d_y)/2, d_mbar = (d_x + i d_y)/2; d[i, n, m] = d_m g^{i nbar}
    d_hol = np.stack([(dx[m] - 1j * dy[m]) / 2 for m in range(n)], axis=-1)  # [i, j, m]
    d_anti = np.stack([(dx[m] + 1j * dy[m]) / 2 for m in range(n)], axis=-1)
    d = d_hol
    dbar = d_anti  # dbar[m, j, n] = d_nbar g^{m jbar}

    real_dirs = [step * e for e in dirs] + [1j * step * e for e in dirs]

    def second(u, v):
        return (g(z + u + v) - g(z + u - v) - g(z - u + v) + g(z - u - v)) / (4 * step * step)

    dd = np.zeros((n, n, n, n), dtype=complex)
    for m in range(n):
        for k in range(n):
            xx = second(real_dirs[m], real_dirs[k])
            yy = second(real_dirs[n + m], real_dirs[n + k])
            xy = second(real_dirs[m], real_dirs[n + k])
            yx = second(real_dirs[n + m], real_dirs[k])
            dd[:, :, m, k] = 0.25 * ((xx + yy) + 1j * (xy - yx))
    return d, dbar, dd


def theta_coordinate(model: HomogeneousModel, h: HermitianForm, z, method: str = "analytic") -> np.ndarray:
    """``Theta^{i jbar} = g^{m nbar} d_m d_nbar g^{i jbar} - d_m g^{i nbar} d_nbar g^{m jbar}``.

    ``g^{..}`` is the induced cometric ``E h E*``; ``method`` is
    ``"analytic"`` or ``"fd"`` (central differences).
    """
    sample = induced_metric(model, h, z)
    if method == "analytic":
        d, dbar, dd = _analytic_derivatives(model, h, sample.z)
    elif method == "fd":
        d, dbar, dd = _fd_derivatives(model, h, sample.z)
    else:
        raise ValueError(f"unknown method {method!r}")
    first = np.einsum("mn,ijmn->ij", sample.g_upper, dd)
    second = np.einsum("inm,mjn->ij", d, dbar)
    return first - second


def _cholesky(h: HermitianForm) -> np.ndarray:
    try:
        return np.linalg.cholesky(h.m)
    except np.linalg.LinAlgError as exc:
        raise ValueError("h must be positive definite") from exc


def orthonormal_frame(model: HomogeneousModel, h: HermitianForm) -> list[AffineField]:
    """Fields ``sum_a L[a, k] s_a`` for ``h = L L*``."""
    L = _cholesky(h)
    As = model.linear_parts
    bs = np.stack([f.b for f in model.fields])
    return [AffineField(np.tensordot(L[:, k], As, axes=1), L[:, k] @ bs) for k in range(model.alg.dim)]


def theta_brackets(model: HomogeneousModel, h: HermitianForm, z) -> np.ndarray:
    """``(1/2) sum_{a,b} [s_a, s_b](z) (x) conj([s_a, s_b](z))`` over an h-orthonormal frame."""
    frame = orthonormal_frame(model, h)
    z = _check_point(model, h, z)
    n = model.ambient_dim
    out = np.zeros((n, n), dtype=complex)
    for a, b in itertools.combinations(range(len(frame)), 2):
        v = field_bracket(frame[a], frame[b])(z)
        out += np.outer(v, v.conj())  # the (a, b) and (b, a) terms together cancel the 1/2
    return out


def theta_from_sharp(model: HomogeneousModel, h: HermitianForm, z) -> np.ndarray:
    """Pushforward of ``h#`` through the evaluation map at ``z``."""
    _check_point(model, h, z)
    return ev_pushforward(model, sharp_square(model.alg, h), z)


def relative_deviation(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(np.linalg.norm(a), np.linalg.norm(b))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(a - b) / scale)


def scale_static_check(model: HomogeneousModel, h: HermitianForm, points) -> tuple[float, float]:
    """Least-squares ``lambda`` with ``Theta(z) = lambda E h E*`` and the worst relative deviation."""
    pts = [np.asarray(p, dtype=complex) for p in points]
    pts = [p for p in pts if model.in_domain(p)]
    if len(pts) < 2:
        raise ValueError("scale_static_check needs at least 2 points in the model domain")
    thetas = [theta_brackets(model, h, p) for p in pts]
    metrics = [ev_pushforward(model, h, p) for p in pts]
    num = sum(np.vdot(g, th).real for th, g in zip(thetas, metrics))
    den = sum(np.vdot(g, g).real for g in metrics)
    lam = num / den if den > 0 else 0.0
    dev = max(relative_deviation(th, lam * g) for th, g in zip(thetas, metrics))
    return float(lam), dev


def random_points(model: HomogeneousModel, count: int, rng: np.random.Generator,
                  r_min: float = 0.1, r_max: float = 10.0) -> np.ndarray:
    """Points with log-uniform modulus in ``(r_min, r_max)`` and uniform direction."""
    n = model.ambient_dim
    raw = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    radii = np.exp(rng.uniform(np.log(r_min), np.log(r_max), size=count))
    return raw * radii[:, None]
