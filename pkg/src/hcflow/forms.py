"""Hermitian forms on a Lie algebra and the ``#`` operation.

A form is stored by its coefficient matrix ``m`` in the algebra basis,
``m[a, b]`` being the coefficient of ``e_a (x) conj(e_b)``.  For the
complex ``#`` the second structure-constant factor is conjugated:

    (h # k)[a, b] = sum c[e, d, a] * conj(c[g, t, b]) * h[e, g] * k[d, t]
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from hcflow.lie import Homomorphism, LieAlgebra


@dataclass(frozen=True, eq=False)
class HermitianForm:
    """Hermitian coefficient matrix; symmetrized as ``(m + m*)/2`` on construction."""

    m: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"form matrix must be square, got shape {m.shape}")
        m = 0.5 * (m + m.conj().T)
        m.flags.writeable = False
        object.__setattr__(self, "m", m)

    @property
    def dim(self) -> int:
        return self.m.shape[0]

    @classmethod
    def identity(cls, dim: int) -> "HermitianForm":
        return cls(np.eye(dim))

    @classmethod
    def diag(cls, values) -> "HermitianForm":
        return cls(np.diag(np.asarray(values, dtype=complex)))

    @classmethod
    def zeros(cls, dim: int) -> "HermitianForm":
        return cls(np.zeros((dim, dim)))

    def __add__(self, other):
        return HermitianForm(self.m + other.m)

    def __sub__(self, other):
        return HermitianForm(self.m - other.m)

    def __mul__(self, scalar):
        return HermitianForm(self.m * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return HermitianForm(-self.m)

    def to_entries(self) -> list[list]:
        """Serialize as ``[a, b, re, im]`` rows for ``a <= b``."""
        rows = []
        for a in range(self.dim):
            for b in range(a, self.dim):
                v = self.m[a, b]
                rows.append([a, b, float(v.real), float(v.imag)])
        return rows

    @classmethod
    def from_entries(cls, dim: int, rows) -> "HermitianForm":
        m = np.zeros((dim, dim), dtype=complex)
        for a, b, re, im in rows:
            a, b = int(a), int(b)
            if a > b:
                raise ValueError(f"form entries must have a <= b, got ({a}, {b})")
            m[a, b] = complex(re, im)
            m[b, a] = complex(re, -im)
        return cls(m)


@dataclass(frozen=True)
class PositivityReport:
    status: str  # "PositiveDefinite" | "PositiveSemidefinite" | "Indefinite"
    min_eigenvalue: float
    max_eigenvalue: float
    kernel_basis: list = field(default_factory=list)

    @property
    def kernel_dim(self) -> int:
        return len(self.kernel_basis)


POSITIVE_DEFINITE = "PositiveDefinite"
POSITIVE_SEMIDEFINITE = "PositiveSemidefinite"
INDEFINITE = "Indefinite"


def _as_matrix(h) -> np.ndarray:
    return h.m if isinstance(h, HermitianForm) else np.asarray(h, dtype=complex)


def _check_dims(alg: LieAlgebra, *forms) -> None:
    for f in forms:
        if f.dim != alg.dim:
            raise ValueError(f"form of dimension {f.dim} on algebra of dimension {alg.dim}")


def sharp_matrix(c: np.ndarray, h: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Raw ``h # k`` on coefficient matrices (no symmetrization)."""
    # three O(dim^4) matrix products instead of one O(dim^6) sum
    n = c.shape[0]
    t = (h.T @ c.reshape(n, n * n)).reshape(n, n, n)    # t[g, d, a] = sum_e h[e,g] c[e,d,a]
    t = t.transpose(0, 2, 1) @ k                        # t[g, a, t] = sum_d t[g,d,a] k[d,t]
    t = t.transpose(1, 0, 2).reshape(n, n * n)          # t[a, (g,t)]
    return t @ c.conj().reshape(n * n, n)               # [a, b]


def sharp(alg: LieAlgebra, h: HermitianForm, k: HermitianForm) -> HermitianForm:
    _check_dims(alg, h, k)
    return HermitianForm(sharp_matrix(alg.c, h.m, k.m))


def sharp_square(alg: LieAlgebra, h: HermitianForm) -> HermitianForm:
    """``h# = (h # h) / 2``."""
    _check_dims(alg, h)
    return HermitianForm(0.5 * sharp_matrix(alg.c, h.m, h.m))


def complexify(h_real) -> HermitianForm:
    """Hermitian form with the same (real) coefficients as a real symmetric form."""
    a = np.asarray(h_real)
    if np.iscomplexobj(a):
        if np.any(a.imag != 0):
            raise ValueError("complexify expects a real matrix")
        a = a.real
    a = a.astype(float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or not np.array_equal(a, a.T):
        raise ValueError("complexify expects a real symmetric matrix")
    return HermitianForm(a.astype(complex))


def real_sharp_square(alg: LieAlgebra, h_real) -> np.ndarray:
    """``#``-square of a real symmetric form; requires real structure constants."""
    if np.any(alg.c.imag != 0):
        raise ValueError("real sharp needs real structure constants")
    c = alg.c.real
    h = np.asarray(h_real, dtype=float)
    return 0.5 * np.einsum("eda,gtb,eg,dt->ab", c, c, h, h)


def default_tolerance(h: HermitianForm) -> float:
    eig = np.linalg.eigvalsh(h.m)
    top = float(eig[-1]) if eig.size else 0.0
    return 1e-10 * max(1.0, top)


def positivity(h: HermitianForm, tol: float | None = None) -> PositivityReport:
    """Classify ``h`` by its spectrum.

    Definite if the smallest eigenvalue exceeds ``tol``, semidefinite if it
    exceeds ``-tol``.  ``kernel_basis`` holds eigenvectors whose eigenvalue
    has modulus below ``tol``.  Default ``tol`` is ``1e-10 * max(1, max_eig)``.
    """
    w, v = np.linalg.eigh(h.m)
    if tol is None:
        tol = 1e-10 * max(1.0, float(w[-1]))
    if tol <= 0:
        raise ValueError("tol must be positive")
    lo, hi = float(w[0]), float(w[-1])
    if lo > tol:
        status = POSITIVE_DEFINITE
    elif lo > -tol:
        status = POSITIVE_SEMIDEFINITE
    else:
        status = INDEFINITE
    kernel = [v[:, i].copy() for i in range(w.size) if abs(w[i]) < tol]
    return PositivityReport(status, lo, hi, kernel)


def pushforward(rho: Homomorphism, h: HermitianForm) -> HermitianForm:
    """``rho m rho*``."""
    if h.dim != rho.source.dim:
        raise ValueError(f"form of dimension {h.dim} but map source has dimension {rho.source.dim}")
    r = rho.matrix
    return HermitianForm(r @ h.m @ r.conj().T)


def pairing(inner: HermitianForm, x: np.ndarray, y: np.ndarray) -> complex:
    """Pairing on g (x) conj(g) induced by ``inner``, extended complex-bilinearly.

    On real forms this is the usual inner product.  The bilinear extension
    (rather than conjugating ``y``) keeps ``<h # k, l>`` symmetric in all
    three arguments for complex Hermitian forms.
    """
    g = inner.m
    return complex(np.einsum("ab,cd,ac,bd->", x, y, g, g.conj()))


def trilinear(alg: LieAlgebra, inner: HermitianForm, h: HermitianForm,
              k: HermitianForm, l: HermitianForm) -> float:
    """``Re <h # k, l>`` with the pairing induced by ``inner``."""
    _check_dims(alg, inner, h, k, l)
    if positivity(inner).status != POSITIVE_DEFINITE:
        raise ValueError("inner must be positive definite")
    return pairing(inner, sharp_matrix(alg.c, h.m, k.m), l.m).real


def sup_norm(h) -> float:
    """Largest absolute eigenvalue of the coefficient matrix."""
    m = _as_matrix(h)
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvalsh(m))))


def frobenius(h) -> float:
    return float(np.linalg.norm(_as_matrix(h)))


def frobenius_inner(h, k) -> complex:
    return complex(np.vdot(_as_matrix(k), _as_matrix(h)))
