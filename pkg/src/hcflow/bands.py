"""Closed-form band solutions on strictly upper-triangular and Borel algebras.

A band form puts the same coefficient ``f[k]`` on every ``E_ij (x) conj(E_ij)``
with ``j - i = k``.  The flow keeps such forms diagonal and reduces to one
scalar ODE per band.  Counting bracket pairs directly gives

    strict upper:  f[k]' = sum_{j=1}^{k-1} f[j] f[k-j]
    Borel:         f[k]' = 2 f[0] f[k] + sum_{j=1}^{k-1} f[j] f[k-j],   f[0]' = 0

which are solved here exactly, with rational coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from hcflow.forms import HermitianForm
from hcflow.lie import LieAlgebra

NILPOTENT_POLYNOMIAL = "NilpotentPolynomial"
BOREL_EXPONENTIAL = "BorelExponential"

Poly = list  # ascending coefficients, Fraction entries


def _pmul(p: Poly, q: Poly) -> Poly:
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a:
            for j, b in enumerate(q):
                out[i + j] += a * b
    return out


def _padd(p: Poly, q: Poly) -> Poly:
    n = max(len(p), len(q))
    return [(p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n)]


def _trim(p: Poly) -> Poly:
    p = list(p)
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return p


def _convolution(bands: list[Poly], k: int) -> Poly:
    acc: Poly = [Fraction(0)]
    for j in range(1, k):
        acc = _padd(acc, _pmul(bands[j], bands[k - j]))
    return acc


@dataclass(frozen=True)
class BandSolution:
    """Per-band exact coefficients.

    For ``NilpotentPolynomial`` each band is a polynomial in ``t``.  For
    ``BorelExponential`` band 0 is constant and band ``k >= 1`` is a
    polynomial in ``u = exp(rate * t)`` with zero constant term, where
    ``rate = 2 f[0]``.
    """

    kind: str
    n: int
    bands: tuple[tuple[Fraction, ...], ...]
    rate: Fraction = Fraction(0)
    first_band: int = 1  # index of bands[0]: 1 for strict upper, 0 for Borel

    def degree(self, k: int) -> int:
        return len(_trim(list(self.bands[k - self.first_band]))) - 1

    def evaluate(self, t: float) -> np.ndarray:
        """Band values at time ``t``, ordered from ``first_band`` upward."""
        if self.kind == BOREL_EXPONENTIAL:
            x = math.exp(float(self.rate) * t)
        else:
            x = t
        return np.array([_horner(b, x) for b in self.bands])

    def top_rate(self) -> float:
        """Asymptotic exponential rate of the last band (Borel only)."""
        return float(self.rate) * self.degree(self.n - 1)


def _horner(coeffs, x: float) -> float:
    acc = 0.0
    for a in reversed(coeffs):
        acc = acc * x + float(a)
    return acc


def _fractions(values) -> list[Fraction]:
    out = []
    for v in values:
        if isinstance(v, Fraction):
            out.append(v)
        else:
            out.append(Fraction(v) if isinstance(v, int) else Fraction(float(v)))
    return out


def _nilpotent_bands(f: list[Fraction]) -> list[Poly]:
    # bands[0] is a placeholder so that bands[k] is band k
    bands: list[Poly] = [[Fraction(0)]]
    for k in range(1, len(f) + 1):
        conv = _convolution(bands, k)
        integral = [Fraction(0)] + [a / (i + 1) for i, a in enumerate(conv)]
        bands.append(_trim(_padd([f[k - 1]], integral)))
    return bands


def nilpotent_band_closed_form(n: int, f0: Sequence) -> BandSolution:
    """Exact band polynomials on ``strict_upper(n)``; band ``k`` has degree ``k - 1``."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if len(f0) != n - 1:
        raise ValueError(f"expected {n - 1} band values, got {len(f0)}")
    bands = _nilpotent_bands(_fractions(f0))
    return BandSolution(NILPOTENT_POLYNOMIAL, n, tuple(tuple(b) for b in bands[1:]))


def borel_band_closed_form(n: int, f0: Sequence) -> BandSolution:
    """Exact band solution on ``borel(n)`` from ``f0 = (f[0], ..., f[n-1])``.

    With ``f[0] = 0`` the diagonal coupling vanishes and the bands follow the
    strictly upper-triangular recursion, so a ``NilpotentPolynomial``
    solution is returned (``first_band = 0``, band 0 identically zero).
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if len(f0) != n:
        raise ValueError(f"expected {n} band values, got {len(f0)}")
    f = _fractions(f0)
    if f[0] == 0:
        bands = _nilpotent_bands(f[1:])
        bands[0] = [Fraction(0)]
        return BandSolution(NILPOTENT_POLYNOMIAL, n, tuple(tuple(b) for b in bands), first_band=0)

    rate = 2 * f[0]
    bands: list[Poly] = [[f[0]]]
    for k in range(1, n):
        conv = _convolution(bands, k) if k > 1 else [Fraction(0)]
        # rate * m * a_m = rate * a_m + conv_m  for m >= 2; a_1 fixed by the initial value
        coeffs = [Fraction(0)] * max(2, len(conv))
        for m in range(2, len(conv)):
            coeffs[m] = conv[m] / (rate * (m - 1))
        coeffs[1] = f[k] - sum(coeffs[2:], Fraction(0))
        bands.append(_trim(coeffs))
    return BandSolution(BOREL_EXPONENTIAL, n, tuple(tuple(b) for b in bands), rate=rate, first_band=0)


def _band_positions(alg: LieAlgebra) -> list[int]:
    """Band index ``j - i`` for each basis element of a matrix algebra."""
    kind = alg.spec.get("kind")
    if kind not in ("strict_upper", "heisenberg3", "borel"):
        raise ValueError(f"band forms need a strict_upper or borel algebra, got {alg.name}")
    out = []
    for label in alg.basis_labels:
        body = label[1:]
        i, j = (body.split(",") if "," in body else (body[0], body[1:]))
        out.append(int(j) - int(i))
    return out


def band_form(alg: LieAlgebra, values: Sequence[float]) -> HermitianForm:
    """Diagonal form with ``values[k - first]`` on every band-``k`` basis element.

    For strict upper algebras ``values`` starts at band 1; for Borel at band 0.
    """
    positions = _band_positions(alg)
    first = 0 if alg.spec.get("kind") == "borel" else 1
    return HermitianForm.diag([float(values[p - first]) for p in positions])


def band_values(alg: LieAlgebra, form: HermitianForm) -> np.ndarray:
    """Read back one value per band (the first basis element of each band)."""
    positions = _band_positions(alg)
    out = {}
    for idx, p in enumerate(positions):
        out.setdefault(p, form.m[idx, idx].real)
    return np.array([out[k] for k in sorted(out)])
