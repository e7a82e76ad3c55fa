"""Finite-dimensional complex Lie algebras given by structure constants.

An algebra is stored as a dense rank-3 array ``c`` with
``[e_a, e_b] = sum_g c[a, b, g] e_g``.  Only the ``a < b`` half is ever
supplied by constructors; the other half is derived, so antisymmetry holds
exactly.
"""

from __future__ import annotations

import itertools
import json
import re
import warnings
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from hcflow.errors import NotAHomomorphismError, ValidationError

JACOBI_TOL = 1e-12
HOMOMORPHISM_TOL = 1e-10
RANK_RTOL = 1e-10
# relative singular values in this band are neither clearly zero nor clearly not
RANK_GRAY_ZONE = (1e-12, 1e-8)


@dataclass(frozen=True, eq=False)
class LieAlgebra:
    """A Lie algebra over C in a labeled basis.

    Attributes
    ----------
    dim : int
    basis_labels : tuple of str
    c : ndarray, shape (dim, dim, dim), complex
        Read-only structure constants.
    spec : dict
        The algebra spec this algebra was built from (JSON-serializable).
    """

    dim: int
    basis_labels: tuple[str, ...]
    c: np.ndarray
    spec: dict = field(default_factory=dict)

    def __post_init__(self):
        self.c.flags.writeable = False

    @property
    def name(self) -> str:
        return spec_to_string(self.spec) if self.spec else f"custom:{self.dim}"

    def basis_vector(self, index) -> np.ndarray:
        if isinstance(index, str):
            index = self.basis_labels.index(index)
        v = np.zeros(self.dim, dtype=complex)
        v[index] = 1.0
        return v

    def ad(self, x) -> np.ndarray:
        """Matrix of ``ad x`` acting on coefficient vectors."""
        x = np.asarray(x, dtype=complex)
        return np.einsum("a,abg->gb", x, self.c)

    def __repr__(self):
        return f"LieAlgebra({self.name!r}, dim={self.dim})"


@dataclass(frozen=True)
class AlgebraClass:
    kind: str  # "Nilpotent" | "SolvableNotNilpotent" | "NonSolvable"
    lower_central_dims: list[int]
    derived_dims: list[int]
    derived_subalgebra_basis: list[np.ndarray]
    warning: str | None = None


NILPOTENT = "Nilpotent"
SOLVABLE = "SolvableNotNilpotent"
NONSOLVABLE = "NonSolvable"


@dataclass(frozen=True, eq=False)
class Homomorphism:
    """Linear map between algebras; ``matrix`` has shape (target.dim, source.dim)."""

    source: LieAlgebra
    target: LieAlgebra
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.target.dim, self.source.dim):
            raise ValueError(
                f"homomorphism matrix has shape {m.shape}, expected "
                f"({self.target.dim}, {self.source.dim})"
            )
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class HomomorphismReport:
    valid: bool
    max_deviation: float
    worst_pair: tuple[str, str] | None


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def _from_upper(dim: int, upper: np.ndarray, labels, spec) -> LieAlgebra:
    """Build an algebra from the ``a < b`` half of ``upper``; the rest is derived."""
    c = np.zeros((dim, dim, dim), dtype=complex)
    for a, b in itertools.combinations(range(dim), 2):
        c[a, b] = upper[a, b]
        c[b, a] = -upper[a, b]
    alg = LieAlgebra(dim, tuple(labels), c, dict(spec))
    _check_jacobi(alg)
    return alg


def _jacobiator(c: np.ndarray) -> np.ndarray:
    t1 = np.einsum("abm,mdg->abdg", c, c)
    t2 = np.einsum("bdm,mag->abdg", c, c)
    t3 = np.einsum("dam,mbg->abdg", c, c)
    return t1 + t2 + t3


def _check_jacobi(alg: LieAlgebra) -> None:
    jac = np.abs(_jacobiator(alg.c))
    bad = np.argwhere(jac > JACOBI_TOL)
    if bad.size:
        a, b, d, _ = bad[0]
        lab = alg.basis_labels
        raise ValidationError(
            f"Jacobi identity fails for triple ({lab[a]}, {lab[b]}, {lab[d]}): "
            f"residual {jac[tuple(bad[0])]:.3e}"
        )


def _matrix_units(n: int, entries) -> tuple[list[np.ndarray], list[str]]:
    mats, labels = [], []
    for i, j in entries:
        m = np.zeros((n, n), dtype=complex)
        m[i, j] = 1.0
        mats.append(m)
        labels.append(f"E{i + 1}{j + 1}" if n < 10 else f"E{i + 1},{j + 1}")
    return mats, labels


def _from_matrix_basis(mats, labels, positions, spec) -> LieAlgebra:
    # positions[k] = (i, j) where basis matrix k has its single nonzero entry
    dim = len(mats)
    index = {p: k for k, p in enumerate(positions)}
    upper = np.zeros((dim, dim, dim), dtype=complex)
    for a, b in itertools.combinations(range(dim), 2):
        comm = mats[a] @ mats[b] - mats[b] @ mats[a]
        for i, j in zip(*np.nonzero(comm)):
            k = index.get((int(i), int(j)))
            if k is None:
                raise ValidationError(f"basis not closed under bracket at ({labels[a]}, {labels[b]})")
            upper[a, b, k] = comm[i, j]
    return _from_upper(dim, upper, labels, spec)


def _band_positions(n: int, include_diagonal: bool) -> list[tuple[int, int]]:
    start = 0 if include_diagonal else 1
    return [(i, i + k) for k in range(start, n) for i in range(n - k)]


def _su2c() -> LieAlgebra:
    upper = np.zeros((3, 3, 3), dtype=complex)
    upper[0, 1, 2] = 1.0  # [e1, e2] = e3
    upper[1, 2, 0] = 1.0  # [e2, e3] = e1
    upper[0, 2, 1] = -1.0  # [e1, e3] = -e2
    return _from_upper(3, upper, ["e1", "e2", "e3"], {"kind": "su2c"})


def _custom(dim: int, constants, spec=None) -> LieAlgebra:
    labels = [f"e{k + 1}" for k in range(dim)]
    spec = spec or {"kind": "custom", "dim": dim, "constants": _constants_to_list(constants, dim)}
    arr = np.asarray(constants) if not isinstance(constants, (list, tuple)) else None
    if arr is not None and arr.shape == (dim, dim, dim):
        dense = arr.astype(complex)
    else:
        dense = np.zeros((dim, dim, dim), dtype=complex)
        seen = np.zeros((dim, dim, dim), dtype=bool)
        for entry in constants:
            a, b, g = (int(v) for v in entry[:3])
            val = complex(entry[3], entry[4] if len(entry) > 4 else 0.0)
            if not all(0 <= v < dim for v in (a, b, g)):
                raise ValidationError(f"structure-constant index out of range in {entry!r}")
            dense[a, b, g] += val
            seen[a, b, g] = True
        # entries listed only for a < b are mirrored; explicit a > b entries must agree
        for a, b, g in zip(*np.nonzero(seen)):
            if a < b and not seen[b, a, g]:
                dense[b, a, g] = -dense[a, b, g]
            elif a > b and not seen[b, a, g]:
                dense[b, a, g] = -dense[a, b, g]
    sym = dense + dense.transpose(1, 0, 2)
    bad = np.argwhere(np.abs(sym) > 0)
    if bad.size:
        a, b, g = bad[0]
        raise ValidationError(
            f"antisymmetry fails for triple ({labels[a]}, {labels[b]}, {labels[g]}): "
            f"c[a,b,g] + c[b,a,g] = {sym[a, b, g]}"
        )
    return _from_upper(dim, dense, labels, spec)


def _constants_to_list(constants, dim) -> list:
    arr = np.asarray(constants) if not isinstance(constants, (list, tuple)) else None
    if arr is not None and arr.shape == (dim, dim, dim):
        out = []
        for a, b, g in zip(*np.nonzero(arr)):
            if a < b:
                v = complex(arr[a, b, g])
                out.append([int(a), int(b), int(g), v.real, v.imag])
        return out
    return [list(e) for e in constants]


def _direct_sum(first: LieAlgebra, second: LieAlgebra, spec) -> LieAlgebra:
    d1, d2 = first.dim, second.dim
    dim = d1 + d2
    c = np.zeros((dim, dim, dim), dtype=complex)
    c[:d1, :d1, :d1] = first.c
    c[d1:, d1:, d1:] = second.c
    labels = list(first.basis_labels) + list(second.basis_labels)
    if len(set(labels)) < dim:
        labels = [f"{l}_1" for l in first.basis_labels] + [f"{l}_2" for l in second.basis_labels]
    return _from_upper(dim, c, labels, spec)


def construct_algebra(spec) -> LieAlgebra:
    """Build an algebra from a spec.

    ``spec`` is a mapping (``{"kind": "borel", "n": 3}``), a JSON string of
    one, or a compact string such as ``"su2c"``, ``"strict_upper:4"``,
    ``"abelian:2"``.  Supported kinds: su2c, strict_upper, borel,
    heisenberg3, abelian, direct_sum (``summands``: two specs), custom
    (``dim`` and ``constants`` as ``[a, b, g, re, im]`` rows, 0-based).
    """
    spec = parse_spec(spec)
    kind = spec.get("kind")
    if kind == "su2c":
        return _su2c()
    if kind in ("strict_upper", "heisenberg3", "borel"):
        n = 3 if kind == "heisenberg3" else int(spec.get("n", 0))
        if n < 2:
            raise ValueError(f"{kind} requires n >= 2, got {n}")
        positions = _band_positions(n, include_diagonal=(kind == "borel"))
        mats, labels = _matrix_units(n, positions)
        norm = {"kind": kind} if kind == "heisenberg3" else {"kind": kind, "n": n}
        return _from_matrix_basis(mats, labels, positions, norm)
    if kind == "abelian":
        n = int(spec.get("n", 0))
        if n < 1:
            raise ValueError("abelian requires n >= 1")
        return _from_upper(n, np.zeros((n, n, n), dtype=complex),
                           [f"e{k + 1}" for k in range(n)], {"kind": "abelian", "n": n})
    if kind == "direct_sum":
        summands = spec.get("summands")
        if not summands or len(summands) != 2:
            raise ValueError("direct_sum requires exactly two summands")
        first, second = (construct_algebra(s) for s in summands)
        return _direct_sum(first, second, {"kind": "direct_sum", "summands": [first.spec, second.spec]})
    if kind == "custom":
        return _custom(int(spec["dim"]), spec["constants"])
    raise ValueError(f"unknown algebra kind {kind!r}")


def custom_algebra(dim: int, constants) -> LieAlgebra:
    """Algebra from explicit constants (dense array or ``[a, b, g, re, im]`` rows)."""
    return _custom(dim, constants)


def parse_spec(spec) -> dict:
    if isinstance(spec, Mapping):
        return dict(spec)
    if isinstance(spec, str):
        s = spec.strip()
        if s.startswith("{"):
            return json.loads(s)
        if s.startswith("direct_sum(") and s.endswith(")"):
            inner = s[len("direct_sum("):-1]
            depth, cut = 0, None
            for k, ch in enumerate(inner):
                depth += ch == "("
                depth -= ch == ")"
                if ch == "," and depth == 0:
                    cut = k
                    break
            if cut is None:
                raise ValueError(f"cannot parse {spec!r}")
            return {"kind": "direct_sum", "summands": [parse_spec(inner[:cut]), parse_spec(inner[cut + 1:])]}
        call = re.fullmatch(r"(\w+)\(\s*(\d+)\s*\)", s)
        name, _, arg = (call.group(1), "", call.group(2)) if call else s.partition(":")
        out: dict[str, Any] = {"kind": name}
        if arg:
            out["n"] = int(arg)
        return out
    raise TypeError(f"unsupported spec type {type(spec).__name__}")


def spec_to_string(spec: Mapping) -> str:
    kind = spec["kind"]
    if kind == "direct_sum":
        a, b = spec["summands"]
        return f"direct_sum({spec_to_string(a)},{spec_to_string(b)})"
    if kind == "custom":
        return f"custom:{spec['dim']}"
    if "n" in spec:
        return f"{kind}:{spec['n']}"
    return kind


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def bracket(alg: LieAlgebra, x, y) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    if x.shape != (alg.dim,) or y.shape != (alg.dim,):
        raise ValueError(f"expected coefficient vectors of length {alg.dim}, got {x.shape} and {y.shape}")
    return np.einsum("a,b,abg->g", x, y, alg.c)


def _orthonormal_span(vectors: np.ndarray, dim: int, scale: float = 0.0):
    """Orthonormal basis (columns) of the span of the columns of ``vectors``.

    Singular values are measured against ``max(s[0], scale)``, so a span made
    only of roundoff (relative to ``scale``) counts as zero.  Returns
    ``(basis, near_threshold)``; the flag is set when a singular value falls
    in the gray zone around the cutoff.
    """
    if vectors.size == 0:
        return np.zeros((dim, 0), dtype=complex), False
    u, s, _ = np.linalg.svd(vectors, full_matrices=False)
    ref = max(float(s[0]) if s.size else 0.0, scale)
    if ref == 0.0:
        return np.zeros((dim, 0), dtype=complex), False
    cutoff = RANK_RTOL * ref
    rank = int(np.sum(s > cutoff))
    rel = s / ref
    near = bool(np.any((rel >= RANK_GRAY_ZONE[0]) & (rel <= RANK_GRAY_ZONE[1])))
    return u[:, :rank], near


def _bracket_span(alg: LieAlgebra, left: np.ndarray, right: np.ndarray) -> np.ndarray:
    # columns are all brackets [l, r] for l in left, r in right
    prods = np.einsum("ai,bj,abg->gij", left, right, alg.c)
    return prods.reshape(alg.dim, -1)


def classify_algebra(alg: LieAlgebra) -> AlgebraClass:
    """Nilpotent / solvable / non-solvable trichotomy from the two series."""
    full = np.eye(alg.dim, dtype=complex)
    scale = float(np.abs(alg.c).max()) if alg.dim else 0.0
    flagged = False

    lower = [alg.dim]
    current = full
    while True:
        nxt, near = _orthonormal_span(_bracket_span(alg, full, current), alg.dim, scale)
        flagged |= near
        if nxt.shape[1] >= current.shape[1]:
            break
        lower.append(nxt.shape[1])
        current = nxt
        if nxt.shape[1] == 0:
            break

    derived = [alg.dim]
    current = full
    derived_basis = None
    while True:
        nxt, near = _orthonormal_span(_bracket_span(alg, current, current), alg.dim, scale)
        flagged |= near
        if derived_basis is None:
            derived_basis = nxt
        if nxt.shape[1] >= current.shape[1]:
            break
        derived.append(nxt.shape[1])
        current = nxt
        if nxt.shape[1] == 0:
            break

    if lower[-1] == 0:
        kind = NILPOTENT
    elif derived[-1] == 0:
        kind = SOLVABLE
    else:
        kind = NONSOLVABLE
    warning = "rank decision close to the singular-value cutoff; ill-conditioned" if flagged else None
    if warning:
        warnings.warn(warning, RuntimeWarning, stacklevel=2)
    return AlgebraClass(
        kind=kind,
        lower_central_dims=lower,
        derived_dims=derived,
        derived_subalgebra_basis=[derived_basis[:, k].copy() for k in range(derived_basis.shape[1])],
        warning=warning,
    )


def killing_metric(alg: LieAlgebra) -> np.ndarray:
    """``B[a, b] = trace(ad e_a  ad e_b)``."""
    # ad e_a has matrix entries (ad e_a)[g, b] = c[a, b, g]
    return np.einsum("abg,dgb->ad", alg.c, alg.c)


def validate_homomorphism(hom: Homomorphism, raise_on_failure: bool = True) -> HomomorphismReport:
    """Check ``rho([e_a, e_b]) == [rho e_a, rho e_b]`` on all basis pairs."""
    src, tgt, m = hom.source, hom.target, hom.matrix
    lhs = np.einsum("gi,abi->abg", m, src.c)
    rhs = np.einsum("ia,jb,ijg->abg", m, m, tgt.c)
    dev = np.abs(lhs - rhs).max(axis=2) if src.dim else np.zeros((0, 0))
    if dev.size == 0:
        return HomomorphismReport(True, 0.0, None)
    a, b = np.unravel_index(np.argmax(dev), dev.shape)
    worst = float(dev[a, b])
    pair = (src.basis_labels[a], src.basis_labels[b])
    valid = worst <= HOMOMORPHISM_TOL
    if not valid and raise_on_failure:
        raise NotAHomomorphismError(
            f"map does not respect the bracket at pair {pair}: deviation {worst:.3e}",
            pair=pair,
            deviation=worst,
        )
    return HomomorphismReport(valid, worst, None if valid else pair)


def summand_projection(alg: LieAlgebra, index: int) -> Homomorphism:
    """Projection of a direct sum onto its ``index``-th summand (0 or 1)."""
    if alg.spec.get("kind") != "direct_sum":
        raise ValueError("summand_projection requires a direct_sum algebra")
    parts = [construct_algebra(s) for s in alg.spec["summands"]]
    offset = sum(p.dim for p in parts[:index])
    target = parts[index]
    m = np.zeros((target.dim, alg.dim), dtype=complex)
    m[:, offset:offset + target.dim] = np.eye(target.dim)
    return Homomorphism(alg, target, m)


def annihilator(vectors: Sequence[np.ndarray], dim: int) -> np.ndarray:
    """Columns spanning ``{v : <x, v> = 0 for all x in vectors}``."""
    if len(vectors) == 0:
        return np.eye(dim, dtype=complex)
    mat = np.column_stack(vectors)
    _, s, vh = np.linalg.svd(mat.conj().T, full_matrices=True)
    rank = int(np.sum(s > RANK_RTOL * (s[0] if s.size else 0.0)))
    return vh[rank:].conj().T
