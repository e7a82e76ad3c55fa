"""File formats: trajectory CSV + JSON sidecar, form files, point sets, initial-form specs."""

from __future__ import annotations

import csv
import json
import re
from pathlib import Path

import numpy as np

from hcflow.flow import Trajectory
from hcflow.forms import HermitianForm
from hcflow.lie import LieAlgebra


def fmt(x: float) -> str:
    """Shortest round-trip representation (at most 17 significant digits)."""
    return repr(float(x))


def trajectory_header(alg: LieAlgebra, monitor_names) -> list[str]:
    cols = ["t"]
    labels = alg.basis_labels
    for a in range(alg.dim):
        for b in range(a, alg.dim):
            cols += [f"re({labels[a]},{labels[b]})", f"im({labels[a]},{labels[b]})"]
    return cols + list(monitor_names)


def write_trajectory_csv(traj: Trajectory, path, extra_monitors: dict | None = None) -> Path:
    path = Path(path)
    monitors = dict(traj.monitors)
    monitors.update(extra_monitors or {})
    names = list(monitors)
    iu = np.triu_indices(traj.algebra.dim)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trajectory_header(traj.algebra, names))
        for i, t in enumerate(traj.times):
            entries = traj.forms[i][iu]
            row = [fmt(t)]
            for v in entries:
                row += [fmt(v.real), fmt(v.imag)]
            row += [fmt(monitors[name][i]) for name in names]
            w.writerow(row)
    return path


def read_trajectory_csv(path, dim: int):
    """Return ``(times, forms, monitors)`` from a trajectory CSV."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(x) for x in r] for r in body]) if body else np.zeros((0, len(header)))
    iu = np.triu_indices(dim)
    n_entries = len(iu[0])
    forms = np.zeros((len(body), dim, dim), dtype=complex)
    vals = data[:, 1:1 + 2 * n_entries]
    forms[:, iu[0], iu[1]] = vals[:, 0::2] + 1j * vals[:, 1::2]
    lower = np.tril_indices(dim, -1)
    forms[:, lower[0], lower[1]] = forms[:, lower[1], lower[0]].conj()
    monitors = {name: data[:, 1 + 2 * n_entries + k] for k, name in enumerate(header[1 + 2 * n_entries:])}
    return data[:, 0], forms, monitors


def trajectory_sidecar(traj: Trajectory) -> dict:
    return {
        "algebra": traj.algebra.spec,
        "config": traj.config.to_dict() if traj.config else None,
        "termination": {"kind": traj.termination.kind, "t_last": traj.termination.t_last},
        "samples": len(traj.times),
        "steps": traj.steps,
        "rejected_steps": traj.rejected,
    }


def write_json(obj, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_form(form: HermitianForm, path) -> Path:
    return write_json({"dim": form.dim, "entries": form.to_entries()}, path)


def read_form(path) -> HermitianForm:
    data = json.loads(Path(path).read_text())
    return HermitianForm.from_entries(int(data["dim"]), data["entries"])


def write_points(points, path) -> Path:
    pts = np.asarray(points, dtype=complex)
    n = pts.shape[1]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"z{k + 1}_{part}" for k in range(n) for part in ("re", "im")])
        for p in pts:
            w.writerow([fmt(x) for v in p for x in (v.real, v.imag)])
    return Path(path)


def read_points(path) -> np.ndarray:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    arr = np.array([[float(x) for x in r] for r in rows])
    return arr[:, 0::2] + 1j * arr[:, 1::2]


# ---------------------------------------------------------------------------
# initial forms
# ---------------------------------------------------------------------------

def random_pd(dim: int, rng: np.random.Generator, scale: float = 1.0) -> HermitianForm:
    """``scale * (G G* / dim) + 1e-3 * scale * I`` with standard complex Gaussian ``G``."""
    g = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    return HermitianForm(scale * (g @ g.conj().T) / dim + 1e-3 * scale * np.eye(dim))


def random_diagonal_pd(dim: int, rng: np.random.Generator, scale: float = 1.0) -> HermitianForm:
    return HermitianForm.diag(scale * rng.uniform(0.5, 2.0, size=dim))


_RANDOM = re.compile(r"^random_(pd|diag)(?:[:(]\s*([^,)]*)\s*(?:,\s*([^)]*))?\)?)?$")


def parse_initial_form(text: str, alg: LieAlgebra, default_seed: int = 0) -> HermitianForm:
    """Resolve ``identity``, ``diag:1,2,3``, ``random_pd(seed,scale)``,
    ``random_diag(seed,scale)`` or a path to a form JSON file."""
    text = text.strip()
    if text == "identity":
        return HermitianForm.identity(alg.dim)
    if text.startswith("diag:"):
        vals = [float(v) for v in text[5:].split(",") if v.strip()]
        if len(vals) != alg.dim:
            raise ValueError(f"diag form needs {alg.dim} values, got {len(vals)}")
        return HermitianForm.diag(vals)
    m = _RANDOM.match(text)
    if m:
        kind, seed, scale = m.groups()
        seed = int(seed) if seed not in (None, "") else default_seed
        scale = float(scale) if scale not in (None, "") else 1.0
        rng = np.random.default_rng(seed)
        return (random_pd if kind == "pd" else random_diagonal_pd)(alg.dim, rng, scale)
    path = Path(text)
    if path.suffix == ".json" and path.exists():
        form = read_form(path)
        if form.dim != alg.dim:
            raise ValueError(f"form file has dimension {form.dim}, algebra has {alg.dim}")
        return form
    raise ValueError(f"cannot interpret initial form {text!r}")
