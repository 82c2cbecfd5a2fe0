"""Lattice data containers, manifest I/O, preprocessing and cosine tapering.

A multivariate lattice dataset is a stack of M aligned real fields observed on
the same regular n1 x n2 grid with spacing ``delta``.  On disk it is described
by a JSON manifest::

    {"delta": 1.0, "elements": [{"label": "Fe", "file": "fe.csv"}, ...]}

where each ``file`` is a headerless CSV matrix (rows are the first lattice
axis) resolved relative to the manifest location.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

__all__ = [
    "ManifestError",
    "MultiLattice",
    "TaperSpec",
    "load_multilattice",
    "write_multilattice",
    "preprocess",
    "taper_weights",
    "taper_spec",
    "apply_taper",
]


class ManifestError(ValueError):
    """Raised when a manifest or one of its matrices cannot be read."""


@dataclass(frozen=True)
class MultiLattice:
    """M real fields on a shared n1 x n2 lattice.

    Attributes
    ----------
    values : ndarray, shape (M, n1, n2)
        Field values, one layer per element, float64.
    labels : tuple of str
        Element names, one per layer, unique.
    delta : float
        Grid spacing (physical distance between neighbouring sites).
    """

    values: np.ndarray
    labels: tuple[str, ...]
    delta: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 3:
            raise ValueError(f"values must be (M, n1, n2), got shape {v.shape}")
        if v.shape[0] < 1 or v.shape[1] < 2 or v.shape[2] < 2:
            raise ValueError(f"need M >= 1 and n1, n2 >= 2, got shape {v.shape}")
        if len(self.labels) != v.shape[0]:
            raise ValueError(
                f"{len(self.labels)} labels for {v.shape[0]} layers"
            )
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"duplicate labels in {self.labels}")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite values in lattice data")
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def n1(self) -> int:
        return self.values.shape[1]

    @property
    def n2(self) -> int:
        return self.values.shape[2]

    @property
    def nsites(self) -> int:
        return self.n1 * self.n2


@dataclass(frozen=True)
class TaperSpec:
    """Separable cosine (Tukey) taper for one lattice shape.

    ``weights1`` and ``weights2`` are the per-axis window values; the full 2-D
    window is their outer product.  ``adjustment`` is the product over axes of
    the sums of squared axis weights, the normaliser that restores periodogram
    scale after tapering (equal to n1*n2 when r = 0).
    """

    r: float
    weights1: np.ndarray
    weights2: np.ndarray
    adjustment: float


def _read_matrix(path: Path) -> np.ndarray:
    """Read one headerless CSV matrix, reporting the exact failure position."""
    if not path.is_file():
        raise ManifestError(f"matrix file not found: {path}")
    rows = []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row:
                continue
            vals = []
            for jcol, cell in enumerate(row):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise ManifestError(
                        f"{path}: non-numeric entry {cell!r} at row {i}, column {jcol}"
                    ) from None
            if rows and len(vals) != len(rows[0]):
                raise ManifestError(
                    f"{path}: row {i} has {len(vals)} entries, expected {len(rows[0])}"
                )
            rows.append(vals)
    if not rows:
        raise ManifestError(f"{path}: empty matrix")
    return np.asarray(rows, dtype=float)


def load_multilattice(manifest_path: str | Path) -> MultiLattice:
    """Load a multivariate lattice dataset from a JSON manifest.

    Parameters
    ----------
    manifest_path : path
        JSON file with keys ``delta`` (optional, default 1.0) and
        ``elements``, a list of ``{"label", "file"}`` records whose file
        paths are resolved relative to the manifest directory.

    Raises
    ------
    ManifestError
        On missing files, ragged or non-numeric matrices, or element
        matrices with mismatched shapes.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise ManifestError(f"manifest not found: {manifest_path}")
    try:
        spec = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{manifest_path}: invalid JSON ({exc})") from None
    if not isinstance(spec, dict) or "elements" not in spec:
        raise ManifestError(f"{manifest_path}: manifest must contain an 'elements' list")
    elements = spec["elements"]
    if not isinstance(elements, list) or not elements:
        raise ManifestError(f"{manifest_path}: 'elements' must be a non-empty list")
    delta = float(spec.get("delta", 1.0))

    labels, layers, files = [], [], []
    for k, entry in enumerate(elements):
        if not isinstance(entry, dict) or "label" not in entry or "file" not in entry:
            raise ManifestError(
                f"{manifest_path}: element {k} must have 'label' and 'file' keys"
            )
        path = manifest_path.parent / entry["file"]
        mat = _read_matrix(path)
        if layers and mat.shape != layers[0].shape:
            raise ManifestError(
                f"{path}: shape {mat.shape} does not match "
                f"{files[0]} with shape {layers[0].shape}"
            )
        labels.append(str(entry["label"]))
        layers.append(mat)
        files.append(str(path))
    return MultiLattice(values=np.stack(layers), labels=tuple(labels), delta=delta)


def write_multilattice(data: MultiLattice, manifest_path: str | Path) -> None:
    """Write a dataset as a manifest plus one CSV per element.

    Output round-trips through :func:`load_multilattice` bit-exactly; matrix
    files are named ``<label>.csv`` next to the manifest.
    """
    manifest_path = Path(manifest_path)
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    entries = []
    for label, layer in zip(data.labels, data.values):
        fname = f"{label}.csv"
        # %.17g round-trips float64 exactly
        np.savetxt(manifest_path.parent / fname, layer, fmt="%.17g", delimiter=",")
        entries.append({"label": label, "file": fname})
    manifest_path.write_text(
        json.dumps({"delta": data.delta, "elements": entries}, indent=2) + "\n"
    )


def preprocess(data: MultiLattice, take_log: bool = False, center: bool = True) -> MultiLattice:
    """Optionally log-transform, then mean-center each element field.

    Raises
    ------
    ValueError
        If ``take_log`` is requested and some entry is not strictly positive;
        the message names the element and lattice position.
    """
    vals = data.values
    if take_log:
        bad = vals <= 0
        if np.any(bad):
            m, i, j = map(int, np.argwhere(bad)[0])
            raise ValueError(
                f"log transform needs positive values; element {data.labels[m]!r} "
                f"has {vals[m, i, j]} at row {i}, column {j}"
            )
        vals = np.log(vals)
    if center:
        vals = vals - vals.mean(axis=(1, 2), keepdims=True)
    return replace(data, values=vals)


def taper_weights(n: int, r: float) -> np.ndarray:
    """One-axis cosine taper weights at grid fractions j/n, j = 0..n-1.

    The window rises as ``(1 + cos(2*pi/r*(j - r/2)))/2`` on [0, r/2), is 1 on
    the interior [r/2, 1 - r/2), and falls symmetrically on [1 - r/2, 1].
    ``r = 0`` returns all ones.
    """
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"taper fraction r must be in [0, 1], got {r}")
    if n < 2:
        raise ValueError(f"axis length must be >= 2, got {n}")
    j = np.arange(n) / n
    w = np.ones(n)
    if r > 0:
        left = j < r / 2
        right = j >= 1 - r / 2
        # ramp written through u/r in [0, 1/2) so tiny r cannot overflow
        w[left] = 0.5 * (1 - np.cos(2 * np.pi * (j[left] / r)))
        w[right] = 0.5 * (1 - np.cos(2 * np.pi * ((1 - j[right]) / r)))
    return w


def taper_spec(n1: int, n2: int, r: float) -> TaperSpec:
    """Build the separable taper for an n1 x n2 lattice with fraction ``r``."""
    w1 = taper_weights(n1, r)
    w2 = taper_weights(n2, r)
    adjustment = float(np.sum(w1**2) * np.sum(w2**2))
    return TaperSpec(r=float(r), weights1=w1, weights2=w2, adjustment=adjustment)


def apply_taper(data: MultiLattice, r: float) -> tuple[MultiLattice, float]:
    """Multiply every element field by the 2-D cosine window.

    Returns the tapered dataset and the scalar adjustment
    ``sum(w1^2) * sum(w2^2)`` used to rescale squared DFT moduli so white
    noise keeps its expected periodogram level.
    """
    spec = taper_spec(data.n1, data.n2, r)
    window = np.outer(spec.weights1, spec.weights2)
    return replace(data, values=data.values * window[None, :, :]), spec.adjustment
