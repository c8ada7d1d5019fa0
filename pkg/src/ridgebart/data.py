"""Dataset container and preprocessing.

Model code only ever sees covariates in the unit cube: continuous columns
are min-max scaled to [0, 1] and categorical columns are recoded to integer
levels 0..K-1.  The `TransformRecord` captures everything needed to map new
prediction inputs the same way (out-of-range continuous values are clamped;
unseen categorical levels are rejected).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConstantColumnError, NonFiniteDataError, UnknownLevelError

__all__ = ["Dataset", "TransformRecord", "preprocess"]


@dataclass
class Dataset:
    """Preprocessed training data.

    x : (n, p) covariate matrix routed by tree rules; continuous entries in
        [0, 1], categorical entries integer level codes.
    z : (n, q) smoothing variables fed to the leaf ridge functions, in [0, 1].
    y : (n,) centered continuous outcome, or raw {0, 1} labels.
    categorical_levels : map from x column index to its level count.
    binary : True for probit-latent fitting of {0, 1} outcomes.
    """

    x: np.ndarray
    z: np.ndarray
    y: np.ndarray
    categorical_levels: dict[int, int] = field(default_factory=dict)
    binary: bool = False

    def __post_init__(self):
        self.x = np.ascontiguousarray(self.x, dtype=float)
        self.z = np.ascontiguousarray(self.z, dtype=float)
        self.y = np.ascontiguousarray(self.y, dtype=float)
        n, p = self.x.shape
        if n < 1 or p < 1:
            raise ValueError("x must be a nonempty n x p matrix")
        if self.z.shape[0] != n or self.z.ndim != 2 or self.z.shape[1] < 1:
            raise ValueError("z must be an n x q matrix with q >= 1")
        if self.y.shape != (n,):
            raise ValueError("y must be a length-n vector")
        if not (np.isfinite(self.x).all() and np.isfinite(self.z).all() and np.isfinite(self.y).all()):
            raise NonFiniteDataError("dataset contains non-finite values")
        cont = [j for j in range(p) if j not in self.categorical_levels]
        if cont:
            xc = self.x[:, cont]
            if xc.min() < 0.0 or xc.max() > 1.0:
                raise ValueError("continuous x entries must lie in [0, 1]")
        if self.z.min() < 0.0 or self.z.max() > 1.0:
            raise ValueError("z entries must lie in [0, 1]")
        for j, k in self.categorical_levels.items():
            if k < 2:
                raise ValueError(f"categorical column {j} needs >= 2 levels")
            codes = self.x[:, j]
            if not np.array_equal(codes, np.round(codes)) or codes.min() < 0 or codes.max() >= k:
                raise ValueError(f"categorical column {j} has codes outside 0..{k - 1}")
        if self.binary and not np.isin(self.y, (0.0, 1.0)).all():
            raise ValueError("binary outcome must contain only 0/1 labels")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def q(self) -> int:
        return self.z.shape[1]


@dataclass
class TransformRecord:
    """Affine maps and level codes fixed at training time.

    `x_levels[j]` lists the raw values of categorical column j in code
    order; continuous columns have an entry in `x_min`/`x_max` instead
    (NaN for categorical slots).
    """

    x_min: np.ndarray
    x_max: np.ndarray
    z_min: np.ndarray
    z_max: np.ndarray
    x_levels: dict[int, list]
    y_center: float
    binary: bool

    def apply_x(self, raw_x: np.ndarray) -> np.ndarray:
        return self._apply(raw_x, self.x_min, self.x_max, self.x_levels, "x")

    def apply_z(self, raw_z: np.ndarray) -> np.ndarray:
        return self._apply(raw_z, self.z_min, self.z_max, {}, "z")

    def _apply(self, raw, lo, hi, levels, what):
        raw = np.asarray(raw)
        if raw.ndim != 2 or raw.shape[1] != lo.shape[0]:
            raise ValueError(f"{what} must have {lo.shape[0]} columns")
        out = np.empty(raw.shape, dtype=float)
        for j in range(raw.shape[1]):
            col = raw[:, j]
            if j in levels:
                out[:, j] = _encode_levels(col, levels[j], j)
            else:
                vals = col.astype(float)
                if not np.isfinite(vals).all():
                    raise NonFiniteDataError(f"{what} column {j} has non-finite values")
                scaled = (vals - lo[j]) / (hi[j] - lo[j])
                out[:, j] = np.clip(scaled, 0.0, 1.0)
        return out

    def to_dict(self) -> dict:
        return {
            "x": [
                {"kind": "categorical", "levels": list(self.x_levels[j])}
                if j in self.x_levels
                else {"kind": "continuous", "min": float(self.x_min[j]), "max": float(self.x_max[j])}
                for j in range(self.x_min.shape[0])
            ],
            "z": [
                {"kind": "continuous", "min": float(self.z_min[j]), "max": float(self.z_max[j])}
                for j in range(self.z_min.shape[0])
            ],
            "y_center": self.y_center,
            "binary": self.binary,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TransformRecord":
        p = len(d["x"])
        q = len(d["z"])
        x_min = np.full(p, np.nan)
        x_max = np.full(p, np.nan)
        levels: dict[int, list] = {}
        for j, spec in enumerate(d["x"]):
            if spec["kind"] == "categorical":
                levels[j] = list(spec["levels"])
            else:
                x_min[j] = spec["min"]
                x_max[j] = spec["max"]
        z_min = np.array([s["min"] for s in d["z"]], dtype=float)
        z_max = np.array([s["max"] for s in d["z"]], dtype=float)
        return cls(x_min, x_max, z_min, z_max, levels, d["y_center"], d["binary"])


def _encode_levels(col: np.ndarray, level_list: list, j: int) -> np.ndarray:
    lookup = {v: i for i, v in enumerate(level_list)}
    out = np.empty(col.shape[0], dtype=float)
    for i, v in enumerate(col.tolist()):
        try:
            out[i] = lookup[v]
        except KeyError:
            raise UnknownLevelError(
                f"categorical column {j} saw unseen level {v!r}"
            ) from None
    return out


def preprocess(
    raw_x: np.ndarray,
    raw_z: np.ndarray,
    raw_y: np.ndarray,
    categorical_columns: tuple[int, ...] = (),
    binary: bool = False,
) -> tuple[Dataset, TransformRecord]:
    """Scale raw inputs into a `Dataset` and record the transform.

    Continuous columns of x and z are min-max scaled to [0, 1]; categorical
    columns of x are recoded to 0..K-1 in sorted raw-value order.  Gaussian
    outcomes are centered at their mean; binary outcomes are left as {0, 1}.
    """
    raw_x = np.asarray(raw_x)
    raw_z = np.asarray(raw_z)
    raw_y = np.asarray(raw_y, dtype=float)
    if raw_x.ndim != 2 or raw_z.ndim != 2:
        raise ValueError("raw_x and raw_z must be 2-d")
    n, p = raw_x.shape
    q = raw_z.shape[1]
    if raw_z.shape[0] != n or raw_y.shape != (n,):
        raise ValueError("raw_x, raw_z, raw_y must agree on n")
    if not np.isfinite(raw_y).all():
        raise NonFiniteDataError("y has non-finite values")

    cat = set(categorical_columns)
    x = np.empty((n, p), dtype=float)
    x_min = np.full(p, np.nan)
    x_max = np.full(p, np.nan)
    x_levels: dict[int, list] = {}
    cat_counts: dict[int, int] = {}
    for j in range(p):
        col = raw_x[:, j]
        if j in cat:
            values = sorted(set(col.tolist()))
            if len(values) < 2:
                raise ConstantColumnError(f"categorical x column {j} has < 2 observed levels")
            x_levels[j] = values
            cat_counts[j] = len(values)
            x[:, j] = _encode_levels(col, values, j)
        else:
            x[:, j], x_min[j], x_max[j] = _scale_column(col, f"x column {j}")

    z = np.empty((n, q), dtype=float)
    z_min = np.empty(q)
    z_max = np.empty(q)
    for j in range(q):
        z[:, j], z_min[j], z_max[j] = _scale_column(raw_z[:, j], f"z column {j}")

    if binary:
        if not np.isin(raw_y, (0.0, 1.0)).all():
            raise ValueError("binary outcome must contain only 0/1 labels")
        y_center = 0.0
        y = raw_y
    else:
        y_center = float(raw_y.mean())
        y = raw_y - y_center

    record = TransformRecord(x_min, x_max, z_min, z_max, x_levels, y_center, binary)
    dataset = Dataset(x, z, y, categorical_levels=cat_counts, binary=binary)
    return dataset, record


def _scale_column(col: np.ndarray, what: str) -> tuple[np.ndarray, float, float]:
    vals = col.astype(float)
    if not np.isfinite(vals).all():
        raise NonFiniteDataError(f"{what} has non-finite values")
    lo, hi = float(vals.min()), float(vals.max())
    if not lo < hi:
        raise ConstantColumnError(f"{what} is constant and cannot be scaled")
    return (vals - lo) / (hi - lo), lo, hi
