"""Categorical encoding, weighted maximum-likelihood fitting of the identified
conditional laws, and the g-formula marginalizations consumed by the bounds.

Exposure index convention: ``BASELINE = 0`` is a*, ``COMPARISON = 1`` is a.
"""
from __future__ import annotations

import csv
import enum
import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .errors import ConfigError, EmptyStratum, MismatchedSupport, UndefinedConditional

BASELINE = 0
COMPARISON = 1

PMF_TOL = 1e-12


class ZeroCellPolicy(str, enum.Enum):
    """What to do with conditionals whose conditioning event has zero weight."""

    ERROR = "error"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class CategoricalCodec:
    """Ordered label set for one categorical variable.

    ``values`` holds the numeric support (outcome units) and is only required
    for the outcome.  A product codec (several binary confounders folded into
    one R) keeps its ``components``; level ``i`` enumerates component labels in
    ``itertools.product`` order, first component most significant.
    """

    name: str
    levels: tuple
    values: tuple | None = None
    components: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        if not self.levels:
            raise ValueError(f"codec {self.name!r} has no levels")
        if len(set(self.levels)) != len(self.levels):
            raise ValueError(f"codec {self.name!r} has duplicate levels")
        if self.values is not None:
            vals = tuple(float(v) for v in self.values)
            if len(vals) != len(self.levels):
                raise ValueError(f"codec {self.name!r}: one support value per level required")
            if not all(np.isfinite(vals)):
                raise ValueError(f"codec {self.name!r}: support values must be finite")
            object.__setattr__(self, "values", vals)
        object.__setattr__(self, "components", tuple(self.components))

    @property
    def size(self) -> int:
        return len(self.levels)

    def index(self, label) -> int:
        try:
            return self._lookup[label]
        except KeyError:
            raise ConfigError(f"unknown level {label!r} for variable {self.name!r}") from None

    @cached_property
    def _lookup(self):
        return {lab: i for i, lab in enumerate(self.levels)}

    @cached_property
    def support(self) -> np.ndarray:
        if self.values is None:
            raise ValueError(f"codec {self.name!r} has no numeric support")
        return np.asarray(self.values, dtype=float)

    @classmethod
    def exposure(cls, name, baseline, comparison):
        """Two-level exposure codec ordered (a*, a)."""
        if baseline == comparison:
            raise ValueError("baseline and comparison exposure levels must differ")
        return cls(name, (baseline, comparison))

    @classmethod
    def trivial(cls, name):
        return cls(name, ("_",))

    @classmethod
    def product(cls, name, codecs: Sequence["CategoricalCodec"]):
        codecs = tuple(codecs)
        if len(codecs) == 1:
            c = codecs[0]
            return cls(name, c.levels, c.values, (c,))
        levels = tuple(itertools.product(*(c.levels for c in codecs)))
        return cls(name, levels, None, codecs)

    @cached_property
    def component_indices(self) -> np.ndarray:
        """(size, k) integer array of component level indices per level."""
        if not self.components:
            return np.arange(self.size)[:, None]
        sizes = [c.size for c in self.components]
        return np.array(list(itertools.product(*(range(s) for s in sizes))), dtype=int).reshape(self.size, len(sizes))


@dataclass(frozen=True)
class Dataset:
    """Encoded observation records with per-record weights.

    Index arrays are integer level indices into the matching codec; ``c`` is
    the covariate pattern index (a product codec over all C columns).
    """

    a_codec: CategoricalCodec
    m_codec: CategoricalCodec
    y_codec: CategoricalCodec
    a: np.ndarray
    m: np.ndarray
    y: np.ndarray
    r: np.ndarray | None = None
    c: np.ndarray | None = None
    weights: np.ndarray | None = None
    r_codec: CategoricalCodec = field(default_factory=lambda: CategoricalCodec.trivial("R"))
    c_codec: CategoricalCodec = field(default_factory=lambda: CategoricalCodec.trivial("C"))
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.a)
        r = np.zeros(n, dtype=np.int64) if self.r is None else self.r
        c = np.zeros(n, dtype=np.int64) if self.c is None else self.c
        w = np.ones(n) if self.weights is None else self.weights
        arrays = {}
        for name, arr, dtype in (("a", self.a, np.int64), ("m", self.m, np.int64), ("y", self.y, np.int64),
                                 ("r", r, np.int64), ("c", c, np.int64), ("weights", w, float)):
            arr = np.asarray(arr, dtype=dtype)
            if self.validate:
                arr = arr.copy()
            arr.setflags(write=False)
            arrays[name] = arr
        for k, v in arrays.items():
            object.__setattr__(self, k, v)
        if not self.validate:
            return
        if self.a_codec.size != 2:
            raise ValueError("exposure codec must have exactly two levels")
        if self.y_codec.values is None:
            raise ValueError("outcome codec must declare numeric support values")
        for name, codec in (("a", self.a_codec), ("m", self.m_codec), ("y", self.y_codec),
                            ("r", self.r_codec), ("c", self.c_codec)):
            arr = arrays[name]
            if arr.shape != (n,):
                raise ValueError(f"index array {name!r} has wrong length")
            if n and (arr.min() < 0 or arr.max() >= codec.size):
                raise ValueError(f"index array {name!r} out of range for codec {codec.name!r}")
        wts = arrays["weights"]
        if wts.shape != (n,) or np.any(wts < 0) or not np.all(np.isfinite(wts)):
            raise ValueError("weights must be finite and nonnegative")
        if n == 0 or wts.sum() <= 0:
            raise ValueError("dataset needs positive total weight")

    @property
    def n(self) -> int:
        return len(self.a)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    @property
    def shape(self) -> tuple:
        """Cell-table shape (exposure, R, M, Y)."""
        return (2, self.r_codec.size, self.m_codec.size, self.y_codec.size)

    @cached_property
    def cell_index(self) -> np.ndarray:
        _, p, nm, ny = self.shape
        idx = ((self.a * p + self.r) * nm + self.m) * ny + self.y
        idx.setflags(write=False)
        return idx

    def with_weights(self, weights) -> "Dataset":
        """Same records, new weights; skips index validation."""
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (self.n,):
            raise ValueError("weights must match the record count")
        out = Dataset(self.a_codec, self.m_codec, self.y_codec, self.a, self.m, self.y, self.r, self.c,
                      weights, self.r_codec, self.c_codec, validate=False)
        out.__dict__["cell_index"] = self.cell_index
        return out

    def subset(self, mask) -> "Dataset":
        mask = np.asarray(mask, dtype=bool)
        return Dataset(self.a_codec, self.m_codec, self.y_codec, self.a[mask], self.m[mask], self.y[mask],
                       self.r[mask], self.c[mask], self.weights[mask], self.r_codec, self.c_codec,
                       validate=False)

    def stratum_weights(self) -> np.ndarray:
        return kernels.weighted_counts(self.c, self.weights, self.c_codec.size)


@dataclass(frozen=True)
class MediationLaw:
    """Identified conditional laws over finite supports.

    Arrays are indexed ``[exposure, r, m, y]``.  Cells whose conditioning
    event had zero weight hold NaN; they raise ``UndefinedConditional`` only
    when a downstream formula gives them positive weight.
    """

    r_given_a: np.ndarray
    m_given_ra: np.ndarray
    y_given_mra: np.ndarray
    y_values: np.ndarray
    r_codec: CategoricalCodec | None = None

    def __post_init__(self):
        ra = np.asarray(self.r_given_a, dtype=float)
        mra = np.asarray(self.m_given_ra, dtype=float)
        ymra = np.asarray(self.y_given_mra, dtype=float)
        yv = np.asarray(self.y_values, dtype=float)
        if ra.ndim != 2 or ra.shape[0] != 2:
            raise MismatchedSupport("r_given_a must have shape (2, p)")
        p = ra.shape[1]
        if mra.ndim != 3 or mra.shape[:2] != (2, p):
            raise MismatchedSupport("m_given_ra must have shape (2, p, n_m)")
        nm = mra.shape[2]
        if ymra.shape != (2, p, nm, yv.shape[0]) or yv.ndim != 1:
            raise MismatchedSupport("y_given_mra must have shape (2, p, n_m, n_y) matching y_values")
        if self.r_codec is not None and self.r_codec.size != p:
            raise MismatchedSupport("r_codec size does not match r_given_a")
        for name, arr in (("r_given_a", ra), ("m_given_ra", mra), ("y_given_mra", ymra)):
            _check_pmf(arr, name)
        if not np.all(np.isfinite(yv)):
            raise ValueError("outcome support values must be finite")
        for name, arr in (("r_given_a", ra), ("m_given_ra", mra), ("y_given_mra", ymra), ("y_values", yv)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def p(self) -> int:
        return self.r_given_a.shape[1]

    @property
    def n_m(self) -> int:
        return self.m_given_ra.shape[2]

    @property
    def n_y(self) -> int:
        return self.y_values.shape[0]

    @property
    def has_R(self) -> bool:
        return self.p > 1

    @cached_property
    def m_given_a(self) -> np.ndarray:
        return weighted_sum(self.m_given_ra, self.r_given_a[:, :, None], axis=1, what="pr(M|R,A)")

    @cached_property
    def mean_y_given_mra(self) -> np.ndarray:
        return self.y_given_mra @ self.y_values

    @cached_property
    def r_given_ma(self) -> np.ndarray:
        """pr(R=r | M=m, A) indexed ``[exposure, m, r]``; NaN where pr(M=m|A)=0."""
        joint = np.where(self.r_given_a[:, :, None] > 0, self.m_given_ra, 0.0) * self.r_given_a[:, :, None]
        with np.errstate(invalid="ignore", divide="ignore"):
            out = joint / joint.sum(axis=1, keepdims=True)
        return np.transpose(out, (0, 2, 1))

    @cached_property
    def y_given_ma(self) -> np.ndarray:
        """pr(Y | M, A) with R marginalized out, indexed ``[exposure, m, y]``."""
        w = np.transpose(self.r_given_ma, (0, 2, 1))[..., None]
        vals = self.y_given_mra
        live = w > 0
        out = np.where(live, vals, 0.0) * np.where(live, w, 0.0)
        out = out.sum(axis=1)
        undefined = np.isnan(self.r_given_ma).any(axis=2)
        out[undefined] = np.nan
        return out

    @cached_property
    def mean_y_given_ma(self) -> np.ndarray:
        return self.y_given_ma @ self.y_values

    @cached_property
    def mean_y_given_a(self) -> np.ndarray:
        """E(Y | A) for both exposure levels."""
        w = self.r_given_a[:, :, None] * np.where(self.r_given_a[:, :, None] > 0, self.m_given_ra, 0.0)
        return weighted_sum(self.mean_y_given_mra, w, axis=(1, 2), what="E(Y|M,R,A)")

    @cached_property
    def r_component_bits(self) -> np.ndarray:
        """(p, k) component indices of each R level; a lone R is one component."""
        if self.r_codec is not None and self.r_codec.components:
            return self.r_codec.component_indices
        return np.arange(self.p)[:, None]


def _check_pmf(arr, name):
    if np.any(arr < -PMF_TOL):
        raise ValueError(f"{name} has negative entries")
    sums = arr.sum(axis=-1)
    defined = ~np.isnan(sums)
    if np.any(np.abs(sums[defined] - 1.0) > PMF_TOL * max(1, arr.shape[-1])):
        raise ValueError(f"{name} rows must sum to 1")


def weighted_sum(values, weights, axis, what="conditional"):
    """Sum ``values * weights`` over ``axis``; zero-weight cells may be NaN.

    Raises ``UndefinedConditional`` if an undefined (NaN) cell carries
    positive weight.
    """
    values, weights = np.broadcast_arrays(np.asarray(values, dtype=float), np.asarray(weights, dtype=float))
    live = weights > 0
    if np.any(np.isnan(values) & live):
        raise UndefinedConditional(f"{what} is undefined at a cell that carries positive weight")
    return (np.where(live, values, 0.0) * weights).sum(axis=axis)


def _conditionals(counts, policy):
    with np.errstate(invalid="ignore", divide="ignore"):
        n_a = counts.sum(axis=(1, 2, 3))
        n_ar = counts.sum(axis=(2, 3))
        n_arm = counts.sum(axis=3)
        r_given_a = n_ar / n_a[:, None]
        m_given_ra = n_arm / n_ar[:, :, None]
        y_given_mra = counts / n_arm[..., None]
    if np.any(n_a <= 0):
        if policy is ZeroCellPolicy.UNIFORM:
            r_given_a[n_a <= 0] = 1.0 / counts.shape[1]
        else:
            raise UndefinedConditional("an exposure level has zero total weight")
    if policy is ZeroCellPolicy.UNIFORM:
        m_given_ra[np.isnan(m_given_ra)] = 1.0 / counts.shape[2]
        y_given_mra[np.isnan(y_given_mra)] = 1.0 / counts.shape[3]
    return r_given_a, m_given_ra, y_given_mra


def fit_laws(data: Dataset, stratum: int | None = None,
             policy: ZeroCellPolicy = ZeroCellPolicy.ERROR) -> MediationLaw:
    """Weighted empirical (maximum-likelihood) conditional laws.

    Parameters
    ----------
    data : Dataset
    stratum : int, optional
        Covariate pattern index; when given only its records are used.
    policy : ZeroCellPolicy
        ``ERROR`` leaves undefined cells as NaN (raising later if needed);
        ``UNIFORM`` fills them with a uniform pmf.
    """
    policy = ZeroCellPolicy(policy)
    weights = data.weights
    if stratum is not None:
        if not 0 <= stratum < data.c_codec.size:
            raise ValueError(f"stratum {stratum} out of range")
        weights = np.where(data.c == stratum, weights, 0.0)
        if weights.sum() <= 0:
            raise EmptyStratum(f"covariate pattern {data.c_codec.levels[stratum]!r} has zero weight")
    shape = data.shape
    counts = kernels.weighted_counts(data.cell_index, weights, int(np.prod(shape))).reshape(shape)
    return law_from_counts(counts, data.y_codec.support, data.r_codec, policy)


def law_from_counts(counts, y_values, r_codec=None, policy=ZeroCellPolicy.ERROR) -> MediationLaw:
    """Conditional laws from a weighted count table indexed ``[a, r, m, y]``."""
    r_given_a, m_given_ra, y_given_mra = _conditionals(np.asarray(counts, dtype=float), ZeroCellPolicy(policy))
    return MediationLaw(r_given_a, m_given_ra, y_given_mra, y_values, r_codec)


def y_pmf_table(law: MediationLaw, account_for_R: bool, exposure: int = COMPARISON) -> np.ndarray:
    """g-formula pmf of Y(exposure, m) for every m; rows NaN where undefined."""
    if not account_for_R or not law.has_R:
        return law.y_given_ma[exposure].copy()
    w = law.r_given_a[exposure][:, None, None]
    vals = law.y_given_mra[exposure]
    live = np.broadcast_to(w > 0, vals.shape)
    bad = (np.isnan(vals) & live).any(axis=(0, 2))
    out = (np.where(live, vals, 0.0) * w).sum(axis=0)
    out[bad] = np.nan
    return out


def y_pmf_g_formula(law: MediationLaw, m: int, account_for_R: bool, exposure: int = COMPARISON) -> np.ndarray:
    """pmf of Y(a, m) by the g-formula.

    Without R this is pr(Y | M=m, A=a).  With R it is the mixture
    ``sum_r pr(Y | m, r, a) pr(R=r | a)``.
    """
    if not 0 <= m < law.n_m:
        raise ValueError(f"mediator level {m} out of range")
    row = y_pmf_table(law, account_for_R, exposure)[m]
    if np.any(np.isnan(row)):
        raise UndefinedConditional(f"pr(Y | M={m}, ...) is undefined: a conditioning cell has zero weight")
    return row


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

@dataclass
class ColumnRoles:
    """Map from CSV column names to analysis roles."""

    a: str
    m: str
    y: str
    r: list = field(default_factory=list)
    c: list = field(default_factory=list)
    weight: str | None = None


def read_csv_dataset(path, roles: ColumnRoles, baseline, comparison, y_values: Mapping | None = None,
                     levels: Mapping[str, Sequence] | None = None) -> Dataset:
    """Read and encode a CSV file.

    Level orderings come from ``levels`` when given, otherwise sorted labels
    seen in the file.  Outcome labels map to numbers through ``y_values`` or,
    failing that, ``float(label)``.
    """
    levels = dict(levels or {})
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        needed = [roles.a, roles.m, roles.y, *roles.r, *roles.c] + ([roles.weight] if roles.weight else [])
        for col in needed:
            if col not in header:
                raise ConfigError(f"column {col!r} not found in {path}")
        rows = list(reader)
    if not rows:
        raise ConfigError(f"{path} has no data rows")

    def codec_for(col, **kw):
        labels = levels.get(col)
        if labels is None:
            labels = sorted({row[col] for row in rows}, key=_natural_key)
        return CategoricalCodec(col, tuple(str(x) for x in labels), **kw)

    a_codec = CategoricalCodec.exposure(roles.a, str(baseline), str(comparison))
    m_codec = codec_for(roles.m)
    y_labels = levels.get(roles.y)
    if y_labels is None:
        y_labels = sorted(y_values.keys(), key=_natural_key) if y_values else \
            sorted({row[roles.y] for row in rows}, key=_natural_key)
    y_labels = tuple(str(x) for x in y_labels)
    try:
        vals = tuple(float(y_values[lab]) if y_values else float(lab) for lab in y_labels)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"no numeric support value for outcome level {exc}") from None
    y_codec = CategoricalCodec(roles.y, y_labels, vals)
    r_codecs = [codec_for(col) for col in roles.r]
    c_codecs = [codec_for(col) for col in roles.c]
    r_codec = CategoricalCodec.product("R", r_codecs) if r_codecs else CategoricalCodec.trivial("R")
    c_codec = CategoricalCodec.product("C", c_codecs) if c_codecs else CategoricalCodec.trivial("C")

    def encode(codec, col):
        return np.array([codec.index(row[col]) for row in rows], dtype=np.int64)

    def encode_product(codec, parts, cols):
        if not cols:
            return np.zeros(len(rows), dtype=np.int64)
        idx = np.zeros(len(rows), dtype=np.int64)
        for part, col in zip(parts, cols):
            idx = idx * part.size + encode(part, col)
        return idx

    weights = None
    if roles.weight:
        try:
            weights = np.array([float(row[roles.weight]) for row in rows])
        except ValueError as exc:
            raise ConfigError(f"bad weight value: {exc}") from None
    return Dataset(a_codec, m_codec, y_codec, encode(a_codec, roles.a), encode(m_codec, roles.m),
                   encode(y_codec, roles.y), encode_product(r_codec, r_codecs, roles.r),
                   encode_product(c_codec, c_codecs, roles.c), weights, r_codec, c_codec)


def write_csv_dataset(data: Dataset, path, columns=None):
    """Write a dataset back to CSV using its codec labels (weights included when not all 1)."""
    cols = columns or {}
    a_col = cols.get("A", data.a_codec.name)
    m_col = cols.get("M", data.m_codec.name)
    y_col = cols.get("Y", data.y_codec.name)
    r_parts = data.r_codec.components if data.r_codec.size > 1 else ()
    c_parts = data.c_codec.components if data.c_codec.size > 1 else ()
    r_bits = data.r_codec.component_indices if r_parts else None
    c_bits = data.c_codec.component_indices if c_parts else None
    header = [a_col, m_col, y_col] + [p.name for p in r_parts] + [p.name for p in c_parts]
    write_w = not np.all(data.weights == 1.0)
    if write_w:
        header.append("weight")
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(header)
        for i in range(data.n):
            row = [data.a_codec.levels[data.a[i]], data.m_codec.levels[data.m[i]], data.y_codec.levels[data.y[i]]]
            if r_parts:
                row += [part.levels[k] for part, k in zip(r_parts, r_bits[data.r[i]])]
            if c_parts:
                row += [part.levels[k] for part, k in zip(c_parts, c_bits[data.c[i]])]
            if write_w:
                row.append(repr(float(data.weights[i])))
            out.writerow(row)


def _natural_key(label):
    try:
        return (0, float(label), "")
    except (TypeError, ValueError):
        return (1, 0.0, str(label))
