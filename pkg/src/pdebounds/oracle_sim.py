"""Structural-equation worlds with finite exogenous errors and exact truth.

Each world has baseline covariates C, a randomized exposure A, an exposure-
induced confounder R, mediator M and outcome Y:

    R(t)    = g_r[t, c, e_r]
    M(t)    = g_m[t, R(t), c, e_m[t]]
    Y(t, m) = g_y[t, R(t), m, c, e_y[t]]

with exposure index t (0 = a*, 1 = a).  The errors are world-indexed for M
and Y, and ``errors`` is the joint pmf over (e_r, e_m[a*], e_m[a], e_y[a*],
e_y[a]).  Sharing one error across both worlds (a diagonal joint) is the
usual structural model; coupling e_m[a*] with e_y[a] produces cross-world
dependence that only single-world independences survive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .covariates import StratifiedLaws
from .errors import ConfigError, TooLarge
from .probmodel import CategoricalCodec, Dataset, MediationLaw, ZeroCellPolicy, law_from_counts

MAX_STATES = 10_000_000


@dataclass(frozen=True)
class WorldSpec:
    p_c: np.ndarray
    p_a: np.ndarray
    y_values: np.ndarray
    n_m: int
    g_r: np.ndarray
    g_m: np.ndarray
    g_y: np.ndarray
    errors: np.ndarray
    r_components: tuple | None = None
    name: str = ""

    def __post_init__(self):
        p_c = _pmf(self.p_c, "p_c")
        p_a = _pmf(self.p_a, "p_a")
        if p_a.shape != (2,):
            raise ValueError("p_a must have two entries (a*, a)")
        yv = np.asarray(self.y_values, dtype=float)
        if yv.ndim != 1 or yv.size == 0 or not np.all(np.isfinite(yv)):
            raise ValueError("y_values must be a nonempty finite vector")
        errors = np.asarray(self.errors, dtype=float)
        if errors.ndim != 5 or errors.shape[1] != errors.shape[2] or errors.shape[3] != errors.shape[4]:
            raise ValueError("errors must be a joint pmf over (e_r, e_m[a*], e_m[a], e_y[a*], e_y[a])")
        _pmf(errors.ravel(), "errors")
        n_c = p_c.size
        n_er, n_em, _, n_ey, _ = errors.shape
        g_r = np.asarray(self.g_r, dtype=np.int64)
        if g_r.shape != (2, n_c, n_er):
            raise ValueError(f"g_r must have shape (2, {n_c}, {n_er})")
        n_r = int(g_r.max()) + 1 if self.r_components is None else int(np.prod(self.r_components))
        g_m = np.asarray(self.g_m, dtype=np.int64)
        if g_m.ndim != 4 or g_m.shape[0] != 2 or g_m.shape[2:] != (n_c, n_em):
            raise ValueError(f"g_m must have shape (2, n_r, {n_c}, {n_em})")
        n_r = max(n_r, g_m.shape[1])
        if g_m.shape[1] != n_r or g_r.min() < 0 or g_r.max() >= n_r:
            raise ValueError("g_r / g_m disagree on the number of confounder levels")
        n_m = int(self.n_m)
        if g_m.min() < 0 or g_m.max() >= n_m:
            raise ValueError("g_m maps outside the mediator support")
        g_y = np.asarray(self.g_y, dtype=np.int64)
        if g_y.shape != (2, n_r, n_m, n_c, n_ey):
            raise ValueError(f"g_y must have shape (2, {n_r}, {n_m}, {n_c}, {n_ey})")
        if g_y.min() < 0 or g_y.max() >= yv.size:
            raise ValueError("g_y maps outside the outcome support")
        comps = None if self.r_components is None else tuple(int(k) for k in self.r_components)
        for name, val in (("p_c", p_c), ("p_a", p_a), ("y_values", yv), ("errors", errors),
                          ("g_r", g_r), ("g_m", g_m), ("g_y", g_y)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "n_m", n_m)
        object.__setattr__(self, "r_components", comps)

    @property
    def n_c(self) -> int:
        return self.p_c.size

    @property
    def n_r(self) -> int:
        return self.g_m.shape[1]

    @property
    def n_y(self) -> int:
        return self.y_values.size

    # -- structure checks ---------------------------------------------------

    def is_npsem_ie(self, tol: float = 1e-12) -> bool:
        """Errors for R, M and Y are mutually independent (as vectors)."""
        e = self.errors
        pr = e.sum(axis=(1, 2, 3, 4))
        pm = e.sum(axis=(0, 3, 4))
        py = e.sum(axis=(0, 1, 2))
        prod = pr[:, None, None, None, None] * pm[None, :, :, None, None] * py[None, None, None, :, :]
        return bool(np.abs(prod - e).max() <= tol)

    def is_swig(self, tol: float = 1e-12) -> bool:
        """Within each world, the mediator error is independent of (e_r, outcome error)."""
        e = self.errors
        for m_ax, y_ax in ((1, 3), (2, 4)):
            others = tuple(ax for ax in (1, 2, 3, 4) if ax not in (m_ax, y_ax))
            j = e.sum(axis=others)                          # (e_r, e_m[t], e_y[t])
            pm = j.sum(axis=(0, 2))
            rest = j.sum(axis=1)
            if np.abs(j - pm[None, :, None] * rest[:, None, :]).max() > tol:
                return False
        return True

    # -- codecs --------------------------------------------------------------

    def codecs(self) -> dict:
        a = CategoricalCodec.exposure("A", "0", "1")
        m = CategoricalCodec("M", tuple(str(i) for i in range(self.n_m)))
        y = CategoricalCodec("Y", tuple(f"{v:g}" for v in self.y_values), tuple(self.y_values))
        if self.r_components:
            parts = [CategoricalCodec(f"R{j + 1}", tuple(str(i) for i in range(k)))
                     for j, k in enumerate(self.r_components)]
        else:
            parts = [CategoricalCodec("R1", tuple(str(i) for i in range(self.n_r)))]
        r = CategoricalCodec.product("R", parts) if self.n_r > 1 else CategoricalCodec.trivial("R")
        c = (CategoricalCodec.product("C", [CategoricalCodec("C1", tuple(str(i) for i in range(self.n_c)))])
             if self.n_c > 1 else CategoricalCodec.trivial("C"))
        return {"A": a, "M": m, "Y": y, "R": r, "C": c}

    # -- serialization ---------------------------------------------------------

    def to_dict(self) -> dict:
        nz = np.nonzero(self.errors)
        out = {
            "name": self.name,
            "p_c": self.p_c.tolist(),
            "p_a": self.p_a.tolist(),
            "y_values": self.y_values.tolist(),
            "n_m": self.n_m,
            "g_r": self.g_r.tolist(),
            "g_m": self.g_m.tolist(),
            "g_y": self.g_y.tolist(),
            "error_shape": [int(s) for s in self.errors.shape],
            "error_index": np.stack(nz, axis=1).tolist(),
            "error_prob": self.errors[nz].tolist(),
        }
        if self.r_components:
            out["r_components"] = list(self.r_components)
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "WorldSpec":
        try:
            shape = tuple(int(s) for s in doc["error_shape"])
            errors = np.zeros(shape)
            idx = np.asarray(doc["error_index"], dtype=np.int64).reshape(-1, 5)
            errors[tuple(idx.T)] = np.asarray(doc["error_prob"], dtype=float)
            return cls(doc["p_c"], doc["p_a"], doc["y_values"], doc["n_m"], doc["g_r"], doc["g_m"], doc["g_y"],
                       errors, doc.get("r_components"), doc.get("name", ""))
        except KeyError as exc:
            raise ConfigError(f"world spec is missing field {exc}") from None
        except (ValueError, IndexError, TypeError) as exc:
            raise ConfigError(f"invalid world spec: {exc}") from None

    def to_toml(self, path=None) -> str:
        import tomli_w

        text = tomli_w.dumps(self.to_dict())
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_toml(cls, text: str) -> "WorldSpec":
        """Parse a TOML document (the text, not a path)."""
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        try:
            doc = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"malformed TOML: {exc}") from None
        return cls.from_dict(doc)

    @classmethod
    def load(cls, path) -> "WorldSpec":
        return cls.from_toml(Path(path).read_text())


def _pmf(arr, name):
    arr = np.asarray(arr, dtype=float).copy()
    if arr.size == 0 or np.any(arr < 0) or not np.all(np.isfinite(arr)) or abs(arr.sum() - 1.0) > 1e-9:
        raise ValueError(f"{name} must be a valid pmf")
    return arr


# ---------------------------------------------------------------------------
# error-joint builders
# ---------------------------------------------------------------------------

def npsem_errors(e_r, e_m, e_y) -> np.ndarray:
    """Independent errors, each shared by both exposure worlds."""
    e_r, e_m, e_y = (np.asarray(v, dtype=float) for v in (e_r, e_m, e_y))
    out = np.zeros((e_r.size, e_m.size, e_m.size, e_y.size, e_y.size))
    i, k = np.arange(e_m.size), np.arange(e_y.size)
    out[:, i[:, None], i[:, None], k[None, :], k[None, :]] = e_r[:, None, None] * e_m[None, :, None] * e_y[None, None, :]
    return out


def swig_errors(e_r, coupling_my, e_m_a, e_y_astar) -> np.ndarray:
    """World-specific errors with e_m[a*] and e_y[a] coupled by ``coupling_my``.

    ``coupling_my[i, k]`` is pr(e_m[a*] = i, e_y[a] = k); a product matrix
    gives independent structural errors, anything else cross-world dependence.
    """
    e_r, j, m_a, y_s = (np.asarray(v, dtype=float) for v in (e_r, coupling_my, e_m_a, e_y_astar))
    return np.einsum("r,ik,j,l->rijlk", e_r, j, m_a, y_s)


def latent_errors(k_ry, m_given_y, e_m_a, e_y_astar) -> np.ndarray:
    """Hidden common cause of R and Y plus cross-world M-Y coupling.

    ``k_ry[r, k]`` is the joint of (e_r, e_y[a]); ``m_given_y[k, i]`` is
    pr(e_m[a*] = i | e_y[a] = k).
    """
    k_ry, cond, m_a, y_s = (np.asarray(v, dtype=float) for v in (k_ry, m_given_y, e_m_a, e_y_astar))
    return np.einsum("rk,ki,j,l->rijlk", k_ry, cond, m_a, y_s)


# ---------------------------------------------------------------------------
# enumeration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Truth:
    """Exact population quantities of a world."""

    gamma0: float
    te: float
    nie: float
    pde: float
    mean_y_a: float
    mean_y_astar: float
    law: MediationLaw
    strata: StratifiedLaws
    cross_world_r: np.ndarray
    cell_pmf: np.ndarray = field(repr=False)
    gamma0_by_stratum: np.ndarray = field(repr=False)

    def to_record(self) -> dict:
        return {
            "gamma0": self.gamma0,
            "total_effect": self.te,
            "nie": self.nie,
            "pde": self.pde,
            "mean_y_a": self.mean_y_a,
            "mean_y_astar": self.mean_y_astar,
            "cross_world_r": self.cross_world_r.tolist(),
            "gamma0_by_stratum": self.gamma0_by_stratum.tolist(),
            "r_given_a": self.law.r_given_a.tolist(),
            "m_given_a": self.law.m_given_a.tolist(),
        }


def _states(spec):
    nz = np.nonzero(spec.errors)
    return nz, spec.errors[nz]


def _potential_outcomes(spec, c, nz):
    e_r, e_m0, e_m1, e_y0, e_y1 = nz
    r_s = spec.g_r[0, c, e_r]
    r_a = spec.g_r[1, c, e_r]
    m_s = spec.g_m[0, r_s, c, e_m0]
    m_a = spec.g_m[1, r_a, c, e_m1]
    y_s = spec.g_y[0, r_s, m_s, c, e_y0]          # Y(a*) = Y{a*, M(a*)}
    y_a = spec.g_y[1, r_a, m_a, c, e_y1]          # Y(a)  = Y{a, M(a)}
    y_x = spec.g_y[1, r_a, m_s, c, e_y1]          # Y{a, M(a*)}
    return r_s, r_a, m_s, m_a, y_s, y_a, y_x


def enumerate_truth(spec: WorldSpec) -> Truth:
    """Exact gamma0, effects and population laws by summing over all error states."""
    nz, prob = _states(spec)
    if prob.size * spec.n_c > MAX_STATES:
        raise TooLarge(f"{prob.size * spec.n_c} states exceed the enumeration limit {MAX_STATES}")
    yv = spec.y_values
    n_r, n_m, n_y = spec.n_r, spec.n_m, spec.n_y
    cells = np.zeros((spec.n_c, 2, n_r, n_m, n_y))
    cross = np.zeros((n_r, n_r))
    g0_c, te_c, nie_c, pde_c, eya_c, eys_c = (np.zeros(spec.n_c) for _ in range(6))
    for c in range(spec.n_c):
        r_s, r_a, m_s, m_a, y_s, y_a, y_x = _potential_outcomes(spec, c, nz)
        vs, va, vx = yv[y_s], yv[y_a], yv[y_x]
        g0_c[c] = math.fsum(prob * vx)
        eya_c[c] = math.fsum(prob * va)
        eys_c[c] = math.fsum(prob * vs)
        te_c[c] = math.fsum(prob * (va - vs))
        nie_c[c] = math.fsum(prob * (va - vx))
        pde_c[c] = math.fsum(prob * (vx - vs))
        np.add.at(cells[c, 0], (r_s, m_s, y_s), prob)
        np.add.at(cells[c, 1], (r_a, m_a, y_a), prob)
        np.add.at(cross, (r_a, r_s), spec.p_c[c] * prob)
    # cells[c, t] currently holds pr(R, M, Y | C=c, A=t); scale to the observational joint
    cells *= spec.p_c[:, None, None, None, None] * spec.p_a[None, :, None, None, None]

    def agg(v):
        return math.fsum(spec.p_c * v)

    codec = spec.codecs()["R"]
    r_codec = codec if codec.size > 1 else None
    law = law_from_counts(cells.sum(axis=0), yv, r_codec, ZeroCellPolicy.ERROR)
    keep = np.flatnonzero(spec.p_c > 0)
    strata = StratifiedLaws(tuple(law_from_counts(cells[c], yv, r_codec, ZeroCellPolicy.ERROR) for c in keep),
                            spec.p_c[keep] / spec.p_c[keep].sum(), tuple(int(c) for c in keep),
                            int(spec.n_c - keep.size))
    return Truth(gamma0=agg(g0_c), te=agg(te_c), nie=agg(nie_c), pde=agg(pde_c), mean_y_a=agg(eya_c),
                 mean_y_astar=agg(eys_c), law=law, strata=strata, cross_world_r=cross, cell_pmf=cells,
                 gamma0_by_stratum=g0_c)


def monte_carlo_gamma0(spec: WorldSpec, n: int, seed=0):
    """Sample mean and standard error of Y{a, M(a*)} from ``n`` draws."""
    rng = np.random.default_rng(seed)
    flat = spec.errors.ravel()
    states = rng.choice(flat.size, size=n, p=flat / flat.sum())
    cs = rng.choice(spec.n_c, size=n, p=spec.p_c)
    nz = np.unravel_index(states, spec.errors.shape)
    vals = np.empty(n)
    for c in range(spec.n_c):
        sel = cs == c
        sub = tuple(v[sel] for v in nz)
        vals[sel] = spec.y_values[_potential_outcomes(spec, c, sub)[6]]
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n))


def sample_dataset(spec: WorldSpec, n: int, seed=0, truth: Truth | None = None) -> Dataset:
    """Draw ``n`` i.i.d. observational records (C, A, R, M, Y)."""
    if n < 1:
        raise ValueError("sample size must be at least 1")
    truth = truth or enumerate_truth(spec)
    flat = truth.cell_pmf.ravel()
    rng = np.random.default_rng(seed)
    idx = rng.choice(flat.size, size=n, p=flat / flat.sum())
    c, a, r, m, y = np.unravel_index(idx, truth.cell_pmf.shape)
    cod = spec.codecs()
    return Dataset(cod["A"], cod["M"], cod["Y"], a, m, y, r, c, None, cod["R"], cod["C"])


# ---------------------------------------------------------------------------
# world generators
# ---------------------------------------------------------------------------

def _surjection(rng, n_src, n_dst):
    if n_src < n_dst:
        raise ValueError(f"need at least {n_dst} error points, got {n_src}")
    out = np.concatenate([np.arange(n_dst), rng.integers(0, n_dst, n_src - n_dst)])
    rng.shuffle(out)
    return out


def _dirichlet(rng, k):
    return rng.dirichlet(np.ones(k))


def random_tables(rng, n_c, n_r, n_m, n_y, n_er, n_em, n_ey):
    """Uniform random lookup tables; R and M tables are onto so every cell has positive mass."""
    g_r = np.array([[_surjection(rng, n_er, n_r) for _ in range(n_c)] for _ in range(2)])
    g_m = np.array([[[_surjection(rng, n_em, n_m) for _ in range(n_c)] for _ in range(n_r)] for _ in range(2)])
    g_y = rng.integers(0, n_y, size=(2, n_r, n_m, n_c, n_ey))
    return g_r, g_m, g_y


def random_world(rng, kind: str = "npsem", n_c: int = 1, n_r: int = 2, n_m: int = 2,
                 y_values=(0.0, 1.0), n_err: int = 4, p_a=(0.5, 0.5)) -> WorldSpec:
    """Random world with Dirichlet(1, ..., 1) pmfs and uniform lookup tables.

    ``kind`` selects the error structure: ``"npsem"`` (independent errors
    shared across worlds), ``"swig"`` (e_m[a*] and e_y[a] arbitrarily
    coupled) or ``"latent"`` (additionally a hidden cause of R and Y).
    """
    rng = np.random.default_rng(rng)
    n_y = len(y_values)
    n_er = max(n_err, n_r)
    n_em = max(n_err, n_m)
    n_ey = n_err
    p_c = _dirichlet(rng, n_c)
    g_r, g_m, g_y = random_tables(rng, n_c, n_r, n_m, n_y, n_er, n_em, n_ey)
    if kind == "npsem":
        errors = npsem_errors(_dirichlet(rng, n_er), _dirichlet(rng, n_em), _dirichlet(rng, n_ey))
    elif kind == "swig":
        errors = swig_errors(_dirichlet(rng, n_er), _dirichlet(rng, n_em * n_ey).reshape(n_em, n_ey),
                             _dirichlet(rng, n_em), _dirichlet(rng, n_ey))
    elif kind == "latent":
        k_ry = _dirichlet(rng, n_er * n_ey).reshape(n_er, n_ey)
        cond = rng.dirichlet(np.ones(n_em), size=n_ey)
        errors = latent_errors(k_ry, cond, _dirichlet(rng, n_em), _dirichlet(rng, n_ey))
    else:
        raise ValueError(f"unknown world kind {kind!r}")
    return WorldSpec(p_c, p_a, y_values, n_m, g_r, g_m, g_y, errors, name=f"random-{kind}")


def _common_denominator(values, max_den=64):
    fr = [Fraction(float(v)).limit_denominator(10_000) for v in values]
    for f, v in zip(fr, values):
        if abs(float(f) - float(v)) > 1e-12:
            raise ValueError(f"probability {v} is not a simple fraction")
    k = 1
    for f in fr:
        k = k * f.denominator // math.gcd(k, f.denominator)
    if k > max_den:
        raise ValueError(f"grid of {k} points is too fine for exact enumeration")
    return k


def attainment_world(pm_star, py, y_value: float = 1.0, upper: bool = True) -> WorldSpec:
    """World whose gamma0 sits exactly on one end of the copula bounds.

    Outcome support is {0, y_value}; ``py[m]`` is pr{Y(a, m) = y_value}.
    M(a*) and every Y(a, m) are driven by one uniform grid error U.  For each
    m the event {Y(a, m) = y_value} is placed to maximally overlap the event
    {M(a*) = m} (upper end for positive y_value) or to avoid it (lower end),
    i.e. the two indicators are comonotone or countermonotone.  All
    probabilities must be multiples of 1/K for a grid size K <= 64.
    """
    pm_star = np.asarray(pm_star, dtype=float)
    py = np.asarray(py, dtype=float)
    if y_value == 0:
        raise ValueError("y_value must be nonzero")
    n_m = pm_star.size
    K = _common_denominator(np.concatenate([pm_star, py]))
    counts_m = np.rint(pm_star * K).astype(int)
    counts_y = np.rint(py * K).astype(int)
    edges = np.concatenate([[0], np.cumsum(counts_m)])
    block = np.repeat(np.arange(n_m), counts_m)        # M(a*) as a function of U
    overlap = upper == (y_value > 0)
    g_y_a = np.zeros((n_m, K), dtype=np.int64)
    for m in range(n_m):
        inside = np.arange(edges[m], edges[m + 1])
        outside = np.setdiff1d(np.arange(K), inside)
        order = np.concatenate([inside, outside]) if overlap else np.concatenate([outside, inside])
        g_y_a[m, order[:counts_y[m]]] = 1
    g_m = np.stack([block, block])[:, None, None, :]            # (2, 1, 1, K)
    g_y = np.stack([g_y_a, g_y_a])[:, None, :, None, :]         # (2, 1, n_m, 1, K)
    u = np.full(K, 1.0 / K)
    j = np.diag(u)                                              # e_m[a*] == e_y[a]
    errors = swig_errors([1.0], j, u, u)
    return WorldSpec([1.0], [0.5, 0.5], [0.0, float(y_value)], n_m, np.zeros((2, 1, 1), dtype=int), g_m, g_y,
                     errors, name=f"attainment-{'upper' if upper else 'lower'}")


def interaction_free_world(rng, n_r: int = 2, n_m: int = 2, n_err: int = 4, n_c: int = 1) -> WorldSpec:
    """Independent-error world with Y = h1(R, e_y) + h2(M, e_y): no M-R interaction."""
    rng = np.random.default_rng(rng)
    n_er, n_em, n_ey = max(n_err, n_r), max(n_err, n_m), n_err
    g_r, g_m, _ = random_tables(rng, n_c, n_r, n_m, 3, n_er, n_em, n_ey)
    h1 = rng.integers(0, 2, size=(2, n_r, n_c, n_ey))
    h2 = rng.integers(0, 2, size=(2, n_m, n_c, n_ey))
    g_y = h1[:, :, None, :, :] + h2[:, None, :, :, :]
    errors = npsem_errors(_dirichlet(rng, n_er), _dirichlet(rng, n_em), _dirichlet(rng, n_ey))
    return WorldSpec(_dirichlet(rng, n_c), [0.5, 0.5], [0.0, 1.0, 2.0], n_m, g_r, g_m, g_y, errors,
                     name="interaction-free")


def _component_grid(rng, k, grid):
    # per component: individual-level monotone R_j(a) >= R_j(a*) on its own grid error
    low = rng.integers(1, grid - 1, size=k)          # pr(R_j(a*)=1) = low / grid
    high = np.minimum(grid - 1, low + rng.integers(1, grid // 2, size=k))
    return low, high


def monotone_world(rng, n_components: int = 2, n_m: int = 2, y_values=(0.0, 1.0), grid: int = 6,
                   n_err: int = 4, n_c: int = 1) -> WorldSpec:
    """Independent-error world where R is a vector of binary components, each
    with its own independent error and R_j(a) >= R_j(a*) for every unit."""
    rng = np.random.default_rng(rng)
    k = n_components
    n_r = 2 ** k
    low, high = _component_grid(rng, k, grid)
    # e_r enumerates the product grid of component errors (first component most significant)
    u = np.array(np.unravel_index(np.arange(grid ** k), (grid,) * k)).T          # (grid^k, k)
    bits_s = (u < low).astype(int)
    bits_a = (u < high).astype(int)
    weights = 2 ** np.arange(k - 1, -1, -1)
    r_s = bits_s @ weights
    r_a = bits_a @ weights
    g_r = np.stack([np.tile(r_s, (n_c, 1)), np.tile(r_a, (n_c, 1))])
    n_em = max(n_err, n_m)
    n_y = len(y_values)
    g_m = np.array([[[_surjection(rng, n_em, n_m) for _ in range(n_c)] for _ in range(n_r)] for _ in range(2)])
    g_y = rng.integers(0, n_y, size=(2, n_r, n_m, n_c, n_err))
    e_r = np.full(grid ** k, 1.0 / grid ** k)
    errors = npsem_errors(e_r, _dirichlet(rng, n_em), _dirichlet(rng, n_err))
    return WorldSpec(_dirichlet(rng, n_c), [0.5, 0.5], y_values, n_m, g_r, g_m, g_y, errors,
                     r_components=(2,) * k, name="monotone")


def art_cohort_world(seed=0) -> WorldSpec:
    """Synthetic stand-in for the ART/adherence/virologic-failure setting.

    Binary exposure, R = (any toxicity, early adherence) as two binary
    components with independent monotone errors, binary later adherence M,
    rare binary outcome (about 10%), and a binary baseline covariate.
    ``seed`` jitters the mediator and outcome thresholds by one grid step.
    """
    rng = np.random.default_rng(seed)
    n_c, k, grid = 2, 2, 10
    # component thresholds per exposure (a*, a) and covariate level
    tox = np.array([[2, 3], [4, 5]])          # pr(tox=1) * 10, indexed [t, c]
    adh = np.array([[6, 7], [7, 8]])          # pr(adh1=1) * 10
    u = np.array(np.unravel_index(np.arange(grid ** k), (grid,) * k)).T
    g_r = np.zeros((2, n_c, grid ** k), dtype=np.int64)
    for t in range(2):
        for c in range(n_c):
            g_r[t, c] = 2 * (u[:, 0] < tox[t, c]) + (u[:, 1] < adh[t, c])
    n_r, n_m, n_em, n_ey = 4, 2, 10, 20
    # later adherence: likelier after early adherence, less likely with toxicity
    pm1 = 0.55 + 0.3 * (np.arange(n_r) % 2)[None, :, None] - 0.1 * (np.arange(n_r) // 2)[None, :, None] \
        + 0.05 * np.arange(n_c)[None, None, :] + 0.05 * np.arange(2)[:, None, None]
    thr_m = np.clip(np.rint(pm1 * n_em) + rng.integers(-1, 2, size=pm1.shape), 1, n_em - 1)
    g_m = (np.arange(n_em)[None, None, None, :] < thr_m[..., None]).astype(np.int64)
    # failure: rare, lower with adherence, higher with toxicity, interaction with early adherence
    base = 0.14 - 0.06 * np.arange(n_m)[None, None, :, None] + 0.05 * (np.arange(n_r) // 2)[None, :, None, None] \
        - 0.03 * (np.arange(n_r) % 2)[None, :, None, None] * np.arange(n_m)[None, None, :, None] \
        + 0.02 * np.arange(n_c)[None, None, None, :] + 0.02 * np.arange(2)[:, None, None, None]
    thr_y = np.clip(np.rint(base * n_ey) + rng.integers(-1, 2, size=base.shape), 1, n_ey // 2)
    g_y = (np.arange(n_ey)[None, None, None, None, :] < thr_y[..., None]).astype(np.int64)
    errors = npsem_errors(np.full(grid ** k, 1.0 / grid ** k), np.full(n_em, 1.0 / n_em), np.full(n_ey, 1.0 / n_ey))
    return WorldSpec([0.45, 0.55], [0.7, 0.3], [0.0, 1.0], n_m, g_r, g_m, g_y, errors,
                     r_components=(2, 2), name="art-cohort")
