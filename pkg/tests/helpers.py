"""Random inputs and slow, loop-based reference computations for the tests."""
from __future__ import annotations

import itertools
import math

import numpy as np

from pdebounds.probmodel import CategoricalCodec, MediationLaw

BASE, COMP = 0, 1


def random_law(rng, p=2, n_m=2, n_y=2, y_values=None, r_components=None, sparse=False) -> MediationLaw:
    """Dirichlet(1,...,1) conditional tables; ``sparse`` zeroes some cells."""
    rng = np.random.default_rng(rng)
    yv = np.arange(n_y, dtype=float) if y_values is None else np.asarray(y_values, dtype=float)

    def dirich(shape, k):
        out = rng.dirichlet(np.ones(k), size=shape)
        if sparse:
            out = np.where(rng.random(out.shape) < 0.2, 0.0, out)
            out[..., 0] += (out.sum(-1) == 0)
            out /= out.sum(-1, keepdims=True)
        return out

    r_codec = None
    if r_components:
        r_codec = CategoricalCodec.product("R", [CategoricalCodec(f"R{j}", ("0", "1")) for j in range(r_components)])
        p = 2 ** r_components
    elif p > 1:
        r_codec = CategoricalCodec("R", tuple(str(i) for i in range(p)))
    return MediationLaw(dirich((2,), p), dirich((2, p), n_m), dirich((2, p, n_m), len(yv)), yv, r_codec)


def slow_nested_mean(law):
    p, n_m = law.p, law.n_m
    out = np.zeros((p, p))
    for r in range(p):
        for rs in range(p):
            tot = 0.0
            for m in range(n_m):
                ey = sum(law.y_values[k] * law.y_given_mra[COMP, r, m, k] for k in range(law.n_y))
                tot += ey * law.m_given_ra[BASE, rs, m]
            out[r, rs] = tot
    return out


def slow_pm_star(law):
    return np.array([sum(law.m_given_ra[BASE, r, m] * law.r_given_a[BASE, r] for r in range(law.p))
                     for m in range(law.n_m)])


def slow_ey_given_m(law, m, account_for_r):
    """E{Y(a, m)} under either g-formula substitution."""
    if account_for_r:
        return sum(law.r_given_a[COMP, r] * sum(law.y_values[k] * law.y_given_mra[COMP, r, m, k]
                                                for k in range(law.n_y)) for r in range(law.p))
    den = sum(law.r_given_a[COMP, r] * law.m_given_ra[COMP, r, m] for r in range(law.p))
    num = sum(law.r_given_a[COMP, r] * law.m_given_ra[COMP, r, m] *
              sum(law.y_values[k] * law.y_given_mra[COMP, r, m, k] for k in range(law.n_y))
              for r in range(law.p))
    return num / den


def binary_display_bounds(law, account_for_r):
    """The classical binary-mediator bound displays, transcribed term by term."""
    lower = upper = 0.0
    pm = slow_pm_star(law)
    for m in (0, 1):
        ey = slow_ey_given_m(law, m, account_for_r)
        lower += max(0.0, pm[m] + ey - 1.0)
        upper += min(pm[m], ey)
    return lower, upper


def coupling_search(pm_star, p1, step=0.005):
    """Grid search over couplings of M(a*) with each binary Y(a, m).

    For binary Y only pr{M(a*)=m, Y(a,m)=1} matters; scan it over a grid
    and keep couplings whose four cells are nonnegative.
    """
    lo = hi = 0.0
    for pm, py in zip(pm_star, p1):
        feas = []
        for t in np.arange(0.0, 1.0 + step / 2, step):
            cells = (t, pm - t, py - t, 1.0 - pm - py + t)
            if min(cells) >= -1e-12:
                feas.append(t)
        lo += min(feas)
        hi += max(feas)
    return lo, hi


def slow_truth(spec):
    """gamma0, E[Y(a)], E[Y(a*)] by explicit loops over every error state."""
    yv = spec.y_values
    g0, ya, ys = [], [], []
    shape = spec.errors.shape
    for c in range(spec.n_c):
        for idx in itertools.product(*(range(s) for s in shape)):
            pr = spec.errors[idx] * spec.p_c[c]
            if pr == 0:
                continue
            er, em0, em1, ey0, ey1 = idx
            r0, r1 = spec.g_r[0, c, er], spec.g_r[1, c, er]
            m0, m1 = spec.g_m[0, r0, c, em0], spec.g_m[1, r1, c, em1]
            g0.append(pr * yv[spec.g_y[1, r1, m0, c, ey1]])
            ya.append(pr * yv[spec.g_y[1, r1, m1, c, ey1]])
            ys.append(pr * yv[spec.g_y[0, r0, m0, c, ey0]])
    return math.fsum(g0), math.fsum(ya), math.fsum(ys)


def brute_lp_grid(law, n_grid=2001):
    """p = 2 only: scan pi[1, 1] over its Frechet range."""
    pa, ps = law.r_given_a[COMP, 1], law.r_given_a[BASE, 1]
    x = slow_nested_mean(law)
    vals = []
    for t in np.linspace(max(0.0, pa + ps - 1.0), min(pa, ps), n_grid):
        joint = np.array([[1 - pa - ps + t, ps - t], [pa - t, t]])
        vals.append((joint * x).sum())
    return min(vals), max(vals)


def binary_r_law(pa, ps, x):
    """Law with pr(R=1|a)=pa, pr(R=1|a*)=ps and nested means x[r][r*].

    M given (R=r*, a*) is degenerate at m=r* and E(Y | M=m, R=r, a) = x[r][m],
    so the nested mean E{E(Y|M,R=r,a) | R=r*, a*} equals x[r][r*].
    """
    r_given_a = np.array([[1 - ps, ps], [1 - pa, pa]])
    m_given_ra = np.zeros((2, 2, 2))
    m_given_ra[BASE] = np.eye(2)
    m_given_ra[COMP] = 0.5
    y = np.zeros((2, 2, 2, 2))
    y[COMP, :, :, 1] = np.asarray(x)
    y[BASE, :, :, 1] = 0.5
    y[..., 0] = 1 - y[..., 1]
    return MediationLaw(r_given_a, m_given_ra, y, np.array([0.0, 1.0]))
