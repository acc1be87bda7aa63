"""Mixed-exponent GRR toolkit and path norms.

Kernels are vectorised callables.  A first-family kernel ``A_1j(u1, v1, u2)``
bounds increments in the first variable at a fixed second coordinate; a
second-family kernel ``A_2j(v1, u2, v2)`` bounds increments in the second
variable.  One-dimensional kernels take ``(u, v)``.

The diagonal singularity ``|u - v|**-beta`` is integrated over dyadic shells
in ``|u - v|`` with Gauss-Legendre nodes.  The innermost band is closed with
the geometric tail implied by the last two shells, which is exact when the
integrand behaves like a power of ``|u - v|`` near the diagonal.  A shell
ratio of one or more means the integral diverges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from slelab.exponents import GrrExponentConfig

__all__ = [
    "SampledField2D",
    "GrrIntegrals",
    "GrrReport",
    "DecompositionError",
    "grr_integrals",
    "grr_integrals_1d",
    "verify_grr",
    "verify_grr_1d",
    "increment_kernels",
    "sobolev_seminorm",
    "path_norms",
    "holder_constant",
    "p_variation",
    "PVAR_EXACT_CAP",
]

Kernel = Callable[..., np.ndarray]

PVAR_EXACT_CAP = 4096


class DecompositionError(ValueError):
    """The kernels fail to dominate the field increment at some grid pair."""

    def __init__(self, first, second, lhs, rhs):
        self.pair = (tuple(first), tuple(second))
        self.lhs = float(lhs)
        self.rhs = float(rhs)
        super().__init__(
            f"|dG| = {lhs:.6g} exceeds kernel sum {rhs:.6g} at grid pair {first} -> {second}"
        )


@dataclass(frozen=True)
class SampledField2D:
    """Values ``G[i, j] = G(x1[i], x2[j])``, real or complex."""

    x1: np.ndarray
    x2: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        x1 = np.asarray(self.x1, dtype=float)
        x2 = np.asarray(self.x2, dtype=float)
        values = np.asarray(self.values)
        if values.shape != (x1.size, x2.size):
            raise ValueError(f"values shape {values.shape} does not match grids ({x1.size}, {x2.size})")
        for name, x in (("x1", x1), ("x2", x2)):
            if x.size >= 2 and not np.all(np.diff(x) > 0):
                raise ValueError(f"{name} must be strictly increasing")
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "x2", x2)
        object.__setattr__(self, "values", values)


# --------------------------------------------------------------------------
# singular quadrature


@dataclass(frozen=True)
class _ShellRule:
    shells: int = 40
    order: int = 10
    panels: int = 8


def _diagonal_integral(
    integrand: Callable[[np.ndarray, np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    rule: _ShellRule,
) -> tuple[float, bool]:
    """``int int_{[lo,hi]^2} integrand(u, v) du dv`` with a diagonal singularity.

    Returns ``(value, diverged)``.
    """
    L = hi - lo
    x, w = np.polynomial.legendre.leggauss(rule.order)
    xs, ws = 0.5 * (x + 1.0), 0.5 * w
    px = ((np.arange(rule.panels)[:, None] + xs[None, :]) / rule.panels).ravel()
    pw = np.tile(ws / rule.panels, rule.panels)
    shells = np.empty(rule.shells)
    for k in range(rule.shells):
        d_hi = L * 2.0**-k
        d_lo = 0.5 * d_hi
        dist = d_lo + (d_hi - d_lo) * xs
        dw = (d_hi - d_lo) * ws
        total = 0.0
        for sign in (1.0, -1.0):
            d = sign * dist
            start = np.maximum(0.0, -d)
            span = L - dist
            u = lo + start[:, None] + span[:, None] * px[None, :]
            vals = integrand(u, u + d[:, None])
            total += float(np.sum(dw[:, None] * span[:, None] * pw[None, :] * vals))
        shells[k] = total
    if not np.all(np.isfinite(shells)):
        return math.inf, True
    head = float(np.sum(shells))
    last, prev = abs(shells[-1]), abs(shells[-2])
    if last == 0.0:
        return head, False
    if prev == 0.0:
        return math.inf, True
    ratio = last / prev
    if ratio >= 1.0 - 1e-6:
        return math.inf, True
    return head + shells[-1] * ratio / (1.0 - ratio), False


@dataclass(frozen=True)
class GrrIntegrals:
    """Condition integrals per kernel; divergent entries are ``inf`` and flagged."""

    m_1: tuple[float, ...]
    m_2: tuple[float, ...]
    diverged_1: tuple[bool, ...]
    diverged_2: tuple[bool, ...]

    def __iter__(self):
        yield list(self.m_1)
        yield list(self.m_2)

    @property
    def diverged(self) -> bool:
        return any(self.diverged_1) or any(self.diverged_2)


def _interval(grid) -> tuple[float, float]:
    g = np.asarray(grid, dtype=float)
    lo, hi = float(g[0]), float(g[-1])
    if not hi > lo:
        raise ValueError("integration interval is degenerate")
    return lo, hi


def grr_integrals(
    kernels_1: Sequence[Kernel],
    kernels_2: Sequence[Kernel],
    config: GrrExponentConfig,
    grids: tuple,
    *,
    outer_order: int = 16,
    rule: _ShellRule = _ShellRule(),
) -> GrrIntegrals:
    """Quadrature values ``M_1j``, ``M_2j`` over ``I_1 x I_2``.

    ``grids`` is ``(I_1, I_2)``; only the end points of each are used.
    """
    if len(kernels_1) != len(config.q_1) or len(kernels_2) != len(config.q_2):
        raise ValueError("one kernel per exponent pair is required")
    (a1, b1), (a2, b2) = _interval(grids[0]), _interval(grids[1])
    x, w = np.polynomial.legendre.leggauss(outer_order)

    def outer(lo, hi):
        return lo + (hi - lo) * 0.5 * (x + 1.0), 0.5 * (hi - lo) * w

    o1, w1 = outer(a1, b1)
    o2, w2 = outer(a2, b2)

    def family(kernels, qs, betas, span, fixed, fw, build):
        vals, flags = [], []
        for kern, q, beta in zip(kernels, qs, betas):
            def integrand(u, v, kern=kern, q=q, beta=beta):
                a = np.abs(build(kern, u[..., None], v[..., None], fixed))
                dist = np.abs(u - v)[..., None]
                return np.sum(fw * a**q / dist**beta, axis=-1)
            m, div = _diagonal_integral(integrand, *span, rule)
            vals.append(float(m))
            flags.append(div)
        return tuple(vals), tuple(flags)

    m1, f1 = family(kernels_1, config.q_1, config.beta_1, (a1, b1), o2, w2, _first)
    m2, f2 = family(kernels_2, config.q_2, config.beta_2, (a2, b2), o1, w1, _second)
    return GrrIntegrals(m1, m2, f1, f2)


def _first(kern, u, v, fixed):
    return kern(u, v, fixed)


def _second(kern, u, v, fixed):
    return kern(fixed, u, v)


def grr_integrals_1d(
    kernels: Sequence[Kernel],
    q: Sequence[float],
    beta: Sequence[float],
    interval,
    *,
    rule: _ShellRule = _ShellRule(),
) -> tuple[list[float], list[bool]]:
    """``M_j = int int |A_j(u, v)|**q_j / |u - v|**beta_j``; returns values and divergence flags."""
    lo, hi = _interval(interval)
    vals, flags = [], []
    for kern, qj, bj in zip(kernels, q, beta):
        if qj < 1:
            raise ValueError("q must be >= 1")
        m, div = _diagonal_integral(
            lambda u, v, kern=kern, qj=qj, bj=bj: np.abs(kern(u, v)) ** qj / np.abs(u - v) ** bj,
            lo, hi, rule,
        )
        vals.append(float(m))
        flags.append(div)
    return vals, flags


def increment_kernels(G: SampledField2D) -> tuple[Kernel, Kernel]:
    """Kernels ``|G(u1,u2) - G(v1,u2)|`` and ``|G(v1,u2) - G(v1,v2)|`` of the bilinear interpolant.

    By the triangle inequality they dominate every increment of ``G``.
    """
    from scipy.interpolate import RegularGridInterpolator

    vals = G.values
    if vals.ndim != 2:
        raise ValueError("increment kernels need a scalar (real or complex) field")
    interp = RegularGridInterpolator((G.x1, G.x2), vals, method="linear")

    def at(a, b):
        a, b = np.broadcast_arrays(a, b)
        pts = np.stack([np.clip(a, G.x1[0], G.x1[-1]), np.clip(b, G.x2[0], G.x2[-1])], axis=-1)
        return interp(pts.reshape(-1, 2)).reshape(a.shape)

    def first(u1, v1, u2):
        return np.abs(at(u1, u2) - at(v1, u2))

    def second(v1, u2, v2):
        return np.abs(at(v1, u2) - at(v1, v2))

    return first, second


# --------------------------------------------------------------------------
# certificates


@dataclass(frozen=True)
class GrrReport:
    config: GrrExponentConfig
    m_1: tuple[float, ...]
    m_2: tuple[float, ...]
    empirical_constant: float
    worst_pair: tuple | None
    worst_coordinates: tuple | None
    n_pairs: int

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "M_1": list(self.m_1),
            "M_2": list(self.m_2),
            "empirical_constant": self.empirical_constant,
            "worst_pair": self.worst_pair,
            "worst_coordinates": self.worst_coordinates,
            "n_pairs": self.n_pairs,
        }


def _distance(a, b) -> np.ndarray:
    diff = a - b
    if diff.ndim > 2:
        return np.max(np.abs(diff), axis=tuple(range(2, diff.ndim)))
    return np.abs(diff)


def verify_grr(
    G: SampledField2D,
    kernels_1: Sequence[Kernel],
    kernels_2: Sequence[Kernel],
    config: GrrExponentConfig,
    *,
    slack: float = 1e-12,
    integrals: GrrIntegrals | None = None,
) -> GrrReport:
    """Smallest ``C`` with ``|dG| <= C * RHS`` over all distinct grid pairs.

    The increment decomposition is checked first at every pair; a violation
    raises :class:`DecompositionError` carrying the witness pair.
    """
    n1, n2 = G.x1.size, G.x2.size
    X1, X2 = np.meshgrid(G.x1, G.x2, indexing="ij")
    X1, X2 = X1.ravel(), X2.ravel()
    vals = G.values.reshape(n1 * n2, *G.values.shape[2:])
    # pair (p, q): p = (x1, x2), q = (y1, y2)
    x1, y1 = X1[:, None], X1[None, :]
    x2, y2 = X2[:, None], X2[None, :]
    lhs = _distance(vals[:, None], vals[None, :])
    bound = np.zeros_like(lhs, dtype=float)
    for k in kernels_1:
        bound += np.abs(np.broadcast_to(k(x1, y1, x2), lhs.shape))
    for k in kernels_2:
        bound += np.abs(np.broadcast_to(k(y1, x2, y2), lhs.shape))
    excess = lhs - bound * (1.0 + slack) - slack
    if np.any(excess > 0):
        p, q = np.unravel_index(int(np.argmax(excess)), excess.shape)
        raise DecompositionError(
            np.unravel_index(p, (n1, n2)), np.unravel_index(q, (n1, n2)), lhs[p, q], bound[p, q]
        )
    if integrals is None:
        integrals = grr_integrals(kernels_1, kernels_2, config, (G.x1, G.x2))
    if integrals.diverged:
        raise ValueError("GRR condition integral diverges; no certificate possible")
    d1, d2 = np.abs(x1 - y1), np.abs(x2 - y2)
    rhs = np.zeros_like(lhs, dtype=float)
    for m, q, (g1, g2) in zip(integrals.m_1, config.q_1, config.gamma_1):
        rhs += m ** (1.0 / q) * (d1**g1 + d2**g2)
    for m, q, (g1, g2) in zip(integrals.m_2, config.q_2, config.gamma_2):
        rhs += m ** (1.0 / q) * (d1**g1 + d2**g2)
    return _certificate(lhs, rhs, (n1, n2), (G.x1, G.x2), config, integrals)


def _certificate(lhs, rhs, shape, axes, config, integrals) -> GrrReport:
    n = lhs.shape[0]
    off = ~np.eye(n, dtype=bool)
    npairs = int(off.sum() // 2)
    ratio = np.zeros_like(lhs, dtype=float)
    pos = off & (lhs > 0)
    if np.any(pos & ~(rhs > 0)):
        raise ValueError("right-hand side vanishes where the increment does not")
    ratio[pos] = lhs[pos] / rhs[pos]
    if not np.any(ratio > 0):
        return GrrReport(config, integrals.m_1, integrals.m_2, 0.0, None, None, npairs)
    p, q = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    ip, iq = np.unravel_index(p, shape), np.unravel_index(q, shape)
    coords = tuple(
        tuple(float(ax[i]) for ax, i in zip(axes, idx)) for idx in (ip, iq)
    )
    pair = (tuple(int(i) for i in ip), tuple(int(i) for i in iq))
    return GrrReport(config, integrals.m_1, integrals.m_2, float(ratio[p, q]), pair, coords, npairs)


def verify_grr_1d(
    x: np.ndarray,
    values: np.ndarray,
    kernels: Sequence[Kernel],
    q: Sequence[float],
    beta: Sequence[float],
) -> dict:
    """One-variable certificate with ``gamma_j = (beta_j - 2) / q_j``."""
    x = np.asarray(x, dtype=float)
    values = np.asarray(values)
    if any(b <= 2 for b in beta):
        raise ValueError("the one-dimensional certificate needs every beta_j > 2")
    lhs = _distance(values[:, None], values[None, :])
    u, v = x[:, None], x[None, :]
    bound = sum(np.abs(np.broadcast_to(k(u, v), lhs.shape)) for k in kernels)
    excess = lhs - bound * (1 + 1e-12) - 1e-12
    if np.any(excess > 0):
        i, j = np.unravel_index(int(np.argmax(excess)), excess.shape)
        raise DecompositionError((i,), (j,), lhs[i, j], bound[i, j])
    m, div = grr_integrals_1d(kernels, q, beta, x)
    if any(div):
        raise ValueError("GRR condition integral diverges; no certificate possible")
    gammas = [(b - 2) / qj for qj, b in zip(q, beta)]
    rhs = sum(mj ** (1 / qj) * np.abs(u - v) ** g for mj, qj, g in zip(m, q, gammas))
    off = ~np.eye(x.size, dtype=bool) & (lhs > 0)
    ratio = np.zeros_like(lhs, dtype=float)
    ratio[off] = lhs[off] / rhs[off]
    i, j = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    return {
        "M": m,
        "gamma": gammas,
        "empirical_constant": float(ratio[i, j]),
        "worst_pair": (int(i), int(j)) if ratio[i, j] > 0 else None,
    }


# --------------------------------------------------------------------------
# norms


def _times(n: int, times) -> np.ndarray:
    if times is None:
        return np.linspace(0.0, 1.0, n)
    t = np.asarray(times, dtype=float)
    if t.shape != (n,) or not np.all(np.diff(t) > 0):
        raise ValueError("times must be strictly increasing with one entry per sample")
    return t


def sobolev_seminorm(values, delta: float, q: float, times=None, *, rule: _ShellRule = _ShellRule()) -> float:
    """``(int int |x(t)-x(s)|**q / |t-s|**(1+delta q))**(1/q)`` of the linear interpolant.

    Returns ``inf`` when the double integral diverges.
    """
    values = np.asarray(values)
    if values.ndim != 1 or values.size < 2:
        raise ValueError("need a one-dimensional path with at least two samples")
    if not 0 < delta < 1 or not q > 1:
        raise ValueError("need 0 < delta < 1 and q > 1")
    t = _times(values.size, times)
    re, im = values.real.astype(float), np.imag(values).astype(float)
    complex_path = np.iscomplexobj(values)

    def path(s):
        out = np.interp(s, t, re)
        if complex_path:
            out = out + 1j * np.interp(s, t, im)
        return out

    beta = 1.0 + delta * q
    panels = max(rule.panels, min(values.size - 1, 256))
    m, div = _diagonal_integral(
        lambda u, v: np.abs(path(u) - path(v)) ** q / np.abs(u - v) ** beta,
        float(t[0]), float(t[-1]),
        _ShellRule(rule.shells, rule.order, panels),
    )
    return math.inf if div else m ** (1.0 / q)


def _pairwise(values: np.ndarray, i: np.ndarray, j) -> np.ndarray:
    diff = values[i] - values[j]
    if diff.ndim > 1:
        return np.max(np.abs(diff), axis=tuple(range(1, diff.ndim)))
    return np.abs(diff)


def holder_constant(values, alpha: float, times=None) -> float:
    """``max_{s<t} |x(t) - x(s)| / |t - s|**alpha`` over grid pairs."""
    values = np.asarray(values)
    n = values.shape[0]
    t = _times(n, times)
    best = 0.0
    for lag in range(1, n):
        d = _pairwise(values, np.arange(lag, n), np.arange(0, n - lag))
        best = max(best, float(np.max(d / (t[lag:] - t[:-lag]) ** alpha)))
    return best


def _turning_points(x: np.ndarray) -> np.ndarray:
    """Indices of the end points and strict local extrema of a real path."""
    dx = np.diff(x)
    keep = dx != 0
    idx = np.concatenate(([0], np.flatnonzero(keep) + 1))
    if idx.size <= 2:
        return np.unique(np.concatenate(([0], [x.size - 1])))
    s = np.sign(np.diff(x[idx]))
    turns = idx[1:-1][s[1:] != s[:-1]]
    return np.concatenate(([0], turns, [x.size - 1]))


def p_variation(values, p: float, *, cap: int = PVAR_EXACT_CAP) -> dict:
    """p-variation ``(sup_partitions sum |dx|**p)**(1/p)`` over grid partitions.

    Real paths are first reduced to their turning points, which is exact for
    ``p >= 1``.  Up to ``cap`` remaining samples the dynamic program over all
    partitions is exact.  Beyond that only predecessors within ``cap`` steps
    or on a coarse anchor lattice are tried, which gives a lower bound.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    values = np.asarray(values)
    if values.shape[0] < 2:
        raise ValueError("need at least two samples")
    if values.ndim == 1 and not np.iscomplexobj(values):
        values = values[_turning_points(values.astype(float))]
    n = values.shape[0]
    exact = n <= cap
    best = np.zeros(n)
    anchors = np.arange(0, n, max(1, n // cap))
    for j in range(1, n):
        if exact or j <= cap:
            cand = np.arange(j)
        else:
            cand = np.union1d(np.arange(j - cap, j), anchors[anchors < j])
        best[j] = np.max(best[cand] + _pairwise(values, cand, j) ** p)
    return {"p_variation": float(best[-1] ** (1.0 / p)), "exact": exact, "n_points": int(n)}


def path_norms(values, alpha: float, p: float, times=None) -> dict:
    """Hoelder constant (exponent ``alpha``) and p-variation of a sampled path.

    ``values`` may be ``(n,)`` real or complex, or ``(n, m)``: sample ``i``
    is then an element of the sup-metric space of functions on ``m`` points.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    values = np.asarray(values)
    pv = p_variation(values, p)
    return {
        "holder_constant": holder_constant(values, alpha, times),
        "p_variation": pv["p_variation"],
        "p_variation_exact": pv["exact"],
    }
