"""The joint trace field gamma(t, kappa) driven by one shared Brownian path."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from slelab import _io
from slelab.driver import DriverPath, TimeGrid, refine
from slelab.exponents import field_exponents
from slelab.loewner import BRANCH_TOL, trace_values

__all__ = [
    "KappaGrid",
    "TraceField",
    "Holder2DEstimate",
    "sample_field",
    "holder_2d",
    "holder_2d_arrays",
    "default_exponents",
    "refinement_stability",
    "kappa_continuity",
]


@dataclass(frozen=True)
class KappaGrid:
    kappa_min: float
    kappa_max: float
    n_kappa: int

    def __post_init__(self) -> None:
        if not 0 < self.kappa_min <= self.kappa_max:
            raise ValueError("need 0 < kappa_min <= kappa_max")
        if int(self.n_kappa) != self.n_kappa or self.n_kappa < 1:
            raise ValueError("n_kappa must be a positive integer")
        if self.n_kappa == 1 and self.kappa_min != self.kappa_max:
            raise ValueError("a single-node grid needs kappa_min == kappa_max")
        object.__setattr__(self, "n_kappa", int(self.n_kappa))

    @property
    def nodes(self) -> np.ndarray:
        if self.n_kappa == 1:
            return np.array([float(self.kappa_min)])
        k = np.linspace(self.kappa_min, self.kappa_max, self.n_kappa)
        k[-1] = self.kappa_max
        return k

    def refined(self) -> "KappaGrid":
        """Halve the spacing: ``2 n - 1`` nodes, the old ones included."""
        return KappaGrid(self.kappa_min, self.kappa_max, 2 * self.n_kappa - 1)

    def require_subcritical(self) -> None:
        if not self.kappa_max < 8.0 / 3.0:
            raise ValueError(f"kappa_max={self.kappa_max} must be below 8/3 for joint continuity")


@dataclass(frozen=True)
class TraceField:
    """``gamma[k, j] = gamma(t_k, kappa_j)``; failed cells hold ``nan``."""

    t_grid: TimeGrid
    k_grid: KappaGrid
    gamma: np.ndarray
    y0: float
    seed: int | None = None

    def __post_init__(self) -> None:
        g = np.array(self.gamma, dtype=complex)
        if g.shape != (self.t_grid.n_steps + 1, self.k_grid.n_kappa):
            raise ValueError(f"gamma shape {g.shape} does not match the grids")
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)

    @property
    def t(self) -> np.ndarray:
        return self.t_grid.nodes

    @property
    def kappa(self) -> np.ndarray:
        return self.k_grid.nodes

    @property
    def failed(self) -> np.ndarray:
        return ~np.isfinite(self.gamma)

    @property
    def n_failed(self) -> int:
        return int(self.failed.sum())

    def column(self, j: int) -> np.ndarray:
        return self.gamma[:, j]

    def metadata(self) -> dict:
        return {
            "seed": self.seed,
            "y0": self.y0,
            "t_grid": {"t0": self.t_grid.t0, "t1": self.t_grid.t1, "n_steps": self.t_grid.n_steps},
            "k_grid": {
                "kappa_min": self.k_grid.kappa_min,
                "kappa_max": self.k_grid.kappa_max,
                "n_kappa": self.k_grid.n_kappa,
            },
            "n_failed": self.n_failed,
        }

    def to_files(self, csv_target: str | Path, json_target: str | Path) -> None:
        """Long-format CSV ``t, kappa, re_gamma, im_gamma`` plus a JSON sidecar."""
        T, K = np.meshgrid(self.t, self.kappa, indexing="ij")
        g = self.gamma.ravel()
        _io.write_csv(csv_target, ["t", "kappa", "re_gamma", "im_gamma"],
                      zip(T.ravel(), K.ravel(), g.real, g.imag))
        _io.write_json(json_target, self.metadata())


@dataclass(frozen=True)
class Holder2DEstimate:
    alpha: float
    eta: float
    constant: float
    argmax: tuple | None
    n_failed: int = 0

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "eta": self.eta, "constant": self.constant,
                "argmax": self.argmax, "n_failed": self.n_failed}


def _column(B: np.ndarray, dt: float, kappa: float, y0: float) -> np.ndarray:
    with np.errstate(invalid="ignore", over="ignore"):
        g = trace_values(math.sqrt(kappa) * B, dt, y0)
    bad = ~np.isfinite(g) | (g.imag < -BRANCH_TOL)
    g[bad] = complex(np.nan, np.nan)
    return g


def sample_field(
    B: DriverPath, k_grid: KappaGrid, y0: float | None = None, *, threads: int = 1
) -> TraceField:
    """One trace column per kappa node, all driven by ``sqrt(kappa) B``.

    Cells where the inverse map fails are stored as ``nan``.
    """
    if B.is_scaled:
        raise ValueError("sample_field expects an unscaled Brownian path")
    if y0 is None:
        y0 = math.sqrt(B.grid.dt)
    if not y0 > 0:
        raise ValueError("y0 must be positive")
    kappas = k_grid.nodes
    work = lambda kap: _column(B.values, B.grid.dt, float(kap), y0)  # noqa: E731
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            cols = list(pool.map(work, kappas))
    else:
        cols = [work(k) for k in kappas]
    return TraceField(B.grid, k_grid, np.stack(cols, axis=1), float(y0), B.seed)


def holder_2d_arrays(t, kappa, gamma, alpha: float, eta: float) -> Holder2DEstimate:
    """Exact maximum of ``|dG| / (|dt|**alpha + |dkappa|**eta)`` over distinct pairs."""
    t = np.asarray(t, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    g = np.asarray(gamma)
    if g.shape != (t.size, kappa.size):
        raise ValueError("gamma shape does not match the grids")
    if not (0 < alpha <= 1 and 0 < eta <= 1):
        raise ValueError("exponents must lie in (0, 1]")
    n_failed = int((~np.isfinite(g)).sum())
    dk = np.abs(kappa[:, None] - kappa[None, :]) ** eta
    best, arg = 0.0, None
    for lag in range(t.size):
        a, b = g[lag:], g[: t.size - lag]
        num = np.abs(a[:, :, None] - b[:, None, :])
        den = (t[lag:] - t[: t.size - lag])[:, None, None] ** alpha + dk[None]
        if lag == 0:
            den = np.where(np.eye(kappa.size, dtype=bool)[None], np.inf, den)
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = num / den
        if np.all(np.isnan(ratio)):
            continue
        flat = int(np.nanargmax(ratio))
        val = float(ratio.flat[flat])
        if val > best:
            i, j1, j2 = np.unravel_index(flat, ratio.shape)
            best, arg = val, ((int(i + lag), int(j1)), (int(i), int(j2)))
    return Holder2DEstimate(float(alpha), float(eta), best, arg, n_failed)


def holder_2d(field: TraceField, alpha: float, eta: float) -> Holder2DEstimate:
    return holder_2d_arrays(field.t, field.kappa, field.gamma, alpha, eta)


def default_exponents(kappa_max: float, fraction: float = 0.8, eps: float = 0.01) -> tuple[float, float]:
    """``fraction`` of the joint exponents available for ``kappa <= kappa_max``."""
    fe = field_exponents(kappa_max, eps)
    return fraction * fe["alpha"], fraction * fe["eta"]


def refinement_stability(
    B: DriverPath,
    k_grid: KappaGrid,
    seed: int,
    *,
    alpha: float | None = None,
    eta: float | None = None,
    threads: int = 1,
) -> dict:
    """Hoelder constants before and after one refinement of both grids.

    The time grid is refined by bridge sampling of ``B`` (factor 2, seeded
    with ``seed``) and the kappa grid to ``2 n - 1`` nodes.
    """
    k_grid.require_subcritical()
    if alpha is None or eta is None:
        a0, e0 = default_exponents(k_grid.kappa_max)
        alpha = a0 if alpha is None else alpha
        eta = e0 if eta is None else eta
    coarse = holder_2d(sample_field(B, k_grid, threads=threads), alpha, eta)
    fine_B = refine(B, 2, seed)
    fine = holder_2d(sample_field(fine_B, k_grid.refined(), threads=threads), alpha, eta)
    ratio = fine.constant / coarse.constant if coarse.constant > 0 else math.inf
    return {
        "alpha": alpha,
        "eta": eta,
        "coarse": coarse.to_dict(),
        "fine": fine.to_dict(),
        "ratio": ratio,
        "stable": 0.5 < ratio < 2.0,
    }


def kappa_continuity(B: DriverPath, kappa: float, deltas, y0: float | None = None) -> np.ndarray:
    """``max_t |gamma(t, kappa) - gamma(t, kappa + delta)|`` for each delta."""
    if y0 is None:
        y0 = math.sqrt(B.grid.dt)
    base = _column(B.values, B.grid.dt, kappa, y0)
    out = []
    for d in deltas:
        other = _column(B.values, B.grid.dt, kappa + d, y0)
        out.append(float(np.nanmax(np.abs(base - other))))
    return np.array(out)
