"""Brownian driving functions on uniform time grids.

Every random draw goes through :func:`path_rng`, which derives an independent
substream from ``(seed, index)``.  Monte Carlo code asks for sample ``i`` of
seed ``s`` and gets the same numbers no matter how the work is chunked or
threaded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "TimeGrid",
    "DriverPath",
    "path_rng",
    "sample_brownian",
    "brownian_batch",
    "scale_driver",
    "refine",
    "write_driver_csv",
    "read_driver_csv",
]


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_k = t0 + k (t1 - t0) / n_steps``."""

    t1: float = 1.0
    n_steps: int = 1024
    t0: float = 0.0

    def __post_init__(self) -> None:
        if not self.t1 > self.t0:
            raise ValueError(f"degenerate grid: t1={self.t1} must exceed t0={self.t0}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError(f"n_steps must be a positive integer, got {self.n_steps}")
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @property
    def dt(self) -> float:
        return (self.t1 - self.t0) / self.n_steps

    @property
    def nodes(self) -> np.ndarray:
        k = np.arange(self.n_steps + 1)
        t = self.t0 + k * (self.t1 - self.t0) / self.n_steps
        t[0] = self.t0
        t[-1] = self.t1
        return t

    def index_of(self, t: float) -> int:
        """Return the node index of ``t``; ``t`` must be a grid node."""
        k = int(round((t - self.t0) / self.dt))
        if k < 0 or k > self.n_steps or not math.isclose(
            self.nodes[k], t, rel_tol=1e-12, abs_tol=1e-12 * max(1.0, abs(self.t1))
        ):
            raise ValueError(f"t={t} is not a node of {self}")
        return k

    def refined(self, factor: int) -> "TimeGrid":
        return TimeGrid(t1=self.t1, n_steps=self.n_steps * factor, t0=self.t0)


@dataclass(frozen=True)
class DriverPath:
    """Sampled driving function.

    ``kappa == 0`` tags a raw (unscaled) path; a positive tag records that the
    values were multiplied by ``sqrt(kappa)``.
    """

    grid: TimeGrid
    values: np.ndarray
    kappa: float = 0.0
    seed: int | None = None
    _scaled: bool = field(default=False, repr=False)

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n_steps + 1,):
            raise ValueError(
                f"expected {self.grid.n_steps + 1} values, got shape {values.shape}"
            )
        if values[0] != 0.0:
            raise ValueError("driver must start at 0")
        if self.kappa < 0:
            raise ValueError("kappa tag must be nonnegative")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def is_scaled(self) -> bool:
        return self._scaled or self.kappa > 0

    @property
    def times(self) -> np.ndarray:
        return self.grid.nodes

    def value_at(self, t: float) -> float:
        return float(self.values[self.grid.index_of(t)])


def path_rng(seed: int, index: int | None = None) -> np.random.Generator:
    """Generator for substream ``index`` of ``seed`` (``None``: the root stream)."""
    if index is None:
        return np.random.default_rng(np.random.SeedSequence(int(seed)))
    return np.random.default_rng(
        np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    )


def _cumulative(increments: np.ndarray) -> np.ndarray:
    out = np.zeros(increments.shape[:-1] + (increments.shape[-1] + 1,))
    np.cumsum(increments, axis=-1, out=out[..., 1:])
    return out


def sample_brownian(grid: TimeGrid, seed: int) -> DriverPath:
    """Standard Brownian path on ``grid``; bit-identical for equal ``(grid, seed)``."""
    rng = path_rng(seed)
    inc = rng.standard_normal(grid.n_steps) * math.sqrt(grid.dt)
    return DriverPath(grid, _cumulative(inc), kappa=0.0, seed=int(seed))


def brownian_batch(
    grid: TimeGrid, seed: int, n: int, start: int = 0
) -> np.ndarray:
    """Rows ``start .. start+n-1`` of the per-sample Brownian family of ``seed``.

    Row ``i`` depends only on ``(grid, seed, i)``, so chunked generation is
    reproducible.  Shape ``(n, n_steps + 1)``.
    """
    sq = math.sqrt(grid.dt)
    inc = np.empty((n, grid.n_steps))
    for row, i in enumerate(range(start, start + n)):
        inc[row] = path_rng(seed, i).standard_normal(grid.n_steps)
    inc *= sq
    return _cumulative(inc)


def scale_driver(path: DriverPath, kappa: float) -> DriverPath:
    """Return ``sqrt(kappa) * path`` tagged with ``kappa``."""
    if kappa < 0:
        raise ValueError(f"kappa must be nonnegative, got {kappa}")
    if path.is_scaled:
        raise ValueError("path is already scaled; rescaling is not allowed")
    return DriverPath(
        path.grid,
        path.values * math.sqrt(kappa),
        kappa=float(kappa),
        seed=path.seed,
        _scaled=True,
    )


def refine(path: DriverPath, factor: int, seed: int) -> DriverPath:
    """Insert ``factor - 1`` Brownian-bridge points inside every step.

    Coarse node values are kept exactly; interior points follow the bridge
    law conditioned on the two neighbouring coarse values.
    """
    if int(factor) != factor or factor < 1:
        raise ValueError(f"factor must be a positive integer, got {factor}")
    if path.is_scaled:
        raise ValueError("refine expects an unscaled path")
    factor = int(factor)
    if factor == 1:
        return path
    grid = path.grid.refined(factor)
    rng = path_rng(seed)
    h = grid.dt
    coarse = path.values
    left = coarse[:-1].copy()
    right = coarse[1:]
    fine = np.empty((path.grid.n_steps, factor))
    fine[:, 0] = left
    remaining = factor * h
    for j in range(1, factor):
        # bridge from the previous point to the right endpoint over `remaining`
        mean = left + (right - left) * (h / remaining)
        std = math.sqrt(h * (remaining - h) / remaining)
        left = mean + std * rng.standard_normal(left.shape)
        fine[:, j] = left
        remaining -= h
    values = np.empty(grid.n_steps + 1)
    values[:-1] = fine.ravel()
    values[-1] = coarse[-1]
    return DriverPath(grid, values, kappa=0.0, seed=path.seed)


def write_driver_csv(path: DriverPath, target: str | Path) -> None:
    """CSV with a ``#`` header line carrying the kappa tag and seed, then ``t,U``."""
    from slelab._io import atomic_write_text

    lines = [f"# kappa={path.kappa!r} seed={path.seed}", "t,U"]
    lines += [f"{float(t)!r},{float(u)!r}" for t, u in zip(path.times, path.values)]
    atomic_write_text(target, "\n".join(lines) + "\n")


def read_driver_csv(source: str | Path) -> DriverPath:
    text = Path(source).read_text().splitlines()
    meta = dict(item.split("=", 1) for item in text[0].lstrip("# ").split())
    rows = np.array([[float(v) for v in line.split(",")] for line in text[2:] if line])
    t, u = rows[:, 0], rows[:, 1]
    grid = TimeGrid(t1=float(t[-1]), n_steps=len(t) - 1, t0=float(t[0]))
    seed = None if meta.get("seed") in (None, "None") else int(meta["seed"])
    kappa = float(meta.get("kappa", 0.0))
    return DriverPath(grid, u, kappa=kappa, seed=seed, _scaled=kappa > 0)
