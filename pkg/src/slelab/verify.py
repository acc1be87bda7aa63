"""Monte Carlo and pathwise checks of the SLE moment and comparison estimates.

Every check draws sample ``i`` from ``path_rng(seed, i)`` (through
:func:`slelab.driver.brownian_batch`), works in chunks, and aggregates with
compensated sums, so ``threads`` and ``chunk`` never change a report.
Multiplicative constants are never asserted; only exponents and signs are.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from slelab import _io
from slelab.driver import TimeGrid, brownian_batch
from slelab.exponents import DEFAULT_EPS, lambda_zeta
from slelab.loewner import compose_inverse, reverse_batch
from slelab.moments import (
    MEDIAN_OF_MEANS,
    PLAIN,
    MomentEstimate,
    MonteCarloError,
    ScalingFit,
    estimate_moment,
    fit_scaling,
    moment_from_samples,
)

__all__ = [
    "Report",
    "MomentEstimate",
    "ScalingFit",
    "ReparamState",
    "MonteCarloError",
    "estimate_moment",
    "moment_from_samples",
    "fit_scaling",
    "check_fprime_moment",
    "check_f_diffkappa",
    "check_h_diff_pathwise",
    "pathwise_difference",
    "bessel_paths",
    "bessel_compare",
    "reparametrize",
    "reparam_integrals",
    "original_integral",
    "time_changed_integral",
    "reparam_check",
]

HEAVY_TAIL_SE = 5.0


@dataclass
class Report:
    """Outcome of one check: inputs, results, named pass/fail criteria and a table."""

    name: str
    inputs: dict
    results: dict
    criteria: dict[str, bool]
    header: list[str] = field(default_factory=list)
    rows: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.criteria.values())

    def to_dict(self) -> dict:
        return {
            "check": self.name,
            "inputs": self.inputs,
            "results": self.results,
            "criteria": self.criteria,
            "passed": self.passed,
        }

    def write(self, outdir: str | Path, stem: str | None = None) -> list[Path]:
        stem = stem or self.name
        out = [_io.write_json(Path(outdir) / f"{stem}.json", self.to_dict())]
        if self.header:
            out.append(_io.write_csv(Path(outdir) / f"{stem}.csv", self.header, self.rows))
        return out


def _chunks(n: int, chunk: int) -> list[tuple[int, int]]:
    return [(s, min(chunk, n - s)) for s in range(0, n, chunk)]


def _map_chunks(fn: Callable[[int, int], np.ndarray], n: int, chunk: int, threads: int) -> np.ndarray:
    parts = _chunks(n, chunk)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            out = list(pool.map(lambda sc: fn(*sc), parts))
    else:
        out = [fn(s, c) for s, c in parts]
    return np.concatenate(out, axis=0)


def _both(samples: np.ndarray, p: float) -> tuple[MomentEstimate, MomentEstimate, bool]:
    plain = moment_from_samples(samples, p, PLAIN)
    mom = moment_from_samples(samples, p, MEDIAN_OF_MEANS)
    se = math.hypot(plain.std_error, mom.std_error)
    caution = abs(plain.mean_estimate - mom.mean_estimate) > HEAVY_TAIL_SE * se if se > 0 else False
    return plain, mom, caution


def _pick(plain: MomentEstimate, mom: MomentEstimate, estimator: str) -> MomentEstimate:
    if estimator not in (PLAIN, MEDIAN_OF_MEANS):
        raise ValueError(f"unknown estimator {estimator!r}")
    return plain if estimator == PLAIN else mom


# --------------------------------------------------------------------------
# derivative moments


def check_fprime_moment(
    kappa: float,
    r: float,
    t: float,
    y_list: Sequence[float],
    n: int,
    seed: int,
    *,
    n_steps: int = 4096,
    estimator: str = MEDIAN_OF_MEANS,
    tolerance: float = 0.15,
    chunk: int = 1000,
    threads: int = 1,
) -> Report:
    """Fit the y-exponent of ``E|f_hat_t'(iy)|**lambda(r)`` and compare it with ``zeta(r)``."""
    params = lambda_zeta(kappa, r)
    ys = np.asarray(y_list, dtype=float)
    if ys.size < 3 or np.any(ys <= 0):
        raise ValueError("need at least three positive heights")
    if ys.max() / ys.min() < 2.0:
        raise ValueError("heights must span at least a factor of two")
    if n < 2:
        raise ValueError("need n >= 2")
    grid = TimeGrid(t, n_steps)
    sk = math.sqrt(kappa)

    def work(start: int, count: int) -> np.ndarray:
        U = brownian_batch(grid, seed, count, start) * sk
        pts = np.broadcast_to(1j * ys, (count, ys.size))
        _, logd = compose_inverse(U, n_steps, grid.dt, pts, derivative=True)
        return np.exp(logd)

    X = _map_chunks(work, n, chunk, threads)
    plain, mom, caution, chosen = [], [], [], []
    for j in range(ys.size):
        a, b, c = _both(X[:, j], params.lambda_)
        plain.append(a)
        mom.append(b)
        caution.append(c)
        chosen.append(_pick(a, b, estimator))
    fit = fit_scaling(ys, chosen)
    return Report(
        "fprime_moment",
        {"kappa": kappa, "r": r, "t": t, "y_list": ys.tolist(), "n": n, "seed": seed,
         "n_steps": n_steps, "estimator": estimator, "tolerance": tolerance},
        {"lambda": params.lambda_, "zeta": params.zeta, "fit": fit.to_dict(),
         "plain": [e.to_dict() for e in plain], "median_of_means": [e.to_dict() for e in mom],
         "heavy_tail_caution": caution},
        {"slope_matches_zeta": abs(fit.slope - params.zeta) <= tolerance},
        ["y", "plain", "plain_se", "median_of_means", "mom_se"],
        [(y, a.mean_estimate, a.std_error, b.mean_estimate, b.std_error)
         for y, a, b in zip(ys, plain, mom)],
    )


# --------------------------------------------------------------------------
# kappa differences of the inverse map


def _kappa_differences(grid, seed, kappa, kappas, z, n, chunk, threads) -> np.ndarray:
    """``|f_hat^kappa_t(z) - f_hat^kt_t(z)|`` per sample (rows) and ``kt`` (columns)."""
    k = grid.n_steps

    def work(start: int, count: int) -> np.ndarray:
        B = brownian_batch(grid, seed, count, start)
        pts = np.full((count, 1), z, dtype=complex)
        base = compose_inverse(B * math.sqrt(kappa), k, grid.dt, pts)[:, 0]
        cols = []
        for kt in kappas:
            if kt == kappa:
                cols.append(np.zeros(count))
            else:
                other = compose_inverse(B * math.sqrt(kt), k, grid.dt, pts)[:, 0]
                cols.append(np.abs(base - other))
        return np.stack(cols, axis=1)

    return _map_chunks(work, n, chunk, threads)


def check_f_diffkappa(
    kappa: float,
    kappa_tilde_list: Sequence[float],
    t: float,
    delta: float,
    x_offset: float,
    p: float,
    n: int,
    seed: int,
    *,
    n_steps: int = 4096,
    delta_sweep: Sequence[float] = (0.2, 0.1, 0.05),
    eps: float = DEFAULT_EPS,
    estimator: str = MEDIAN_OF_MEANS,
    tolerance: float = 0.5,
    chunk: int = 1000,
    threads: int = 1,
) -> Report:
    """Moments of coupled kappa differences of ``f_hat_t(x + i delta)``.

    Below the critical order ``1 + 8/kappa_plus`` the fitted exponent in
    ``|sqrt(kappa) - sqrt(kappa_tilde)|`` should be ``p``.  Above it, a
    delta-sweep at the kappa-tilde farthest from ``kappa`` checks that the
    moment grows as delta shrinks.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if not (abs(x_offset) <= delta <= 1 and delta > 0):
        raise ValueError("need |x_offset| <= delta <= 1 and delta > 0")
    kts = np.asarray(kappa_tilde_list, dtype=float)
    if kts.size == 0 or np.any(kts <= 0) or kappa <= 0:
        raise ValueError("kappa values must be positive")
    grid = TimeGrid(t, n_steps)
    z = complex(x_offset, delta)
    D = _kappa_differences(grid, seed, kappa, kts, z, n, chunk, threads)
    xs = np.abs(math.sqrt(kappa) - np.sqrt(kts))
    rows, chosen, ests = [], [], []
    for j, kt in enumerate(kts):
        a, b, c = _both(D[:, j], p)
        est = _pick(a, b, estimator)
        ests.append({"kappa_tilde": float(kt), "plain": a.to_dict(), "median_of_means": b.to_dict(),
                     "median_abs_difference": float(np.median(D[:, j])), "heavy_tail_caution": c})
        rows.append((kt, xs[j], a.mean_estimate, a.std_error, b.mean_estimate, b.std_error))
        chosen.append(est)
    kappa_plus = float(max(kappa, kts.max()))
    p_crit = 1.0 + 8.0 / kappa_plus
    criteria: dict[str, bool] = {
        "equal_kappa_zero": all(e.mean_estimate == 0.0 for e, x in zip(chosen, xs) if x == 0.0),
    }
    results: dict = {"p_critical": p_crit, "kappa_plus": kappa_plus, "estimates": ests}
    pos = xs > 0
    if np.unique(xs[pos]).size >= 3:
        fit = fit_scaling(xs[pos], [e for e, keep in zip(chosen, pos) if keep])
        results["fit"] = fit.to_dict()
        if p < p_crit:
            criteria["slope_matches_p"] = abs(fit.slope - p) <= tolerance
    if p > p_crit and np.any(pos):
        kt = float(kts[np.argmax(xs)])
        deltas = np.asarray(delta_sweep, dtype=float)
        if deltas.size < 3 or np.any(deltas <= 0) or np.any(deltas > 1) or np.any(np.abs(x_offset) > deltas):
            raise ValueError("delta sweep needs >= 3 heights in (|x_offset|, 1]")
        sweep = []
        for d in deltas:
            Dd = _kappa_differences(grid, seed, kappa, [kt], complex(x_offset, d), n, chunk, threads)
            a, b, _ = _both(Dd[:, 0], p)
            sweep.append(_pick(a, b, estimator))
        dfit = fit_scaling(deltas, sweep)
        results["delta_sweep"] = {
            "kappa_tilde": kt,
            "deltas": deltas.tolist(),
            "estimates": [e.to_dict() for e in sweep],
            "fit": dfit.to_dict(),
            "bound_exponent": 1.0 + 8.0 / kappa_plus - p - eps,
        }
        criteria["delta_slope_negative"] = dfit.slope < 0
    return Report(
        "f_diffkappa",
        {"kappa": kappa, "kappa_tilde_list": kts.tolist(), "t": t, "delta": delta,
         "x_offset": x_offset, "p": p, "n": n, "seed": seed, "n_steps": n_steps,
         "delta_sweep": list(delta_sweep), "eps": eps, "estimator": estimator},
        results,
        criteria,
        ["kappa_tilde", "abs_sqrt_diff", "plain", "plain_se", "median_of_means", "mom_se"],
        rows,
    )


# --------------------------------------------------------------------------
# pathwise difference of reverse flows


def _trapezoid(f: np.ndarray, dx: float) -> np.ndarray:
    return dx * (f[..., 1:] + f[..., :-1]).sum(axis=-1) / 2.0


def pathwise_difference(V1, V2, dt: float, z: complex) -> tuple[np.ndarray, np.ndarray]:
    """Both sides of the pathwise bound for reverse flows driven by ``V1``, ``V2``.

    The drivers are node values on a uniform grid of step ``dt`` and may
    start anywhere.  Batches broadcast along leading axes.  Returns
    ``(lhs, rhs)`` with ``lhs = |h^1_t(z) - h^2_t(z)|``.
    """
    V1 = np.asarray(V1, dtype=float)
    V2 = np.asarray(V2, dtype=float)
    z = complex(z)
    if not z.imag > 0:
        raise ValueError("need Im(z) > 0")
    sides = []
    for V in (V1, V2):
        v0 = V[..., :1]
        Z, L = reverse_batch(V - v0, dt, z - v0[..., 0])
        sides.append((Z, L, V))
    (Z1, L1, _), (Z2, L2, _) = sides
    lhs = np.abs((Z1[..., -1] + V1[..., -1]) - (Z2[..., -1] + V2[..., -1]))
    t = dt * (V1.shape[-1] - 1)
    tail = (L1[..., -1:] - L1 + L2[..., -1:] - L2) / 4.0
    integrand = (np.abs(V1 - V2) / (np.abs(Z1) * np.abs(Z2))
                 / (Z1.imag * Z2.imag) ** 0.25 * np.exp(tail))
    rhs = 2.0 * (z.imag**2 + 4.0 * t) ** 0.25 * _trapezoid(integrand, dt)
    return lhs, rhs


def check_h_diff_pathwise(
    kappa: float,
    kappa_tilde: float,
    z: complex,
    t: float,
    n: int,
    seed: int,
    *,
    n_steps: int = 1024,
    slack: float = 0.05,
    chunk: int = 100,
    threads: int = 1,
) -> Report:
    """Count samples whose reverse-flow difference exceeds the pathwise bound."""
    z = complex(z)
    if not z.imag > 0:
        raise ValueError("need Im(z) > 0")
    if kappa < 0 or kappa_tilde < 0:
        raise ValueError("kappa values must be nonnegative")
    grid = TimeGrid(t, n_steps)

    def work(start: int, count: int) -> np.ndarray:
        B = brownian_batch(grid, seed, count, start)
        lhs, rhs = pathwise_difference(math.sqrt(kappa) * B, math.sqrt(kappa_tilde) * B, grid.dt, z)
        return np.stack([lhs, rhs], axis=1)

    out = _map_chunks(work, n, chunk, threads)
    lhs, rhs = out[:, 0], out[:, 1]
    failed = ~(np.isfinite(lhs) & np.isfinite(rhs))
    violations = int(np.sum(lhs[~failed] > rhs[~failed] * (1.0 + slack)))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rhs > 0, lhs / rhs, np.where(lhs > 0, np.inf, 0.0))
    return Report(
        "h_diff_pathwise",
        {"kappa": kappa, "kappa_tilde": kappa_tilde, "z": z, "t": t, "n": n, "seed": seed,
         "n_steps": n_steps, "slack": slack},
        {"violations": violations, "failed_samples": int(failed.sum()),
         "max_ratio": float(np.nanmax(ratio)), "median_ratio": float(np.nanmedian(ratio))},
        {"no_violations": violations == 0, "no_failures": not failed.any()},
        ["sample", "lhs", "rhs"],
        [(i, a, b) for i, (a, b) in enumerate(zip(lhs, rhs))],
    )


# --------------------------------------------------------------------------
# Bessel comparison


def bessel_paths(kappas: Sequence[float], x0: float, dW: np.ndarray, dt: float) -> dict:
    """Euler-Maruyama for ``dX = (2/kappa) / X dt + dW`` on shared increments.

    ``dW`` has shape ``(paths, steps)``.  A path is frozen once any of the
    coupled processes drops below ``2 sqrt(dt)``; freezing all together
    keeps the scheme order-preserving for ``kappa >= 1/2``.
    """
    thr = 2.0 * math.sqrt(dt)
    m, steps = dW.shape
    drift = np.array([2.0 / k for k in kappas])[:, None]
    X = np.full((len(kappas), m), float(x0))
    alive = np.ones(m, dtype=bool)
    hit_step = np.full(m, -1)
    unstable = np.zeros(m, dtype=bool)
    violations = np.zeros(m, dtype=int)
    for j in range(steps):
        if not alive.any():
            break
        Xa = X[:, alive]
        new = Xa + drift / Xa * dt + dW[alive, j]
        unstable[np.flatnonzero(alive)[np.any(new < -thr, axis=0)]] = True
        violations[alive] += np.sum(np.diff(new, axis=0) > 0, axis=0)
        X[:, alive] = new
        down = np.any(new < thr, axis=0)
        idx = np.flatnonzero(alive)[down]
        hit_step[idx] = j + 1
        alive[idx] = False
    return {"final": X, "hit_step": hit_step, "unstable": unstable, "violations": violations,
            "threshold": thr}


def bessel_compare(
    kappa: float,
    kappa_tilde: float,
    x0: float,
    t_max: float,
    n: int,
    seed: int,
    *,
    dt: float = 1e-3,
    refine_dt: float | None = None,
    refine_factor: int = 10,
    chunk: int = 1000,
    threads: int = 1,
) -> Report:
    """Pathwise ordering ``X^kappa >= X^kappa_tilde`` on shared Brownian increments.

    For ``kappa <= 4`` the fraction of paths reaching the threshold before
    ``t_max`` is reported at ``refine_dt * refine_factor`` and ``refine_dt``
    on common random numbers; it should fall under refinement.
    """
    if not 0 < kappa <= kappa_tilde:
        raise ValueError("need 0 < kappa <= kappa_tilde")
    if not x0 > 0:
        raise ValueError("x0 must be positive")
    if kappa_tilde < 0.5:
        raise ValueError("the frozen Euler scheme is order-preserving only for kappa >= 1/2")
    steps = int(round(t_max / dt))
    if steps < 1 or not math.isclose(steps * dt, t_max, rel_tol=1e-9):
        raise ValueError("t_max must be a multiple of dt")
    grid = TimeGrid(t_max, steps)

    def run(start: int, count: int) -> np.ndarray:
        dW = np.diff(brownian_batch(grid, seed, count, start), axis=1)
        res = bessel_paths([kappa, kappa_tilde], x0, dW, dt)
        same = np.array_equal(res["final"][0], res["final"][1])
        return np.stack([res["violations"], res["hit_step"], res["unstable"],
                         np.full(count, same)], axis=1)

    out = _map_chunks(run, n, chunk, threads)
    violations = int(out[:, 0].sum())
    results = {
        "violations": violations,
        "hit_fraction": float(np.mean(out[:, 1] > 0)),
        "unstable_paths": int(out[:, 2].sum()),
        "identical_paths": bool(np.all(out[:, 3])) if kappa == kappa_tilde else None,
        "threshold": 2.0 * math.sqrt(dt),
    }
    criteria = {"no_ordering_violations": violations == 0, "stable": results["unstable_paths"] == 0}
    rows = []
    if kappa <= 4 and refine_dt is not None:
        fine_steps = int(round(t_max / refine_dt))
        if fine_steps % refine_factor:
            raise ValueError("t_max / refine_dt must be a multiple of refine_factor")
        fgrid = TimeGrid(t_max, fine_steps)
        hits = []
        for label, factor in (("coarse", refine_factor), ("fine", 1)):
            def hit(start: int, count: int, factor=factor) -> np.ndarray:
                W = brownian_batch(fgrid, seed, count, start)[:, ::factor]
                res = bessel_paths([kappa], x0, np.diff(W, axis=1), refine_dt * factor)
                return (res["hit_step"] > 0).astype(float)

            frac = float(np.mean(_map_chunks(hit, n, chunk, threads)))
            hits.append(frac)
            rows.append((refine_dt * factor, frac))
        results["refinement"] = {"dt": [refine_dt * refine_factor, refine_dt], "hit_fraction": hits}
        criteria["hits_decrease_under_refinement"] = hits[1] < hits[0] or hits[0] == 0.0
    return Report(
        "bessel_compare",
        {"kappa": kappa, "kappa_tilde": kappa_tilde, "x0": x0, "t_max": t_max, "n": n,
         "seed": seed, "dt": dt, "refine_dt": refine_dt, "refine_factor": refine_factor},
        results, criteria, ["dt", "hit_fraction"] if rows else [], rows,
    )


# --------------------------------------------------------------------------
# time change of the reverse flow


@dataclass(frozen=True)
class ReparamState:
    """Reverse flow seen at ``sigma(s)``, where ``y_{sigma(s)} = exp(a s)``."""

    s: np.ndarray
    sigma: np.ndarray
    x: np.ndarray
    y: np.ndarray
    a: float

    @property
    def sinh_J(self) -> np.ndarray:
        return self.x / self.y

    @property
    def sigma_inverse_end(self) -> float:
        return float(self.s[-1])


def _sigma_of(y_path: np.ndarray, r: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Times where the increasing ``y_path`` reaches ``targets`` (linear interpolation)."""
    if np.any(np.diff(y_path) <= 0):
        raise ArithmeticError("y path is not strictly increasing; sigma is not bracketed")
    if targets.max() > y_path[-1] * (1 + 1e-12) or targets.min() < y_path[0] * (1 - 1e-12):
        raise ArithmeticError("sigma target outside the stored path")
    return np.interp(targets, y_path, r)


def reparametrize(Z: np.ndarray, dt: float, a: float, n_s: int = 2048) -> ReparamState:
    """Time change of a flow started at ``i`` with ``y_{sigma(s)} = exp(a s)``.

    ``Z`` holds ``z_r`` on the r-grid of step ``dt``; ``s`` runs over
    ``[0, sigma^{-1}(T)]`` with ``sigma^{-1}(T) = log(y_T) / a``.
    """
    y = Z.imag
    if not math.isclose(y[0], 1.0, rel_tol=1e-12):
        raise ValueError("the time change assumes the flow starts at height 1")
    r = dt * np.arange(Z.size)
    s_end = math.log(y[-1]) / a
    s = np.linspace(0.0, s_end, n_s)
    ey = np.exp(a * s)
    ey[0], ey[-1] = y[0], y[-1]
    sig = _sigma_of(y, r, ey)
    x = np.interp(sig, r, Z.real)
    return ReparamState(s, sig, x, ey, a)


def original_integral(B: np.ndarray, kappa: float, delta: float, t: float) -> np.ndarray:
    """Original-time integral along the ``sqrt(kappa) B`` reverse flow from ``i delta``.

    ``B`` has shape ``(..., n+1)`` on a uniform grid of ``[0, t]``.
    """
    B = np.asarray(B, dtype=float)
    dt = t / (B.shape[-1] - 1)
    Z, L = reverse_batch(math.sqrt(kappa) * B, dt, 1j * delta)
    f = np.abs(B) / np.abs(Z) ** 2 / np.sqrt(Z.imag) * np.exp((L[..., -1:] - L) / 2.0)
    return _trapezoid(f, dt)


def time_changed_integral(
    Bt: np.ndarray, kappa: float, delta: float, t: float, *, n_s: int = 2048
) -> dict:
    """Time-changed integral along the ``a = 2/kappa`` flow from ``i``.

    ``Bt`` has shape ``(m, n+1)`` on a uniform grid of ``[0, kappa t / delta**2]``.
    Returns the integral per row together with the sigma diagnostics.
    """
    Bt = np.atleast_2d(np.asarray(Bt, dtype=float))
    a = 2.0 / kappa
    T = kappa * t / delta**2
    dt = T / (Bt.shape[-1] - 1)
    Z, L = reverse_batch(Bt, dt, 1j, rate=a)
    r = dt * np.arange(Bt.shape[-1])
    s_bound = math.log1p(2 * a * T) / (2 * a)
    values, s_end, bound, lower, increasing = [], [], [], [], []
    for b, z, ld in zip(Bt, Z, L):
        st = reparametrize(z, dt, a, n_s)
        f = np.abs(np.interp(st.sigma, r, b)) * np.exp(-a * st.s / 2.0)
        f *= np.exp((ld[-1] - np.interp(st.sigma, r, ld)) / 2.0)
        ds = st.s[1] - st.s[0]
        values.append(kappa**-1.5 * math.sqrt(delta) * float(_trapezoid(f, ds)))
        s_end.append(st.sigma_inverse_end)
        bound.append(st.sigma_inverse_end <= s_bound * (1 + 1e-10))
        floor = np.expm1(2 * a * st.s) / (2 * a)
        lower.append(bool(np.all(st.sigma >= floor * (1 - 1e-8) - 1e-10)))
        increasing.append(bool(np.all(np.diff(st.sigma) > 0)))
    return {
        "values": np.array(values),
        "sigma_inverse": np.array(s_end),
        "sigma_inverse_bound": s_bound,
        "bound_holds": np.array(bound),
        "sigma_lower_bound_holds": np.array(lower),
        "sigma_increasing": np.array(increasing),
    }


def reparam_integrals(B, Bt, kappa: float, delta: float, t: float) -> dict:
    """Both integrals of the law identity for one pair of standard Brownian paths."""
    tc = time_changed_integral(Bt, kappa, delta, t)
    return {
        "original": float(original_integral(B, kappa, delta, t)),
        "time_changed": float(tc["values"][0]),
        "sigma_inverse": float(tc["sigma_inverse"][0]),
        "sigma_inverse_bound": tc["sigma_inverse_bound"],
        "bound_holds": bool(tc["bound_holds"][0]),
        "sigma_lower_bound_holds": bool(tc["sigma_lower_bound_holds"][0]),
        "sigma_increasing": bool(tc["sigma_increasing"][0]),
    }


def _reparam_samples(kappa, delta, t, n, seed, offset, n_steps, chunk, threads):
    g1 = TimeGrid(t, n_steps)
    g2 = TimeGrid(kappa * t / delta**2, n_steps)

    def first(start: int, count: int) -> np.ndarray:
        return original_integral(brownian_batch(g1, seed, count, offset + start), kappa, delta, t)

    def second(start: int, count: int) -> np.ndarray:
        res = time_changed_integral(brownian_batch(g2, seed, count, offset + n + start), kappa, delta, t)
        return np.stack([res["values"], res["bound_holds"], res["sigma_lower_bound_holds"]], axis=1)

    return _map_chunks(first, n, chunk, threads), _map_chunks(second, n, chunk, threads)


def reparam_check(
    kappa: float,
    delta: float,
    t: float,
    n: int,
    seed: int,
    *,
    n_steps: int = 1024,
    alpha: float = 0.01,
    retry: bool = True,
    chunk: int = 250,
    threads: int = 1,
) -> Report:
    """Two-sample KS comparison of the original and time-changed integrals.

    Side one uses sample indices ``[0, n)`` of ``seed``, side two ``[n, 2n)``.
    A failed first attempt is repeated once on fresh indices ``[2n, 4n)``.
    """
    if not 0 < delta <= 1:
        raise ValueError("need 0 < delta <= 1")
    if kappa <= 0 or t <= 0 or n < 2:
        raise ValueError("need kappa > 0, t > 0 and n >= 2")
    attempts = []
    for attempt in range(2 if retry else 1):
        s1, s2 = _reparam_samples(kappa, delta, t, n, seed, 2 * n * attempt, n_steps, chunk, threads)
        ks = stats.ks_2samp(s1, s2[:, 0])
        attempts.append({
            "statistic": float(ks.statistic),
            "p_value": float(ks.pvalue),
            "median_original": float(np.median(s1)),
            "median_time_changed": float(np.median(s2[:, 0])),
            "bound_fraction": float(np.mean(s2[:, 1])),
            "sigma_lower_fraction": float(np.mean(s2[:, 2])),
        })
        if ks.pvalue > alpha:
            break
    last = attempts[-1]
    return Report(
        "reparam",
        {"kappa": kappa, "delta": delta, "t": t, "n": n, "seed": seed, "n_steps": n_steps,
         "alpha": alpha, "retry": retry},
        {"attempts": attempts, "a": 2.0 / kappa, "T": kappa * t / delta**2},
        {
            "ks_p_value_above_alpha": last["p_value"] > alpha,
            "sigma_bound_all_paths": all(a["bound_fraction"] == 1.0 for a in attempts),
            "sigma_lower_bound_all_paths": all(a["sigma_lower_fraction"] == 1.0 for a in attempts),
        },
        ["attempt", "statistic", "p_value"],
        [(i, a["statistic"], a["p_value"]) for i, a in enumerate(attempts)],
    )
