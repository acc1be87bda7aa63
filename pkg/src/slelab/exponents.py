"""Closed-form exponent calculus for SLE moment bounds and mixed-exponent GRR."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy import optimize

DEFAULT_EPS = 0.01

__all__ = [
    "SleExponentParams",
    "GrrExponentConfig",
    "critical_r",
    "lambda_zeta",
    "continuity_condition",
    "optimal_grr_exponents",
    "grr_config",
    "refine_grr_exponents",
    "trace_regularity",
    "field_exponents",
    "exponent_record",
]


@dataclass(frozen=True)
class SleExponentParams:
    kappa: float
    r: float
    r_c: float
    lambda_: float
    zeta: float
    boundary: bool = False


def critical_r(kappa: float) -> float:
    """``r_c = 1/2 + 4/kappa``."""
    if not kappa > 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    return 0.5 + 4.0 / kappa


def lambda_zeta(kappa: float, r: float, *, allow_boundary: bool = False) -> SleExponentParams:
    """Moment exponent ``lambda(r)`` and decay exponent ``zeta(r)``.

    ``r`` must be strictly below ``r_c``.  ``allow_boundary=True`` admits
    ``r == r_c`` for pure calculus; the result is then flagged.
    """
    rc = critical_r(kappa)
    boundary = math.isclose(r, rc, rel_tol=1e-15, abs_tol=0.0) or r == rc
    if r > rc and not boundary:
        raise ValueError(f"r={r} exceeds r_c={rc}: moment bound not available")
    if boundary and not allow_boundary:
        raise ValueError(f"r={r} equals r_c={rc}; pass allow_boundary=True for calculus")
    lam = r * (1.0 + kappa / 4.0) - kappa * r * r / 8.0
    zeta = r - kappa * r * r / 8.0
    return SleExponentParams(kappa, r, rc, lam, zeta, boundary)


def continuity_condition(kappa: float) -> float:
    """Negative exactly when joint (t, kappa) continuity is available (``kappa < 8/3``)."""
    if not kappa > 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    peak = (kappa / 4.0) * (0.5 + 4.0 / kappa) ** 2
    return 2.0 / peak + 1.0 / (1.0 + 8.0 / kappa) - 1.0


@dataclass(frozen=True)
class GrrExponentConfig:
    """Exponents of the mixed-exponent GRR inequality.

    ``gamma_1`` holds ``(gamma^(1)_1j, gamma^(2)_1j)`` per ``j`` and
    ``gamma_2`` holds ``(gamma^(1)_2j, gamma^(2)_2j)``.
    """

    q_1: tuple[float, ...]
    q_2: tuple[float, ...]
    beta_1: tuple[float, ...]
    beta_2: tuple[float, ...]
    a: float
    b: float
    gamma_1: tuple[tuple[float, float], ...]
    gamma_2: tuple[tuple[float, float], ...]

    @property
    def exponent_1(self) -> float:
        """Overall exponent in the first variable."""
        return min(g[0] for g in self.gamma_1 + self.gamma_2)

    @property
    def exponent_2(self) -> float:
        return min(g[1] for g in self.gamma_1 + self.gamma_2)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["exponent_1"] = self.exponent_1
        d["exponent_2"] = self.exponent_2
        return d


def _as_tuple(xs) -> tuple[float, ...]:
    if np.isscalar(xs):
        return (float(xs),)
    return tuple(float(x) for x in xs)


def _check_admissible(q_1, q_2, beta_1, beta_2) -> None:
    if not q_1 or not q_2 or len(q_1) != len(beta_1) or len(q_2) != len(beta_2):
        raise ValueError("need one q and one beta per kernel, at least one kernel per family")
    if min(q_1 + q_2) < 1:
        raise ValueError("all q_ij must be >= 1")
    b1, b2 = min(beta_1), min(beta_2)
    if b1 <= 2 or b2 <= 2:
        raise ValueError(f"need min beta_1j > 2 and min beta_2j > 2, got {b1}, {b2}")
    if (b1 - 2) * (b2 - 2) <= 1:
        raise ValueError(
            f"(beta_1 - 2)(beta_2 - 2) = {(b1 - 2) * (b2 - 2):.6g} <= 1: GRR condition fails"
        )


def grr_config(q_1, q_2, beta_1, beta_2, a: float, b: float) -> GrrExponentConfig:
    """Configuration for a given ``(a, b)`` with the per-kernel exponents."""
    q_1, q_2, beta_1, beta_2 = map(_as_tuple, (q_1, q_2, beta_1, beta_2))
    _check_admissible(q_1, q_2, beta_1, beta_2)
    if a < 0 or b < 0:
        raise ValueError("a and b must be nonnegative")
    g1 = tuple(
        ((bj - 2 - b) / qj, ((bj - 2) * a - 1) / qj) for qj, bj in zip(q_1, beta_1)
    )
    g2 = tuple(
        (((bj - 2) * b - 1) / qj, (bj - 2 - a) / qj) for qj, bj in zip(q_2, beta_2)
    )
    return GrrExponentConfig(q_1, q_2, beta_1, beta_2, float(a), float(b), g1, g2)


def optimal_grr_exponents(
    q_1: Sequence[float] | float,
    q_2: Sequence[float] | float,
    beta_1: Sequence[float] | float,
    beta_2: Sequence[float] | float,
) -> GrrExponentConfig:
    """Choose ``(a, b)`` by balancing the overall exponents of both families.

    With a common beta per family the balancing equations have the closed
    form solution used here.  Otherwise ``a = (beta_2-1)/(beta_1-1)`` and its
    reciprocal, which is admissible but not necessarily optimal; see
    :func:`refine_grr_exponents`.
    """
    q_1, q_2, beta_1, beta_2 = map(_as_tuple, (q_1, q_2, beta_1, beta_2))
    _check_admissible(q_1, q_2, beta_1, beta_2)
    B1, B2 = min(beta_1), min(beta_2)
    if len(set(beta_1)) == 1 and len(set(beta_2)) == 1:
        Q1, Q2 = max(q_1), max(q_2)
        a = (Q1 * (B2 - 2) + Q2) / (Q2 * (B1 - 2) + Q1)
        b = (Q2 * (B1 - 2) + Q1) / (Q1 * (B2 - 2) + Q2)
    else:
        a = (B2 - 1) / (B1 - 1)
        b = (B1 - 1) / (B2 - 1)
    return grr_config(q_1, q_2, beta_1, beta_2, a, b)


def refine_grr_exponents(config: GrrExponentConfig) -> GrrExponentConfig:
    """Numerically maximise ``min(exponent_1, exponent_2)`` over ``(a, b)``.

    Starts from ``config``; never returns something worse than it.
    """

    def objective(v):
        c = grr_config(config.q_1, config.q_2, config.beta_1, config.beta_2, *np.exp(v))
        return -min(c.exponent_1, c.exponent_2)

    x0 = np.log([max(config.a, 1e-6), max(config.b, 1e-6)])
    res = optimize.minimize(objective, x0, method="Nelder-Mead",
                            options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
    if res.fun < objective(x0):
        return grr_config(config.q_1, config.q_2, config.beta_1, config.beta_2, *np.exp(res.x))
    return config


def trace_regularity(kappa: float) -> dict[str, float]:
    """Optimal p-variation index and the Hoelder exponent bound of the trace."""
    if kappa < 0:
        raise ValueError(f"kappa must be nonnegative, got {kappa}")
    p_var = min(1.0 + kappa / 8.0, 2.0)
    holder = min(1.0 - kappa / (24.0 + 2.0 * kappa - 8.0 * math.sqrt(8.0 + kappa)), 0.5)
    return {"p_var_exponent": p_var, "holder_exponent_bound": holder}


def field_exponents(kappa_max: float, eps: float = DEFAULT_EPS) -> dict:
    """Joint (t, kappa) Hoelder exponents for ``kappa in [kappa_min, kappa_max]``.

    Uses the moment pair ``E|dgamma_t|^lambda ~ |dt|^((zeta+lambda)/2)`` and
    ``E|dgamma_kappa|^p ~ |dkappa|^p`` at the worst kappa of the range, with
    ``r = r_c - eps``, ``p = 1 + 8/kappa_max - eps`` and ``beta = alpha + 1 - eps``.
    """
    if not 0 < kappa_max < 8.0 / 3.0:
        raise ValueError("joint continuity exponents need 0 < kappa_max < 8/3")
    params = lambda_zeta(kappa_max, critical_r(kappa_max) - eps)
    alpha_t = (params.zeta + params.lambda_) / 2.0
    p = 1.0 + 8.0 / kappa_max - eps
    beta_1 = alpha_t + 1.0 - eps
    beta_2 = p + 1.0 - eps
    config = optimal_grr_exponents(params.lambda_, p, beta_1, beta_2)
    return {
        "params": params,
        "p": p,
        "config": config,
        "alpha": config.exponent_1,
        "eta": config.exponent_2,
    }


def exponent_record(kappa: float, r: float | None = None, eps: float = DEFAULT_EPS) -> dict:
    """All derived quantities for ``kappa`` (and ``r``), as plain JSON-ready values."""
    rc = critical_r(kappa)
    rec: dict = {
        "kappa": kappa,
        "r_c": rc,
        "lambda_at_r_c": 1.0 + 2.0 / kappa + 3.0 * kappa / 32.0,
        "continuity_condition": continuity_condition(kappa),
        "jointly_continuous": continuity_condition(kappa) < 0,
        "p_critical": 1.0 + 8.0 / kappa,
        "eps": eps,
        **trace_regularity(kappa),
    }
    if r is not None:
        p = lambda_zeta(kappa, r)
        rec.update({"r": r, "lambda": p.lambda_, "zeta": p.zeta})
    if rec["jointly_continuous"]:
        fe = field_exponents(kappa, eps)
        rec.update({"field_alpha": fe["alpha"], "field_eta": fe["eta"]})
    return rec
