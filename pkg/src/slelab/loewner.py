"""Chordal Loewner flows for piecewise-constant drivers.

On step ``k`` (time interval ``(t_{k-1}, t_k]``) the driver is frozen at its
right-endpoint value ``U_k``.  The Loewner ODE then has the closed-form
solution

    g(w) = U_k + sqrt((w - U_k)**2 + 4 dt),

so forward maps, inverse maps and derivatives are exact compositions of these
elementary slit maps.  In reverse time ``s = t - r`` the same convention
means ``V`` is frozen at its left endpoint, which makes :func:`reverse_flow`
and :func:`inverse_map` the same computation seen from two frames.

All square roots take the branch with nonnegative imaginary part.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp

from slelab.driver import DriverPath

__all__ = [
    "LoewnerError",
    "SwallowedPointError",
    "BranchError",
    "ResolutionError",
    "QuadratureError",
    "ReverseFlowPath",
    "TraceSample",
    "upper_sqrt",
    "compose_inverse",
    "reverse_batch",
    "forward_map",
    "inverse_map",
    "reverse_flow",
    "reverse_flow_driven",
    "reverse_flow_ode",
    "derivative_modulus",
    "trace",
    "trace_values",
    "v_integral",
]

SWALLOW_TOL = 1e-12
BRANCH_TOL = 1e-12


class LoewnerError(ArithmeticError):
    """Base class for numerical failures of the Loewner solvers."""


class SwallowedPointError(LoewnerError):
    """The point reached the driver singularity, i.e. ``T_z <= t``."""

    def __init__(self, time: float, value: complex, message: str | None = None):
        self.time = time
        self.value = value
        super().__init__(message or f"point swallowed at t={time} (image {value})")


class BranchError(LoewnerError):
    """An image left the upper half-plane beyond tolerance."""


class ResolutionError(LoewnerError):
    """The adaptive integrator could not resolve the flow."""


class QuadratureError(LoewnerError):
    """Successive quadrature refinements disagree beyond tolerance."""


def upper_sqrt(z):
    """Square root with ``Im >= 0`` (cut along the positive real axis)."""
    return 1j * np.sqrt(-np.asarray(z, dtype=complex))


def _check_upper(w, where: str) -> None:
    w = np.asarray(w)
    if not np.all(np.isfinite(w)):
        raise BranchError(f"non-finite image in {where}")
    if np.any(w.imag < -BRANCH_TOL):
        raise BranchError(f"image left the upper half-plane in {where}")


def compose_inverse(U, k: int, dt: float, w, *, derivative: bool = False, rate: float = 2.0):
    """Evaluate ``f_hat_{t_k}(w) = g_{t_k}^{-1}(w + U_k)`` for batches.

    ``U`` has shape ``(..., n+1)`` (node values); ``w`` broadcasts against
    ``U[..., :1]``, so ``U`` of shape ``(batch, n+1)`` with ``w`` of shape
    ``(batch, m)`` evaluates ``m`` points per driver.  With ``derivative``
    the second return value is ``log|f_hat'(w)|``.
    """
    U = np.asarray(U, dtype=float)
    Ut = np.moveaxis(U[..., : k + 1], -1, 0)[..., None]  # (k+1, ..., 1)
    shift = 2.0 * rate * dt
    w = np.asarray(w, dtype=complex) + Ut[k]
    logd = np.zeros(w.shape) if derivative else None
    for j in range(k, 0, -1):
        c = Ut[j]
        d = w - c
        s = 1j * np.sqrt(shift - d * d)
        if derivative:
            logd += np.log(np.abs(d)) - np.log(np.abs(s))
        w = c + s
    if derivative:
        return w, logd
    return w


def reverse_batch(V, dt: float, z, *, rate: float = 2.0):
    """Reverse flow ``dh/ds = -rate / (h - V(s))`` for a batch of drivers.

    ``V`` has shape ``(batch, n+1)`` or ``(n+1,)`` with ``V[..., 0] == 0``.
    Returns ``(Z, L)`` with ``Z[..., j] = h_{s_j}(z) - V(s_j)`` and
    ``L[..., j] = log|h'_{s_j}(z)|``.
    """
    V = np.asarray(V, dtype=float)
    Vt = np.moveaxis(V, -1, 0)
    n = Vt.shape[0] - 1
    shift = 2.0 * rate * dt
    zc = np.broadcast_to(np.asarray(z, dtype=complex), Vt.shape[1:]).copy()
    Z = np.empty((n + 1,) + zc.shape, dtype=complex)
    L = np.empty((n + 1,) + zc.shape)
    Z[0] = zc
    L[0] = 0.0
    logd = np.zeros(zc.shape)
    for j in range(1, n + 1):
        s = 1j * np.sqrt(shift - zc * zc)
        logd = logd + np.log(np.abs(zc)) - np.log(np.abs(s))
        zc = s - (Vt[j] - Vt[j - 1])
        Z[j] = zc
        L[j] = logd
    return np.moveaxis(Z, 0, -1), np.moveaxis(L, 0, -1)


def _node(driver: DriverPath, t: float) -> int:
    return driver.grid.index_of(t)


def forward_map(driver: DriverPath, t: float, z: complex) -> complex:
    """``g_t(z)`` by composing forward slit maps.

    Raises :class:`SwallowedPointError` when the point is absorbed into the
    hull (its image lands on the driver slit) at or before ``t``.
    """
    if not complex(z).imag > 0:
        raise ValueError("forward_map needs Im(z) > 0")
    k = _node(driver, t)
    dt = driver.grid.dt
    times = driver.times
    w = complex(z)
    for j in range(1, k + 1):
        c = driver.values[j]
        q = (w - c) ** 2 + 4.0 * dt
        # image lands on the real line: point sits on the slit of this step
        if abs(q.imag) <= SWALLOW_TOL and q.real >= -SWALLOW_TOL:
            raise SwallowedPointError(float(times[j]), complex(c + math.sqrt(max(q.real, 0.0))))
        w = c + complex(upper_sqrt(q))
    _check_upper(w, "forward_map")
    return w


def inverse_map(driver: DriverPath, t: float, w):
    """``f_hat_t(w) = g_t^{-1}(w + U(t))`` for scalar or array ``w``."""
    w_arr = np.asarray(w, dtype=complex)
    if np.any(w_arr.imag <= 0):
        raise ValueError("inverse_map needs Im(w) > 0")
    k = _node(driver, t)
    out = compose_inverse(driver.values, k, driver.grid.dt, w_arr.reshape(-1))
    _check_upper(out, "inverse_map")
    out = out.reshape(w_arr.shape)
    return complex(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ReverseFlowPath:
    """Samples of ``z_s = h_s(z) - V(s)`` and ``log|h_s'(z)|`` on the s-grid."""

    s: np.ndarray
    z: np.ndarray
    log_deriv: np.ndarray
    V: np.ndarray

    @property
    def x(self) -> np.ndarray:
        return self.z.real

    @property
    def y(self) -> np.ndarray:
        return self.z.imag

    @property
    def h_final(self) -> complex:
        """``h_t(z)``."""
        return complex(self.z[-1] + self.V[-1])

    def integrand(self) -> np.ndarray:
        """``2 (x^2 - y^2) / (x^2 + y^2)^2`` at the nodes."""
        r2 = self.x**2 + self.y**2
        return 2.0 * (self.x**2 - self.y**2) / r2**2

    def to_csv(self, target: str | Path) -> None:
        from slelab._io import write_csv

        write_csv(
            target,
            ["s", "x", "y", "log_abs_hprime"],
            zip(self.s, self.x, self.y, self.log_deriv),
        )


def reverse_flow_driven(V: DriverPath, z: complex, *, rate: float = 2.0) -> ReverseFlowPath:
    """Reverse flow driven directly by ``V`` (over the whole grid of ``V``)."""
    if not complex(z).imag > 0:
        raise ValueError("reverse flow needs Im(z) > 0")
    Z, L = reverse_batch(V.values, V.grid.dt, z, rate=rate)
    _check_upper(Z, "reverse_flow")
    return ReverseFlowPath(V.times - V.grid.t0, Z, L, V.values.copy())


def _reverse_driver(driver: DriverPath, k: int) -> np.ndarray:
    U = driver.values[: k + 1]
    return U[::-1] - U[k]


def reverse_flow(driver: DriverPath, t: float, z: complex) -> ReverseFlowPath:
    """Reverse flow with ``V(s) = U(t-s) - U(t)``; ends at ``h_t(z) = f_hat_t(z) - U(t)``."""
    if not complex(z).imag > 0:
        raise ValueError("reverse flow needs Im(z) > 0")
    k = _node(driver, t)
    V = _reverse_driver(driver, k)
    dt = driver.grid.dt
    Z, L = reverse_batch(V, dt, z)
    _check_upper(Z, "reverse_flow")
    return ReverseFlowPath(np.arange(k + 1) * dt, Z, L, V)


def reverse_flow_ode(
    driver: DriverPath, t: float, z: complex, *, rtol: float = 1e-8, atol: float = 1e-12
) -> tuple[complex, float]:
    """Adaptive Runge-Kutta integration of the reverse flow, step by step.

    Independent of the slit-map composition; returns ``(h_t(z), log|h_t'(z)|)``.
    """
    if not complex(z).imag > 0:
        raise ValueError("reverse flow needs Im(z) > 0")
    k = _node(driver, t)
    V = _reverse_driver(driver, k)
    dt = driver.grid.dt
    state = np.array([complex(z), 0.0], dtype=complex)
    for j in range(1, k + 1):
        c = V[j - 1]

        def rhs(_s, y, c=c):
            d = y[0] - c
            return np.array([-2.0 / d, 2.0 / (d * d)])

        sol = solve_ivp(rhs, (0.0, dt), state, method="RK45", rtol=rtol, atol=atol)
        if not sol.success:
            raise ResolutionError(f"reverse ODE failed on step {j}: {sol.message}")
        state = sol.y[:, -1]
    return complex(state[0]), float(state[1].real)


def derivative_modulus(driver: DriverPath, t: float, z: complex) -> float:
    """``|f_hat_t'(z)|`` from the log-derivative accumulated along the reverse flow."""
    return float(math.exp(reverse_flow(driver, t, z).log_deriv[-1]))


@dataclass(frozen=True)
class TraceSample:
    grid: object
    gamma: np.ndarray
    y0: float

    def to_csv(self, target: str | Path) -> None:
        from slelab._io import write_csv

        write_csv(
            target,
            ["t", "re_gamma", "im_gamma"],
            zip(self.grid.nodes, self.gamma.real, self.gamma.imag),
            comment=f"y0={self.y0!r}",
        )


def trace_values(U: np.ndarray, dt: float, y0: float) -> np.ndarray:
    """``f_hat_{t_k}(i y0)`` for every node ``k >= 1`` of one driver (``O(n^2)``)."""
    U = np.asarray(U, dtype=float)
    n = U.shape[0] - 1
    w = U[1:] + 1j * y0  # point for node k sits at index k-1
    tmp = np.empty(n, dtype=complex)
    shift = 4.0 * dt
    for j in range(n, 0, -1):
        c = U[j]
        seg = w[j - 1 :]
        d = tmp[: n - j + 1]
        np.subtract(seg, c, out=d)
        np.multiply(d, d, out=d)
        np.subtract(shift, d, out=d)
        np.sqrt(d, out=d)
        # seg = c + 1j * d
        seg.real = c - d.imag
        seg.imag = d.real
    out = np.empty(n + 1, dtype=complex)
    out[0] = 0.0
    out[1:] = w
    return out


def trace(driver: DriverPath, y0: float | None = None) -> TraceSample:
    """Approximate trace ``gamma(t_k) ~ f_hat_{t_k}(i y0)``; default ``y0 = sqrt(dt)``."""
    if y0 is None:
        y0 = math.sqrt(driver.grid.dt)
    if not y0 > 0:
        raise ValueError("y0 must be positive")
    gamma = trace_values(driver.values, driver.grid.dt, y0)
    _check_upper(gamma, "trace")
    return TraceSample(driver.grid, gamma, float(y0))


def _gauss_panels(n_panels: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, 1.0, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def v_integral(
    driver: DriverPath,
    t: float,
    y: float,
    *,
    rtol: float = 1e-6,
    grade: int = 4,
    order: int = 8,
    max_panels: int = 512,
) -> float:
    """``v(t, y) = int_0^y |f_hat_t'(iu)| du`` on graded nodes ``u = y tau**grade``.

    Panels double until two successive estimates agree to ``rtol``.
    """
    if not 0 < y <= 1:
        raise ValueError("v_integral needs 0 < y <= 1")
    k = _node(driver, t)
    dt = driver.grid.dt

    def estimate(n_panels: int) -> float:
        tau, wts = _gauss_panels(n_panels, order)
        u = y * tau**grade
        _, logd = compose_inverse(driver.values, k, dt, 1j * u, derivative=True)
        jac = grade * y * tau ** (grade - 1)
        return float(np.sum(wts * jac * np.exp(logd)))

    panels = 4
    prev = estimate(panels)
    while panels < max_panels:
        panels *= 2
        cur = estimate(panels)
        if abs(cur - prev) <= rtol * abs(cur) + 1e-300:
            return cur
        prev = cur
    raise QuadratureError(
        f"v_integral did not converge to rtol={rtol} with {max_panels} panels"
    )
