"""
Admittance shaping of the leg-length reference.

The filter turns the estimated contact force into a leg-length correction
dL through a virtual mass-spring-damper (M, B, K), discretized with
backward differences:

    A0 dL[k] + A1 dL[k-1] + A2 dL[k-2] = k_ad T^2 F_z

    A0 = M + B T + K T^2,  A1 = -(2M + B T),  A2 = M

The corrected reference is L'_d[k] = L_d[k] + dL[k], clamped to the
mechanically feasible range of the leg.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp

# Configure logger
logger = logging.getLogger("admittance")


@dataclass(frozen=True)
class AdmittanceParams:
    """
    Virtual dynamics of the leg-length correction.

    Ranges are validated by AdmittanceSection in src.config; new_state only
    checks what depends on the combination (coefficient identity, poles).
    """
    K: float = 4.0              # N/m, leak back to L_d over B/K = 10 s
    B: float = 40.0             # N·s/m
    M: float = 0.4              # kg
    k_ad: float = -1.0          # compensation coefficient, negative shortens under load
    T: float = 1e-3             # s
    L_min: float = 0.028        # m, 0.1 * 2L for L = 0.14
    L_max: float = 0.2744       # m, 0.98 * 2L for L = 0.14


def coefficients(params: AdmittanceParams) -> Tuple[float, float, float]:
    """Coefficients (A0, A1, A2) of the second-order difference equation."""
    T = params.T
    A0 = params.M + params.B * T + params.K * T * T
    A1 = -(2.0 * params.M + params.B * T)
    A2 = params.M
    return A0, A1, A2


def characteristic_roots(params: AdmittanceParams) -> np.ndarray:
    """Roots of A0 z^2 + A1 z + A2 (poles of the homogeneous recursion)."""
    return np.roots(coefficients(params))


@dataclass
class AdmittanceState:
    """
    Precomputed coefficients and the two stored corrections.

    After a step, dL_prev is the correction just produced (dL[k]) and
    dL_prev2 the one before it (dL[k-1]); the next step reads them as
    dL[k-1] and dL[k-2].
    """
    A0: float
    A1: float
    A2: float
    dL_prev: float = 0.0
    dL_prev2: float = 0.0

    @property
    def rate(self) -> float:
        """Backward-difference rate of the correction over the last sample, per sample."""
        return self.dL_prev - self.dL_prev2


def new_state(params: AdmittanceParams) -> AdmittanceState:
    """
    Create a zeroed filter state for the given parameters.

    Raises:
        ValueError: if the coefficient identity fails or the recursion is unstable
    """
    A0, A1, A2 = coefficients(params)
    KT2 = params.K * params.T * params.T
    if not math.isclose(A0 + A1 + A2, KT2, rel_tol=1e-9, abs_tol=1e-12):
        raise ValueError(f"A0 + A1 + A2 = {A0 + A1 + A2} differs from K T^2 = {KT2}")

    radius = float(np.max(np.abs(characteristic_roots(params))))
    if radius >= 1.0:
        raise ValueError(f"Admittance recursion is not stable (pole radius {radius:.6f})")

    return AdmittanceState(A0=A0, A1=A1, A2=A2)


def step(state: AdmittanceState, params: AdmittanceParams, F_z: float, L_d: float) -> float:
    """
    Advance the filter by one sample and return the corrected reference.

    The stored correction is the clamped one, so the history never runs
    past the leg's feasible range.
    """
    dL = (params.k_ad * params.T * params.T * F_z - state.A1 * state.dL_prev - state.A2 * state.dL_prev2) / state.A0
    L_prime = min(max(L_d + dL, params.L_min), params.L_max)

    state.dL_prev2 = state.dL_prev
    state.dL_prev = L_prime - L_d
    return L_prime


def reset(state: AdmittanceState) -> AdmittanceState:
    """Zero the correction history (used when ground contact is lost)."""
    state.dL_prev = 0.0
    state.dL_prev2 = 0.0
    return state


class AdmittanceFilter:
    """Stateful admittance filter owned by one leg pipeline."""

    def __init__(self, params: AdmittanceParams):
        self.params = params
        self.state = new_state(params)

    @property
    def correction(self) -> float:
        return self.state.dL_prev

    @property
    def correction_rate(self) -> float:
        """Rate of the correction in m/s."""
        return self.state.rate / self.params.T

    def step(self, F_z: float, L_d: float) -> float:
        return step(self.state, self.params, F_z, L_d)

    def hold(self, L_d: float) -> float:
        """Reference with the correction frozen at its current value, at zero rate."""
        self.state.dL_prev2 = self.state.dL_prev
        return min(max(L_d + self.state.dL_prev, self.params.L_min), self.params.L_max)

    def reset(self) -> None:
        reset(self.state)


def continuous_response(
    params: AdmittanceParams,
    F0: float,
    times: np.ndarray,
    max_step: Optional[float] = None,
) -> np.ndarray:
    """
    Response of the continuous law M x'' + B x' + K x = k_ad F0 to a force step.

    The step is applied at t = 0 with zero initial conditions. Used as the
    reference solution for the discrete filter.

    Args:
        params: Admittance parameters
        F0: Constant force applied from t = 0 (N)
        times: Sample times (s), non-decreasing
        max_step: Integrator step bound, defaults to T/100

    Returns:
        np.ndarray: correction x(t) at the requested times
    """
    times = np.asarray(times, dtype=float)
    forcing = params.k_ad * F0
    max_step = max_step or params.T / 100.0

    if params.M == 0 and params.B == 0:
        return np.full_like(times, forcing / params.K)

    if params.M == 0:
        def rhs(t, y):
            return [(forcing - params.K * y[0]) / params.B]
        y0 = [0.0]
    else:
        def rhs(t, y):
            return [y[1], (forcing - params.B * y[1] - params.K * y[0]) / params.M]
        y0 = [0.0, 0.0]

    sol = solve_ivp(
        rhs,
        (0.0, float(times[-1])),
        y0,
        method="RK45",
        t_eval=times,
        max_step=max_step,
        rtol=1e-10,
        atol=1e-13,
    )
    if not sol.success:
        raise RuntimeError(f"Continuous admittance integration failed: {sol.message}")
    return sol.y[0]
