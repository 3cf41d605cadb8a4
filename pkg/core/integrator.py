"""
Fixed-step RK4 integration of the SEIRDV system over the day grid
"""
import logging
import math

import numpy as np
from numba import njit

from .epidemic_model import daily_rates, seirdv_derivatives
from .errors import IntegrationError
from .models import CompartmentState, InterventionSchedule, ParameterSet, Trajectory


logger = logging.getLogger(__name__)

DEFAULT_SUBSTEPS = 10
UNDERSHOOT_TOLERANCE = 1e-9

_OK = -1


@njit(cache=True, nogil=True)
def _impulse(y, beta_star):
    delta = -y[1] * math.expm1(-beta_star)
    y[1] = max(y[1] - delta, 0.0)
    y[2] = y[2] + delta


@njit(cache=True, nogil=True)
def _rk4_days(y0, alpha_day, gamma_day, rho_day, beta, zeta, beta_star, tau, substeps, out):
    """
    Integrate day by day with `substeps` RK4 steps per day

    Rates are constant on each day, so no step straddles a switch. The impulse is
    applied after the step that lands on tau. Returns -1 on success, otherwise the
    day at which the state became non-finite or fell below -UNDERSHOOT_TOLERANCE.
    """
    n_days = alpha_day.shape[0]
    h = 1.0 / substeps
    y = y0.copy()
    tmp = np.empty(7)
    k1 = np.empty(7)
    k2 = np.empty(7)
    k3 = np.empty(7)
    k4 = np.empty(7)

    if tau == 0:
        _impulse(y, beta_star)
    out[0, :] = y

    for d in range(n_days):
        a = alpha_day[d]
        g = gamma_day[d]
        r = rho_day[d]
        for _ in range(substeps):
            seirdv_derivatives(y, a, beta, g, zeta, r, k1)
            for i in range(7):
                tmp[i] = y[i] + 0.5 * h * k1[i]
            seirdv_derivatives(tmp, a, beta, g, zeta, r, k2)
            for i in range(7):
                tmp[i] = y[i] + 0.5 * h * k2[i]
            seirdv_derivatives(tmp, a, beta, g, zeta, r, k3)
            for i in range(7):
                tmp[i] = y[i] + h * k3[i]
            seirdv_derivatives(tmp, a, beta, g, zeta, r, k4)
            for i in range(7):
                v = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                if not math.isfinite(v):
                    return d + 1
                if v < 0.0:
                    if v > -UNDERSHOOT_TOLERANCE:
                        v = 0.0
                    else:
                        return d + 1
                y[i] = v
        if d + 1 == tau:
            _impulse(y, beta_star)
        out[d + 1, :] = y
    return _OK


def integrate_array(
    y0: np.ndarray,
    params: ParameterSet,
    sched: InterventionSchedule,
    t_end: int,
    substeps: int = DEFAULT_SUBSTEPS,
) -> np.ndarray:
    """
    Integrate from a raw state vector and return the (t_end + 1, 7) state array

    Raises:
        IntegrationError: if the state becomes non-finite or negative
    """
    if substeps < 1:
        raise ValueError("substeps must be a positive integer")
    if t_end < 0:
        raise ValueError("t_end must be non-negative")
    sched.check_parameters(params)
    alpha_day, gamma_day, rho_day = daily_rates(params, sched, t_end)
    out = np.empty((t_end + 1, 7))
    status = _rk4_days(
        np.ascontiguousarray(y0, dtype=np.float64),
        alpha_day,
        gamma_day,
        rho_day,
        params.beta,
        params.zeta,
        params.beta_star,
        -1 if sched.tau is None else sched.tau,
        int(substeps),
        out,
    )
    if status != _OK:
        raise IntegrationError("non-finite or negative state", day=int(status), params=params)
    return out


def integrate(
    init: CompartmentState,
    params: ParameterSet,
    sched: InterventionSchedule,
    t_end: int,
    substeps: int = DEFAULT_SUBSTEPS,
) -> Trajectory:
    """
    Integrate the SEIRDV system over days 0..t_end

    Args:
        init: State at day 0
        params: Parameter set
        sched: Intervention schedule
        t_end: Last day of the grid
        substeps: RK4 steps per day (h = 1 / substeps)

    Returns:
        Trajectory with the state at every integer day
    """
    states = integrate_array(init.as_array(), params, sched, t_end, substeps)
    return Trajectory(times=np.arange(t_end + 1), states=states)
