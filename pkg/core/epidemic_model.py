"""
SEIRDV mean-abundance system with intervention-switched rates
"""
import math
from dataclasses import replace

import numpy as np
from numba import njit

from .models import CompartmentState, InterventionSchedule, ParameterSet


@njit(cache=True, nogil=True)
def seirdv_derivatives(y, alpha, beta, gamma, zeta, rho, out):
    """
    Right-hand side of the SEIRDV system for constant rates

    Args:
        y: State vector (S, E, I, R_E, R_I, D, V)
        alpha, beta, gamma, zeta, rho: Rates in effect
        out: Output vector, overwritten with the derivatives
    """
    S = y[0]
    E = y[1]
    I = y[2]
    RE = y[3]
    infection = alpha * S * E
    out[0] = -infection - rho * S
    out[1] = infection - (beta + gamma + rho) * E
    out[2] = beta * E - (gamma + zeta) * I
    out[3] = gamma * E - rho * RE
    out[4] = gamma * I
    out[5] = zeta * I
    out[6] = rho * (S + E + RE)


def alpha_at(t: float, params: ParameterSet, sched: InterventionSchedule) -> float:
    """
    Transmission rate in effect at day t

    Args:
        t: Day (non-negative)
        params: Parameter set
        sched: Intervention schedule

    Returns:
        alpha[k] with k the number of alpha change points strictly before t
    """
    return float(params.alpha[sched.alpha_index(t)])


def gamma_at(t: float, params: ParameterSet, sched: InterventionSchedule) -> float:
    """Recovery rate in effect at day t"""
    return float(params.gamma[sched.gamma_index(t)])


def rho_at(t: float, params: ParameterSet, sched: InterventionSchedule) -> float:
    """Vaccination rate: 0 before T_V, params.rho from T_V on"""
    return params.rho if sched.vaccine_on(t) else 0.0


def rhs(t: float, state: CompartmentState, params: ParameterSet, sched: InterventionSchedule) -> np.ndarray:
    """
    Derivatives of the mean-abundance system at day t, excluding the impulse

    Returns:
        Vector of seven derivatives ordered like COMPARTMENTS
    """
    out = np.empty(7)
    seirdv_derivatives(
        state.as_array(),
        alpha_at(t, params, sched),
        params.beta,
        gamma_at(t, params, sched),
        params.zeta,
        rho_at(t, params, sched),
        out,
    )
    return out


def daily_rates(params: ParameterSet, sched: InterventionSchedule, t_end: int):
    """
    Rates in effect on each open day interval (d, d+1), d = 0..t_end-1

    Every change point is an integer day, so rates are constant inside a day.
    """
    mid = np.arange(t_end, dtype=np.float64) + 0.5
    alpha = params.alpha[sched.alpha_index(mid)]
    gamma = params.gamma[sched.gamma_index(mid)]
    rho = np.where(sched.vaccine_on(mid), params.rho, 0.0)
    return (
        np.ascontiguousarray(alpha, dtype=np.float64),
        np.ascontiguousarray(gamma, dtype=np.float64),
        np.ascontiguousarray(rho, dtype=np.float64),
    )


def impulse_transfer(exposed: float, beta_star: float) -> float:
    """Mass moved from E to I by the impulse: E * (1 - exp(-beta_star))"""
    return -exposed * math.expm1(-beta_star)


def apply_impulse(state: CompartmentState, beta_star: float) -> CompartmentState:
    """
    Instantaneous E -> I transfer at the impulse day

    Integrating dE/dt = -beta_star * E * delta(t - tau) across tau multiplies E by
    exp(-beta_star), so E never goes negative for any beta_star >= 0.
    """
    if beta_star < 0:
        raise ValueError("beta_star must be non-negative")
    delta = impulse_transfer(state.E, beta_star)
    if delta == 0.0:
        return state
    return replace(state, E=max(state.E - delta, 0.0), I=state.I + delta)
