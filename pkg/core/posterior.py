"""
Unnormalized log-posterior: Poisson likelihoods of the observed series plus Exp(1) priors
"""
import logging
import math
from typing import Dict

import numpy as np
from scipy.special import gammaln

from .errors import DataError
from .integrator import DEFAULT_SUBSTEPS, integrate_array
from .models import (
    COMPARTMENTS,
    OBSERVED_SERIES,
    CompartmentState,
    InterventionSchedule,
    ObservedSeries,
    ParameterSet,
    parameter_names,
)


logger = logging.getLogger(__name__)

MEAN_FLOOR = 1e-10
NEG_INF = -math.inf


def log_prior(params: ParameterSet, vaccine_active: bool) -> float:
    """
    Sum of Exp(1) log-densities, with a point mass at rho = 0 while the vaccine is inactive

    Args:
        params: Parameter set
        vaccine_active: Whether rho is a free parameter

    Returns:
        Log prior density, -inf outside the support
    """
    values = np.concatenate([params.alpha, [params.beta, params.beta_star], params.gamma, [params.zeta]])
    if not np.all(np.isfinite(values)) or np.any(values < 0):
        return NEG_INF
    total = -float(values.sum())
    if vaccine_active:
        if not math.isfinite(params.rho) or params.rho < 0:
            return NEG_INF
        return total - params.rho
    return total if params.rho == 0.0 else NEG_INF


def poisson_log_pmf(y: np.ndarray, mean: np.ndarray, log_factorial: np.ndarray = None) -> np.ndarray:
    """Elementwise y * ln(mean) - mean - ln(y!) with the mean floored at MEAN_FLOOR"""
    mean = np.maximum(mean, MEAN_FLOOR)
    if log_factorial is None:
        log_factorial = gammaln(y + 1.0)
    return y * np.log(mean) - mean - log_factorial


class PosteriorModel:
    """Log-posterior of the SEIRDV model for one data set"""

    def __init__(
        self,
        sched: InterventionSchedule,
        data: ObservedSeries,
        init: CompartmentState,
        substeps: int = DEFAULT_SUBSTEPS,
    ):
        """
        Args:
            sched: Intervention schedule
            data: Observed series; day 0 is the initial condition and is not scored
            init: State at day 0
            substeps: RK4 steps per day
        """
        self.sched = sched
        self.data = data
        self.init = init
        self.substeps = substeps
        self.t_end = data.t_end
        self.vaccine_active = sched.vaccine_active(self.t_end)
        self.names = parameter_names(sched.m, sched.n)
        self._y0 = init.as_array()

        # (series, compartment column, observed days, counts, ln y!)
        self._observations = []
        for name in OBSERVED_SERIES:
            values = data.series(name)
            days = np.arange(1, data.t.size)
            if name == "V":
                if data.v_start is None:
                    continue
                days = days[days >= data.v_start]
                days = days[~np.isnan(values[days])]
            counts = values[days]
            if np.any(counts != np.round(counts)):
                raise DataError(f"{name} contains non-integer counts")
            self._observations.append(
                (name, COMPARTMENTS.index(name), days, counts, gammaln(counts + 1.0))
            )

    @property
    def free_mask(self) -> np.ndarray:
        """Parameters updated by the sampler; rho is frozen at 0 while the vaccine is inactive"""
        mask = np.ones(len(self.names), dtype=bool)
        if not self.vaccine_active:
            mask[self.names.index("rho")] = False
        return mask

    @property
    def n_observations(self) -> int:
        return sum(obs[2].size for obs in self._observations)

    def log_prior(self, params: ParameterSet) -> float:
        return log_prior(params, self.vaccine_active)

    def pointwise_log_likelihood(self, params: ParameterSet) -> Dict[str, np.ndarray]:
        """Per-observation Poisson log-pmf for each scored series"""
        states = integrate_array(self._y0, params, self.sched, self.t_end, self.substeps)
        return {
            name: poisson_log_pmf(counts, states[days, column], log_factorial)
            for name, column, days, counts, log_factorial in self._observations
        }

    def log_likelihood(self, params: ParameterSet) -> float:
        terms = self.pointwise_log_likelihood(params)
        return float(sum(values.sum() for values in terms.values()))

    def log_posterior(self, params: ParameterSet) -> float:
        """Log prior plus log likelihood; skips integration when the prior is zero"""
        lp = self.log_prior(params)
        if lp == NEG_INF:
            return NEG_INF
        value = lp + self.log_likelihood(params)
        return NEG_INF if math.isnan(value) else value

    def __call__(self, theta: np.ndarray) -> float:
        """Log posterior of a flat parameter vector ordered like self.names"""
        return self.log_posterior(ParameterSet.from_vector(theta, self.names))


def log_likelihood(
    params: ParameterSet,
    sched: InterventionSchedule,
    data: ObservedSeries,
    init: CompartmentState,
    substeps: int = DEFAULT_SUBSTEPS,
) -> float:
    """Poisson log-likelihood of I, R_I, D (t >= 1) and V (t >= v_start)"""
    return PosteriorModel(sched, data, init, substeps).log_likelihood(params)


def log_posterior(
    params: ParameterSet,
    sched: InterventionSchedule,
    data: ObservedSeries,
    init: CompartmentState,
    substeps: int = DEFAULT_SUBSTEPS,
) -> float:
    """Unnormalized log-posterior of params"""
    return PosteriorModel(sched, data, init, substeps).log_posterior(params)
