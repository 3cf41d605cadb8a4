"""
Posterior summaries, contrasts, reproduction numbers, predictive bands and counterfactuals
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import DataError
from .integrator import DEFAULT_SUBSTEPS, integrate_array
from .models import (
    COMPARTMENTS,
    OBSERVED_SERIES,
    BandSeries,
    Chain,
    CompartmentState,
    ContrastRow,
    InterventionSchedule,
    ObservedSeries,
    ParameterSet,
    SummaryRow,
)
from .tasks import map_ordered


logger = logging.getLogger(__name__)

QUANTILES = (0.025, 0.5, 0.975)
DEFAULT_THIN = 10


def _summary_values(values: np.ndarray) -> Tuple[float, ...]:
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("cannot summarize an empty chain")
    q025, q50, q975 = np.quantile(values, QUANTILES)
    sd = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
    return float(values.mean()), float(np.median(values)), sd, float(q025), float(q50), float(q975)


def summarize(chain: Chain) -> List[SummaryRow]:
    """
    Posterior mean, median, standard deviation and 2.5/50/97.5% quantiles per parameter

    Quantiles interpolate linearly between order statistics.
    """
    if len(chain) == 0:
        raise ValueError("cannot summarize an empty chain")
    return [SummaryRow(name, *_summary_values(chain.column(name))) for name in chain.names]


def sequential_pairs(names: Sequence[str], prefix: str) -> List[Tuple[str, str]]:
    """Consecutive regime pairs (prefix{k+1}, prefix{k}) present in names"""
    count = sum(1 for name in names if name.startswith(prefix) and name[len(prefix):].isdigit())
    return [(f"{prefix}{k + 1}", f"{prefix}{k}") for k in range(count - 1)]


def default_contrast_pairs(names: Sequence[str]) -> List[Tuple[str, str]]:
    """Sequential alpha ladder followed by the sequential gamma ladder"""
    return sequential_pairs(names, "alpha") + sequential_pairs(names, "gamma")


def contrasts(chain: Chain, pairs: Optional[Sequence[Tuple[str, str]]] = None) -> List[ContrastRow]:
    """
    Summaries of per-draw differences a - b with the proportion of positive differences

    Args:
        chain: Posterior draws
        pairs: Ordered (a, b) name pairs; defaults to the sequential alpha and gamma ladders

    Returns:
        One ContrastRow per pair, labelled "a-b"
    """
    if pairs is None:
        pairs = default_contrast_pairs(chain.names)
    rows = []
    for a, b in pairs:
        diff = chain.column(a) - chain.column(b)
        rows.append(ContrastRow(f"{a}-{b}", *_summary_values(diff), float(np.mean(diff > 0))))
    return rows


def quantile_band(t: np.ndarray, draws: np.ndarray) -> BandSeries:
    """Pointwise quantile band of a (draws, days) array"""
    lower, median, upper = np.quantile(draws, QUANTILES, axis=0)
    return BandSeries(t=t, lower=lower, median=median, upper=upper)


def _trajectories(
    chain: Chain,
    sched: InterventionSchedule,
    init: CompartmentState,
    t_end: int,
    thin: int,
    substeps: int,
    workers: int,
) -> Tuple[List[ParameterSet], np.ndarray]:
    """Integrate every thinned draw; returns the draws and a (draws, days, 7) array"""
    draws = [chain.draw(i) for i in chain.thinned_indices(thin)]
    if not draws:
        raise ValueError("chain is empty")
    y0 = init.as_array()
    states = map_ordered(lambda p: integrate_array(y0, p, sched, t_end, substeps), draws, workers)
    return draws, np.stack(states)


def effective_reproduction_series(
    params: ParameterSet, sched: InterventionSchedule, susceptible: np.ndarray
) -> np.ndarray:
    """R_e(t) = alpha(t) S(t) / (beta + gamma(t) + rho(t)) on days 0..len(susceptible)-1"""
    t = np.arange(susceptible.size, dtype=np.float64)
    alpha = params.alpha[sched.alpha_index(t)]
    gamma = params.gamma[sched.gamma_index(t)]
    rho = np.where(sched.vaccine_on(t), params.rho, 0.0)
    return alpha * susceptible / (params.beta + gamma + rho)


def effective_reproduction(
    chain: Chain,
    sched: InterventionSchedule,
    init: CompartmentState,
    t_end: int,
    thin: int = DEFAULT_THIN,
    substeps: int = DEFAULT_SUBSTEPS,
    workers: int = 1,
) -> BandSeries:
    """
    Pointwise band of the time-varying effective reproduction number across draws

    Uses the integrated susceptible abundance S(t) of each draw, not S(0).
    """
    draws, states = _trajectories(chain, sched, init, t_end, thin, substeps, workers)
    s_col = COMPARTMENTS.index("S")
    values = np.stack([
        effective_reproduction_series(p, sched, traj[:, s_col]) for p, traj in zip(draws, states)
    ])
    return quantile_band(np.arange(t_end + 1), values)


def next_generation_radius(alpha: float, S: float, beta: float, gamma: float, rho: float, zeta: float) -> float:
    """
    Spectral radius of the next-generation matrix G W^-1 for the (E, I) subsystem

    G holds the new-infection Jacobian, W the transition Jacobian.
    """
    G = np.array([[alpha * S, 0.0], [0.0, 0.0]])
    W = np.array([[beta + gamma + rho, 0.0], [-beta, gamma + zeta]])
    return float(np.max(np.abs(np.linalg.eigvals(G @ np.linalg.inv(W)))))


def basic_reproduction_by_regime(
    chain: Chain, sched: InterventionSchedule, population: float, t_end: int
) -> List[SummaryRow]:
    """
    Zeroth-generation reproduction number alpha_i N / (beta + gamma_j + rho) per regime

    Regimes are the distinct (alpha, gamma, vaccine) combinations met on days 0..t_end,
    labelled by the day they start.
    """
    t = np.arange(t_end + 1, dtype=np.float64) + 0.5
    keys = np.stack([sched.alpha_index(t), sched.gamma_index(t), sched.vaccine_on(t).astype(int)], axis=1)
    starts = [0] + [d for d in range(1, keys.shape[0]) if np.any(keys[d] != keys[d - 1])]
    alpha = np.stack([chain.column(f"alpha{i}") for i in range(sched.m + 1)], axis=1)
    gamma = np.stack([chain.column(f"gamma{j}") for j in range(sched.n + 1)], axis=1)
    beta = chain.column("beta")
    rho = chain.column("rho")
    rows = []
    for start in starts:
        i, j, vaccinated = keys[start]
        r0 = alpha[:, i] * population / (beta + gamma[:, j] + (rho if vaccinated else 0.0))
        rows.append(SummaryRow(f"R0_day{start}_alpha{i}_gamma{j}", *_summary_values(r0)))
    return rows


def posterior_predictive(
    chain: Chain,
    sched: InterventionSchedule,
    init: CompartmentState,
    t_end: int,
    thin: int = DEFAULT_THIN,
    seed: int = 0,
    substeps: int = DEFAULT_SUBSTEPS,
    workers: int = 1,
) -> Dict[str, BandSeries]:
    """
    Predictive bands for I, R_I, D and V

    Each thinned draw contributes one Poisson variate per day and series, drawn
    around its integrated means.
    """
    _, states = _trajectories(chain, sched, init, t_end, thin, substeps, workers)
    rng = np.random.default_rng(seed)
    t = np.arange(t_end + 1)
    bands = {}
    for name in OBSERVED_SERIES:
        means = np.maximum(states[:, :, COMPARTMENTS.index(name)], 0.0)
        bands[name] = quantile_band(t, rng.poisson(means).astype(np.float64))
    return bands


def pseudo_r2(medians: Mapping[str, BandSeries], data: ObservedSeries) -> float:
    """
    1 - SSE / SST pooled over the series in medians

    SSE sums squared observed minus posterior-median differences; SST sums squared
    deviations of each series from its own mean. V only counts from v_start on.
    """
    sse = 0.0
    sst = 0.0
    for name, band in medians.items():
        observed = data.series(name)
        days = np.arange(observed.size)
        days = days[days < band.t.size]
        days = days[~np.isnan(observed[days])]
        if days.size == 0:
            continue
        y = observed[days]
        deviation = float(np.sum((y - y.mean()) ** 2))
        if deviation == 0.0:
            raise DataError(f"series {name} has zero variance")
        sse += float(np.sum((y - band.median[days]) ** 2))
        sst += deviation
    if sst == 0.0:
        raise DataError("no observations to compare")
    return 1.0 - sse / sst


@dataclass
class CounterfactualResult:
    """Cumulative deaths without the vaccine and the excess over the fitted trajectory"""
    deaths: BandSeries
    difference: BandSeries
    final_difference: SummaryRow
    metadata: Dict = field(default_factory=dict)


def counterfactual_deaths(
    chain: Chain,
    sched: InterventionSchedule,
    init: CompartmentState,
    t_end: int,
    thin: int = DEFAULT_THIN,
    substeps: int = DEFAULT_SUBSTEPS,
    workers: int = 1,
) -> CounterfactualResult:
    """
    Re-integrate every thinned draw with rho = 0 and pre-T_V regimes held from T_V on

    Returns:
        Band of counterfactual cumulative deaths, band of counterfactual minus factual
        deaths per day, and a summary of the final-day difference
    """
    metadata = {
        "reading": "rho forced to 0; alpha and gamma frozen from T_V at their pre-T_V regimes",
        "T_V": sched.T_V,
    }
    if sched.T_V is None or sched.T_V > t_end:
        logger.warning("T_V=%s is outside days 0..%d; counterfactual equals the fitted trajectory", sched.T_V, t_end)
        metadata["no_op"] = True
    cf_sched = sched.counterfactual()
    d_col = COMPARTMENTS.index("D")
    _, factual = _trajectories(chain, sched, init, t_end, thin, substeps, workers)
    _, alternative = _trajectories(chain, cf_sched, init, t_end, thin, substeps, workers)
    t = np.arange(t_end + 1)
    excess = alternative[:, :, d_col] - factual[:, :, d_col]
    return CounterfactualResult(
        deaths=quantile_band(t, alternative[:, :, d_col]),
        difference=quantile_band(t, excess),
        final_difference=SummaryRow("deaths_averted", *_summary_values(excess[:, -1])),
        metadata=metadata,
    )


def simulate_observations(
    params: ParameterSet,
    sched: InterventionSchedule,
    init: CompartmentState,
    t_end: int,
    rng: np.random.Generator,
    v_start: Optional[int] = None,
    substeps: int = DEFAULT_SUBSTEPS,
) -> ObservedSeries:
    """
    Poisson observations around the integrated means, for parameter-recovery checks

    V is reported from v_start (default T_V) on.
    """
    states = integrate_array(init.as_array(), params, sched, t_end, substeps)
    counts = {name: rng.poisson(np.maximum(states[:, COMPARTMENTS.index(name)], 0.0)).astype(np.float64)
              for name in OBSERVED_SERIES}
    counts["I"][0] = init.I
    counts["R_I"][0] = init.R_I
    counts["D"][0] = init.D
    if v_start is None:
        v_start = sched.T_V
    V = None
    if v_start is not None and v_start <= t_end:
        V = counts["V"]
        V[:v_start] = np.nan
    return ObservedSeries(
        t=np.arange(t_end + 1),
        I=counts["I"],
        R_I=counts["R_I"],
        D=counts["D"],
        V=V,
        v_start=v_start if V is not None else None,
    )


def deaths_averted(
    chain: Chain,
    sched: InterventionSchedule,
    init: CompartmentState,
    t_end: int,
    thin: int = DEFAULT_THIN,
    substeps: int = DEFAULT_SUBSTEPS,
    workers: int = 1,
) -> SummaryRow:
    """Final-day summary of counterfactual minus fitted cumulative deaths"""
    return counterfactual_deaths(chain, sched, init, t_end, thin, substeps, workers).final_difference
