"""
Data models for the SEIRDV intervention model
"""
import math
from dataclasses import dataclass, field, replace
from datetime import date
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError


COMPARTMENTS: Tuple[str, ...] = ("S", "E", "I", "R_E", "R_I", "D", "V")
OBSERVED_SERIES: Tuple[str, ...] = ("I", "R_I", "D", "V")


@dataclass(frozen=True)
class CompartmentState:
    """Abundances of the seven compartments at one time point"""
    S: float = 0.0
    E: float = 0.0
    I: float = 0.0
    R_E: float = 0.0
    R_I: float = 0.0
    D: float = 0.0
    V: float = 0.0

    def __post_init__(self):
        """Validate the state"""
        for name in COMPARTMENTS:
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"compartment {name} must be finite, got {value}")
            if value < 0:
                raise ValueError(f"compartment {name} must be non-negative, got {value}")

    @property
    def total(self) -> float:
        """Total population N"""
        return float(sum(getattr(self, name) for name in COMPARTMENTS))

    def as_array(self) -> np.ndarray:
        """State as a float64 vector ordered like COMPARTMENTS"""
        return np.array([getattr(self, name) for name in COMPARTMENTS], dtype=np.float64)

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "CompartmentState":
        """Build a state from a vector ordered like COMPARTMENTS"""
        if len(values) != len(COMPARTMENTS):
            raise ValueError(f"expected {len(COMPARTMENTS)} values, got {len(values)}")
        return cls(**{name: float(v) for name, v in zip(COMPARTMENTS, values)})


def parameter_names(m: int, n: int) -> Tuple[str, ...]:
    """
    Column names for a parameter vector with m alpha change points and n gamma change points

    Args:
        m: Number of alpha change points (m + 1 alpha regimes)
        n: Number of gamma change points (n + 1 gamma regimes)

    Returns:
        Names in storage order: alpha0..alpham, beta_star, beta, gamma0..gamman, zeta, rho
    """
    return (
        tuple(f"alpha{i}" for i in range(m + 1))
        + ("beta_star", "beta")
        + tuple(f"gamma{j}" for j in range(n + 1))
        + ("zeta", "rho")
    )


@dataclass(frozen=True, eq=False)
class ParameterSet:
    """All model rates for one posterior draw"""
    alpha: np.ndarray
    beta: float
    beta_star: float
    gamma: np.ndarray
    zeta: float
    rho: float = 0.0

    def __post_init__(self):
        """Normalize rate vectors and check shapes (sign constraints live in is_admissible)"""
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=np.float64))
        gamma = np.atleast_1d(np.asarray(self.gamma, dtype=np.float64))
        if alpha.ndim != 1 or alpha.size == 0:
            raise ValueError("alpha must be a non-empty vector")
        if gamma.ndim != 1 or gamma.size == 0:
            raise ValueError("gamma must be a non-empty vector")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "gamma", gamma)
        for name in ("beta", "beta_star", "zeta", "rho"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def m(self) -> int:
        """Number of alpha change points"""
        return self.alpha.size - 1

    @property
    def n(self) -> int:
        """Number of gamma change points"""
        return self.gamma.size - 1

    @property
    def names(self) -> Tuple[str, ...]:
        """Column names in storage order"""
        return parameter_names(self.m, self.n)

    def is_admissible(self) -> bool:
        """Check alpha > 0, beta > 0, gamma > 0, zeta > 0, beta_star >= 0, rho >= 0"""
        vec = self.to_vector()
        if not np.all(np.isfinite(vec)):
            return False
        return bool(
            np.all(self.alpha > 0)
            and self.beta > 0
            and np.all(self.gamma > 0)
            and self.zeta > 0
            and self.beta_star >= 0
            and self.rho >= 0
        )

    def to_vector(self) -> np.ndarray:
        """Flatten to a vector ordered like names"""
        return np.concatenate([
            self.alpha,
            [self.beta_star, self.beta],
            self.gamma,
            [self.zeta, self.rho],
        ])

    @classmethod
    def from_vector(cls, values: Sequence[float], names: Sequence[str]) -> "ParameterSet":
        """
        Rebuild a parameter set from a flat vector

        Args:
            values: Parameter values
            names: Column names matching parameter_names(m, n)

        Returns:
            ParameterSet
        """
        values = np.asarray(values, dtype=np.float64)
        names = tuple(names)
        m = sum(1 for name in names if name.startswith("alpha")) - 1
        n = sum(1 for name in names if name.startswith("gamma")) - 1
        if m < 0 or n < 0 or names != parameter_names(m, n):
            raise ValueError(f"unrecognized parameter layout: {', '.join(names)}")
        if values.shape != (len(names),):
            raise ValueError(f"expected {len(names)} values, got shape {values.shape}")
        return cls(
            alpha=values[: m + 1].copy(),
            beta_star=values[m + 1],
            beta=values[m + 2],
            gamma=values[m + 3: m + 4 + n].copy(),
            zeta=values[m + 4 + n],
            rho=values[m + 5 + n],
        )

    def with_rho(self, rho: float) -> "ParameterSet":
        """Copy with a different vaccination rate"""
        return replace(self, rho=rho)

    def describe(self) -> str:
        """One-line name=value listing for error messages"""
        return ", ".join(f"{k}={v:.6g}" for k, v in zip(self.names, self.to_vector()))


def _check_days(name: str, days: Sequence[int]) -> Tuple[int, ...]:
    """Validate a change-point list as strictly increasing non-negative integers"""
    result = []
    for day in days:
        if isinstance(day, bool) or int(day) != day:
            raise ConfigError(f"{name} must contain integer day indices, got {day!r}")
        result.append(int(day))
    if any(d < 0 for d in result):
        raise ConfigError(f"{name} must be non-negative")
    if any(b <= a for a, b in zip(result, result[1:])):
        raise ConfigError(f"{name} must be strictly increasing, got {result}")
    return tuple(result)


@dataclass(frozen=True)
class InterventionSchedule:
    """
    Change-point days for alpha and gamma, impulse day tau and vaccine activation day T_V

    Rates switch the day after each change point (indicator t > t_m). T_V=None means
    the vaccine is never activated. freeze_day, when set, holds every regime at the
    value it had just before that day.
    """
    alpha_days: Tuple[int, ...] = ()
    gamma_days: Tuple[int, ...] = ()
    tau: Optional[int] = None
    T_V: Optional[int] = None
    freeze_day: Optional[int] = None

    def __post_init__(self):
        """Validate the schedule"""
        object.__setattr__(self, "alpha_days", _check_days("alpha_days", self.alpha_days))
        object.__setattr__(self, "gamma_days", _check_days("gamma_days", self.gamma_days))
        if len(self.gamma_days) > len(self.alpha_days):
            raise ConfigError(
                f"gamma_days ({len(self.gamma_days)}) cannot outnumber alpha_days ({len(self.alpha_days)})"
            )
        for name in ("tau", "T_V", "freeze_day"):
            value = getattr(self, name)
            if value is None:
                continue
            if isinstance(value, bool) or int(value) != value or value < 0:
                raise ConfigError(f"{name} must be a non-negative integer day, got {value!r}")
            object.__setattr__(self, name, int(value))

    @property
    def m(self) -> int:
        """Number of alpha change points"""
        return len(self.alpha_days)

    @property
    def n(self) -> int:
        """Number of gamma change points"""
        return len(self.gamma_days)

    def _clip(self, t):
        """Hold t at freeze_day when the schedule is frozen"""
        if self.freeze_day is None:
            return t
        return np.minimum(t, self.freeze_day)

    def alpha_index(self, t):
        """Active alpha regime: number of alpha change points strictly before t"""
        idx = np.searchsorted(np.asarray(self.alpha_days, dtype=np.float64), self._clip(t), side="left")
        return int(idx) if np.ndim(idx) == 0 else idx

    def gamma_index(self, t):
        """Active gamma regime: number of gamma change points strictly before t"""
        idx = np.searchsorted(np.asarray(self.gamma_days, dtype=np.float64), self._clip(t), side="left")
        return int(idx) if np.ndim(idx) == 0 else idx

    def vaccine_on(self, t):
        """True where the vaccine compartment is active (t >= T_V)"""
        if self.T_V is None:
            return np.zeros(np.shape(t), dtype=bool) if np.ndim(t) else False
        return np.asarray(t) >= self.T_V if np.ndim(t) else bool(t >= self.T_V)

    def vaccine_active(self, t_end: int) -> bool:
        """Whether rho is a free parameter over the horizon [0, t_end]"""
        return self.T_V is not None and self.T_V <= t_end

    def check_parameters(self, params: "ParameterSet"):
        """Raise ConfigError if params does not have one rate per regime"""
        if params.m != self.m:
            raise ConfigError(f"schedule has {self.m + 1} alpha regimes but parameters have {params.m + 1}")
        if params.n != self.n:
            raise ConfigError(f"schedule has {self.n + 1} gamma regimes but parameters have {params.n + 1}")

    def counterfactual(self) -> "InterventionSchedule":
        """No-vaccine schedule with alpha and gamma regimes frozen at their pre-T_V values"""
        if self.T_V is None:
            return self
        return replace(self, T_V=None, freeze_day=self.T_V)


@dataclass
class RawSeries:
    """Aligned cumulative series for one region"""
    dates: List[date]
    confirmed: np.ndarray
    recovered: np.ndarray
    deaths: np.ndarray
    vaccinated: Optional[np.ndarray] = None
    vaccinated_start: Optional[date] = None

    def __post_init__(self):
        """Validate alignment and sign"""
        n = len(self.dates)
        for name in ("confirmed", "recovered", "deaths"):
            values = np.asarray(getattr(self, name), dtype=np.int64)
            if values.shape != (n,):
                raise ValueError(f"{name} has {values.size} values for {n} dates")
            if np.any(values < 0):
                raise ValueError(f"{name} contains negative counts")
            setattr(self, name, values)
        if self.vaccinated is not None:
            values = np.asarray(self.vaccinated, dtype=np.float64)
            if values.shape != (n,):
                raise ValueError(f"vaccinated has {values.size} values for {n} dates")
            self.vaccinated = values


@dataclass
class ObservedSeries:
    """Daily observation vectors indexed by day t = 0, 1, 2, ..."""
    t: np.ndarray
    I: np.ndarray
    R_I: np.ndarray
    D: np.ndarray
    V: Optional[np.ndarray] = None
    v_start: Optional[int] = None
    start_date: Optional[date] = None

    def __post_init__(self):
        """Validate the day index and the series"""
        self.t = np.asarray(self.t, dtype=np.int64)
        if self.t.ndim != 1 or self.t.size == 0:
            raise ValueError("observed series must contain at least one day")
        if not np.array_equal(self.t, np.arange(self.t.size)):
            raise ValueError("day index must be contiguous and start at 0")
        for name in ("I", "R_I", "D"):
            values = np.asarray(getattr(self, name), dtype=np.float64)
            if values.shape != self.t.shape:
                raise ValueError(f"{name} has {values.size} values for {self.t.size} days")
            if np.any(~np.isfinite(values)) or np.any(values < 0):
                raise ValueError(f"{name} must be finite and non-negative")
            setattr(self, name, values)
        if self.V is None:
            self.V = np.full(self.t.shape, np.nan)
            self.v_start = None
        else:
            values = np.asarray(self.V, dtype=np.float64)
            if values.shape != self.t.shape:
                raise ValueError(f"V has {values.size} values for {self.t.size} days")
            if self.v_start is None:
                present = np.flatnonzero(~np.isnan(values))
                self.v_start = int(present[0]) if present.size else None
            if self.v_start is not None:
                values = values.copy()
                values[: self.v_start] = np.nan
                if np.any(values[self.v_start:][~np.isnan(values[self.v_start:])] < 0):
                    raise ValueError("V must be non-negative")
            self.V = values

    @property
    def t_end(self) -> int:
        """Last observed day"""
        return int(self.t[-1])

    def series(self, name: str) -> np.ndarray:
        """Observation vector for I, R_I, D or V"""
        if name not in OBSERVED_SERIES:
            raise KeyError(name)
        return getattr(self, name)


@dataclass
class Trajectory:
    """Integrated state on the integer day grid"""
    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        """Check one state row per day"""
        if self.states.shape != (self.times.size, len(COMPARTMENTS)):
            raise ValueError(f"states shape {self.states.shape} does not match {self.times.size} days")

    def component(self, name: str) -> np.ndarray:
        """Values of one compartment over the day grid"""
        return self.states[:, COMPARTMENTS.index(name)]

    def state_at(self, t: int) -> CompartmentState:
        """State at day t"""
        return CompartmentState.from_array(self.states[t])

    @property
    def population(self) -> np.ndarray:
        """Total population per day"""
        return self.states.sum(axis=1)


@dataclass
class SamplerConfig:
    """Configuration for the Metropolis-Hastings sampler"""
    n_samples: int = 30000
    n_burnin: int = 5000
    tune_rounds: int = 20
    tune_length: int = 250
    proposal_scales: Optional[np.ndarray] = None
    seed: int = 0
    target_acceptance: float = 0.30

    def __post_init__(self):
        """Validate sampler configuration"""
        if self.n_samples <= 0:
            raise ConfigError("empty chain requested")
        if self.n_burnin < 0 or self.tune_rounds < 0:
            raise ConfigError("n_burnin and tune_rounds must be non-negative")
        if self.tune_rounds > 0 and self.tune_length <= 0:
            raise ConfigError("tune_length must be positive")
        if not 0 < self.target_acceptance < 1:
            raise ConfigError("target_acceptance must be in (0, 1)")
        if self.proposal_scales is not None:
            scales = np.atleast_1d(np.asarray(self.proposal_scales, dtype=np.float64))
            if np.any(~np.isfinite(scales)) or np.any(scales <= 0):
                raise ConfigError("proposal scales must be positive")
            self.proposal_scales = scales
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError("seed must fit in 64 bits")
        self.seed = int(self.seed)


@dataclass
class Chain:
    """Retained posterior draws with acceptance bookkeeping"""
    names: Tuple[str, ...]
    samples: np.ndarray
    log_posteriors: np.ndarray
    accept_count: np.ndarray
    proposal_scales: Optional[np.ndarray] = None
    seed: Optional[int] = None

    def __post_init__(self):
        """Normalize arrays and check the sample layout"""
        self.names = tuple(self.names)
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 2 or self.samples.shape[1] != len(self.names):
            raise ValueError(f"samples shape {self.samples.shape} does not match {len(self.names)} parameters")
        self.log_posteriors = np.asarray(self.log_posteriors, dtype=np.float64)
        if self.log_posteriors.shape != (self.samples.shape[0],):
            raise ValueError("one log posterior value per draw is required")
        self.accept_count = np.asarray(self.accept_count, dtype=np.int64)

    def __len__(self) -> int:
        """Number of retained draws"""
        return self.samples.shape[0]

    def column(self, name: str) -> np.ndarray:
        """All draws of one parameter"""
        try:
            return self.samples[:, self.names.index(name)]
        except ValueError:
            raise KeyError(f"unknown parameter: {name}") from None

    def draw(self, index: int) -> ParameterSet:
        """Draw at index as a ParameterSet"""
        return ParameterSet.from_vector(self.samples[index], self.names)

    def mean_parameters(self) -> ParameterSet:
        """Posterior-mean parameter set"""
        return ParameterSet.from_vector(self.samples.mean(axis=0), self.names)

    def thinned_indices(self, thin: int) -> np.ndarray:
        """Indices of every thin-th draw, starting at 0"""
        if thin < 1:
            raise ConfigError("thin must be a positive integer")
        return np.arange(0, len(self), thin)

    def acceptance_rates(self) -> Dict[str, float]:
        """Accepted proposals per retained draw, by parameter"""
        n = max(len(self), 1)
        return {name: float(c) / n for name, c in zip(self.names, self.accept_count)}

    @classmethod
    def concatenate(cls, chains: Sequence["Chain"]) -> "Chain":
        """Stack chains with the same layout in the given order"""
        if not chains:
            raise ValueError("no chains to combine")
        names = chains[0].names
        for chain in chains[1:]:
            if chain.names != names:
                raise ValueError("chains have different parameter layouts")
        return cls(
            names=names,
            samples=np.vstack([c.samples for c in chains]),
            log_posteriors=np.concatenate([c.log_posteriors for c in chains]),
            accept_count=np.sum([c.accept_count for c in chains], axis=0),
        )


def _check_ordered(lower, middle, upper, what: str):
    scale = np.maximum(np.abs(upper), 1.0) * 1e-12
    if np.any(lower > middle + scale) or np.any(middle > upper + scale):
        raise ValueError(f"{what} quantiles are not ordered")


@dataclass(frozen=True)
class SummaryRow:
    """Posterior summary of one parameter"""
    name: str
    mean: float
    median: float
    sd: float
    q025: float
    q50: float
    q975: float

    def __post_init__(self):
        """Check quantile order"""
        _check_ordered(self.q025, self.q50, self.q975, self.name)


@dataclass(frozen=True)
class ContrastRow:
    """Posterior summary of a difference between two parameters"""
    name: str
    mean: float
    median: float
    sd: float
    q025: float
    q50: float
    q975: float
    p_gt_zero: float

    def __post_init__(self):
        _check_ordered(self.q025, self.q50, self.q975, self.name)
        if not 0.0 <= self.p_gt_zero <= 1.0:
            raise ValueError("p_gt_zero must be a proportion")


@dataclass
class BandSeries:
    """Pointwise 0.025 / 0.5 / 0.975 quantile band over the day grid"""
    t: np.ndarray
    lower: np.ndarray
    median: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        """Check band shape and quantile order"""
        self.t = np.asarray(self.t, dtype=np.int64)
        for name in ("lower", "median", "upper"):
            values = np.asarray(getattr(self, name), dtype=np.float64)
            if values.shape != self.t.shape:
                raise ValueError(f"band {name} has {values.size} values for {self.t.size} days")
            setattr(self, name, values)
        _check_ordered(self.lower, self.median, self.upper, "band")


@dataclass
class FitProgress:
    """Progress information for a multi-chain fit"""
    completed: int = 0
    total: int = 0
    chain_id: int = -1

    @property
    def percentage(self) -> float:
        """Get progress percentage"""
        if self.total == 0:
            return 0.0
        return (self.completed / self.total) * 100.0


@dataclass
class InitialConditions:
    """Compartment values at day 0 as given in the run config"""
    S0: float
    E0: float = 0.0
    I0: float = 0.0
    RE0: float = 0.0
    RI0: float = 0.0
    D0: float = 0.0
    V0: float = 0.0

    def to_state(self) -> CompartmentState:
        """Initial conditions as a CompartmentState"""
        return CompartmentState(
            S=self.S0, E=self.E0, I=self.I0, R_E=self.RE0, R_I=self.RI0, D=self.D0, V=self.V0
        )


@dataclass
class RunConfig:
    """Everything needed to reproduce an ingest/fit/analyze run"""
    confirmed_path: str
    recovered_path: str
    deaths_path: str
    region: str
    init: InitialConditions
    schedule: InterventionSchedule
    vaccinated_path: Optional[str] = None
    start_date: Optional[date] = None
    end_date: Optional[date] = None
    v_start: Optional[int] = None
    n_samples: int = 30000
    n_burnin: int = 5000
    tune_rounds: int = 20
    tune_length: int = 250
    proposal_scale: float = 0.1
    seed: int = 0
    chains: int = 1
    workers: int = 1
    substeps: int = 10
    initial: Dict[str, float] = field(default_factory=dict)
    thin: int = 10
    out_dir: str = "out"
    source: Dict = field(default_factory=dict)

    def __post_init__(self):
        """Validate run configuration"""
        if self.chains <= 0:
            raise ConfigError("chains must be positive")
        if self.workers <= 0:
            raise ConfigError("workers must be positive")
        if self.substeps <= 0:
            raise ConfigError("substeps must be positive")
        if self.thin <= 0:
            raise ConfigError("thin must be positive")
        if self.proposal_scale <= 0:
            raise ConfigError("proposal_scale must be positive")
        if self.start_date and self.end_date and self.end_date < self.start_date:
            raise ConfigError(f"end_date {self.end_date} is before start_date {self.start_date}")
        try:
            self.init.to_state()
        except ValueError as e:
            raise ConfigError(f"invalid initial conditions: {e}") from e

    def sampler_config(self, seed: Optional[int] = None) -> SamplerConfig:
        """Sampler settings for one chain, optionally with its own seed"""
        return SamplerConfig(
            n_samples=self.n_samples,
            n_burnin=self.n_burnin,
            tune_rounds=self.tune_rounds,
            tune_length=self.tune_length,
            proposal_scales=np.array([self.proposal_scale]),
            seed=self.seed if seed is None else seed,
        )
