"""
Component-wise random-walk Metropolis-Hastings on the positive half-line
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .errors import IntegrationError, SamplerError
from .models import Chain, ParameterSet, SamplerConfig


logger = logging.getLogger(__name__)

DEFAULT_SCALE = 0.1
SCALE_BOUNDS = (1e-6, 10.0)


@dataclass
class Target:
    """Log density over a named positive parameter vector"""
    log_density: Callable[[np.ndarray], float]
    names: Tuple[str, ...]
    free: Optional[np.ndarray] = None

    def __post_init__(self):
        self.names = tuple(self.names)
        if self.free is None:
            self.free = np.ones(len(self.names), dtype=bool)
        self.free = np.asarray(self.free, dtype=bool)
        if self.free.shape != (len(self.names),):
            raise ValueError("free mask must have one entry per parameter")

    def __call__(self, theta: np.ndarray) -> float:
        """Evaluate the log density; a proposal the integrator cannot handle has zero density"""
        try:
            value = float(self.log_density(theta))
        except IntegrationError as e:
            logger.debug("Rejecting proposal: %s", e)
            return -math.inf
        return -math.inf if math.isnan(value) else value


def as_target(evaluator) -> Target:
    """Wrap a PosteriorModel (or any callable with names/free_mask) as a Target"""
    if isinstance(evaluator, Target):
        return evaluator
    return Target(log_density=evaluator, names=evaluator.names, free=evaluator.free_mask)


def mh_step(
    current: np.ndarray,
    current_lp: float,
    scales: np.ndarray,
    rng: np.random.Generator,
    target: Target,
) -> Tuple[np.ndarray, float, np.ndarray]:
    """
    One single-site sweep over the free parameters in storage order

    Each component is proposed as theta_k * exp(s_k * z), z ~ N(0, 1), and accepted
    with probability min(1, exp(lp' - lp + ln theta'_k - ln theta_k)).

    Args:
        current: Current parameter vector
        current_lp: Log density at current (finite)
        scales: Per-parameter log-space step sizes
        rng: Random generator, advanced in place
        target: Log density and free-parameter mask

    Returns:
        (new vector, its log density, per-parameter accepted flags)
    """
    theta = np.array(current, dtype=np.float64)
    lp = current_lp
    accepted = np.zeros(theta.size, dtype=bool)
    for k in np.flatnonzero(target.free):
        step = scales[k] * rng.standard_normal()
        old = theta[k]
        theta[k] = old * math.exp(step)
        proposed_lp = target(theta)
        log_ratio = proposed_lp - lp + step
        if rng.random() < math.exp(min(0.0, log_ratio)):
            lp = proposed_lp
            accepted[k] = True
        else:
            theta[k] = old
    return theta, lp, accepted


def adapt_scales(scales: np.ndarray, acceptance: np.ndarray, target_rate: float = 0.30) -> np.ndarray:
    """Multiply each scale by exp(a_k - target_rate), clamped to SCALE_BOUNDS"""
    new = np.asarray(scales, dtype=np.float64) * np.exp(np.asarray(acceptance) - target_rate)
    return np.clip(new, *SCALE_BOUNDS)


def _initial_state(init, target: Target) -> Tuple[np.ndarray, float]:
    theta = init.to_vector() if isinstance(init, ParameterSet) else np.array(init, dtype=np.float64)
    if theta.shape != (len(target.names),):
        raise SamplerError(f"initial vector has {theta.size} values for {len(target.names)} parameters")
    if np.any(theta[target.free] <= 0):
        bad = [n for n, v, f in zip(target.names, theta, target.free) if f and v <= 0]
        raise SamplerError(f"free parameters must start strictly positive: {', '.join(bad)}")
    lp = target(theta)
    if not math.isfinite(lp):
        raise SamplerError("initial parameters have zero posterior density")
    return theta, lp


def _initial_scales(config: SamplerConfig, target: Target) -> np.ndarray:
    if config.proposal_scales is None:
        return np.full(len(target.names), DEFAULT_SCALE)
    scales = np.broadcast_to(config.proposal_scales, (len(target.names),)).astype(np.float64)
    return scales


def _tune(config: SamplerConfig, target: Target, theta: np.ndarray, lp: float, rng: np.random.Generator):
    scales = _initial_scales(config, target)
    for round_index in range(config.tune_rounds):
        accepts = np.zeros(theta.size)
        for _ in range(config.tune_length):
            theta, lp, accepted = mh_step(theta, lp, scales, rng, target)
            accepts += accepted
        acceptance = accepts / config.tune_length
        scales = np.where(target.free, adapt_scales(scales, acceptance, config.target_acceptance), scales)
        logger.debug(
            "Tuning round %d/%d: acceptance %s",
            round_index + 1,
            config.tune_rounds,
            np.array2string(acceptance[target.free], precision=2),
        )
    return scales, theta, lp


def tune(config: SamplerConfig, evaluator, init) -> np.ndarray:
    """
    Adapt per-parameter proposal scales with a series of short chains

    Args:
        config: Sampler configuration (tune_rounds x tune_length sweeps)
        evaluator: Target or PosteriorModel
        init: Starting ParameterSet or vector with finite log density

    Returns:
        Tuned proposal scales; all tuning draws are discarded
    """
    target = as_target(evaluator)
    theta, lp = _initial_state(init, target)
    rng = np.random.default_rng(config.seed)
    scales, _, _ = _tune(config, target, theta, lp, rng)
    return scales


def run_chain(config: SamplerConfig, evaluator, init) -> Chain:
    """
    Tune, discard burn-in, then retain n_samples sweeps

    The seed fully determines the chain: same seed, config and data give the same draws.

    Args:
        config: Sampler configuration
        evaluator: Target or PosteriorModel
        init: Starting ParameterSet or vector

    Returns:
        Chain of retained draws
    """
    target = as_target(evaluator)
    theta, lp = _initial_state(init, target)
    rng = np.random.default_rng(config.seed)

    scales, theta, lp = _tune(config, target, theta, lp, rng)
    for _ in range(config.n_burnin):
        theta, lp, _ = mh_step(theta, lp, scales, rng, target)

    samples = np.empty((config.n_samples, theta.size))
    log_posteriors = np.empty(config.n_samples)
    accept_count = np.zeros(theta.size, dtype=np.int64)
    for i in range(config.n_samples):
        theta, lp, accepted = mh_step(theta, lp, scales, rng, target)
        samples[i] = theta
        log_posteriors[i] = lp
        accept_count += accepted

    chain = Chain(
        names=target.names,
        samples=samples,
        log_posteriors=log_posteriors,
        accept_count=accept_count,
        proposal_scales=scales,
        seed=config.seed,
    )
    rates = accept_count[target.free] / config.n_samples
    logger.info(
        "Chain seed=%d: %d draws, acceptance %.2f-%.2f, final log posterior %.6g",
        config.seed,
        config.n_samples,
        rates.min() if rates.size else 0.0,
        rates.max() if rates.size else 0.0,
        lp,
    )
    return chain


def chain_seeds(seed: int, n_chains: int) -> Sequence[int]:
    """Independent 64-bit seeds for n_chains chains derived from one run seed"""
    children = np.random.SeedSequence(seed).spawn(n_chains)
    return [int(child.generate_state(1, dtype=np.uint64)[0]) for child in children]
