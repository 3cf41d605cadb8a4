"""
SEIRDV command-line driver: ingest JHU data, fit the model by MCMC, analyze the chains
"""
import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import List, Optional, Sequence

from core import analysis
from core.data_ingest import derive_observed, parse_jhu_csv
from core.errors import ConfigError, SeirdvError
from core.integrator import integrate
from core.models import Chain, ObservedSeries, ParameterSet, RunConfig, parameter_names
from core.posterior import PosteriorModel
from core.sampler import chain_seeds
from core.tasks import TaskRunner
from storage.persist import ConfigPersistence, ResultPersistence


logger = logging.getLogger("seirdv")

ANALYSES = ("summary", "contrasts", "reproduction", "predictive", "pseudo-r2", "counterfactual", "trajectory")


def load_observed(config: RunConfig) -> ObservedSeries:
    """Parse the configured JHU files and derive the observation vectors"""
    raw = parse_jhu_csv(
        config.confirmed_path,
        config.region,
        recovered=config.recovered_path,
        deaths=config.deaths_path,
        vaccinated=config.vaccinated_path,
    )
    observed = derive_observed(raw, config.start_date, config.end_date)
    if config.v_start is not None and observed.V is not None:
        observed = ObservedSeries(
            t=observed.t,
            I=observed.I,
            R_I=observed.R_I,
            D=observed.D,
            V=observed.V,
            v_start=config.v_start,
            start_date=observed.start_date,
        )
    return observed


def initial_parameters(config: RunConfig, model: PosteriorModel) -> ParameterSet:
    """
    Starting point for the sampler

    Defaults put every regime at R0 of about 1.2; values under sampler.initial in the
    config replace individual entries.
    """
    sched = config.schedule
    beta, gamma, zeta = 0.05, 0.02, 1e-4
    alpha = 1.2 * (beta + gamma) / max(config.init.S0, 1.0)
    defaults = {name: alpha for name in parameter_names(sched.m, sched.n) if name.startswith("alpha")}
    defaults.update({f"gamma{j}": gamma for j in range(sched.n + 1)})
    defaults.update({"beta_star": 0.5, "beta": beta, "zeta": zeta, "rho": 0.005 if model.vaccine_active else 0.0})
    unknown = set(config.initial) - set(defaults)
    if unknown:
        logger.warning("Ignoring unknown initial parameters: %s", ", ".join(sorted(unknown)))
    values = {**defaults, **{k: v for k, v in config.initial.items() if k in defaults}}
    if not model.vaccine_active:
        values["rho"] = 0.0
    return ParameterSet.from_vector([values[name] for name in model.names], model.names)


def cmd_ingest(config: RunConfig) -> Path:
    """Write the canonical observed-series CSV"""
    observed = load_observed(config)
    path = Path(config.out_dir) / "observed.csv"
    ResultPersistence.write_observed_csv(observed, path)
    logger.info("Wrote %d days of observations to %s", observed.t.size, path)
    return path


def observed_series(config: RunConfig) -> ObservedSeries:
    """Read the canonical observed.csv in the output directory, running ingest first if it is missing"""
    path = Path(config.out_dir) / "observed.csv"
    if not path.exists():
        logger.info("No %s yet; ingesting", path)
        cmd_ingest(config)
    return ResultPersistence.read_observed_csv(path, v_start=config.v_start)


def fit_accept_counts(out_dir: Path, chain_paths: Sequence[Path]) -> Optional[List[List[int]]]:
    """Acceptance tallies recorded by fit, when they describe exactly these chain files"""
    path = out_dir / "fit_metadata.json"
    if not path.exists():
        return None
    with open(path, "r") as f:
        metadata = json.load(f)
    counts = metadata.get("accept_counts")
    expected = [str(out_dir / f"chain_{k}.csv") for k in range(len(chain_paths))]
    if counts is None or len(counts) != len(chain_paths) or [str(p) for p in chain_paths] != expected:
        return None
    return counts


def cmd_fit(config: RunConfig) -> List[Path]:
    """Tune, burn in and sample every chain; write chains, summary and metadata"""
    observed = observed_series(config)
    init = config.init.to_state()
    model = PosteriorModel(config.schedule, observed, init, config.substeps)
    start = initial_parameters(config, model)
    seeds = chain_seeds(config.seed, config.chains)
    configs = [config.sampler_config(seed=s) for s in seeds]

    logger.info(
        "Fitting %d parameters to %d observations with %d chain(s) of %d draws",
        int(model.free_mask.sum()),
        model.n_observations,
        config.chains,
        config.n_samples,
    )
    runner = TaskRunner(max_workers=config.workers)
    started = time.perf_counter()
    chains = runner.run_chains(
        configs,
        model,
        start,
        progress_callback=lambda p: logger.info("Chain %d finished (%.0f%%)", p.chain_id, p.percentage),
    )
    wall_time = time.perf_counter() - started

    out_dir = Path(config.out_dir)
    paths = []
    for index, chain in enumerate(chains):
        path = out_dir / f"chain_{index}.csv"
        ResultPersistence.write_chain_csv(chain, path)
        paths.append(path)
    combined = Chain.concatenate(chains)
    ResultPersistence.write_summary_csv(analysis.summarize(combined), out_dir / "summary.csv")
    ConfigPersistence.write_metadata(out_dir / "fit_metadata.json", {
        "command": "fit",
        "config": config.source,
        "config_hash": ConfigPersistence.config_hash(config),
        "data_checksums": ConfigPersistence.data_checksums(config),
        "observed_checksum": ConfigPersistence.file_checksum(out_dir / "observed.csv"),
        "seed": config.seed,
        "chain_seeds": seeds,
        "initial_parameters": dict(zip(model.names, start.to_vector())),
        "accept_counts": [chain.accept_count.tolist() for chain in chains],
        "acceptance_rates": [chain.acceptance_rates() for chain in chains],
        "proposal_scales": [dict(zip(chain.names, chain.proposal_scales)) for chain in chains],
        "vaccine_active": model.vaccine_active,
        "wall_time_seconds": wall_time,
    })
    logger.info("Fit finished in %.1f s; outputs in %s", wall_time, out_dir)
    return paths


def cmd_analyze(config: RunConfig, chain_paths: Optional[Sequence[str]] = None, which: str = "all") -> List[Path]:
    """Dispatch to the analysis operations and write their tables"""
    if which != "all" and which not in ANALYSES:
        raise ConfigError(f"unknown analysis: {which}")
    out_dir = Path(config.out_dir)
    if not chain_paths:
        chain_paths = sorted(out_dir.glob("chain_*.csv"))
    chain = ResultPersistence.read_chains(chain_paths, fit_accept_counts(out_dir, chain_paths))
    observed = observed_series(config)
    sched = config.schedule
    init = config.init.to_state()
    t_end = observed.t_end
    common = {"thin": config.thin, "substeps": config.substeps, "workers": config.workers}
    selected = ANALYSES if which == "all" else (which,)
    written = []
    metadata = {
        "command": "analyze",
        "analyses": list(selected),
        "chains": [str(p) for p in chain_paths],
        "draws": len(chain),
        "config_hash": ConfigPersistence.config_hash(config),
        "data_checksums": ConfigPersistence.data_checksums(config),
        "seed": config.seed,
        "thin": config.thin,
    }

    def write(name: str, writer, value):
        path = out_dir / name
        writer(value, path)
        written.append(path)

    if "summary" in selected:
        write("summary.csv", ResultPersistence.write_summary_csv, analysis.summarize(chain))
    if "contrasts" in selected:
        write("contrasts.csv", ResultPersistence.write_contrast_csv, analysis.contrasts(chain))
    if "reproduction" in selected:
        band = analysis.effective_reproduction(chain, sched, init, t_end, **common)
        write("reproduction.csv", ResultPersistence.write_band_csv, band)
        rows = analysis.basic_reproduction_by_regime(chain, sched, init.total, t_end)
        write("r0_by_regime.csv", ResultPersistence.write_summary_csv, rows)
    if "predictive" in selected or "pseudo-r2" in selected:
        bands = analysis.posterior_predictive(chain, sched, init, t_end, seed=config.seed, **common)
        if "predictive" in selected:
            for name, band in bands.items():
                write(f"predictive_{name}.csv", ResultPersistence.write_band_csv, band)
        if "pseudo-r2" in selected:
            r2 = analysis.pseudo_r2(bands, observed)
            metadata["pseudo_r2"] = r2
            print(f"pseudo-R2: {r2:.6f}")
    if "counterfactual" in selected:
        result = analysis.counterfactual_deaths(chain, sched, init, t_end, **common)
        write("counterfactual_deaths.csv", ResultPersistence.write_band_csv, result.deaths)
        write("counterfactual_difference.csv", ResultPersistence.write_band_csv, result.difference)
        write("deaths_averted.csv", ResultPersistence.write_summary_csv, [result.final_difference])
        metadata["counterfactual"] = result.metadata
        row = result.final_difference
        print(f"deaths averted by day {t_end}: median {row.median:.1f} (95% interval {row.q025:.1f} to {row.q975:.1f})")
    if "trajectory" in selected:
        write("trajectory.csv", ResultPersistence.write_trajectory_csv,
              integrate(init, chain.mean_parameters(), sched, t_end, config.substeps))

    ConfigPersistence.write_metadata(out_dir / "analysis_metadata.json", metadata)
    return written


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seirdv",
        description=__doc__.strip(),
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("command", choices=["ingest", "fit", "analyze"], help="what to run")
    parser.add_argument("--config", required=True, help="JSON run config")
    parser.add_argument("--seed", type=int, default=None, help="override sampler.seed")
    parser.add_argument("--chains", type=int, default=None, help="override sampler.chains")
    parser.add_argument("--out", dest="out_dir", default=None, help="override analysis.out_dir")
    parser.add_argument(
        "--which",
        default="all",
        choices=("all",) + ANALYSES,
        help="analysis to run (analyze only)",
    )
    parser.add_argument(
        "--chain",
        dest="chain_paths",
        action="append",
        default=None,
        help="chain CSV to analyze; repeatable (default: OUT/chain_*.csv)",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        config = ConfigPersistence.load_run_config(
            args.config, {"seed": args.seed, "chains": args.chains, "out_dir": args.out_dir}
        )
        if args.command == "ingest":
            cmd_ingest(config)
        elif args.command == "fit":
            cmd_fit(config)
        else:
            cmd_analyze(config, args.chain_paths, args.which)
    except SeirdvError as e:
        logger.error("%s", e)
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
