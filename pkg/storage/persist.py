"""
Persistence layer: run configs, CSV tables and run metadata
"""
import hashlib
import json
import logging
from datetime import date
from pathlib import Path
from typing import Dict, Iterable, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd

from core.errors import ConfigError, DataError, ParseError
from core.models import (
    COMPARTMENTS,
    BandSeries,
    Chain,
    ContrastRow,
    InitialConditions,
    InterventionSchedule,
    ObservedSeries,
    RunConfig,
    SummaryRow,
    Trajectory,
)


logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
FLOAT_FORMAT = "%.17g"


def _to_csv(frame: pd.DataFrame, path: PathLike):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n", na_rep="")
    logger.debug("Wrote %s (%d rows)", path, len(frame))


def _read_csv(path: PathLike, what: str, required: Sequence[str]) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise DataError(f"{what} file not found: {path}")
    try:
        frame = pd.read_csv(path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ParseError(f"malformed {what} file {path}: {e}") from e
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise ParseError(f"{what} file {path} lacks columns {', '.join(missing)}", row=1)
    return frame


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (date, Path)):
        return str(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")


class ConfigPersistence:
    """Loads run configs and writes run metadata"""

    @staticmethod
    def resolve(base: Path, value: Optional[str]) -> Optional[str]:
        """Resolve a config path against the config file's directory"""
        if value is None:
            return None
        path = Path(value)
        return str(path if path.is_absolute() else (base / path))

    @staticmethod
    def section(raw: Mapping, key: str) -> Dict:
        """Get an optional object-valued section of the config"""
        value = raw.get(key, {})
        if not isinstance(value, dict):
            raise ConfigError(f"config section {key!r} must be an object")
        return value

    @staticmethod
    def load_run_config(path: PathLike, overrides: Optional[Mapping] = None) -> RunConfig:
        """
        Load a JSON run config; relative paths resolve against the config's directory

        Args:
            path: Config file
            overrides: Values from command-line flags (seed, chains, out_dir); None entries are ignored

        Returns:
            RunConfig
        """
        path = Path(path)
        try:
            with open(path, "r") as f:
                raw = json.load(f)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {path} is not valid JSON: {e}") from e
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")

        base = path.parent
        resolve = ConfigPersistence.resolve
        data = ConfigPersistence.section(raw, "data")
        init = ConfigPersistence.section(raw, "init")
        schedule = ConfigPersistence.section(raw, "schedule")
        sampler = ConfigPersistence.section(raw, "sampler")
        analysis = ConfigPersistence.section(raw, "analysis")
        overrides = {k: v for k, v in (overrides or {}).items() if v is not None}

        try:
            start_date = raw.get("start_date")
            end_date = raw.get("end_date")
            config = RunConfig(
                confirmed_path=resolve(base, data["confirmed"]),
                recovered_path=resolve(base, data["recovered"]),
                deaths_path=resolve(base, data["deaths"]),
                vaccinated_path=resolve(base, data.get("vaccinated")),
                region=raw["region"],
                start_date=date.fromisoformat(start_date) if start_date else None,
                end_date=date.fromisoformat(end_date) if end_date else None,
                v_start=raw.get("v_start"),
                init=InitialConditions(**{k: float(v) for k, v in init.items()}),
                schedule=InterventionSchedule(
                    alpha_days=tuple(schedule.get("alpha_days", ())),
                    gamma_days=tuple(schedule.get("gamma_days", ())),
                    tau=schedule.get("tau"),
                    T_V=schedule.get("T_V"),
                ),
                n_samples=int(sampler.get("n_samples", 30000)),
                n_burnin=int(sampler.get("n_burnin", 5000)),
                tune_rounds=int(sampler.get("tune_rounds", 20)),
                tune_length=int(sampler.get("tune_length", 250)),
                proposal_scale=float(sampler.get("proposal_scale", 0.1)),
                seed=int(overrides.get("seed", sampler.get("seed", 0))),
                chains=int(overrides.get("chains", sampler.get("chains", 1))),
                workers=int(sampler.get("workers", 1)),
                substeps=int(sampler.get("substeps", 10)),
                initial={k: float(v) for k, v in sampler.get("initial", {}).items()},
                thin=int(analysis.get("thin", 10)),
                out_dir=str(overrides.get("out_dir") or resolve(base, analysis.get("out_dir", "out"))),
                source=raw,
            )
        except KeyError as e:
            raise ConfigError(f"config is missing required key {e}") from None
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"invalid config value: {e}") from e
        return config

    @staticmethod
    def config_hash(config: RunConfig) -> str:
        """sha256 of the canonical JSON form of the config as loaded"""
        canonical = json.dumps(config.source, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    @staticmethod
    def file_checksum(path: PathLike) -> str:
        """sha256 of a file's bytes"""
        digest = hashlib.sha256()
        with open(path, "rb") as f:
            for block in iter(lambda: f.read(1 << 20), b""):
                digest.update(block)
        return digest.hexdigest()

    @staticmethod
    def data_checksums(config: RunConfig) -> Dict[str, str]:
        """Checksums of every input file that exists, keyed by series"""
        paths = {
            "confirmed": config.confirmed_path,
            "recovered": config.recovered_path,
            "deaths": config.deaths_path,
            "vaccinated": config.vaccinated_path,
        }
        return {
            name: ConfigPersistence.file_checksum(p)
            for name, p in paths.items()
            if p is not None and Path(p).exists()
        }

    @staticmethod
    def write_metadata(path: PathLike, metadata: Mapping):
        """Write run metadata as sorted, indented JSON"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            json.dump(metadata, f, indent=2, sort_keys=True, default=_json_default)
            f.write("\n")


class ResultPersistence:
    """Reads and writes observed series, chains and analysis tables as CSV"""

    @staticmethod
    def write_observed_csv(series: ObservedSeries, path: PathLike):
        """Canonical "t,I,R_I,D,V" file; V cells are empty before v_start"""
        frame = pd.DataFrame({
            "t": series.t,
            "I": series.I.astype(np.int64),
            "R_I": series.R_I.astype(np.int64),
            "D": series.D.astype(np.int64),
            "V": pd.Series(series.V).astype("Int64"),
        })
        _to_csv(frame, path)

    @staticmethod
    def read_observed_csv(path: PathLike, v_start: Optional[int] = None) -> ObservedSeries:
        """
        Read a canonical observed-series file

        Args:
            path: File written by write_observed_csv
            v_start: First scored vaccination day; defaults to the first non-empty V cell

        Returns:
            ObservedSeries
        """
        frame = _read_csv(path, "observed series", ("t", "I", "R_I", "D", "V"))
        V = frame["V"].to_numpy(dtype=np.float64)
        try:
            return ObservedSeries(
                t=frame["t"].to_numpy(),
                I=frame["I"].to_numpy(dtype=np.float64),
                R_I=frame["R_I"].to_numpy(dtype=np.float64),
                D=frame["D"].to_numpy(dtype=np.float64),
                V=None if np.all(np.isnan(V)) else V,
                v_start=v_start,
            )
        except ValueError as e:
            raise DataError(f"invalid observed series in {path}: {e}") from e

    @staticmethod
    def write_chain_csv(chain: Chain, path: PathLike):
        """One row per draw, one column per parameter, then log_posterior"""
        frame = pd.DataFrame(chain.samples, columns=list(chain.names))
        frame["log_posterior"] = chain.log_posteriors
        _to_csv(frame, path)

    @staticmethod
    def read_chain_csv(path: PathLike, accept_count: Optional[Sequence[int]] = None) -> Chain:
        """
        Read a chain file

        Without accept_count, tallies are rebuilt as the number of rows that differ
        from the previous row. The first row has no predecessor in the file, so a
        rebuilt tally can be one lower than the sampler's own count; pass the counts
        recorded in fit_metadata.json to restore them exactly.
        """
        frame = _read_csv(path, "chain", ("log_posterior",))
        names = [c for c in frame.columns if c != "log_posterior"]
        samples = frame[names].to_numpy(dtype=np.float64)
        log_posteriors = frame["log_posterior"].to_numpy(dtype=np.float64)
        if np.any(np.isnan(samples)):
            raise ParseError(f"chain file {path} has empty or non-numeric cells")
        if accept_count is None:
            changed = samples[1:] != samples[:-1]
            accept_count = changed.sum(axis=0)
        elif len(accept_count) != len(names):
            raise DataError(f"accept counts for {len(accept_count)} parameters but {path} has {len(names)}")
        try:
            return Chain(names=names, samples=samples, log_posteriors=log_posteriors, accept_count=accept_count)
        except ValueError as e:
            raise ParseError(f"malformed chain file {path}: {e}") from e

    @staticmethod
    def read_chains(
        paths: Iterable[PathLike], accept_counts: Optional[Sequence[Sequence[int]]] = None
    ) -> Chain:
        """Read chain files and stack them in the given order"""
        paths = list(paths)
        if not paths:
            raise DataError("no chain files given")
        if accept_counts is None:
            accept_counts = [None] * len(paths)
        elif len(accept_counts) != len(paths):
            raise DataError(f"{len(accept_counts)} accept-count records for {len(paths)} chain files")
        chains = [ResultPersistence.read_chain_csv(p, c) for p, c in zip(paths, accept_counts)]
        return Chain.concatenate(chains)

    @staticmethod
    def write_summary_csv(rows: Sequence[SummaryRow], path: PathLike):
        """Posterior summary table, one row per parameter"""
        frame = pd.DataFrame(
            [(r.name, r.mean, r.median, r.sd, r.q025, r.q50, r.q975) for r in rows],
            columns=["param", "mean", "median", "sd", "q025", "q50", "q975"],
        )
        _to_csv(frame, path)

    @staticmethod
    def write_contrast_csv(rows: Sequence[ContrastRow], path: PathLike):
        """Contrast table with the proportion of positive differences"""
        frame = pd.DataFrame(
            [(r.name, r.mean, r.median, r.sd, r.q025, r.q50, r.q975, r.p_gt_zero) for r in rows],
            columns=["param", "mean", "median", "sd", "q025", "q50", "q975", "p_gt_zero"],
        )
        _to_csv(frame, path)

    @staticmethod
    def write_band_csv(band: BandSeries, path: PathLike):
        frame = pd.DataFrame({"t": band.t, "lower": band.lower, "median": band.median, "upper": band.upper})
        _to_csv(frame, path)

    @staticmethod
    def write_trajectory_csv(trajectory: Trajectory, path: PathLike):
        frame = pd.DataFrame(trajectory.states, columns=list(COMPARTMENTS))
        frame.insert(0, "t", trajectory.times)
        _to_csv(frame, path)
