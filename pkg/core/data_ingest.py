"""
JHU time-series parsing and derivation of the model's observation vectors
"""
import logging
from datetime import date, datetime
from typing import List, Optional, Tuple, Union, TextIO

import numpy as np
import pandas as pd

from .errors import DataError, ParseError, RegionNotFoundError
from .models import ObservedSeries, RawSeries


logger = logging.getLogger(__name__)

Source = Union[str, TextIO]

HEADER_COLUMNS = ("Province/State", "Country/Region", "Lat", "Long")
JHU_DATE_FORMAT = "%m/%d/%y"


def _read_csv(source: Source, what: str) -> pd.DataFrame:
    try:
        return pd.read_csv(source, dtype=str, keep_default_na=False)
    except FileNotFoundError:
        raise DataError(f"{what} file not found: {source}") from None
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ParseError(f"cannot read {what} CSV: {e}") from e


def _parse_date_header(columns: List[str]) -> List[date]:
    dates = []
    for column in columns:
        try:
            dates.append(datetime.strptime(column.strip(), JHU_DATE_FORMAT).date())
        except ValueError:
            raise ParseError("malformed date header", row=1, column=column) from None
    if any(b <= a for a, b in zip(dates, dates[1:])):
        raise ParseError("date columns are not in increasing order", row=1)
    return dates


def _to_counts(frame: pd.DataFrame, columns: List[str]) -> np.ndarray:
    """Convert the selected rows to integer counts, naming the first bad cell"""
    numeric = frame[columns].apply(lambda col: pd.to_numeric(col.str.strip(), errors="coerce"))
    bad = numeric.isna() | (numeric < 0) | (numeric % 1 != 0)
    if bad.to_numpy().any():
        row_label, column = bad.stack()[lambda s: s].index[0]
        # header is line 1, first data row is line 2
        raise ParseError(
            f"non-numeric or negative count {frame.at[row_label, column]!r}",
            row=int(row_label) + 2,
            column=column,
        )
    return numeric.to_numpy(dtype=np.int64)


def read_jhu_series(source: Source, region: str, what: str = "confirmed") -> Tuple[List[date], np.ndarray]:
    """
    Read one wide-format JHU file and return the region's cumulative counts

    Rows whose Country/Region equals region are summed over provinces; a
    Province/State match selects that single row instead.

    Args:
        source: Path or text stream
        region: Country/Region or Province/State name
        what: Series name used in messages

    Returns:
        (dates, counts)
    """
    frame = _read_csv(source, what)
    columns = list(frame.columns)
    if tuple(c.strip() for c in columns[: len(HEADER_COLUMNS)]) != HEADER_COLUMNS:
        raise ParseError(f"{what} header must start with {','.join(HEADER_COLUMNS)}", row=1)
    date_columns = columns[len(HEADER_COLUMNS):]
    if not date_columns:
        raise ParseError(f"{what} file has no date columns", row=1)
    dates = _parse_date_header(date_columns)

    province = frame["Province/State"].str.strip()
    country = frame["Country/Region"].str.strip()
    rows = frame[province == region]
    if rows.empty:
        rows = frame[country == region]
    if rows.empty:
        raise RegionNotFoundError(region)
    counts = _to_counts(rows, date_columns).sum(axis=0)
    return dates, counts


def read_vaccination_series(source: Source, dates: List[date]) -> Tuple[np.ndarray, Optional[date]]:
    """
    Read a two-column "date,cumulative_vaccinated" CSV aligned to dates

    Days before the first report are absent (NaN); later gaps carry the last
    reported value forward.
    """
    frame = _read_csv(source, "vaccinated")
    if list(frame.columns[:2]) != ["date", "cumulative_vaccinated"]:
        raise ParseError("vaccinated header must be date,cumulative_vaccinated", row=1)
    parsed = pd.to_datetime(frame["date"].str.strip(), format="%Y-%m-%d", errors="coerce")
    fallback = pd.to_datetime(frame["date"].str.strip(), format=JHU_DATE_FORMAT, errors="coerce")
    parsed = parsed.fillna(fallback)
    if parsed.isna().any():
        row = int(np.flatnonzero(parsed.isna().to_numpy())[0]) + 2
        raise ParseError("malformed vaccination date", row=row, column="date")
    counts = _to_counts(frame, ["cumulative_vaccinated"])[:, 0]
    reported = pd.Series(counts.astype(np.float64), index=parsed.dt.date).groupby(level=0).max()
    aligned = reported.reindex(dates)
    present = aligned.notna().to_numpy()
    if not present.any():
        logger.warning("No vaccination reports fall inside the case-data date range")
        return aligned.to_numpy(), None
    first = int(np.flatnonzero(present)[0])
    gaps = int((~present[first:]).sum())
    if gaps:
        logger.warning("Vaccination series has %d missing days after %s; carrying values forward", gaps, dates[first])
    aligned.iloc[first:] = aligned.iloc[first:].ffill()
    return aligned.to_numpy(), dates[first]


def clean_cumulative(values: np.ndarray, dates: List[date], name: str) -> np.ndarray:
    """Replace decreases in a cumulative series by the running maximum, logging each correction"""
    values = np.asarray(values, dtype=np.float64)
    present = ~np.isnan(values)
    cleaned = values.copy()
    running = np.fmax.accumulate(np.where(present, values, -np.inf))
    cleaned[present] = running[present]
    for index in np.flatnonzero(present & (cleaned != values)):
        logger.warning(
            "%s decreased on %s (%d < %d); using previous value", name, dates[index], values[index], cleaned[index]
        )
    return cleaned


def parse_jhu_csv(
    confirmed: Source,
    region: str,
    recovered: Source,
    deaths: Source,
    vaccinated: Optional[Source] = None,
) -> RawSeries:
    """
    Parse the JHU confirmed/recovered/deaths files (plus optional vaccinations) for one region

    Args:
        confirmed: Confirmed-cases time-series file
        region: Country/Region or Province/State name
        recovered: Recovered time-series file
        deaths: Deaths time-series file
        vaccinated: Optional "date,cumulative_vaccinated" file

    Returns:
        RawSeries with monotone cumulative counts on a shared date index

    Raises:
        RegionNotFoundError, ParseError, DataError
    """
    series = {}
    dates = None
    for what, source in (("confirmed", confirmed), ("recovered", recovered), ("deaths", deaths)):
        these_dates, counts = read_jhu_series(source, region, what)
        if dates is None:
            dates = these_dates
        elif these_dates != dates:
            raise DataError(f"{what} dates do not match the confirmed dates")
        series[what] = clean_cumulative(counts, dates, what).astype(np.int64)

    vaccinated_values = None
    vaccinated_start = None
    if vaccinated is not None:
        vaccinated_values, vaccinated_start = read_vaccination_series(vaccinated, dates)
        vaccinated_values = clean_cumulative(vaccinated_values, dates, "vaccinated")

    logger.info("Parsed %s: %d days from %s to %s", region, len(dates), dates[0], dates[-1])
    return RawSeries(
        dates=dates,
        confirmed=series["confirmed"],
        recovered=series["recovered"],
        deaths=series["deaths"],
        vaccinated=vaccinated_values,
        vaccinated_start=vaccinated_start,
    )


def derive_observed(
    raw: RawSeries, start_date: Optional[date] = None, end_date: Optional[date] = None
) -> ObservedSeries:
    """
    Active infections I = confirmed - recovered - deaths, indexed from the epidemic start

    Args:
        raw: Parsed series
        start_date: Day 0; defaults to the first date with confirmed > 0
        end_date: Last day kept (inclusive); defaults to the last date in the files

    Returns:
        ObservedSeries; negative I is clamped to 0 with a warning
    """
    if start_date is None:
        positive = np.flatnonzero(raw.confirmed > 0)
        if positive.size == 0:
            raise DataError("no confirmed cases in the series")
        first = int(positive[0])
    else:
        if start_date not in raw.dates:
            raise DataError(f"start date {start_date} is not in the data range {raw.dates[0]}..{raw.dates[-1]}")
        first = raw.dates.index(start_date)

    last = len(raw.dates)
    if end_date is not None:
        if end_date not in raw.dates:
            raise DataError(f"end date {end_date} is not in the data range {raw.dates[0]}..{raw.dates[-1]}")
        last = raw.dates.index(end_date) + 1
        if last <= first:
            raise DataError(f"end date {end_date} is before the first observed day {raw.dates[first]}")

    dates = raw.dates[first:last]
    confirmed = raw.confirmed[first:last]
    recovered = raw.recovered[first:last]
    deaths = raw.deaths[first:last]
    active = confirmed - recovered - deaths
    for index in np.flatnonzero(active < 0):
        logger.warning(
            "Negative active infections on %s (%d); clamping to 0", dates[index], active[index]
        )
    active = np.maximum(active, 0)

    V = None
    v_start = None
    if raw.vaccinated is not None:
        V = raw.vaccinated[first:last]
        present = np.flatnonzero(~np.isnan(V))
        if present.size:
            v_start = int(present[0])
        else:
            V = None

    return ObservedSeries(
        t=np.arange(len(dates)),
        I=active,
        R_I=recovered,
        D=deaths,
        V=V,
        v_start=v_start,
        start_date=dates[0],
    )
