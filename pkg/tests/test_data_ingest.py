import io
import logging
from datetime import date

import numpy as np
import pytest

from core.data_ingest import clean_cumulative, derive_observed, parse_jhu_csv, read_jhu_series
from core.errors import DataError, ParseError, RegionNotFoundError
from helpers import jhu_csv


DATES = [date(2020, 2, 27), date(2020, 2, 28), date(2020, 2, 29), date(2020, 3, 1)]


def _files(confirmed=(0, 1, 3, 8), recovered=(0, 0, 1, 2), deaths=(0, 0, 0, 1)):
    def build(counts):
        return io.StringIO(jhu_csv([
            ("", "Qatar", counts),
            ("Reunion", "France", (0, 0, 0, 0)),
            ("", "France", (5, 6, 7, 8)),
            ("Martinique", "France", (1, 1, 2, 2)),
        ]))

    return build(confirmed), build(recovered), build(deaths)


def test_country_row_is_selected():
    confirmed, recovered, deaths = _files()
    raw = parse_jhu_csv(confirmed, "Qatar", recovered=recovered, deaths=deaths)
    assert raw.dates == DATES
    assert list(raw.confirmed) == [0, 1, 3, 8]
    assert raw.vaccinated is None


def test_country_rows_are_summed_over_provinces():
    dates, counts = read_jhu_series(io.StringIO(jhu_csv([
        ("Reunion", "France", (0, 0, 1, 1)),
        ("", "France", (5, 6, 7, 8)),
    ])), "France")
    assert dates == DATES
    assert list(counts) == [5, 6, 8, 9]


def test_province_match_wins():
    _, counts = read_jhu_series(io.StringIO(jhu_csv([
        ("Martinique", "France", (1, 1, 2, 2)),
        ("", "France", (5, 6, 7, 8)),
    ])), "Martinique")
    assert list(counts) == [1, 1, 2, 2]


def test_unknown_region():
    confirmed, recovered, deaths = _files()
    with pytest.raises(RegionNotFoundError) as exc:
        parse_jhu_csv(confirmed, "Atlantis", recovered=recovered, deaths=deaths)
    assert "Atlantis" in str(exc.value)
    assert exc.value.exit_code == 3


def test_malformed_date_header():
    text = "Province/State,Country/Region,Lat,Long,2/27/20,not-a-date\n,Qatar,25.3,51.2,0,1\n"
    with pytest.raises(ParseError) as exc:
        read_jhu_series(io.StringIO(text), "Qatar")
    assert exc.value.row == 1
    assert exc.value.column == "not-a-date"


def test_non_numeric_cell_is_located():
    text = jhu_csv([("", "France", (1, 2, 3, 4)), ("", "Qatar", (0, 1, "x", 3))])
    with pytest.raises(ParseError) as exc:
        read_jhu_series(io.StringIO(text), "Qatar")
    assert exc.value.row == 3
    assert exc.value.column == "2/29/20"


def test_missing_file(tmp_path):
    with pytest.raises(DataError, match="not found"):
        read_jhu_series(str(tmp_path / "missing.csv"), "Qatar")


def test_decreasing_cumulative_is_repaired(caplog):
    with caplog.at_level(logging.WARNING):
        cleaned = clean_cumulative(np.array([1, 5, 4, 6]), DATES, "deaths")
    assert list(cleaned) == [1, 5, 5, 6]
    assert "decreased" in caplog.text


def test_derived_active_infections():
    confirmed, recovered, deaths = _files()
    observed = derive_observed(parse_jhu_csv(confirmed, "Qatar", recovered=recovered, deaths=deaths))
    # day 0 is the first date with a confirmed case
    assert observed.start_date == date(2020, 2, 28)
    assert list(observed.t) == [0, 1, 2]
    assert list(observed.I) == [1, 2, 5]
    assert list(observed.R_I) == [0, 1, 2]
    assert list(observed.D) == [0, 0, 1]
    assert observed.v_start is None


def test_explicit_start_date():
    confirmed, recovered, deaths = _files()
    raw = parse_jhu_csv(confirmed, "Qatar", recovered=recovered, deaths=deaths)
    assert derive_observed(raw, date(2020, 2, 29)).I[0] == 2
    with pytest.raises(DataError):
        derive_observed(raw, date(2021, 1, 1))


def test_end_date_is_inclusive():
    confirmed, recovered, deaths = _files()
    raw = parse_jhu_csv(confirmed, "Qatar", recovered=recovered, deaths=deaths)
    observed = derive_observed(raw, end_date=date(2020, 2, 29))
    assert list(observed.t) == [0, 1]
    assert list(observed.I) == [1, 2]
    assert observed.t_end == 1
    with pytest.raises(DataError, match="not in the data range"):
        derive_observed(raw, end_date=date(2020, 3, 2))
    with pytest.raises(DataError, match="before the first observed day"):
        derive_observed(raw, date(2020, 2, 29), date(2020, 2, 28))


def test_negative_active_is_clamped(caplog):
    confirmed, recovered, deaths = _files(confirmed=(1, 1, 1, 1), recovered=(0, 2, 2, 2))
    with caplog.at_level(logging.WARNING):
        observed = derive_observed(parse_jhu_csv(confirmed, "Qatar", recovered=recovered, deaths=deaths))
    assert list(observed.I) == [1, 0, 0, 0]
    assert "clamping" in caplog.text


def test_vaccination_series_aligned():
    confirmed, recovered, deaths = _files()
    vaccinated = io.StringIO("date,cumulative_vaccinated\n2020-02-29,10\n2020-03-01,25\n")
    raw = parse_jhu_csv(confirmed, "Qatar", recovered=recovered, deaths=deaths, vaccinated=vaccinated)
    assert raw.vaccinated_start == date(2020, 2, 29)
    observed = derive_observed(raw)
    assert observed.v_start == 1
    assert np.isnan(observed.V[0])
    assert list(observed.V[1:]) == [10.0, 25.0]


def test_vaccination_gap_carried_forward():
    confirmed, recovered, deaths = _files()
    vaccinated = io.StringIO("date,cumulative_vaccinated\n2/28/20,3\n3/1/20,9\n")
    raw = parse_jhu_csv(confirmed, "Qatar", recovered=recovered, deaths=deaths, vaccinated=vaccinated)
    assert list(raw.vaccinated[1:]) == [3.0, 3.0, 9.0]


def test_mismatched_dates():
    confirmed, _, deaths = _files()
    recovered = io.StringIO(jhu_csv([("", "Qatar", (0, 0, 1, 2))], dates=("2/27/20", "2/28/20", "2/29/20", "3/2/20")))
    with pytest.raises(DataError, match="dates do not match"):
        parse_jhu_csv(confirmed, "Qatar", recovered=recovered, deaths=deaths)
