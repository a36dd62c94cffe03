"""Projection, solar position, and time-index behaviour."""

import datetime as dt

import numpy as np
import pytest

from pvgp.geotime import (
    BRITISH_NATIONAL_GRID,
    AlignmentError,
    GeoPoint,
    ProjectionDomainError,
    TransverseMercator,
    index_to_timestamp,
    latlon_to_tm,
    solar_elevation,
    solar_elevation_deg,
    timestamp_to_index,
    tm_to_latlon,
)

from oracles import solar_elevation_psa

UTC = dt.timezone.utc

# Ordnance Survey worked example (Caister water tower):
# 52d39'27.2531"N, 1d43'4.5177"E -> E 651409.903, N 313177.270
OS_LAT = 52 + 39 / 60 + 27.2531 / 3600
OS_LON = 1 + 43 / 60 + 4.5177 / 3600
OS_EASTING = 651409.903
OS_NORTHING = 313177.270

# a box loosely covering Great Britain, used to sample in-bounds points
UK_LAT = (49.9, 60.8)
UK_LON = (-7.5, 1.8)


def test_true_origin_maps_to_false_origin():
    e, n = latlon_to_tm(49.0, -2.0)
    assert e == pytest.approx(400_000.0, abs=1e-6)
    assert n == pytest.approx(-100_000.0, abs=1e-6)


def test_published_os_worked_example():
    e, n = latlon_to_tm(OS_LAT, OS_LON)
    assert e == pytest.approx(OS_EASTING, abs=0.01)
    assert n == pytest.approx(OS_NORTHING, abs=0.01)


def test_inverse_of_os_worked_example():
    lat, lon = tm_to_latlon(OS_EASTING, OS_NORTHING)
    assert lat == pytest.approx(OS_LAT, abs=1e-6)
    assert lon == pytest.approx(OS_LON, abs=1e-6)


def test_round_trip_on_random_in_bounds_points():
    rng = np.random.default_rng(17)
    lat = rng.uniform(*UK_LAT, size=1000)
    lon = rng.uniform(*UK_LON, size=1000)
    e, n = latlon_to_tm(lat, lon)
    lat2, lon2 = tm_to_latlon(e, n)
    assert np.max(np.abs(lat2 - lat)) <= 1e-8
    assert np.max(np.abs(lon2 - lon)) <= 1e-8


def test_projection_rejects_poles():
    with pytest.raises(ProjectionDomainError):
        latlon_to_tm(90.0, 0.0)
    with pytest.raises(ProjectionDomainError):
        latlon_to_tm(-90.0, 0.0)
    with pytest.raises(ProjectionDomainError):
        latlon_to_tm(45.0, 181.0)


def test_projection_constants_from_mapping():
    params = TransverseMercator.from_mapping({"origin_lon_deg": -3.0})
    assert params.origin_lon_deg == -3.0
    assert params.semi_major_m == BRITISH_NATIONAL_GRID.semi_major_m
    with pytest.raises(ValueError):
        TransverseMercator.from_mapping({"scale": 1.0})


def test_geopoint_populates_projection():
    p = GeoPoint.from_latlon(51.5, -0.12)
    assert np.isfinite(p.easting) and np.isfinite(p.northing)
    with pytest.raises(ProjectionDomainError):
        GeoPoint.from_latlon(91.0, 0.0)


# -- solar position -----------------------------------------------------------


def test_solar_noon_at_equator_on_equinox():
    # max elevation over the equinox day at (0, 0) must graze the zenith
    times = [dt.datetime(2024, 3, 20, tzinfo=UTC) + dt.timedelta(minutes=m) for m in range(0, 1440, 5)]
    els = solar_elevation_deg(0.0, 0.0, times)
    assert np.max(els) == pytest.approx(90.0, abs=1.0)


def test_solar_midnight_is_negative_at_mid_latitudes():
    for month in (1, 4, 7, 10):
        el = solar_elevation(GeoPoint.from_latlon(51.5, -0.12), dt.datetime(2021, month, 15, 0, 0, tzinfo=UTC))
        assert el < 0.0


def test_solar_elevation_matches_psa_reference():
    rng = np.random.default_rng(123)
    for _ in range(100):
        lat = float(rng.uniform(-65, 65))
        lon = float(rng.uniform(-180, 180))
        when = dt.datetime(2021, 1, 1, tzinfo=UTC) + dt.timedelta(minutes=int(rng.integers(0, 525600)))
        got = solar_elevation(GeoPoint.from_latlon(lat, lon), when)
        want = solar_elevation_psa(lat, lon, when)
        assert got == pytest.approx(want, abs=0.5)


def test_solar_elevation_is_continuous_across_five_minutes():
    base = dt.datetime(2021, 6, 1, tzinfo=UTC)
    times = [base + dt.timedelta(minutes=5 * k) for k in range(288 * 2)]
    els = np.asarray(solar_elevation_deg(55.0, -3.0, times))
    assert np.max(np.abs(np.diff(els))) < 2.0


# -- time index ---------------------------------------------------------------

EPOCH = dt.datetime(2021, 6, 1, tzinfo=UTC)


def test_index_of_epoch_is_zero():
    assert timestamp_to_index(EPOCH, EPOCH) == 0


def test_one_day_is_288_steps():
    assert timestamp_to_index(EPOCH + dt.timedelta(days=1), EPOCH) == 288


def test_four_hours_is_48_steps():
    assert timestamp_to_index(EPOCH + dt.timedelta(hours=4), EPOCH) == 48


def test_non_boundary_timestamp_rejected():
    with pytest.raises(AlignmentError):
        timestamp_to_index(EPOCH + dt.timedelta(minutes=2), EPOCH)
    with pytest.raises(AlignmentError):
        timestamp_to_index(EPOCH + dt.timedelta(seconds=1), EPOCH)


def test_index_round_trip_exact():
    for idx in (-288, -1, 0, 1, 47, 576, 10_000):
        assert timestamp_to_index(index_to_timestamp(idx, EPOCH), EPOCH) == idx


def test_naive_datetimes_treated_as_utc():
    naive = dt.datetime(2021, 6, 2, 0, 0)
    assert timestamp_to_index(naive, EPOCH) == 288
