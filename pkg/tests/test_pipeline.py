"""Ingestion, filtering, patch averaging, and assembly."""

import datetime as dt

import numpy as np
import pytest

from pvgp import pipeline
from pvgp.geotime import GeoPoint, latlon_to_tm
from pvgp.pipeline import (
    CoverageError,
    EmptyDatasetError,
    GapError,
    HrvRasterStack,
    PowerData,
    PvSystem,
    assemble,
    filter_systems,
    hrv_patch_mean,
    load_metadata,
    load_power,
    read_hrv,
    read_hrv_csv,
    write_hrv,
)

from oracles import patch_mean_oracle

UTC = dt.timezone.utc
EPOCH = dt.datetime(2021, 6, 1, tzinfo=UTC)

LONDON = GeoPoint.from_latlon(51.5, -0.12)


def make_system(system_id=1, location=LONDON, capacity=3000.0):
    return PvSystem(system_id=system_id, location=location, capacity_w=capacity)


def make_stack(frames, frame_indices, origin=None, pixel_size=1000.0):
    frames = np.asarray(frames, dtype=np.float32)
    h, w = frames.shape[1:]
    if origin is None:
        # centre the grid on London's containing pixel
        origin = (
            np.floor(LONDON.easting / pixel_size) * pixel_size - (w // 2) * pixel_size,
            np.floor(LONDON.northing / pixel_size) * pixel_size - (h // 2) * pixel_size,
        )
    return HrvRasterStack(
        origin_easting=origin[0],
        origin_northing=origin[1],
        pixel_size=pixel_size,
        width=w,
        height=h,
        epoch_utc=EPOCH,
        frame_indices=np.asarray(frame_indices, dtype=np.int64),
        frames=frames,
    )


def make_power(indices, watts, system_id=1):
    return PowerData(
        epoch_utc=EPOCH,
        series={system_id: (np.asarray(indices, dtype=np.int64), np.asarray(watts, dtype=float))},
        skipped=[],
    )


# -- metadata loading -----------------------------------------------------------


def write_metadata(path, rows):
    path.write_text("system_id,latitude,longitude,capacity_w\n" + "\n".join(rows) + "\n")


def test_load_metadata_well_formed(tmp_path):
    p = tmp_path / "meta.csv"
    write_metadata(p, ["1,51.5,-0.12,2460", "2,52.2,0.1,3870", "3,53.4,-2.9,2820", "4,55.9,-3.2,3960"])
    load = load_metadata(p)
    assert len(load.systems) == 4 and not load.skipped
    e, n = latlon_to_tm(51.5, -0.12)
    assert load.systems[0].location.easting == pytest.approx(e)
    assert load.systems[0].location.northing == pytest.approx(n)


def test_load_metadata_missing_capacity_skipped(tmp_path):
    p = tmp_path / "meta.csv"
    write_metadata(p, ["1,51.5,-0.12,2460", "2,52.2,0.1,"])
    load = load_metadata(p)
    assert len(load.systems) == 1
    assert len(load.skipped) == 1 and load.skipped[0][0] == 3


def test_load_metadata_out_of_range_latitude(tmp_path):
    p = tmp_path / "meta.csv"
    write_metadata(p, ["1,91.0,-0.12,2460"])
    load = load_metadata(p)
    assert not load.systems
    assert "91" in load.skipped[0][1]


# -- power loading ----------------------------------------------------------------


def test_load_power_epoch_and_alignment(tmp_path):
    p = tmp_path / "power.csv"
    p.write_text(
        "timestamp_utc,system_id,power_w\n"
        "2021-06-01T06:00:00Z,1,100.0\n"
        "2021-06-01T06:05:00Z,1,110.0\n"
        "2021-06-01T06:07:00Z,1,120.0\n"  # off-grid, skipped
    )
    data = load_power(p)
    assert data.epoch_utc == EPOCH
    idx, watts = data.series[1]
    assert idx.tolist() == [72, 73]
    assert watts.tolist() == [100.0, 110.0]
    assert len(data.skipped) == 1


# -- filtering --------------------------------------------------------------------


def overnight_power(capacity, fraction, nights):
    """Half-capacity readings at local midnight on the given nights."""
    indices = [n * 288 for n in nights]  # index 0 is midnight UTC
    return make_power(indices, [fraction * capacity] * len(indices))


def test_filter_keeps_clean_system():
    system = make_system()
    power = make_power([120, 121], [1500.0, 1520.0])  # mid-morning readings
    result = filter_systems([system], power)
    assert result.kept == [system] and not result.removed


def test_filter_removes_overnight_generation():
    system = make_system()
    result = filter_systems([system], overnight_power(system.capacity_w, 0.5, nights=[0, 1, 2]))
    assert not result.kept
    assert result.removed[0].reason == pipeline.REASON_OVERNIGHT


def test_filter_tolerates_two_overnight_nights():
    system = make_system()
    result = filter_systems([system], overnight_power(system.capacity_w, 0.5, nights=[0, 1]))
    assert result.kept == [system]


def test_filter_removes_out_of_bounds():
    away = PvSystem(system_id=9, location=GeoPoint.from_latlon(51.5, 30.0), capacity_w=1000.0)
    result = filter_systems([away], make_power([120], [0.0], system_id=9))
    assert result.removed[0].reason == pipeline.REASON_OUT_OF_BOUNDS


def test_filter_removes_missing_metadata():
    broken = PvSystem(system_id=7, location=LONDON, capacity_w=float("nan"))
    result = filter_systems([broken], make_power([120], [0.0], system_id=7))
    assert result.removed[0].reason == pipeline.REASON_MISSING_METADATA


def test_filter_is_idempotent_and_lossless():
    systems = [
        make_system(1),
        PvSystem(2, GeoPoint.from_latlon(51.5, 30.0), 1000.0),
        PvSystem(3, LONDON, float("nan")),
        make_system(4),
    ]
    power = make_power([120], [500.0], system_id=1)
    result = filter_systems(systems, power)
    assert len(result.kept) + len(result.removed) == len(systems)
    assert [r.reason for r in result.removed] == [pipeline.REASON_OUT_OF_BOUNDS, pipeline.REASON_MISSING_METADATA]
    again = filter_systems(result.kept, power)
    assert again.kept == result.kept and not again.removed


# -- patch averaging ---------------------------------------------------------------


def test_patch_mean_uniform_raster():
    stack = make_stack(np.full((1, 16, 16), 300.0), [0])
    for size in (2, 6, 12):
        assert hrv_patch_mean(stack, make_system(), size, 0) == pytest.approx(300.0 / 1023.0)


def test_patch_mean_two_by_two_half():
    frame = np.zeros((16, 16), dtype=np.float32)
    stack = make_stack(frame[None], [0])
    px = int((LONDON.easting - stack.origin_easting) // 1000)
    py = int((LONDON.northing - stack.origin_northing) // 1000)
    frame[py - 1, px - 1] = 0.0
    frame[py - 1, px] = 0.0
    frame[py, px - 1] = 1023.0
    frame[py, px] = 1023.0
    stack = make_stack(frame[None], [0], origin=(stack.origin_easting, stack.origin_northing))
    assert hrv_patch_mean(stack, make_system(), 2, 0) == pytest.approx(0.5)


def test_patch_mean_matches_double_loop_oracle():
    rng = np.random.default_rng(31)
    for _ in range(100):
        size = int(rng.choice([2, 6, 12]))
        frame = rng.uniform(0, 1023, size=(20, 20)).astype(np.float32)
        stack = make_stack(frame[None], [0])
        px = int((LONDON.easting - stack.origin_easting) // 1000)
        py = int((LONDON.northing - stack.origin_northing) // 1000)
        got = hrv_patch_mean(stack, make_system(), size, 0)
        want = patch_mean_oracle(frame, px, py, size) / 1023.0
        assert got == want  # bitwise-identical arithmetic is not required, but equality is exact here


def test_patch_mean_translation_consistent():
    rng = np.random.default_rng(5)
    frame = rng.uniform(0, 1023, size=(16, 16)).astype(np.float32)
    stack = make_stack(frame[None], [0])
    shift = 3 * 1000.0
    moved_system = PvSystem(
        system_id=1,
        location=GeoPoint(
            latitude=LONDON.latitude,
            longitude=LONDON.longitude,
            easting=LONDON.easting + shift,
            northing=LONDON.northing + shift,
        ),
        capacity_w=3000.0,
    )
    moved_stack = make_stack(frame[None], [0], origin=(stack.origin_easting + shift, stack.origin_northing + shift))
    for size in (2, 6, 12):
        assert hrv_patch_mean(stack, make_system(), size, 0) == hrv_patch_mean(moved_stack, moved_system, size, 0)


def test_patch_mean_errors():
    stack = make_stack(np.full((1, 4, 4), 10.0), [0])
    with pytest.raises(CoverageError):
        hrv_patch_mean(stack, make_system(), 12, 0)
    big = make_stack(np.full((1, 16, 16), 10.0), [0])
    with pytest.raises(GapError):
        hrv_patch_mean(big, make_system(), 2, 99)


# -- assembly ---------------------------------------------------------------------


def full_day_stack(value=200.0):
    return make_stack(np.full((288, 16, 16), value, dtype=np.float32), np.arange(288))


def test_assemble_full_day():
    power = make_power(np.arange(288), np.linspace(0, 100, 288))
    series = assemble(make_system(), power, full_day_stack(), 2, (0, 288))
    assert series.n == 288
    assert series.gaps == 0
    assert np.all(series.hrv_mean == pytest.approx(200.0 / 1023.0))


def test_assemble_counts_missing_frame_as_gap():
    stack = make_stack(np.full((287, 16, 16), 200.0, dtype=np.float32), [i for i in range(288) if i != 100])
    power = make_power(np.arange(288), np.full(288, 50.0))
    series = assemble(make_system(), power, stack, 2, (0, 288))
    assert series.n == 287
    assert series.gaps == 1
    assert 100 not in series.time_index


def test_assemble_disjoint_window_raises():
    power = make_power(np.arange(288), np.full(288, 50.0))
    with pytest.raises(EmptyDatasetError):
        assemble(make_system(), power, full_day_stack(), 2, (1000, 1100))


def test_assemble_drops_out_of_range_power():
    power = make_power([0, 1, 2], [50.0, -5.0, 1e9])
    series = assemble(make_system(), power, full_day_stack(), 2, (0, 288))
    assert series.n == 1
    assert series.gaps == 2 + (288 - 3)  # two bad rows plus frames without power


def test_assemble_row_count_equals_index_intersection():
    rng = np.random.default_rng(11)
    power_idx = np.sort(rng.choice(288, size=200, replace=False))
    frame_idx = np.sort(rng.choice(288, size=220, replace=False))
    frames = np.full((220, 16, 16), 100.0, dtype=np.float32)
    stack = make_stack(frames, frame_idx)
    power = make_power(power_idx, np.full(200, 10.0))
    series = assemble(make_system(), power, stack, 6, (0, 288))
    assert series.n == np.intersect1d(power_idx, frame_idx).size


# -- HRV container round trips -------------------------------------------------------


def test_hrv_binary_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    stack = make_stack(rng.uniform(0, 1023, size=(5, 8, 8)).astype(np.float32), [0, 1, 2, 5, 9])
    path = tmp_path / "stack.hrv"
    write_hrv(path, stack)
    back = read_hrv(path, EPOCH)
    assert back.width == stack.width and back.height == stack.height
    assert back.pixel_size == stack.pixel_size
    assert back.origin_easting == stack.origin_easting
    assert np.array_equal(back.frame_indices, stack.frame_indices)
    assert np.array_equal(back.frames, stack.frames)


def test_hrv_binary_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.hrv"
    path.write_bytes(b"NOPE" + b"\x00" * 100)
    with pytest.raises(ValueError):
        read_hrv(path, EPOCH)


def test_hrv_csv_fallback(tmp_path):
    path = tmp_path / "stack.csv"
    t0 = int(EPOCH.timestamp())
    path.write_text(
        "t,px,py,value\n"
        f"{t0},0,0,100.0\n"
        f"{t0},1,0,200.0\n"
        f"{t0 + 300},0,1,300.0\n"
    )
    stack = read_hrv_csv(path, EPOCH, origin_easting=0.0, origin_northing=0.0, pixel_size=1000.0, width=2, height=2)
    assert stack.frame_indices.tolist() == [0, 1]
    assert stack.frames[0, 0, 0] == 100.0
    assert stack.frames[0, 0, 1] == 200.0
    assert stack.frames[1, 1, 0] == 300.0
