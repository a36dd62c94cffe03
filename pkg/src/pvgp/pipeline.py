"""Dataset ingestion: PV metadata, power series, HRV raster stacks.

Loads the three external file formats, applies the cleaning filters
(geospatial boundary, missing metadata, overnight generation), averages
HRV patches above each system, and joins everything into per-system
`AssembledSeries` rows of (time index, cloud coverage, power).

File formats
------------
* Metadata CSV, header ``system_id,latitude,longitude,capacity_w``.
* Power CSV, header ``timestamp_utc,system_id,power_w`` with ISO-8601 UTC
  timestamps on 5-minute boundaries.
* HRV raster stack, binary: magic ``HRV1``, little-endian header
  (origin_easting f64, origin_northing f64, pixel_size f64, width u32,
  height u32, frame_count u32), then per frame an i64 of POSIX epoch
  seconds followed by the row-major f32 grid.  ``frames[t][row][col]``
  covers the ground square with south-west corner
  ``(origin_easting + col * pixel_size, origin_northing + row * pixel_size)``.
  A CSV fallback (``t,px,py,value`` with t in epoch seconds) is accepted
  for tests; its geometry is supplied by the caller since the format
  carries no header.

Missing data is dropped and counted, never interpolated.
"""

from __future__ import annotations

import csv
import datetime as dt
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import geotime
from .geotime import (
    NIGHT_ELEVATION_DEG,
    UTC,
    AlignmentError,
    GeoPoint,
    TransverseMercator,
    BRITISH_NATIONAL_GRID,
    solar_elevation_deg,
    timestamp_to_index,
)

__all__ = [
    "PvSystem",
    "HrvRasterStack",
    "AssembledSeries",
    "PowerData",
    "MetadataLoad",
    "BoundaryBox",
    "FilterResult",
    "Removal",
    "CoverageError",
    "GapError",
    "EmptyDatasetError",
    "UK_BOUNDARY",
    "HRV_SENSOR_MAX",
    "load_metadata",
    "load_power",
    "filter_systems",
    "hrv_patch_mean",
    "assemble",
    "write_hrv",
    "read_hrv",
    "read_hrv_csv",
]

HRV_MAGIC = b"HRV1"
HRV_SENSOR_MAX = 1023.0
OVERNIGHT_POWER_FRACTION = 0.01
OVERNIGHT_MIN_NIGHTS = 3

REASON_OUT_OF_BOUNDS = "out-of-bounds"
REASON_MISSING_METADATA = "missing-metadata"
REASON_OVERNIGHT = "overnight-generation"


class CoverageError(ValueError):
    """Requested patch or window falls outside the available data."""


class GapError(KeyError):
    """No HRV frame at the requested time index."""


class EmptyDatasetError(ValueError):
    """A join or window produced no rows."""


@dataclass
class PvSystem:
    system_id: int
    location: GeoPoint
    capacity_w: float
    provenance: str = ""


@dataclass(frozen=True)
class BoundaryBox:
    """Axis-aligned box in projected metres."""

    min_easting: float
    min_northing: float
    max_easting: float
    max_northing: float

    def contains(self, easting: float, northing: float) -> bool:
        return (
            self.min_easting <= easting <= self.max_easting
            and self.min_northing <= northing <= self.max_northing
        )


# generous box around the British National Grid's coverage of Great Britain
UK_BOUNDARY = BoundaryBox(0.0, 0.0, 700_000.0, 1_300_000.0)


@dataclass
class HrvRasterStack:
    """Time-stacked georeferenced cloud-brightness rasters."""

    origin_easting: float
    origin_northing: float
    pixel_size: float
    width: int
    height: int
    epoch_utc: dt.datetime
    frame_indices: np.ndarray  # (F,) int64, sorted, unique
    frames: np.ndarray  # (F, height, width) float32, >= 0

    def __post_init__(self):
        self.frame_indices = np.asarray(self.frame_indices, dtype=np.int64)
        self.frames = np.asarray(self.frames, dtype=np.float32)
        self.validate()
        self._lookup = {int(t): k for k, t in enumerate(self.frame_indices)}

    def validate(self) -> None:
        if self.frames.shape != (self.frame_indices.size, self.height, self.width):
            raise ValueError(
                f"frames shape {self.frames.shape} != ({self.frame_indices.size}, {self.height}, {self.width})"
            )
        if self.frame_indices.size:
            if np.any(np.diff(self.frame_indices) <= 0):
                raise ValueError("frame indices must be strictly increasing")
            if not np.isfinite(self.frames).all() or self.frames.min() < 0:
                raise ValueError("pixel values must be finite and >= 0")
        if self.pixel_size <= 0:
            raise ValueError("pixel_size must be > 0")

    def frame_at(self, index: int) -> np.ndarray:
        k = self._lookup.get(int(index))
        if k is None:
            raise GapError(f"no HRV frame at time index {index}")
        return self.frames[k]


@dataclass
class AssembledSeries:
    """Joined (time index, cloud coverage, power) rows for one system."""

    system_id: int
    capacity_w: float
    latitude: float
    longitude: float
    patch_px: int
    epoch_utc: dt.datetime
    time_index: np.ndarray
    hrv_mean: np.ndarray
    power_w: np.ndarray
    gaps: int = 0

    def __post_init__(self):
        self.time_index = np.asarray(self.time_index, dtype=np.int64)
        self.hrv_mean = np.asarray(self.hrv_mean, dtype=float)
        self.power_w = np.asarray(self.power_w, dtype=float)

    @property
    def n(self) -> int:
        return self.time_index.size

    def window(self, lo: int, hi: int) -> "AssembledSeries":
        """Rows with lo <= time index < hi (metadata shared, gaps reset)."""
        m = (self.time_index >= lo) & (self.time_index < hi)
        return AssembledSeries(
            system_id=self.system_id,
            capacity_w=self.capacity_w,
            latitude=self.latitude,
            longitude=self.longitude,
            patch_px=self.patch_px,
            epoch_utc=self.epoch_utc,
            time_index=self.time_index[m],
            hrv_mean=self.hrv_mean[m],
            power_w=self.power_w[m],
        )


@dataclass
class MetadataLoad:
    systems: list[PvSystem]
    skipped: list[tuple[int, str]]  # (line number, reason)


@dataclass
class PowerData:
    """Per-system 5-minute power series on a shared time index."""

    epoch_utc: dt.datetime
    series: dict[int, tuple[np.ndarray, np.ndarray]]  # id -> (indices, watts)
    skipped: list[tuple[int, str]]


@dataclass
class Removal:
    system: PvSystem
    reason: str
    detail: str = ""


@dataclass
class FilterResult:
    kept: list[PvSystem]
    removed: list[Removal]


def _parse_timestamp(text: str) -> dt.datetime:
    t = dt.datetime.fromisoformat(text.strip().replace("Z", "+00:00"))
    return t.replace(tzinfo=UTC) if t.tzinfo is None else t.astimezone(UTC)


def load_metadata(path, projection: TransverseMercator = BRITISH_NATIONAL_GRID) -> MetadataLoad:
    """Read the metadata CSV; malformed rows are skipped and reported."""
    path = Path(path)
    systems: list[PvSystem] = []
    skipped: list[tuple[int, str]] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"system_id", "latitude", "longitude", "capacity_w"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ValueError(f"{path}: metadata header must contain {sorted(required)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                if any(not (row.get(k) or "").strip() for k in required):
                    raise ValueError("missing field")
                system_id = int(row["system_id"])
                lat = float(row["latitude"])
                lon = float(row["longitude"])
                capacity = float(row["capacity_w"])
                if capacity <= 0:
                    raise ValueError(f"capacity_w must be > 0, got {capacity}")
                location = GeoPoint.from_latlon(lat, lon, projection)
            except (ValueError, KeyError) as exc:
                skipped.append((lineno, str(exc)))
                continue
            systems.append(
                PvSystem(system_id=system_id, location=location, capacity_w=capacity, provenance=f"{path.name}:{lineno}")
            )
    return MetadataLoad(systems=systems, skipped=skipped)


def load_power(path, epoch: dt.datetime | None = None) -> PowerData:
    """Read the power CSV and place readings on the 5-minute index.

    The epoch defaults to midnight UTC of the first day present, so day
    boundaries land on multiples of 288.  Misaligned or malformed rows are
    skipped and counted.
    """
    path = Path(path)
    rows: list[tuple[dt.datetime, int, float]] = []
    skipped: list[tuple[int, str]] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"timestamp_utc", "system_id", "power_w"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ValueError(f"{path}: power header must contain {sorted(required)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                when = _parse_timestamp(row["timestamp_utc"])
                rows.append((when, int(row["system_id"]), float(row["power_w"])))
            except (ValueError, KeyError) as exc:
                skipped.append((lineno, str(exc)))
    if not rows:
        raise EmptyDatasetError(f"{path}: no parseable power rows")
    if epoch is None:
        first = min(r[0] for r in rows)
        epoch = first.replace(hour=0, minute=0, second=0, microsecond=0)

    per_system: dict[int, list[tuple[int, float]]] = {}
    for when, system_id, power in rows:
        try:
            idx = timestamp_to_index(when, epoch)
        except AlignmentError as exc:
            skipped.append((-1, str(exc)))
            continue
        per_system.setdefault(system_id, []).append((idx, power))

    series = {}
    for system_id, pairs in per_system.items():
        pairs.sort()
        idx = np.array([p[0] for p in pairs], dtype=np.int64)
        watts = np.array([p[1] for p in pairs], dtype=float)
        keep = np.concatenate([[True], np.diff(idx) > 0]) if idx.size else np.array([], dtype=bool)
        series[system_id] = (idx[keep], watts[keep])
    return PowerData(epoch_utc=epoch, series=series, skipped=skipped)


def _night_key(when: dt.datetime) -> dt.date:
    """Identifier of the dark period a timestamp falls in (noon to noon)."""
    return (when - dt.timedelta(hours=12)).date()


def filter_systems(
    systems: list[PvSystem],
    power: PowerData,
    boundary: BoundaryBox = UK_BOUNDARY,
    night_threshold_deg: float = NIGHT_ELEVATION_DEG,
    overnight_fraction: float = OVERNIGHT_POWER_FRACTION,
    min_nights: int = OVERNIGHT_MIN_NIGHTS,
) -> FilterResult:
    """Split systems into kept and removed-with-reason.

    Removal reasons, first match wins: ``missing-metadata`` (no usable
    capacity or location), ``out-of-bounds`` (projected location outside
    ``boundary``), ``overnight-generation`` (power above
    ``overnight_fraction`` of capacity while the sun is below
    ``night_threshold_deg`` on at least ``min_nights`` distinct nights).
    """
    kept: list[PvSystem] = []
    removed: list[Removal] = []
    for system in systems:
        if (
            system.capacity_w is None
            or not np.isfinite(system.capacity_w)
            or system.capacity_w <= 0
            or system.location is None
            or not (np.isfinite(system.location.easting) and np.isfinite(system.location.northing))
        ):
            removed.append(Removal(system, REASON_MISSING_METADATA, "capacity or location unusable"))
            continue
        if not boundary.contains(system.location.easting, system.location.northing):
            removed.append(
                Removal(
                    system,
                    REASON_OUT_OF_BOUNDS,
                    f"({system.location.easting:.0f}, {system.location.northing:.0f}) outside boundary",
                )
            )
            continue
        nights = _overnight_nights(system, power, night_threshold_deg, overnight_fraction)
        if len(nights) >= min_nights:
            removed.append(Removal(system, REASON_OVERNIGHT, f"{len(nights)} nights with overnight power"))
            continue
        kept.append(system)
    return FilterResult(kept=kept, removed=removed)


def _overnight_nights(system, power, night_threshold_deg, overnight_fraction) -> set:
    data = power.series.get(system.system_id)
    if data is None or data[0].size == 0:
        return set()
    idx, watts = data
    suspicious = watts > overnight_fraction * system.capacity_w
    if not suspicious.any():
        return set()
    seconds = power.epoch_utc.timestamp() + idx[suspicious].astype(float) * geotime.STEP_SECONDS
    elevation = solar_elevation_deg(system.location.latitude, system.location.longitude, seconds)
    dark = np.asarray(elevation) < night_threshold_deg
    nights = set()
    for s in seconds[dark]:
        nights.add(_night_key(dt.datetime.fromtimestamp(float(s), tz=UTC)))
    return nights


# -- HRV rasters ----------------------------------------------------------------

_HEADER = struct.Struct("<4sdddIII")
_FRAME_TIME = struct.Struct("<q")


def write_hrv(path, stack: HrvRasterStack) -> None:
    """Write the binary raster container."""
    path = Path(path)
    epoch_s = int(stack.epoch_utc.timestamp())
    with path.open("wb") as fh:
        fh.write(
            _HEADER.pack(
                HRV_MAGIC,
                stack.origin_easting,
                stack.origin_northing,
                stack.pixel_size,
                stack.width,
                stack.height,
                stack.frame_indices.size,
            )
        )
        for k, t in enumerate(stack.frame_indices):
            fh.write(_FRAME_TIME.pack(epoch_s + int(t) * geotime.STEP_SECONDS))
            fh.write(np.ascontiguousarray(stack.frames[k], dtype="<f4").tobytes())


def read_hrv(path, epoch: dt.datetime) -> HrvRasterStack:
    """Read the binary raster container, indexing frames against ``epoch``."""
    path = Path(path)
    with path.open("rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise ValueError(f"{path}: truncated HRV header")
        magic, oe, on, ps, width, height, count = _HEADER.unpack(header)
        if magic != HRV_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {HRV_MAGIC!r}")
        indices = np.empty(count, dtype=np.int64)
        frames = np.empty((count, height, width), dtype=np.float32)
        grid_bytes = width * height * 4
        epoch_s = int(epoch.timestamp())
        for k in range(count):
            tbuf = fh.read(_FRAME_TIME.size)
            gbuf = fh.read(grid_bytes)
            if len(tbuf) != _FRAME_TIME.size or len(gbuf) != grid_bytes:
                raise ValueError(f"{path}: truncated frame {k}")
            (t_s,) = _FRAME_TIME.unpack(tbuf)
            offset = t_s - epoch_s
            if offset % geotime.STEP_SECONDS:
                raise AlignmentError(f"{path}: frame {k} at {t_s}s is off the 5-minute grid")
            indices[k] = offset // geotime.STEP_SECONDS
            frames[k] = np.frombuffer(gbuf, dtype="<f4").reshape(height, width)
    return HrvRasterStack(
        origin_easting=oe,
        origin_northing=on,
        pixel_size=ps,
        width=width,
        height=height,
        epoch_utc=epoch,
        frame_indices=indices,
        frames=frames,
    )


def read_hrv_csv(path, epoch, origin_easting, origin_northing, pixel_size, width, height) -> HrvRasterStack:
    """CSV fallback reader (``t,px,py,value``; t in POSIX epoch seconds).

    The format carries no geometry header, so geometry is passed in.
    Cells absent from the file default to 0.
    """
    path = Path(path)
    grids: dict[int, np.ndarray] = {}
    epoch_s = int(epoch.timestamp())
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"t", "px", "py", "value"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: HRV CSV header must be t,px,py,value")
        for row in reader:
            t_s = int(row["t"])
            offset = t_s - epoch_s
            if offset % geotime.STEP_SECONDS:
                raise AlignmentError(f"{path}: t={t_s}s is off the 5-minute grid")
            grid = grids.setdefault(offset // geotime.STEP_SECONDS, np.zeros((height, width), dtype=np.float32))
            grid[int(row["py"]), int(row["px"])] = float(row["value"])
    indices = np.array(sorted(grids), dtype=np.int64)
    frames = np.stack([grids[int(t)] for t in indices]) if indices.size else np.empty((0, height, width), np.float32)
    return HrvRasterStack(
        origin_easting=origin_easting,
        origin_northing=origin_northing,
        pixel_size=pixel_size,
        width=width,
        height=height,
        epoch_utc=epoch,
        frame_indices=indices,
        frames=frames,
    )


def _containing_pixel(stack: HrvRasterStack, system: PvSystem) -> tuple[int, int]:
    px = int(np.floor((system.location.easting - stack.origin_easting) / stack.pixel_size))
    py = int(np.floor((system.location.northing - stack.origin_northing) / stack.pixel_size))
    return px, py


def hrv_patch_mean(
    stack: HrvRasterStack,
    system: PvSystem,
    patch_px: int,
    t_index: int,
    sensor_max: float = HRV_SENSOR_MAX,
) -> float:
    """Mean HRV brightness of the sky patch above a system, scaled to [0, 1].

    The window spans columns ``px - s/2 .. px + s/2 - 1`` (same for rows),
    where (px, py) is the pixel containing the system and s the patch
    size; even sizes are anchored so the containing pixel sits just right
    of the window centre.
    """
    if patch_px < 1:
        raise ValueError(f"patch_px must be >= 1, got {patch_px}")
    px, py = _containing_pixel(stack, system)
    c0, c1 = px - patch_px // 2, px + (patch_px + 1) // 2
    r0, r1 = py - patch_px // 2, py + (patch_px + 1) // 2
    if c0 < 0 or r0 < 0 or c1 > stack.width or r1 > stack.height:
        raise CoverageError(
            f"{patch_px}x{patch_px} patch at pixel ({px}, {py}) crosses the raster edge "
            f"({stack.width}x{stack.height})"
        )
    frame = stack.frame_at(t_index)
    # float64 accumulation: sums of <=144 float32 values are exact, so the
    # result is independent of summation order
    mean = float(frame[r0:r1, c0:c1].mean(dtype=np.float64))
    return min(1.0, max(0.0, mean / sensor_max))


def assemble(
    system: PvSystem,
    power: PowerData,
    stack: HrvRasterStack,
    patch_px: int,
    window: tuple[int, int],
    sensor_max: float = HRV_SENSOR_MAX,
) -> AssembledSeries:
    """Inner-join power readings with HRV patch means over ``[lo, hi)``.

    Rows missing on either side are dropped and counted as gaps, as are
    rows with power outside the physical range [0, 1.1 * capacity].
    """
    lo, hi = window
    data = power.series.get(system.system_id)
    if data is None:
        raise EmptyDatasetError(f"system {system.system_id} has no power rows")
    idx, watts = data
    in_window = (idx >= lo) & (idx < hi)
    idx, watts = idx[in_window], watts[in_window]
    frame_mask = (stack.frame_indices >= lo) & (stack.frame_indices < hi)
    frame_idx = stack.frame_indices[frame_mask]

    joint = np.intersect1d(idx, frame_idx)
    gaps = int(idx.size - joint.size) + int(frame_idx.size - joint.size)
    power_lookup = dict(zip(idx.tolist(), watts.tolist()))

    times, hrv, pw = [], [], []
    for t in joint.tolist():
        p = power_lookup[t]
        if not 0.0 <= p <= 1.1 * system.capacity_w:
            gaps += 1
            continue
        times.append(t)
        hrv.append(hrv_patch_mean(stack, system, patch_px, t, sensor_max))
        pw.append(p)
    if not times:
        raise EmptyDatasetError(f"empty join for system {system.system_id} in window [{lo}, {hi})")
    return AssembledSeries(
        system_id=system.system_id,
        capacity_w=system.capacity_w,
        latitude=system.location.latitude,
        longitude=system.location.longitude,
        patch_px=patch_px,
        epoch_utc=power.epoch_utc,
        time_index=np.array(times, dtype=np.int64),
        hrv_mean=np.array(hrv),
        power_w=np.array(pw),
        gaps=gaps,
    )
