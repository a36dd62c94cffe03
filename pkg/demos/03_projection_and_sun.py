"""National-grid projection and solar geometry."""

import datetime as dt

import numpy as np

from pvgp.geotime import (
    BRITISH_NATIONAL_GRID,
    index_to_timestamp,
    latlon_to_tm,
    solar_elevation_deg,
    timestamp_to_index,
    tm_to_latlon,
)

# the Ordnance Survey worked example lands within a centimetre
lat = 52 + 39 / 60 + 27.2531 / 3600
lon = 1 + 43 / 60 + 4.5177 / 3600
e, n = latlon_to_tm(lat, lon)
print(f"OS worked example -> E {e:.3f} m, N {n:.3f} m (published: 651409.903, 313177.270)")

lat2, lon2 = tm_to_latlon(e, n)
print(f"round trip error: {abs(lat2 - lat):.2e} deg lat, {abs(lon2 - lon):.2e} deg lon")

print("\ndefault projection constants:")
for key, value in BRITISH_NATIONAL_GRID.to_mapping().items():
    print(f"  {key} = {value}")

# a day of solar elevation over London at the 5-minute cadence
epoch = dt.datetime(2021, 6, 21, tzinfo=dt.timezone.utc)
indices = np.arange(288)
seconds = epoch.timestamp() + indices * 300.0
elevation = np.asarray(solar_elevation_deg(51.5, -0.12, seconds))
print(f"\nsummer solstice over London: max elevation {elevation.max():.1f} deg "
      f"at {index_to_timestamp(int(indices[elevation.argmax()]), epoch):%H:%M} UTC")
print(f"sun above horizon {int((elevation > 0).sum())} of 288 steps")

# the five-minute time index round-trips exactly
stamp = dt.datetime(2021, 6, 21, 16, 35, tzinfo=dt.timezone.utc)
idx = timestamp_to_index(stamp, epoch)
print(f"\n{stamp:%Y-%m-%d %H:%M} UTC -> index {idx} -> {index_to_timestamp(idx, epoch):%Y-%m-%d %H:%M} UTC")
