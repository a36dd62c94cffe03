"""Given vs persistence cloud coverage on 4-hour forecasts, desk scale.

Runs a small experiment grid over seeded scattered-cloud days and shows
the per-day MAE samples behind the box-plot export.  Training windows are
subsampled (training_stride) to keep the demo quick; drop the stride for
full 5-minute cadence.
"""

from pvgp import experiments as ex
from pvgp.geotime import GeoPoint
from pvgp.pipeline import PvSystem, assemble

system = PvSystem(system_id=1627, location=GeoPoint.from_latlon(53.4, -2.9), capacity_w=2820.0)
bundle = ex.generate_synthetic("scattered", days=8, system=system, seed=21)
series = assemble(system, bundle.power, bundle.stack, patch_px=6, window=(0, 8 * 288))

common = dict(
    training_days=1,
    patch_px=6,
    kernel=ex.default_kernel("matern12"),
    horizon_steps=ex.STEPS_4H,
    forecast_start=288 + 120,  # 10:00 UTC on day two: daylight horizons
    system_ids=(1627,),
    test_days=6,
    training_stride=2,
)
configs = [
    ex.ExperimentConfig(cloud_mode=ex.CLOUD_GIVEN, **common),
    ex.ExperimentConfig(cloud_mode=ex.CLOUD_PERSISTENCE, **common),
]
report = ex.run_grid(configs, {(1627, 6): series}, seed=0, fit_options=ex.FitOptions(restarts=2, max_iter=120))

print(report.to_text())

print("per-day MAE samples (watts):")
for ci, mode in ((0, "given"), (1, "persistence")):
    days = [f"{s[3]:7.1f}" for s in report.samples if s[0] == ci]
    print(f"  {mode:12s} " + " ".join(days))

box = ex.export_boxplot_data(report, group_by="testing-day")
print("\nbox-plot rows grouped by testing day:")
for row in box:
    print(f"  day {row['group']}: median {row['median']:.1f} W, IQR [{row['q1']:.1f}, {row['q3']:.1f}]")

given, persistence = (report.rows[i].per_system[1627] for i in (0, 1))
print(f"\naverage MAE: given {given:.1f} W vs persistence {persistence:.1f} W")
