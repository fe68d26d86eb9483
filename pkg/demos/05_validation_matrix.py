"""Validate each year's design against every other year's weather.

Designs are built per year on a scaled-down 3-bus copy of the demo, then
dispatched with fixed capacities and priced load shedding. Rows are
design years, columns operational years.
"""
from sdekit.demo import demo_config, demo_network
from sdekit.optim import build_design, solve
from sdekit.resilience import aggregate_rows_cols, validation_matrix
from sdekit.timeseries import synth_weather

cfg = demo_config()
synth = cfg["weather"]["synth"]
net = demo_network()
years = [synth_weather(synth["demand_base"], synth["profiles"], seed=y["seed"], noise=synth["noise"],
                       drought_windows=y["drought_windows"], label=f"y{i}")
         for i, y in enumerate(synth["years"])]

designs = [solve(build_design(net, y, resolution=3)) for y in years]
matrix = validation_matrix(designs, years, net, resolution=3)
print("EENS share of annual demand")
print(matrix.eens.map(lambda v: f"{v:.2e}"))
print("\npeak unserved power (GW)")
print(matrix.max_unserved.round(3))
print("\nrow/column aggregates (diagonal excluded)")
print(aggregate_rows_cols(matrix)[["prevents_deficits", "causes_deficits", "prevents_peaks", "causes_peaks"]])
