"""Nodal prices from the balance duals of a small dispatch LP.

A cheap unit with limited capacity and an unlimited expensive one: the
price is set by whichever unit is marginal. Then a single extendable
plant with annualised capital cost 100 EUR/MW earns back exactly its
capital cost from the hourly prices.
"""
import numpy as np

from sdekit.model import Bus, Generator, Network
from sdekit.optim import build_design, revenue_ledger, solve
from sdekit.timeseries import WeatherYearSeries

bus = [Bus("a", "XX")]

# merit order
net = Network(bus, [Generator("cheap", "a", "existing-dispatch", 10.0, p_nom_fixed=5_000),
                    Generator("dear", "a", "existing-dispatch", 100.0, p_nom_fixed=np.inf)])
for load in (4_000.0, 8_000.0):
    sol = solve(build_design(net, WeatherYearSeries("t", {"a": np.full(24, load)})))
    print(f"load {load:6.0f} MW -> price {sol.duals_balance['a'].iloc[0]:6.1f} EUR/MWh, "
          f"cheap {sol.dispatch['cheap'].iloc[0]:.0f} MW, dear {sol.dispatch['dear'].iloc[0]:.0f} MW")

# zero profit for built capacity
net = Network(bus, [Generator("g", "a", "renewable", 0.0, 100.0, extendable=True)])
sol = solve(build_design(net, WeatherYearSeries("t", {"a": np.full(8760, 1_000.0)})))
led = revenue_ledger(sol, net)
print(f"\nsum of hourly prices {sol.duals_balance['a'].sum():.6f} EUR/MWh (capital cost 100 EUR/MW)")
print(led[["capacity", "revenue", "capital_cost", "profit"]].round(6))
