"""Cluster event feature rows and pick k by silhouette.

Uses four planted event archetypes (short sharp deficits, long energy
droughts and two in between) with noise, then names the clusters by
back-up peak and duration.
"""
import numpy as np
import pandas as pd

from sdekit.cluster import centroid_table, normalize, select_k
from sdekit.events import FEATURE_NAMES

rng = np.random.default_rng(3)
# highest/avg net load (GW), duration (h), total (TWh)/max (GW) back-up, relative load, wind anomaly
archetypes = np.array([
    [95, 80, 40, 1.5, 60, 1.4, -0.25],
    [85, 70, 120, 2.5, 45, 1.3, -0.20],
    [80, 65, 250, 4.0, 35, 1.2, -0.15],
    [75, 60, 500, 6.0, 25, 1.1, -0.10],
])
rows = np.vstack([a * (1 + 0.03 * rng.standard_normal((6, a.size))) for a in archetypes])
features = pd.DataFrame(rows, columns=FEATURE_NAMES)

fm = normalize(features)
model = select_k(fm, (2, 6), seed=0)
print(model.scores.round(3).to_string(index=False))
print(f"\nchosen k = {model.k}")
table = centroid_table(model, FEATURE_NAMES)
print(table[["cluster", "tag", "name", "size", "duration", "max_fc_discharge"]].round(1).to_string(index=False))
