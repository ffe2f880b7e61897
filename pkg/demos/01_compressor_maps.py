# %% [markdown]
# Compressor physics: efficiency maps, the resistance curve, head and power.

# %%
import numpy as np

from compressor_ofo.compressor import (DEFAULT_POLY, DEFAULT_SIN, GasProperties, ModelOrder,
                                       apply_mismatch, head, reduced_model, station_models)
from compressor_ofo.nlp import compressor_power

gas = GasProperties()
plant = station_models(DEFAULT_POLY)

# %%
# Operating points follow the resistance curve pi = 0.017 m + 0.78, so each
# machine is effectively one-dimensional in its mass flow.
m = np.array([60.0, 70.0, 95.0, 120.0, 125.0])
pi = plant[0].pressure_ratio(m)
print("flow      ", m)
print("pressure  ", pi.round(3))
print("head J/kg ", head(gas, pi).round(0))

# %%
# Efficiency of the three polynomial maps and the sinusoidal alternatives.
for i in range(3):
    print(f"C{i + 1} poly", DEFAULT_POLY[i](m, pi).round(4), " sin", DEFAULT_SIN[i](m, pi).round(4))

# %%
# Power in MW. The curves bend over above roughly 80 kg/s, which is why the
# optimal load sharing often parks a machine on a bound.
grid = np.linspace(60, 125, 14)
for i, c in enumerate(plant):
    W = compressor_power(c, grid)
    curvature = np.sign(np.diff(W, 2))
    print(f"C{i + 1} W/MW", (W / 1e6).round(2), "convex up to", grid[1:-1][curvature > 0].max())

# %%
# The controller's wrong model: scaled copies of other machines' coefficients,
# optionally truncated to a linear or constant surface.
for order in ModelOrder:
    belief = [reduced_model(c, order) for c in apply_mismatch(DEFAULT_POLY)]
    err = [DEFAULT_POLY[i](95.0, 2.395) - belief[i](95.0, 2.395) for i in range(3)]
    print(f"{order.value:<9} efficiency error at 95 kg/s:", np.round(err, 4))
