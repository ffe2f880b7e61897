# %% [markdown]
# The perfect-knowledge benchmark: optimal load sharing over the demand range.

# %%
import numpy as np

from compressor_ofo.compressor import DEFAULT_POLY, station_models
from compressor_ofo.nlp import LoadSharingProblem, compressor_power, solve_nlp, total_power

plant = station_models(DEFAULT_POLY)

# %%
# Optimal flows, power, and the saving over an equal split. Marginal costs are
# only equal among machines strictly inside their bounds.
for M in (200.0, 240.0, 285.0, 320.0, 360.0):
    res = solve_nlp(LoadSharingProblem(plant, M))
    equal = total_power(plant, [M / 3] * 3)
    h = 1e-5
    dW = [(compressor_power(c, f + h) - compressor_power(c, f - h)) / (2 * h)
          for c, f in zip(plant, res.flows)]
    print(f"M={M:5.1f}  flows={res.flows.round(2)}  W={res.power / 1e6:.3f} MW  "
          f"saving={100 * (1 - res.power / equal):.2f} %  dW/dm={np.round(dW, 0)}")
