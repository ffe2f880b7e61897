# %% [markdown]
# One Online Feedback Optimization update: the projected-gradient QP.

# %%
import numpy as np

from compressor_ofo import controller as ofo
from compressor_ofo.compressor import DEFAULT_POLY, DEFAULT_RHO, GasProperties, plant_power, station_models
from compressor_ofo.qp import solve

gas, cfg = GasProperties(), ofo.OfoConfig()
plant = station_models(DEFAULT_POLY)
belief = [ofo.Belief(c) for c in DEFAULT_POLY]

# %%
# Measure the station at the current set-points.
u = np.array([95.0, 95.0, 95.0])
y = ofo.PlantMeasurement(u, [plant_power(c, u[i], compressor=i) for i, c in enumerate(plant)])
s = ofo.sensitivities(belief, gas, DEFAULT_RHO, y.m_c, cfg)
print("marginal power dW/dm [W per kg/s]:", s.dW_dm.round(1))

# %%
# The QP projects the negative gradient onto the set of moves that respect the
# flow bounds and restore the demand. Demand rises from 285 to 290 kg/s here.
P = ofo.build_qp(ofo.OfoState(u), y, s, cfg, demand=290.0)
sol = solve(P)
print("w =", sol.w.round(2), " active rows:", sol.active_set, " KKT residual:", sol.kkt_residual)
print("nu * sum(w) =", cfg.nu * sol.w.sum(), "(the 5 kg/s demand gap)")

# %%
# Iterate the law on the plant with demand held at 290.
state = ofo.OfoState(u)
for k in range(2001):
    y = ofo.PlantMeasurement(state.u, [plant_power(c, state.u[i], compressor=i)
                                       for i, c in enumerate(plant)])
    if k % 500 == 0:
        print(f"step {k:4d}: u={state.u.round(2)}, W_total={y.W.sum() / 1e6:.4f} MW")
    s = ofo.sensitivities(belief, gas, DEFAULT_RHO, y.m_c, cfg)
    state = ofo.step(state, y, s, cfg, 290.0)
