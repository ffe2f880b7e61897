# %% [markdown]
# The 12 adaptation cases: true map, measurement noise and belief order.
# The CLI equivalent for the full horizon is
#     python -m compressor_ofo run --sweep mismatch --jobs 4

# %%
import numpy as np

from compressor_ofo.simulation import DemandProfile, Scenario, mismatch_sweep

HORIZON = 500.0
profile = DemandProfile.generate(seed=0, horizon=HORIZON)
results = mismatch_sweep(Scenario(horizon=HORIZON), profile)

# %%
print(f"{'case':<42} {'max MAE':>8} {'max|dfin| visited':>18} {'MAE demand':>11}")
for res in results:
    m = res.metrics
    dfin = np.abs(m.delta_fin[m.visited]).max(initial=0.0)
    print(f"{res.scenario.label:<42} {m.mae_gp.max():8.4f} {dfin:18.2e} {m.mae_demand:11.3f}")
