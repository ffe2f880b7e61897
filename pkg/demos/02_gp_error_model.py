# %% [markdown]
# Learning the efficiency error with a Gaussian process, one measurement at a time.

# %%
import numpy as np

from compressor_ofo.compressor import DEFAULT_POLY, apply_mismatch
from compressor_ofo.gp import ErrorObservation, GpErrorModel, adapt, estimated_efficiency

true, belief = DEFAULT_POLY[0], apply_mismatch(DEFAULT_POLY)[0]
pi_of = lambda m: 0.017 * m + 0.78

# %%
# Feed measurements at a handful of flows. The first one is only stored; each
# later, new point triggers a hyperparameter refit on the whole history.
model = GpErrorModel()
for m in (95.0, 70.0, 120.0, 82.0, 108.0, 95.0):
    pi = pi_of(m)
    model = adapt(model, ErrorObservation(m, pi, true(m, pi), belief(m, pi)))
    print(f"after m={m:5.1f}: k={model.k}, refits={model.n_fits}, hyper={model.hyper}")

# %%
# The corrected model against the truth along the resistance curve.
m = np.linspace(60, 125, 8)
x = np.column_stack([m, pi_of(m)])
print("flow           ", m.round(1))
print("true eta       ", true(m, pi_of(m)).round(4))
print("belief eta     ", belief(m, pi_of(m)).round(4))
print("belief + GP    ", estimated_efficiency(belief, model, m, pi_of(m)).round(4))
print("posterior std  ", np.sqrt(model.predict_var(x)).round(5))
