"""
How much does the boundary taper matter?
========================================

The cosine taper down-weights lattice edges to suppress the artificial
periodicity the spectral representation assumes.  Inference should not
hinge on the exact taper fraction; this example refits the same data
at r = 0.05, 0.10 and 0.15 and compares the coherence posteriors.
"""
import numpy as np

from latspec import (
    ChainConfig,
    QuasiMaternParams,
    SimConfig,
    fit_lattice,
    preprocess,
    simulate_field,
)
from latspec.gridio import taper_weights
from latspec.spectrum import CoherenceMatrix

print("Taper sensitivity")
print("=" * 40)

###############################################################################
# The taper itself
# ----------------
# r is the tapered fraction per edge; weights ramp from 0 to 1 with a
# raised cosine and stay 1 in the interior.

for r in (0.0, 0.10, 0.25):
    w = taper_weights(12, r)
    print(f"r={r:.2f}: weights {np.round(w, 3)}")

###############################################################################
# One dataset, three tapers
# -------------------------
# Short refits of a 24 x 24 two-process field.  The coherence posterior
# mean should move only a little across tapers.

params = (
    QuasiMaternParams(sigma2=1.0, alpha=1.0, delta=1.0),
    QuasiMaternParams(sigma2=2.0, alpha=1.6, delta=1.0),
)
rho0 = CoherenceMatrix(np.array([[1.0, 0.5], [0.5, 1.0]]))
data = preprocess(simulate_field(
    SimConfig(n1=24, n2=24, params=params, rho=rho0, labels=("A", "B"), seed=13)
))

means = {}
for r in (0.05, 0.10, 0.15):
    cfg = ChainConfig(iters=800, burnin=300, thin=1, seed=2, taper_r=r,
                      progress_every=0)
    chain = fit_lattice(data, cfg)
    means[r] = float(chain.rho[:, 0].mean())
    lo, hi = np.quantile(chain.rho[:, 0], [0.025, 0.975])
    print(f"r={r:.2f}: rho mean {means[r]:.3f}  95% CI ({lo:.3f}, {hi:.3f})")

base = means[0.10]
for r in (0.05, 0.15):
    print(f"|mean(r={r:.2f}) - mean(r=0.10)| = {abs(means[r] - base):.4f}")
print("generating coherence was 0.5")
