"""Constant target c = 1/2 without confinement: the blob method against the exact Barenblatt solution."""

# %%
import numpy as np

from blobpme import InitialDensity, SimConfig, SweepConfig, run, run_sweep, uniform
from blobpme.oracle import ExactSolution, pde_residual

sol = ExactSolution(tau0=0.0625)

# %% sanity check the reference first: it must solve u_t = (u^2)_xx
for t in (0.0, 0.05, 0.1):
    x = np.linspace(-0.9, 0.9, 50) * sol.radius(t)
    print(f"t={t:.2f}  radius={sol.radius(t):.4f}  max residual={np.abs(pde_residual(sol, x, t)).max():.1e}")

# %% one run with the exact L1 error in the diagnostics
cfg = SimConfig(target=uniform(0.5), initial=InitialDensity.barenblatt(0.0625), n=160, t_final=0.1,
                k=0.0, sample_times=(0.0, 0.025, 0.05, 0.1), reference="exact")
for d in run(cfg).diagnostics:
    print(f"t={d.time:.3f}  energy={d.energy:.6f}  L1 vs exact={d.l1_vs_reference:.2e}")

# %% convergence in N (about second order)
res = run_sweep(SweepConfig(cfg, n_values=(20, 40, 80, 160, 320), observable="l1_vs_exact_at_t"))
for n, eps, err in res.rows():
    print(f"N={n:4d}  eps={eps:.4f}  L1={err:.3e}")
print(f"fitted order {res.order:.2f}")
