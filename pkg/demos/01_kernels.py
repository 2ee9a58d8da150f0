"""Interaction kernels for the three built-in targets, checked against quadrature."""

# %%
import numpy as np

from blobpme import Mollifier, build_kernel_table, log_concave, default_piecewise, uniform
from blobpme.oracle import reference_kernel

eps = 0.2
moll = Mollifier(eps)
targets = {"uniform": uniform(), "log_concave": log_concave(), "piecewise": default_piecewise()}

# %% closed forms against the defining integrals at a few pairs
pairs = [(-0.8, -0.7), (0.1, 0.45), (0.74, 0.76), (1.2, -1.1)]
for name, target in targets.items():
    k = build_kernel_table(target, moll)
    print(f"{name} ({k.mode.value})")
    for x, y in pairs:
        g, f = (float(v) for v in k.g_and_f(x, y))
        print(f"  x={x:+.2f} y={y:+.2f}  g={g:.10f} (quad {reference_kernel(target, moll, x, y, 'g'):.10f})"
              f"  f={f:+.10f} (quad {reference_kernel(target, moll, x, y, 'f'):+.10f})")

# %% force felt by a particle at x from a unit mass at 0: repulsive, stronger where rho_bar is small
xs = np.linspace(-0.6, 0.6, 7)
for name, target in targets.items():
    f = build_kernel_table(target, moll).f(xs, np.zeros_like(xs))
    print(f"{name:12s}", " ".join(f"{-v:+.3f}" for v in f))
