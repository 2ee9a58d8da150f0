"""How much mass leaves the domain for increasing confinement strength k."""

# %%
from blobpme import InitialDensity, SimConfig, default_piecewise
from blobpme.harness import simulate
from blobpme.observables import KdeSnapshot, mass_in_interval

# %%
for k in (0.0, 100.0, 1e9):
    cfg = SimConfig(target=default_piecewise(), initial=InitialDensity.barenblatt(), n=200, t_final=1.0,
                    k=k, sample_times=(0.0, 0.1, 1.0))
    ensemble, ctx, traj = simulate(cfg)
    for t, x in zip(traj.sample_times, traj.states):
        snap = KdeSnapshot(x, ensemble.weights, ctx.mollifier)
        print(f"k={k:8.0e} t={t:.1f}  mass in (-1,1)={mass_in_interval(snap, -1, 1):.5f}"
              f"  outside [-1.2,1.2]={1 - mass_in_interval(snap, -1.2, 1.2):.2e}"
              f"  rightmost particle={x.max():+.4f}")
    print(f"          {traj.step_count} steps, {traj.rhs_eval_count} rhs evaluations")
