"""The law of X1 + X2: atoms, continuous density and a simulation check.

With no direction switch before t the sum sits at one of four points; the
rest of the mass is spread continuously over the support. We compute both
parts and compare them with a Monte Carlo sample.
"""

import math

import numpy as np

from telegraph_forms import (
    ModelSpec,
    ac_density,
    cdf,
    empirical_atom_masses,
    sample_linear_form,
    singular_atoms,
    support,
)

spec = ModelSpec.from_arrays([1.0, 2.0], [1.0, 1.5], starts=[0.0, 0.5])
t = 1.0

# %% Singular part
lo, hi = support(spec, t)
print(f"support at t={t}: [{lo:.3f}, {hi:.3f}]")
atoms = singular_atoms(spec, t)
for a in atoms:
    print(f"  atom at {a.location:+.3f}  mass {a.mass:.5f}  (x{a.multiplicity})")
print(f"total atom mass {sum(a.mass for a in atoms):.6f} vs exp(-3t) = {math.exp(-3 * t):.6f}")

# %% Continuous part by Fourier inversion
grid = ac_density(spec, t)
print(f"grid: {len(grid.values)} points, dx={grid.dx:.2e}, continuous mass {grid.ac_mass:.8f}")
print(f"1 - exp(-3t) = {1 - math.exp(-3 * t):.8f}")

# %% Compare with simulation
sample = sample_linear_form(spec, t, 400_000, seed=2024, workers=4)
for est in empirical_atom_masses(sample, atoms):
    print(f"  atom {est.atom.location:+.3f}: simulated {est.fraction:.5f} "
          f"in [{est.ci_low:.5f}, {est.ci_high:.5f}], exact {est.atom.mass:.5f}")

xs = np.linspace(lo, hi, 9)
emp = np.array([(sample.values < x).mean() for x in xs])
print("   x      F(x)   empirical")
for x, f, e in zip(xs, cdf(spec, xs, t), emp):
    print(f"{x:+.3f}  {f:.4f}  {e:.4f}")
