"""Cross-checks between the operator and the probability law.

The Fourier transform turns the PDE into an ODE in t, so the exponents of the
characteristic function must be roots of the operator symbol. The direction
state system, integrated numerically, must reproduce the product formula.
A finite-difference check on the smooth part of the density closes the loop
in physical space.
"""

import numpy as np

from telegraph_forms import (
    ModelSpec,
    TelegraphParams,
    fd_residual,
    initial_condition_check,
    symbol_root_check,
    system_cf_check,
)

rng = np.random.default_rng(0)
spec = ModelSpec.from_arrays(["1", "5/2", "2/3"], ["2", "1", "3/2"], coefs=["1", "-1/2", "2"])

rep = symbol_root_check(spec, rng.uniform(-3, 3, 25))
print(f"symbol roots: worst normalized residual {rep.max_residual:.2e} ({rep.status})")

rep = system_cf_check(spec, [0.5, 1.0, 2.0], t=1.5)
print(f"ODE system:   worst CF error {rep.max_residual:.2e} ({rep.status}), "
      f"convention {rep.notes['convention']}")

rep = initial_condition_check(TelegraphParams(1, 2, 0.3), TelegraphParams(3, 1, -1), "-")
print(f"initial data: worst relative error {rep.max_residual:.2e} ({rep.status})")

rep = fd_residual(ModelSpec.from_arrays([1.0, 1.0], [1.0, 1.0]))
print(f"finite differences: residuals {[round(d['max_residual'], 10) for d in rep.details]}, "
      f"reduction {rep.notes['ratios'][0]:.1f}x ({rep.status})")
