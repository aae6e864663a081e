"""Deriving the PDE that governs a linear form of telegraph processes.

Each process moves at speed c_k and flips direction at Poisson rate lam_k.
The joint direction state takes 2**n values, and the density of
L = sum a_k X_k is annihilated by the determinant of the 2**n x 2**n
operator matrix built from these states. This script prints that
determinant for n = 1, 2, 3.
"""

from fractions import Fraction

from telegraph_forms import ModelSpec, T, governing_operator, poly_divides
from telegraph_forms.operator_algebra import build_system_matrix, det_cofactor, det_schur

# %% One process: the classical telegraph operator
single = ModelSpec.from_arrays(["2"], ["3"])
print("n=1:", governing_operator(single).render())

# %% Two processes, sum and difference give the same operator
plus = ModelSpec.from_arrays(["1", "2"], ["3", "5"], coefs=["1", "1"])
minus = ModelSpec.from_arrays(["1", "2"], ["3", "5"], coefs=["1", "-1"])
P = governing_operator(plus)
print("n=2 (sum):       ", P.render())
print("same for X1 - X2:", P == governing_operator(minus))

# %% Identical processes: the operator factors
lam, c = Fraction(3, 2), Fraction(1, 2)
sym = ModelSpec.from_arrays([lam, lam], [c, c])
Q = governing_operator(sym)
quotient = poly_divides((T + 2 * lam) ** 2, Q)
print("symmetric case:", Q.render())
print("  divided by (T + 2 lam)^2:", quotient.render())
print("  as LaTeX:", quotient.to_latex())

# %% Three processes: the structured recursion against plain cofactor expansion
three = ModelSpec.from_arrays(["1", "2", "3"], ["1", "1/2", "2"], coefs=["1", "-2", "1/3"])
m = build_system_matrix(three)
fast = det_schur(m, three)
print("n=3 order:", fast.total_degree(), "terms:", len(fast.coeffs))
print("recursion equals cofactor expansion:", fast == det_cofactor(m))
print("leading coefficient of T^8:", fast.coeff(8, 0))
