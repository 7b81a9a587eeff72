"""
Ratio maximization on a two-variable problem
============================================

Maximize (3 x1 + 2 x2) / (x1 + x2 + 1) over binaries with x1 + x2 >= 1.
"""

import numpy as np

from bcropt import AffineForm, FractionalModel, LinearProgram, MixedIntegerProgram, maximize_ratio

# the constraint system; its own objective is ignored
lp = LinearProgram.from_dense([0, 0], [[1, 1]], ">", [1], bounds=[(0, 1), (0, 1)])
fm = FractionalModel(MixedIntegerProgram(lp, "BB"), AffineForm([3, 2]), AffineForm([1, 1], 1.0))

sol = maximize_ratio(fm)
for k, it in enumerate(sol.iterations):
    print(f"iteration {k}: q = {it.q:.4f}  F(q) = {it.F:.4f}  ratio of maximizer = {it.ratio:.4f}")
print("x* =", sol.x_star, " q* =", round(sol.q_star, 6))

# the three feasible points, for comparison
for x in ([1, 0], [0, 1], [1, 1]):
    print(x, fm.ratio(np.array(x, dtype=float)))
