"""Balls versus connected star domains as beta grows (lambda_2).

Ball values are exact and star values are FEM upper bounds, so close calls lean
toward the balls. The output is exploratory.
"""
import math

from robinshape.optimize import Fem, OptProblem, StarFamily, beta_sweep
from robinshape.spectral import FunctionalSpec

prob = OptProblem(FunctionalSpec.LambdaK(2), math.pi, 1.0, StarFamily(2, 1), Fem(10, 10), budget=40, restarts=2)
rows, crossover = beta_sweep(prob, [0.5, 2.0, 8.0])
for r in rows:
    print(f"beta={r.beta:5.2f}  balls={r.balls_value:.5f}  connected={r.connected_value:.5f}  winner={r.winner}")
print("crossover:", crossover)
