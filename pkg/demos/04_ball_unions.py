"""Minimizing lambda_k over unions of balls of fixed total measure.

For small k the minimizer is a union of equal balls. The search reports the best
configuration it finds and the relative gap between lambda_{k-1} and lambda_k.
"""
import math

from robinshape.diagnostics import gap_report
from robinshape.optimize import BallFamily, OptProblem, optimize_ball_config
from robinshape.spectral import FunctionalSpec

# %% 2-D, k = 2: two equal disks beat one disk of area pi
run = optimize_ball_config(OptProblem(FunctionalSpec.LambdaK(2), math.pi, 1.0, BallFamily(None, 2), budget=300))
print("2-D k=2 radii", [round(r, 6) for r in run.best_params], "value", run.best_value)

# %% 3-D, k = 2..4
for k in (2, 3, 4):
    prob = OptProblem(FunctionalSpec.LambdaK(k), 4 * math.pi / 3, 1.0, BallFamily(None, 3), budget=400)
    run = optimize_ball_config(prob)
    print(f"3-D k={k}:", len(run.best_params), "balls;", gap_report(run.best_spectrum, k).summary_line())
