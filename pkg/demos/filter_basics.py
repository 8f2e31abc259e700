"""
The passivation filter on a single robot
========================================

One robot, one instant. We hand the filter a nominal input that would pump
more energy into the robot than its ledger allows, and watch it trim the
input back onto the constraint boundary.
"""

import numpy as np

from cbf_formation import FilterConfig, Variant, constraint_slack, filter_input

# The robot moves along +x at 1 m/s and has no energy left in its ledger.
y = np.array([1.0, 0.0])   # output = velocity
D = 0.0                    # pretend damping is negligible for the moment
h = 0.0
u_nom = np.array([2.0, 0.0])

# Injecting power y.u = 2 with nothing in the ledger breaks the barrier condition.
print("slack at the nominal input:", constraint_slack(D, y, u_nom, 0.0, h, alpha=1.0))

# With only the input to play with, the filter removes the component along y.
only_u = filter_input(FilterConfig(alpha=1.0, variant=Variant.INPUT_ONLY), u_nom, y, D, h)
print("input-only:        u =", only_u.u, " sigma =", only_u.sigma)

# With virtual damping available the correction is split between the two.
both = filter_input(FilterConfig(alpha=1.0, kappa=1.0), u_nom, y, D, h)
print("input-and-damping: u =", both.u, " sigma =", both.sigma)
print("slack at the filtered input:", constraint_slack(D, y, both.u, both.sigma, h, 1.0))

# Orthogonal inputs inject no power, so they pass through untouched.
side = filter_input(FilterConfig(), np.array([0.0, 3.0]), y, D, h)
print("orthogonal input passes:", side.u, "active =", side.active)

# A larger kappa makes damping expensive and shifts the effort back to u.
# The force the robot actually feels is u - sigma y, and since the input and
# the damping both act through the identity input map that total comes out
# the same for every kappa: kappa only changes the split.
for kappa in (0.1, 1.0, 10.0):
    sol = filter_input(FilterConfig(alpha=1.0, kappa=kappa), u_nom, y, D, h)
    applied = sol.u - sol.sigma * y
    print(f"kappa = {kappa:5.1f}: u_x = {sol.u[0]:.4f}  sigma = {sol.sigma:.4f}"
          f"  applied force = {applied}")
