"""Small worked examples of the sorted L1 norm, its prox and the screening rule."""
import numpy as np

from slopescreen import (prox_sorted_l1, screen_support, sorted_l1_norm,
                         strong_rule_slope, subdiff_feasible)
from slopescreen.path import bh_lambda

lam = np.array([3.0, 2.0, 1.0])
beta = np.array([-1.0, 4.0, 2.0])
print("J(beta) =", sorted_l1_norm(beta, lam))          # 4*3 + 2*2 + 1*1 = 17

# the prox clusters coordinates whose shrunken magnitudes would cross
v = np.array([3.0, 2.9, -0.5])
print("prox(v) =", prox_sorted_l1(v, lam * 0.5))

# zero is optimal iff -grad lies in the unit ball of the dual norm
g = np.array([2.5, -1.5, 0.5])
print("0 optimal for grad", g, "->", subdiff_feasible(np.zeros(3), g, lam).feasible)

# screening works on sorted magnitudes: c = |grad| sorted, lam sorted
c = np.array([5.0, 4.0, 1.0, 0.5])
print("screened prefix:", screen_support(c, np.array([4.0, 3.0, 2.0, 1.0])).indices)

# strong rule between two path steps
lam_bh = bh_lambda(6, q=0.2)
lam_bh /= lam_bh[0]
grad = np.array([0.9, -0.1, 0.7, 0.05, -0.3, 0.2])
print("strong set:", strong_rule_slope(grad, 1.0 * lam_bh, 0.8 * lam_bh).indices)
