"""Two-run bias correction: measure a systematic offset, shift setpoints, refly.

A 6.4 cm up-slope placement bias is injected to stand in for an unmodelled
systematic error. Run one measures it, run two flies with shifted setpoints.
Then a horizontal reference offset shows the 1/cos(alpha) amplification.
"""

from __future__ import annotations

import math

from roofnail.analysis import amplification_check, predicted_amplification
from roofnail.experiment import bias_corrected_pair, simulate
from roofnail.scenario import Scenario

sc = Scenario().replace(**{"roof.alpha_deg": 30.0, "bias.roof_offset": [0.064, 0.0]})
pair = bias_corrected_pair(sc)
m1, m2 = pair.mean_e_v
print(f"run 1 mean e_v {100 * m1:+.2f} cm -> shift setpoints by {100 * -pair.shift[0]:+.2f} cm")
print(f"run 2 mean e_v {100 * m2:+.3f} cm")

for alpha in (0.0, 15.0, 30.0):
    s = Scenario().replace(**{"roof.alpha_deg": alpha, "bias.ground_x_offset": 0.02})
    ratio = amplification_check(simulate(s).nails, s.layout(), 0.02, math.radians(alpha))
    print(f"{alpha:4.0f} deg: 2 cm ground offset moved nails {2 * ratio:.2f} cm "
          f"(1/cos predicts {2 * predicted_amplification(math.radians(alpha)):.2f})")  # fmt: skip
