"""Plan and fly one four-nail mission on a 30 deg roof, then score the nails.

Run with ``python demos/quickstart.py``; takes a few seconds.
"""

from __future__ import annotations

import math

from roofnail.analysis import nail_errors, summarize
from roofnail.experiment import build_plan, simulate
from roofnail.mission import desired_nailing_velocity
from roofnail.scenario import loads

sc = loads("roof:\n  alpha_deg: 30\nseed: 1\n", "<quickstart>")

# The tooltip spring must compress 7 mm; energy balance gives the contact speed.
v1 = desired_nailing_velocity(sc.contact.k, sc.vehicle.m_o + sc.vehicle.m_b + sc.vehicle.m_n, sc.contact.threshold)
print(f"minimum contact speed {100 * v1:.2f} cm/s, commanded {100 * sc.guidance.v_f:.1f} cm/s")

plan = build_plan(sc)
print(f"planned {len(plan.phases)} phases over {plan.duration:.1f} s")
for ph in plan.phases[:4]:
    print(f"  {ph.label:<22} {ph.duration:6.2f} s  armed={ph.armed}")

res = simulate(sc)
print(f"flew {len(res.phase_trace)} phases, {res.deployed}/{len(res.nails)} nails deployed")

errs, failures = nail_errors(res.nails, sc.layout(), math.radians(sc.roof.alpha_deg))
for e in errs:
    print(f"  nail {e.index + 1}: e_h {100 * e.e_h:+.3f} cm  e_v {100 * e.e_v:+.3f} cm")
s = summarize(errs)[30.0]
print(f"median e_v {100 * s.e_v.median:+.3f} cm over {s.count} nails")
