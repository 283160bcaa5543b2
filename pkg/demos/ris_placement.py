"""Where should the RIS go?

The AP sits at (0, 0), the receiver at (100, 0) and the RIS at (d, 10). The
product pathloss of the two RIS hops is smallest near either end, so the rate
follows a U shape in d. With the direct link present, the RIS adds a
coherent boost on top of the direct path; without it, the RIS carries the
whole signal and the swing is much larger.

Run: python demos/ris_placement.py
"""

import numpy as np

from risfbl.config import ScenarioConfig
from risfbl.montecarlo import matched_gamma, simulate_snr
from risfbl.rate import avg_rate_exact, fbl_rate

base = ScenarioConfig(n_elements=4096)
print(f"N = {base.n_elements}, 2-bit column from 3000 simulated channels per point\n")
print(f"{'d':>4} {'direct exact':>13} {'blocked exact':>14} {'blocked 2bit':>13}")
for d in (5, 15, 30, 50, 70, 85, 95):
    direct = base.replace(direct_link=True).with_ris_at(d)
    blocked = base.replace(direct_link=False).with_ris_at(d)
    r_direct = avg_rate_exact(matched_gamma(direct), direct.fbl).avg_rate
    r_blocked = avg_rate_exact(matched_gamma(blocked), blocked.fbl).avg_rate
    snr = simulate_snr(blocked, [2], 3000, seed=int(d))[2]
    r_2bit = float(np.mean(fbl_rate(snr, blocked.fbl)))
    print(f"{d:>4} {r_direct:>13.3f} {r_blocked:>14.3f} {r_2bit:>13.3f}")
