"""Error of the truncated replica propagators against the exact driven evolution.

Keeping 2n+1 replicas gives an error of order eps^(n+1), always below the
Duhamel bound. The effective 2x2 propagator improves with the first-order corrector.
"""

import numpy as np

from floquet_replica import evolution as evo

rows = evo.truncation_sweep(1.0, (0.02, 0.04, 0.08), (1.0,), (0, 1, 2))
for n in (0, 1, 2):
    sel = [r for r in rows if r.n == n]
    errs = " ".join(f"{r.error:.2e}" for r in sel)
    slope = evo.fit_slope([r.eps for r in sel], [r.error for r in sel])
    print(f"n={n}: errors {errs}  slope {slope:.3f}  all below bound: {all(r.pointwise_ok for r in sel)}")

lt = evo.long_time_check(eps=0.05, n=1)
print(f"periodized n=1 at tau={lt.tau:.1f}: error {lt.error:.3f}, fitted c {lt.fitted_c:.3f} "
      f"(envelope constant {lt.stated_c:.2f})")

sc = evo.corrector_scaling()
print(f"effective 2x2 slopes: corrected {sc.corrected_slope:.3f}, uncorrected {sc.uncorrected_slope:.3f}")
print(f"corrected errors: {np.array(sc.corrected)}")
