"""Interface states of a mass domain wall and their spectral flow.

A periodic strip holds two walls. Counting signed zero crossings of the states
localized on each wall gives the interface conductivity in units of 1/(2 pi).
"""

from floquet_replica.ribbon import MassProfile, RibbonModel, conductivities

cases = [
    ("effective 2x2, eps = 0.3", RibbonModel(0, 0.3, MassProfile(), effective=True)),
    ("three replicas, eps = 0.3", RibbonModel(1, 0.3, MassProfile())),
]
for label, model in cases:
    counts, spec = conductivities(model)
    print(f"{label}: bulk gap {model.bulk_gap():.4f}, window {spec.e_win:.4f}, "
          f"{len(spec.xi)} samples")
    print(f"  2 pi sigma at interface 1 = {counts[1]:+d}, interface 2 = {counts[2]:+d}")
    for xi, e, iface, loc in spec.retained()[:6]:
        print(f"  xi_x={xi:+.4f}  E={e:+.5f}  interface {iface}  weight {loc:.2f}")
