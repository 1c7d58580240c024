"""Mesh convergence of the first Dirichlet eigenvalue on the unit disk and the
hemisphere, against the shooting solver."""
import argparse
import math

import numpy as np

from crl.geometry import BackgroundSpace, RegionSpec, build_domain
from crl.spectral import (SCHRODINGER, OperatorSpec, first_eigenpair, observed_orders, radial_first_eigenpair,
                          richardson_limit)


def study(space, radius, kind, hs):
    ref = radial_first_eigenpair(space, radius, kind).eigenvalue
    vals = [first_eigenpair(OperatorSpec.of_kind(kind, build_domain(space, RegionSpec.ball(radius), h))).eigenvalue
            for h in hs]
    err = np.array(vals) - ref
    print(f"{space.kind} r={radius:g} {kind}: reference {ref:.10f}")
    for h, v, e in zip(hs, vals, err):
        print(f"  h={h:<6g} {v:.8f}  error {e:+.3e}")
    if np.all(np.abs(err) > 1e-9):
        print("  orders", np.round(observed_orders(hs, err), 3))
    print(f"  extrapolated {richardson_limit(hs, vals):.8f}")


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--hs", type=float, nargs="+", default=[0.08, 0.04, 0.02])
    args = p.parse_args()
    study(BackgroundSpace.euclidean(2), 1.0, "laplacian", args.hs)
    study(BackgroundSpace.sphere(2), math.pi / 2, SCHRODINGER, args.hs)
    study(BackgroundSpace.sphere(2), 2.0, SCHRODINGER, args.hs)


if __name__ == "__main__":
    main()
