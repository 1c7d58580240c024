"""Build both signed deformations of the sphere cap and print their certificates."""
import argparse
import json

from crl.deform import MINUS, PLUS, build_deformation
from crl.geometry import BackgroundSpace, RegionSpec


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--radius", type=float, default=2.0)
    p.add_argument("--h", type=float, default=0.02)
    args = p.parse_args()
    for sign in (PLUS, MINUS):
        rep = build_deformation(BackgroundSpace.sphere(2), RegionSpec.ball(args.radius), sign, args.h)
        d = rep.to_dict()
        keep = ("sign", "supportCertificate", "curvatureMargins", "achievedDelta", "deltaBudget",
                "brownYorkMass", "strictThreshold", "supDeviation", "parameters", "eigenvalues", "timings")
        print(json.dumps({k: d[k] for k in keep}, indent=2))


if __name__ == "__main__":
    main()
