"""Measure the decay of global multiscale basis functions away from their node.

Prints, for each layer count l, the largest entry of Phi_j outside the patch
D_l(x_j) and the fitted per-layer contraction factor.

    python3 scripts/basis_decay.py [--dim 1] [--kappa-exp 4] [--H 5] [--h 10]
"""

import argparse

import numpy as np

from helmlod.helmholtz import ProblemInstance
from helmlod.lod import build_basis
from helmlod.mesh import build_two_level, node_patch


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dim", type=int, default=1)
    parser.add_argument("--kappa-exp", type=float, default=4.0)
    parser.add_argument("--H", type=int, default=5)
    parser.add_argument("--h", type=int, default=10)
    parser.add_argument("--max-layers", type=int, default=10)
    args = parser.parse_args()

    mp = build_two_level(args.dim, args.H, args.h)
    prob = ProblemInstance(2.0**args.kappa_exp, dimension=args.dim)
    Phi = build_basis(mp, prob, None).dense()
    center = mp.coarse.nodes.mean(axis=0)
    j = int(np.argmin(np.linalg.norm(mp.coarse.nodes - center, axis=1)))
    col = Phi[:, j]
    tails = []
    for layers in range(args.max_layers + 1):
        mask = np.ones(len(col), dtype=bool)
        mask[node_patch(mp, j, layers).free_fine_nodes] = False
        if not mask.any():
            break
        tails.append(np.abs(col[mask]).max())
        print(f"l={layers:2d}  max|Phi_j| outside D_l = {tails[-1]:.3e}")
    if len(tails) >= 2:
        rate = np.exp(np.polyfit(np.arange(len(tails)), np.log(tails), 1)[0])
        print(f"fitted contraction per layer: {rate:.3f}")


if __name__ == "__main__":
    main()
