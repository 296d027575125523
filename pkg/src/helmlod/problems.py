"""Named problem configurations used by the experiments."""

from __future__ import annotations

import numpy as np

from .helmholtz import ProblemInstance

SQRT8 = 2.0 * np.sqrt(2.0)


def two_band_rhs(x: np.ndarray) -> np.ndarray:
    """``2 sqrt(2)`` on [3/16, 5/16] and [11/16, 13/16], zero elsewhere."""
    t = x[:, 0]
    on = ((t >= 3 / 16) & (t <= 5 / 16)) | ((t >= 11 / 16) & (t <= 13 / 16))
    return np.where(on, SQRT8, 0.0)


def one(x: np.ndarray) -> np.ndarray:
    return np.ones(x.shape[0])


def periodic_scatterer(eps: float):
    """Diffusion equal to ``eps**2`` on the eps-periodic inclusions inside (0.25, 0.75)^2, else 1."""

    def A(x: np.ndarray) -> np.ndarray:
        inner = np.all((x > 0.25) & (x < 0.75), axis=1)
        frac = np.mod(x / eps, 1.0)
        incl = np.all((frac > 0.25) & (frac < 0.75), axis=1)
        return np.where(inner & incl, eps**2, 1.0)

    return A


def bump_source(center=(0.125, 0.5), radius=0.05, amplitude=1e4):
    z = np.asarray(center, dtype=float)

    def f(x: np.ndarray) -> np.ndarray:
        r2 = np.sum((x - z) ** 2, axis=1) / radius**2
        out = np.zeros(x.shape[0])
        inside = r2 < 1
        out[inside] = amplitude * np.exp(-1.0 / (1.0 - r2[inside]))
        return out

    return f


def _ex1(cfg: int, kappa: float) -> ProblemInstance:
    sinsq = lambda x: (1.0 + np.sin(np.pi * x[:, 0])) ** 2
    expcos = lambda x: np.exp(-2.0 * np.cos(np.pi * x[:, 0]))
    index, rhs = {
        1: (1.0, two_band_rhs),
        2: (sinsq, two_band_rhs),
        3: (sinsq, 1.0),
        4: (expcos, 1.0),
    }[cfg]
    return ProblemInstance(kappa, index=index, rhs=rhs, dimension=1, name=f"ex1-cfg{cfg}")


def builtin_problems():
    """Catalog mapping a problem name to a factory accepting keyword overrides."""

    def ex2_i(kappa=2.0**3):
        n = lambda x: (1.0 + np.sin(np.pi * x[:, 0]) * np.sin(np.pi * x[:, 1])) ** 2
        return ProblemInstance(kappa, index=n, rhs=1.0, dimension=2, name="ex2-i")

    def ex2_ii(kappa=2.0**3):
        n = lambda x: np.exp(-2.0 * np.sin(np.pi * x[:, 0]) * np.cos(np.pi * x[:, 1]))
        return ProblemInstance(kappa, index=n, rhs=1.0, dimension=2, name="ex2-ii")

    def ex3_hetero(kappa=2.0**4, eps=2.0**-5, center=(0.125, 0.5)):
        return ProblemInstance(
            kappa,
            index=1.0,
            rhs=bump_source(center),
            diffusion=periodic_scatterer(eps),
            dimension=2,
            name="ex3-hetero",
        )

    def ex4_1d(kappa=2.0**6):
        p = _ex1(4, kappa)
        p.name = "ex4-1d"
        return p

    def ex4_2d(kappa=2.0**4):
        n = lambda x: 1.0 + np.sin(np.pi * x[:, 0]) * np.cos(np.pi * x[:, 1])
        # n vanishes at the boundary point (1/2, 1); only strict positivity is required
        return ProblemInstance(kappa, index=n, rhs=1.0, dimension=2, name="ex4-2d", index_floor=0.0)

    catalog = {f"ex1-cfg{c}": (lambda c=c: lambda kappa=2.0**6: _ex1(c, kappa))() for c in (1, 2, 3, 4)}
    catalog.update(
        {
            "ex2-i": ex2_i,
            "ex2-ii": ex2_ii,
            "ex3-hetero": ex3_hetero,
            "ex4-1d": ex4_1d,
            "ex4-2d": ex4_2d,
        }
    )
    return catalog


def get_problem(name: str, **overrides) -> ProblemInstance:
    catalog = builtin_problems()
    if name not in catalog:
        raise KeyError(f"unknown problem {name!r}; known: {', '.join(sorted(catalog))}")
    return catalog[name](**overrides)
