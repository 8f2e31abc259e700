"""Seeded random inputs for the passivation filter."""

import numpy as np

from cbf_formation.passivation import FilterConfig, Variant
from qp_oracle import passivation_oracle


def filter_instances(n, seed=0):
    """Yield ``(config, u_nom, y, D, h)`` covering active, inactive and tiny-``y`` cases."""
    rng = np.random.default_rng(seed)
    for k in range(n):
        variant = Variant.INPUT_ONLY if k % 2 else Variant.INPUT_AND_DAMPING
        cfg = FilterConfig(
            alpha=float(rng.uniform(0.05, 5.0)),
            kappa=float(10 ** rng.uniform(-2, 2)),
            variant=variant,
            h0=0.0,
        )
        u_nom = rng.normal(scale=3.0, size=2)
        kind = k % 5
        if kind == 0:
            y = np.zeros(2)
        elif kind == 1:
            y = rng.normal(size=2) * 10 ** rng.uniform(-4, -2)
        else:
            y = rng.normal(scale=2.0, size=2)
        D = float(rng.uniform(0, 0.5) * (y @ y))
        h = float(rng.uniform(-1.0, 1.0))
        if kind == 0:
            h = abs(h)  # y = 0 with h < 0 is the documented infeasible corner
        yield cfg, u_nom, y, D, h


def oracle_solution(cfg, u_nom, y, D, h):
    """Reference ``(u, sigma)`` from the generic QP oracle for a given config."""
    kappa = None if cfg.variant is Variant.INPUT_ONLY else cfg.kappa
    return passivation_oracle(u_nom, y, D, h, cfg.alpha, kappa)
