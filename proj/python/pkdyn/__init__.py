"""Dynamics of holomorphic endomorphisms of projective space.

Thin python layer over the C++ core: fibers and backward orbits, Green
values, equilibrium-measure estimators, and the experiment runner.
"""

from ._pkdyn import (
    Fiber,
    Map,
    PkdynError,
    Point,
    config_digest,
    distance,
    exceptional_scan,
    fiber,
    fit_rate,
    green,
    green_exact_monomial,
    lambda_apply,
    multiplicity,
    normalize,
    orbit,
    preimages,
    presets,
    read_fiber,
    run_experiment,
    write_fiber,
)

__all__ = [
    "Fiber",
    "Map",
    "PkdynError",
    "Point",
    "config_digest",
    "distance",
    "exceptional_scan",
    "fiber",
    "fit_rate",
    "green",
    "green_exact_monomial",
    "lambda_apply",
    "multiplicity",
    "normalize",
    "orbit",
    "preimages",
    "presets",
    "read_fiber",
    "run_experiment",
    "write_fiber",
]
