"""Which structural statements are checked numerically, and how.

Topological statements about infinite-dimensional spaces (contractibility of
critical components, flattening diffeomorphisms, homotopy types of spaces of
curves) cannot be verified by computation. Each one is covered here only by
a constructive shadow: a computation whose certified output is consistent
with the statement at desk scale.
"""

from __future__ import annotations

import importlib

SHADOWS: dict[str, tuple[str, ...]] = {
    "contractibility of critical components": (
        "critset.first_order:contraction_homotopy",
        "critset.dirichlet:squeeze_homotopy",
    ),
    "ambient diffeomorphisms flattening critical sets": (
        "critset.dirichlet:component_index",
        "critset.periodic:classify_periodic",
    ),
    "homotopy type and cohomology of spaces of locally convex curves": (
        "critset.third_order:is_in_Cstar3",
        "critset.third_order:roundtrip_residual",
    ),
}


def resolve(ref: str):
    """Import ``module:attribute``."""
    mod, _, attr = ref.partition(":")
    return getattr(importlib.import_module(mod), attr)
