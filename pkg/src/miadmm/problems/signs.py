"""Sign-product constraint algebra shared by the application builders.

A product constraint ``t * partner >= 0`` (or ``<= 0``) with one factor held
fixed induces a per-coordinate feasible set for the varying factor.  A partner
value of exactly 0 imposes no constraint (Free): the product constraint is
satisfied for every t when one factor is zero.  Multiple constraints on the
same coordinate intersect; opposing sign requirements collapse to {0}.
"""

from __future__ import annotations

import numpy as np

from ..subsolvers import FIXED_ZERO, FREE, NON_NEGATIVE, NON_POSITIVE


def product_bound(partner: float, same_sign: bool) -> int:
    """Feasible-set code for t under ``t*partner >= 0`` (same_sign) or ``<= 0``."""
    if partner > 0.0:
        return int(NON_NEGATIVE if same_sign else NON_POSITIVE)
    if partner < 0.0:
        return int(NON_POSITIVE if same_sign else NON_NEGATIVE)
    return int(FREE)


def product_bounds(partner: np.ndarray, same_sign: bool) -> np.ndarray:
    """Vectorized :func:`product_bound` over a partner-value vector."""
    partner = np.asarray(partner, dtype=np.float64)
    if same_sign:
        pos, neg = NON_NEGATIVE, NON_POSITIVE
    else:
        pos, neg = NON_POSITIVE, NON_NEGATIVE
    out = np.full(partner.shape, int(FREE), dtype=np.int8)
    out[partner > 0.0] = int(pos)
    out[partner < 0.0] = int(neg)
    return out


def merge_bounds(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Intersect two per-coordinate feasible sets.

    Free is the identity; equal kinds are idempotent; any disagreement between
    non-Free kinds (including anything with FixedZero) collapses to FixedZero.
    """
    a = np.asarray(a, dtype=np.int8)
    b = np.asarray(b, dtype=np.int8)
    out = np.where(a == FREE, b, np.where(b == FREE, a,
                   np.where(a == b, a, np.int8(FIXED_ZERO))))
    return out.astype(np.int8)
