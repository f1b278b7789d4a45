"""Parallel Zhang-Suen thinning.

Each sub-iteration flags every deletable pixel first and removes them all
at once. Pixels outside the raster count as background.

The published rules erase any component that collapses to a two-pixel-thick
core (a 2x2 square is the smallest case). By default the last pixel of such a
component is kept so thinning never changes the 8-connected component count;
pass ``preserve_components=False`` for the unmodified rules.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage as ndi

from .image import BinaryMask


def _neighbours(p: np.ndarray):
    """Return p2..p9 (clockwise from north) for the interior of padded ``p``."""
    c = p[1:-1, 1:-1]
    n = p[:-2, 1:-1]
    ne = p[:-2, 2:]
    e = p[1:-1, 2:]
    se = p[2:, 2:]
    s = p[2:, 1:-1]
    sw = p[2:, :-2]
    w = p[1:-1, :-2]
    nw = p[:-2, :-2]
    return c, (n, ne, e, se, s, sw, w, nw)


def _deletable(p: np.ndarray, first: bool) -> np.ndarray:
    c, nb = _neighbours(p)
    p2, p3, p4, p5, p6, p7, p8, p9 = nb
    b = sum(x.astype(np.uint8) for x in nb)
    seq = nb + (p2,)
    a = sum((~seq[k] & seq[k + 1]).astype(np.uint8) for k in range(8))
    cond = c & (b >= 2) & (b <= 6) & (a == 1)
    if first:
        return cond & ~(p2 & p4 & p6) & ~(p4 & p6 & p8)
    return cond & ~(p2 & p4 & p8) & ~(p2 & p6 & p8)


_EIGHT = np.ones((3, 3), dtype=bool)


def _spare_vanishing(inner: np.ndarray, kill: np.ndarray) -> None:
    """Unflag one pixel of every component that ``kill`` would erase entirely."""
    labels, n = ndi.label(inner, structure=_EIGHT)
    total = np.bincount(labels.ravel(), minlength=n + 1)
    flagged = np.bincount(labels[kill], minlength=n + 1)
    doomed = np.nonzero((flagged == total) & (total > 0))[0]
    doomed = doomed[doomed > 0]
    if doomed.size == 0:
        return
    flat = labels.ravel()
    # keep the first pixel (raster order) of each doomed component
    idx = np.nonzero(np.isin(flat, doomed))[0]
    _, first = np.unique(flat[idx], return_index=True)
    kill.ravel()[idx[first]] = False


def thin_array(arr: np.ndarray, preserve_components: bool = True) -> tuple[np.ndarray, int]:
    """Thin a boolean array; return the skeleton and the number of passes run.

    A pass is one pair of sub-iterations. The loop stops after the first pass
    that deletes nothing, so ``passes <= foreground_count + 1``.
    """
    p = np.pad(np.asarray(arr, dtype=bool), 1)
    inner = p[1:-1, 1:-1]
    passes = 0
    while True:
        passes += 1
        changed = False
        for first in (True, False):
            kill = _deletable(p, first)
            if preserve_components and kill.any():
                _spare_vanishing(inner, kill)
            if kill.any():
                inner[kill] = False
                changed = True
        if not changed:
            return inner.copy(), passes


def zhang_suen_thin(mask: BinaryMask, preserve_components: bool = True) -> BinaryMask:
    """Skeletonize the foreground of ``mask``; the foreground tag is kept."""
    skeleton, _ = thin_array(mask.data, preserve_components)
    return BinaryMask(skeleton, mask.foreground)
