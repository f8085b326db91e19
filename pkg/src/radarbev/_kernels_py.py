"""Pure numpy fallback for the hot kernels.

Kept operation-for-operation identical to the compiled versions in
``_kernels.pyx``: both accumulate convolution taps in ascending offset order
over an explicitly zero-padded buffer, and both resolve nearest-site ties to
the lowest point index, so results are bitwise equal across backends.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def gaussian_conv2d(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Same-size separable 2-D convolution with zero padding.

    ``w`` is the 1-D kernel factor (odd length, palindromic); the effective
    2-D kernel is outer(w, w). Palindromic taps make correlation equal
    convolution, so no flip is applied.
    """
    x = np.ascontiguousarray(x, dtype=float)
    w = np.ascontiguousarray(w, dtype=float)
    h, wid = x.shape
    taps = w.shape[0]
    r = (taps - 1) // 2

    xp = np.zeros((h, wid + 2 * r))
    xp[:, r:r + wid] = x
    tmp = np.zeros((h, wid))
    for k in range(taps):
        tmp += w[k] * xp[:, k:k + wid]

    tp = np.zeros((h + 2 * r, wid))
    tp[r:r + h, :] = tmp
    out = np.zeros((h, wid))
    for k in range(taps):
        out += w[k] * tp[k:k + h, :]
    return out


def nearest_site_labels(cx: np.ndarray, cy: np.ndarray,
                        px: np.ndarray, py: np.ndarray) -> np.ndarray:
    """Index of the nearest site (squared Euclidean) for every grid cell.

    cx/cy are cell-center coordinates along columns/rows; px/py are site
    coordinates. Ties go to the lowest site index.
    """
    cx = np.ascontiguousarray(cx, dtype=float)
    cy = np.ascontiguousarray(cy, dtype=float)
    px = np.ascontiguousarray(px, dtype=float)
    py = np.ascontiguousarray(py, dtype=float)
    if px.shape[0] == 0:
        raise ValueError("nearest_site_labels requires at least one site")

    labels = np.empty((cy.shape[0], cx.shape[0]), dtype=np.int32)
    dx = cx[:, None] - px[None, :]
    dx2 = dx * dx  # (cols, sites), shared across rows
    for i in range(cy.shape[0]):
        dy = cy[i] - py
        d2 = dx2 + dy * dy
        labels[i, :] = np.argmin(d2, axis=1)
    return labels
