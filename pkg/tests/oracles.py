"""Independent reference computations shared by the test modules."""

import numpy as np

from r3c.classifiers.gabor import block_edges


def block_truth_angles(angles: np.ndarray, block: int) -> np.ndarray:
    """Doubled-angle circular mean of per-pixel ground-truth angles per block."""
    rows, cols = block_edges(angles.shape[0], block), block_edges(angles.shape[1], block)
    out = np.zeros((rows.size, cols.size))
    for i, y in enumerate(rows):
        for j, x in enumerate(cols):
            a = angles[y:y + block, x:x + block]
            out[i, j] = np.mod(0.5 * np.arctan2(np.sin(2 * a).sum(), np.cos(2 * a).sum()), np.pi)
    return out


def angle_error_deg(a, b) -> np.ndarray:
    """Unsigned difference of axial angles (mod pi), in degrees."""
    d = np.mod(np.asarray(a) - np.asarray(b), np.pi)
    return np.degrees(np.minimum(d, np.pi - d))


def iou(a: np.ndarray, b: np.ndarray) -> float:
    union = np.count_nonzero(a | b)
    return 1.0 if union == 0 else np.count_nonzero(a & b) / union


def union_find_components(arr: np.ndarray, eight: bool = True) -> int:
    """Two-pass union-find labelling, independent of scipy."""
    h, w = arr.shape
    parent = {}

    def find(p):
        while parent[p] != p:
            parent[p] = parent[parent[p]]
            p = parent[p]
        return p

    offsets = [(-1, 0), (0, -1)] + ([(-1, -1), (-1, 1)] if eight else [])
    for r in range(h):
        for c in range(w):
            if not arr[r, c]:
                continue
            parent[(r, c)] = (r, c)
            for dr, dc in offsets:
                q = (r + dr, c + dc)
                if 0 <= q[0] < h and 0 <= q[1] < w and arr[q]:
                    ra, rb = find((r, c)), find(q)
                    if ra != rb:
                        parent[ra] = rb
    return len({find(p) for p in parent})


def simulate_dilating_loop(image: np.ndarray, radius: int, threshold: float, alpha: float,
                           epsilon: float, required: int, cap: int = 50):
    """Brute-force run of the recursion with a grow-by-dilation classifier.

    Selection is ``pixel >= threshold``; dilation and thinning are written out
    with explicit loops. Returns the foreground counts and difference rates.
    """
    from test_thinning import reference_thin

    h, w = image.shape

    def classify(a):
        seed = a >= threshold
        out = np.zeros_like(seed)
        for r in range(h):
            for c in range(w):
                out[r, c] = seed[max(0, r - radius):r + radius + 1,
                                 max(0, c - radius):c + radius + 1].any()
        return out

    comp = image.astype(float).copy()
    pred = classify(comp)
    counts, rates = [int(pred.sum())], [None]
    history = []
    while True:
        overlay = reference_thin(~pred, guard=True)  # valley skeleton
        comp = np.clip(comp + alpha * overlay, 0.0, 1.0)
        pred = classify(comp)
        n = int(pred.sum())
        d = 0.0 if n == 0 else (n - counts[-1]) / n
        counts.append(n)
        rates.append(d)
        history.append(d)
        if len(history) >= required and all(x <= epsilon for x in history[-required:]):
            return counts, rates
        if len(counts) >= cap:
            return counts, rates
