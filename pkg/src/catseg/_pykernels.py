"""Pure-Python kernels, used when the compiled extension is unavailable."""
import math

import numpy as np


def jacobi_sweep(g: np.ndarray, vt: np.ndarray, tol: float) -> float:
    n = g.shape[0]
    worst = 0.0
    for i in range(n - 1):
        gi = g[i]
        for j in range(i + 1, n):
            gj = g[j]
            alpha = float(gi @ gi)
            beta = float(gj @ gj)
            gamma = float(gi @ gj)
            if alpha == 0.0 or beta == 0.0 or gamma == 0.0:
                continue
            ratio = abs(gamma) / math.sqrt(alpha * beta)
            worst = max(worst, ratio)
            if ratio <= tol:
                continue
            zeta = (beta - alpha) / (2.0 * gamma)
            if zeta >= 0.0:
                t = 1.0 / (zeta + math.sqrt(1.0 + zeta * zeta))
            else:
                t = -1.0 / (-zeta + math.sqrt(1.0 + zeta * zeta))
            c = 1.0 / math.sqrt(1.0 + t * t)
            s = c * t
            x, y = gi.copy(), gj.copy()
            gi[:] = c * x - s * y
            gj[:] = s * x + c * y
            x, y = vt[i].copy(), vt[j].copy()
            vt[i] = c * x - s * y
            vt[j] = s * x + c * y
    return worst


def pk_disagreements(ref_seg: np.ndarray, hyp_seg: np.ndarray, k: int) -> int:
    same_ref = ref_seg[:-k] == ref_seg[k:]
    same_hyp = hyp_seg[:-k] == hyp_seg[k:]
    return int(np.count_nonzero(same_ref != same_hyp))


def window_average(probs: np.ndarray, starts: np.ndarray, lengths: np.ndarray, n: int):
    total = np.zeros(n, dtype=np.float64)
    count = np.zeros(n, dtype=np.int64)
    for w in range(probs.shape[0]):
        s, m = int(starts[w]), int(lengths[w])
        total[s : s + m] += probs[w, :m]
        count[s : s + m] += 1
    seen = count > 0
    total[seen] /= count[seen]
    return total, count
