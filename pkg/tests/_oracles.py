"""Independent reference computations used as test oracles.

Nothing here imports the code under test's algorithms; each function is a
direct transcription of a definition.
"""
import numpy as np


def matmul_loops(a, b):
    m, k = len(a), len(a[0])
    n = len(b[0])
    return [[sum(a[i][t] * b[t][j] for t in range(k)) for j in range(n)] for i in range(m)]


def central_difference(f, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """d f / d x by central differences; ``x`` is perturbed in place and restored."""
    grad = np.zeros_like(x, dtype=np.float64)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        up = f()
        flat[i] = orig - h
        down = f()
        flat[i] = orig
        gflat[i] = (up - down) / (2 * h)
    return grad


def relative_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-6) -> float:
    """``||a - b|| / max(||a|| + ||b||, floor)``.

    The floor only matters for tensors whose true gradient is zero, where
    finite differences return rounding noise of order 1e-11.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), floor))


def same_segment(boundaries, i, j) -> bool:
    """Sentences i < j share a segment iff no sentence in (i, j] starts one."""
    for t in range(i + 1, j + 1):
        if boundaries[t] == 1:
            return False
    return True


def pk_brute_force(ref, hyp, k) -> float:
    n = len(ref)
    wrong = 0
    total = 0
    for i in range(0, n - k):
        total += 1
        if same_segment(ref, i, i + k) != same_segment(hyp, i, i + k):
            wrong += 1
    return wrong / total
