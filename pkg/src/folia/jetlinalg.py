"""Small dense linear algebra over jet-valued matrices.

Matrices are lists of lists of :class:`~folia.jets.Jet` (or plain floats).
Inversion uses Newton iteration seeded with the numeric inverse of the
value parts; the residual is nilpotent in the truncated ring, so
ceil(log2(order+1)) sweeps make the inverse exact to the jet order.
"""

import math

import numpy as np

from .errors import MetricError
from .jets import Jet

__all__ = ["mat_vec", "mat_mul", "mat_inverse", "mat_values", "det2", "det3"]


def mat_vec(M, v):
    n = len(M)
    return [sum_products(M[i], v) for i in range(n)]


def sum_products(row, v):
    acc = row[0] * v[0]
    for a, b in zip(row[1:], v[1:]):
        acc = acc + a * b
    return acc


def mat_mul(A, B):
    n, m = len(A), len(B[0])
    return [
        [sum_products(A[i], [B[k][j] for k in range(len(B))]) for j in range(m)]
        for i in range(n)
    ]


def mat_values(M):
    """Value parts as an ndarray of shape (n, n, *batch)."""
    rows = []
    for row in M:
        rows.append([np.asarray(x.value if isinstance(x, Jet) else x) for x in row])
    return np.array(rows)


def mat_inverse(M):
    """Jet-valued inverse; raises MetricError on a singular value part."""
    n = len(M)
    orders = [x.order for row in M for x in row if isinstance(x, Jet)]
    order = max(orders) if orders else 0
    vals = mat_values(M)  # (n, n, *batch)
    batch = vals.shape[2:]
    flat = vals.reshape(n, n, -1).transpose(2, 0, 1)
    try:
        inv = np.linalg.inv(flat)
    except np.linalg.LinAlgError as exc:
        raise MetricError("singular matrix in jet inversion") from exc
    inv = inv.transpose(1, 2, 0).reshape((n, n) + batch)
    X = [[inv[i, j] for j in range(n)] for i in range(n)]
    sweeps = max(1, math.ceil(math.log2(order + 1))) if order else 0
    for _ in range(sweeps):
        # X <- X (2I - M X)
        MX = mat_mul(M, X)
        R = [[(2.0 if i == j else 0.0) - MX[i][j] for j in range(n)] for i in range(n)]
        X = mat_mul(X, R)
    return X


def det2(M):
    return M[0][0] * M[1][1] - M[0][1] * M[1][0]


def det3(M):
    return (
        M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1])
        - M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0])
        + M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0])
    )
