"""Dense linear-algebra helpers shared by the boundary-operator modules.

Discrete boundary operators act in the weighted inner product
<u, v> = sum_i w_i u_i . conj(v_i); conjugating by D = diag(sqrt(w)) turns
weighted adjoints into plain matrix adjoints, so norms, SVDs and
eigenproblems are run on the symmetrised matrices.
"""

import numpy as np


def weight_vector(surface, components=2):
    """Repeated quadrature weights matching C^components node data."""
    return np.repeat(surface.weights, components)


def symmetrize(matrix, surface, components=2):
    """D A D^{-1} with D = diag(sqrt(w))."""
    d = np.sqrt(weight_vector(surface, components))
    return matrix * (d[:, None] / d[None, :])


def lift(vec, surface, components=2):
    """Map plain-l2 vectors of the symmetrised operator back to node data."""
    d = np.sqrt(weight_vector(surface, components))
    if vec.ndim == 2:
        return vec / d[:, None]
    return vec / d


def weighted_hermitian_part(matrix, surface, components=2):
    """Project onto the self-adjoint part in the weighted inner product."""
    w = weight_vector(surface, components)
    adj = (matrix.conj().T * w[None, :]) / w[:, None]
    return 0.5 * (matrix + adj)


def op_norm2(matrix_or_matvec, n=None, iters=60, seed=7):
    """2-norm estimate by power iteration on A^H A.

    Accepts a dense matrix or a (matvec, rmatvec) pair with dimension n.
    Relative accuracy ~1e-3 suffices for residual-size comparisons.
    """
    if isinstance(matrix_or_matvec, np.ndarray):
        a = matrix_or_matvec
        matvec = lambda v: a @ v
        rmatvec = lambda v: a.conj().T @ v
        n = a.shape[1]
    else:
        matvec, rmatvec = matrix_or_matvec
        if n is None:
            raise ValueError("need dimension n with matvec input")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(iters):
        w = matvec(v)
        sigma = np.linalg.norm(w)
        if sigma == 0.0:
            return 0.0
        v = rmatvec(w)
        v /= np.linalg.norm(v)
    return float(sigma)
