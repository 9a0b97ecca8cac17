"""Row-sparse complex matrix primitives for the multiple measurement vector model.

Matrices are plain ``numpy`` arrays of dtype ``complex128``; support sets are
sorted ``int64`` index arrays.
"""

import numpy as np


def as_complex_matrix(x, name="matrix"):
    """Convert `x` to a finite 2-D complex128 array or raise ValueError."""
    arr = np.asarray(x, dtype=np.complex128)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_support(indices, p=None):
    """Normalize an iterable of row indices into a sorted, duplicate-free array."""
    idx = np.unique(np.fromiter(indices, dtype=np.int64))
    if idx.size and idx[0] < 0:
        raise ValueError(f"negative row index {idx[0]}")
    if p is not None and idx.size and idx[-1] >= p:
        raise ValueError(f"row index {idx[-1]} out of range for {p} rows")
    return idx


def row_norms(S):
    """Euclidean norm of every row of `S`, safe against under- and overflow."""
    mag = np.abs(np.asarray(S))
    scale = mag.max(axis=1, initial=0.0)
    safe = np.where(scale > 0, scale, 1.0)
    return scale * np.sqrt(np.sum((mag / safe[:, None]) ** 2, axis=1))


def hard_threshold(S, K):
    """Keep the `K` rows of largest l2-norm and zero the rest.

    Ties at the cut are resolved in favour of the lowest row index.

    Parameters
    ----------
    S : ndarray, shape (p, q)
    K : int
        Number of rows retained, ``0 <= K <= p``.

    Returns
    -------
    S_K : ndarray, shape (p, q)
        Thresholded copy of `S`.
    support : ndarray of int
        Retained rows that are nonzero in `S`, increasing.
    """
    S = np.asarray(S)
    p = S.shape[0]
    if not 0 <= K <= p:
        raise ValueError(f"K must lie in [0, {p}], got {K}")
    norms = row_norms(S)
    # stable sort on -norm keeps the lowest index first among equal norms
    keep = np.sort(np.argsort(-norms, kind="stable")[:K])
    out = np.zeros_like(S)
    out[keep] = S[keep]
    return out, keep[norms[keep] > 0]


def sparsify_to_support(S, support):
    """Copy of `S` with every row outside `support` set to zero."""
    S = np.asarray(S)
    idx = as_support(support, S.shape[0])
    out = np.zeros_like(S)
    out[idx] = S[idx]
    return out


def weighted_inner_product(A, B, W):
    """Return ``sum(W * A * conj(B))``, the weighted Hermitian inner product."""
    A, B, W = np.asarray(A), np.asarray(B), np.asarray(W)
    if not (A.shape == B.shape == W.shape):
        raise ValueError(f"shape mismatch: {A.shape}, {B.shape}, {W.shape}")
    # split form keeps <A, A>_W exactly real
    re = np.sum(W * (A.real * B.real + A.imag * B.imag))
    im = np.sum(W * (A.imag * B.real - A.real * B.imag))
    return complex(re, im)


def row_support(S, tol=0.0):
    """Indices of the rows of `S` whose l2-norm exceeds `tol`."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return np.flatnonzero(row_norms(S) > tol).astype(np.int64)
