"""Deterministic randomness and the dense linear-algebra kernels used everywhere else.

The random stream is fully specified here (splitmix64 + Box-Muller with a fixed
draw order) instead of delegating to ``numpy.random``, so that problem
instances and benchmark traces can be regenerated bit-for-bit from a 64-bit
seed, independently of the numpy version.
"""

from __future__ import annotations

import warnings

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class ConvergenceWarning(UserWarning):
    """An iterative routine hit its iteration cap before reaching tolerance."""


class Rng:
    """Counter-based splitmix64 generator.

    The k-th raw output of the stream (k = 1, 2, ...) is
    ``mix(seed + k * 0x9E3779B97F4A7C15 mod 2**64)`` with the standard
    splitmix64 finalizer, so bulk draws vectorize and the stream depends only
    on the seed and on how many values have been consumed.

    Draw-order contract (what higher layers may rely on):

    * ``uniform``  consumes 1 raw value:  ``u = (raw >> 11) * 2**-53`` in [0, 1).
    * ``gaussian`` consumes 2 raw values: ``u1 = ((raw0 >> 11) + 1) * 2**-53``
      in (0, 1], ``u2 = (raw1 >> 11) * 2**-53``, and returns the Box-Muller
      cosine branch ``sqrt(-2 ln u1) * cos(2 pi u2)`` (the sine mate is
      discarded; no values are cached between calls).
    * ``bernoulli`` consumes 1 raw value (a uniform compared against p).

    Vector draws consume values in index order; matrices fill row-major.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self._count = 0

    def _raw(self, count: int) -> np.ndarray:
        idx = np.arange(self._count + 1, self._count + count + 1, dtype=np.uint64)
        self._count += count
        z = (np.uint64(self.seed) + idx * np.uint64(_GOLDEN)) & np.uint64(_MASK64)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))

    def uniforms(self, count: int, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
        if not lo <= hi:
            raise ValueError(f"uniform bounds must satisfy lo <= hi, got ({lo}, {hi})")
        u = (self._raw(count) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return lo + (hi - lo) * u

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        return float(self.uniforms(1, lo, hi)[0])

    def gaussians(self, count: int, mean: float = 0.0, std: float = 1.0) -> np.ndarray:
        if std < 0:
            raise ValueError(f"gaussian std must be >= 0, got {std}")
        raw = self._raw(2 * count)
        u1 = ((raw[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
        u2 = (raw[1::2] >> np.uint64(11)).astype(np.float64) * 2.0**-53
        z = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
        return mean + std * z

    def gaussian(self, mean: float = 0.0, std: float = 1.0) -> float:
        return float(self.gaussians(1, mean, std)[0])

    def gaussian_matrix(self, rows: int, cols: int) -> np.ndarray:
        return self.gaussians(rows * cols).reshape(rows, cols)

    def bernoulli(self, p: float) -> bool:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"bernoulli p must lie in [0, 1], got {p}")
        return bool(self.uniform() < p)


def as_vector(x, dim: int | None = None) -> np.ndarray:
    """Coerce to a 1-D float64 array, optionally enforcing its length."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {v.shape[0]}")
    return v


def dot(a, b) -> float:
    a = as_vector(a)
    b = as_vector(b, dim=a.shape[0])
    return float(a @ b)


def matvec(m, x) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    x = as_vector(x, dim=m.shape[1])
    return m @ x


def householder_qr(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """QR factorization by Householder reflections, normalized so diag(R) >= 0.

    Works for any m x n with m >= n. The sign normalization makes the factor
    pair unique for full-rank input, which keeps seeded orthogonal sampling
    deterministic.
    """
    a = np.asarray(a, dtype=np.float64)
    m, n = a.shape
    if m < n:
        raise ValueError(f"householder_qr requires rows >= cols, got {a.shape}")
    r = a.copy()
    q = np.eye(m)
    for k in range(min(m - 1, n)):
        col = r[k:, k]
        norm = np.sqrt(col @ col)
        if norm == 0.0:
            continue
        alpha = -norm if col[0] >= 0 else norm
        v = col.copy()
        v[0] -= alpha
        vsq = v @ v
        if vsq == 0.0:
            continue
        r[k:, k:] -= np.outer(v, (2.0 / vsq) * (v @ r[k:, k:]))
        q[:, k:] -= np.outer((q[:, k:] @ v), (2.0 / vsq) * v)
    d = np.where(np.diag(r[:n, :n]) < 0.0, -1.0, 1.0)
    q[:, :n] *= d
    r[:n, :] *= d[:, None]
    return q, r


def random_orthogonal(n: int, rng: Rng) -> np.ndarray:
    """Haar-distributed n x n orthogonal matrix from a seeded Gaussian QR."""
    if n < 1:
        raise ValueError(f"random_orthogonal needs n >= 1, got {n}")
    g = rng.gaussian_matrix(n, n)
    q, _ = householder_qr(g)
    return q


def spectral_norm(m, tol: float = 1e-9, max_iter: int = 10_000) -> float:
    """Largest singular value of ``m`` by power iteration on the Gram operator.

    Starts from the normalized all-ones vector (deterministic; falls back to
    basis vectors if that happens to lie in the null space) and stops when the
    estimate's relative change drops below ``tol``. If the cap is hit first,
    the best estimate is returned and a ConvergenceWarning is emitted.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    if tol <= 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    ncols = m.shape[1]
    v = np.ones(ncols) / np.sqrt(ncols)
    w = m @ v
    basis = 0
    while not np.any(w) and basis < ncols:
        v = np.zeros(ncols)
        v[basis] = 1.0
        w = m @ v
        basis += 1
    if not np.any(w):
        return 0.0
    sigma = np.sqrt(w @ w)
    for _ in range(max_iter):
        u = m.T @ w
        unorm = np.sqrt(u @ u)
        if unorm == 0.0:
            return float(sigma)
        v = u / unorm
        w = m @ v
        new_sigma = np.sqrt(w @ w)
        if abs(new_sigma - sigma) <= tol * max(new_sigma, 1e-300):
            return float(new_sigma)
        sigma = new_sigma
    warnings.warn(
        f"power iteration did not reach tol={tol} within {max_iter} iterations",
        ConvergenceWarning,
    )
    return float(sigma)


def logsumexp(z) -> float:
    """Max-shifted log(sum(exp(z))), safe for entries of any magnitude."""
    z = as_vector(z)
    zmax = float(np.max(z))
    return zmax + float(np.log(np.sum(np.exp(z - zmax))))


def softmax(z) -> np.ndarray:
    z = as_vector(z)
    e = np.exp(z - np.max(z))
    return e / np.sum(e)
