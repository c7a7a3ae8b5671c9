"""Haar-distributed random projections and their orthogonal complements."""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidDimensionError

ORTHO_TOL = 1e-10


@dataclass(frozen=True)
class ProjectionPair:
    """Orthonormal projection ``a`` (p x d) and its complement ``a_comp`` (p x (p-d))."""

    a: np.ndarray
    a_comp: np.ndarray
    seed: int
    p: int
    d: int

    @property
    def full(self):
        """The p x p orthogonal matrix ``[a | a_comp]``."""
        return np.hstack([self.a, self.a_comp])

    def check(self, tol=ORTHO_TOL):
        """Return True when all orthogonality invariants hold element-wise within ``tol``."""
        a, c = self.a, self.a_comp
        ok = np.allclose(a.T @ a, np.eye(self.d), rtol=0, atol=tol)
        ok &= np.allclose(c.T @ c, np.eye(self.p - self.d), rtol=0, atol=tol)
        ok &= np.allclose(a.T @ c, 0.0, rtol=0, atol=tol)
        q = self.full
        ok &= np.allclose(q @ q.T, np.eye(self.p), rtol=0, atol=tol)
        return bool(ok)


def _check_dims(p, d):
    if p < 1:
        raise InvalidDimensionError(f"p must be positive, got p={p}")
    if not 1 <= d < p:
        raise InvalidDimensionError(f"need 1 <= d < p, got d={d}, p={p}")


def haar_from_rng(p, d, rng):
    """Draw ``(a, a_comp)`` using an existing generator.

    A p x d standard Gaussian matrix is factored by Householder QR. The
    complete orthogonal factor is formed from the d reflectors, so the cost
    is O(p^2 d) rather than a full p x p factorization. Columns of ``a`` are
    multiplied by sign(diag(R)), which makes its law exactly Haar.
    """
    z = rng.standard_normal((p, d))
    q, r = np.linalg.qr(z, mode="complete")
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    a = q[:, :d] * signs
    return np.ascontiguousarray(a), np.ascontiguousarray(q[:, d:])


def generate_haar(p, d, seed):
    """Generate a Haar-distributed :class:`ProjectionPair`, deterministic in ``(p, d, seed)``."""
    _check_dims(p, d)
    rng = np.random.default_rng(seed)
    a, a_comp = haar_from_rng(p, d, rng)
    return ProjectionPair(a=a, a_comp=a_comp, seed=int(seed), p=int(p), d=int(d))


def project(x, pair):
    """Return ``(x @ a, x @ a_comp)``."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != pair.p:
        actual = x.shape[1] if x.ndim == 2 else x.shape
        raise InvalidDimensionError(f"data has {actual} columns, projection expects p={pair.p}")
    return x @ pair.a, x @ pair.a_comp
