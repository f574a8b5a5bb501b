"""Shared construction helpers for the test suite.

Everything is seeded through numpy's default_rng so the suite is
deterministic end to end; the package's own Philox streams are only used
where a test targets them specifically.
"""

import numpy as np

from nystromlab import SymMatrix


def gram_psd(n: int, rng: np.random.Generator, scale: float = 1.0) -> SymMatrix:
    """Well-conditioned random PSD matrix with entries of order `scale`."""
    g = rng.standard_normal((n, n + 2))
    return SymMatrix(scale * (g @ g.T) / n)


def haar(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random n x k orthonormal basis (QR with sign fix)."""
    q, r = np.linalg.qr(rng.standard_normal((n, k)))
    sign = np.sign(np.diag(r))
    sign[sign == 0.0] = 1.0
    return q * sign


def planted_psd(
    n: int, eigs, rng: np.random.Generator
) -> tuple[SymMatrix, np.ndarray, np.ndarray]:
    """PSD matrix with a prescribed spectrum and Haar eigenbasis.

    Returns (A, U, eigs) with eigs sorted non-increasing.
    """
    lam = np.sort(np.asarray(eigs, dtype=np.float64))[::-1]
    if np.any(lam < 0):
        raise ValueError("helper expects a non-negative spectrum")
    u = haar(n, n, rng)
    return SymMatrix((u * lam) @ u.T), u, lam


def mixed_spectrum_cases(rng: np.random.Generator, n: int):
    """One matrix from each spectrum family used by the acceptance suite.

    Yields (label, SymMatrix): well-conditioned Gram, planted low rank,
    exponential decay, near-singular tail, and small/large scalings.
    """
    yield "gram", gram_psd(n, rng)
    r = int(rng.integers(1, max(2, n // 2)))
    lam = np.zeros(n)
    lam[:r] = np.sort(rng.uniform(0.5, 2.0, size=r))[::-1]
    yield f"rank-{r}", planted_psd(n, lam, rng)[0]
    lam = 1.5 * np.power(0.5, np.arange(n, dtype=float))
    yield "exp-decay", planted_psd(n, lam, rng)[0]
    lam = np.sort(rng.uniform(0.5, 2.0, size=n))[::-1]
    lam[-max(1, n // 4):] = 1e-12
    yield "near-singular", planted_psd(n, lam, rng)[0]
    yield "tiny-scale", gram_psd(n, rng, scale=1e-6)
    yield "large-scale", gram_psd(n, rng, scale=1e3)
