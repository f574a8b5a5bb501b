"""Coherence, error bounds, and subspace-distance analysis.

This module carries the quantitative story behind uniform column sampling:

* ``coherence`` measures how concentrated a k-dimensional subspace is on
  the coordinate axes; it ranges over ``[1, n/k]`` and is what makes
  uniform sampling succeed or fail.
* ``deterministic_bound`` evaluates the structural error bound
  ``||Sigma_2||_2 * (1 + ||Omega_2 Omega_1^+||_2^2)`` for a concrete
  sample, valid whenever ``Omega_1 = U_1^T S`` has full row rank.
* ``required_samples`` / ``probabilistic_bound`` / ``chernoff_tail`` form
  the probabilistic counterpart: sampling
  ``l >= 2 tau k ln(k/delta) / (1-eps)^2`` columns keeps the error below
  ``lambda_{k+1} * (1 + n/(eps l))`` with probability at least
  ``1 - delta``, and the tail of the event that dominates the failure mode
  (the sampled rows of U_1 losing their smallest Gram eigenvalue) decays
  like ``k * exp(-(1-eps)^2 l / (2 k tau))``.
* ``davis_kahan_distance`` / ``davis_kahan_bound`` translate a matrix
  approximation error into a dominant-subspace perturbation through the
  classical eigenvector perturbation inequality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .matcore import EPS, SymMatrix, pinv, spectral_norm, sym_eig
from .matcore import SpectralPartition
from .sampling import ColumnSample

# Orthonormality tolerance (spectral deviation of U^T U from the identity).
ORTHONORMAL_TOL = 1e-8


class BoundInapplicableError(ValueError):
    """The deterministic bound needs Omega_1 to have full row rank."""

    def __init__(self, min_eig: float, tol: float):
        self.min_eig = float(min_eig)
        self.tol = float(tol)
        super().__init__(
            f"deterministic bound inapplicable: min eigenvalue of the sampled "
            f"Gram matrix is {min_eig!r} (rank tolerance {tol!r})"
        )


class RankDeficientError(ValueError):
    """The sampled rows of U_1 are numerically rank deficient."""

    def __init__(self, min_eig: float, tol: float):
        self.min_eig = float(min_eig)
        self.tol = float(tol)
        super().__init__(
            f"Omega_1 is rank deficient: min Gram eigenvalue {min_eig!r} "
            f"<= tolerance {tol!r}"
        )


class GapViolatedError(ValueError):
    """The eigenvalue gap needed by the subspace bound is not positive."""

    def __init__(self, gap: float):
        self.gap = float(gap)
        super().__init__(f"eigenvalue gap must be positive, got {gap!r}")


@dataclass(frozen=True)
class BoundReport:
    """Bundle of the probabilistic-analysis quantities for one setting.

    ``det_bound`` is optional: the structural bound needs an actual matrix
    and sample, which some callers (the ``bounds`` CLI path) do not have.
    ``prob_bound`` is expressed in units of ``lambda_{k+1}`` when the
    caller passes ``lambda_k1 = 1``.
    """

    k: int
    tau: float
    epsilon: float
    delta: float
    l_required: int
    prob_bound: float
    det_bound: float | None
    chernoff_tail: float


def _check_orthonormal(u: np.ndarray, what: str) -> None:
    if u.ndim != 2:
        raise ValueError(f"{what} must be a 2-d array, got ndim={u.ndim}")
    n, k = u.shape
    if not 1 <= k <= n:
        raise ValueError(f"{what} must have 1 <= k <= n columns, got shape {u.shape}")
    dev = spectral_norm(u.T @ u - np.eye(k))
    if dev > ORTHONORMAL_TOL:
        raise ValueError(
            f"{what} does not have orthonormal columns: "
            f"||U^T U - I||_2 = {dev:.3e} exceeds {ORTHONORMAL_TOL:g}"
        )


def coherence(u: np.ndarray) -> float:
    """Coherence of the subspace spanned by the orthonormal columns of u.

    ``mu_0(U) = (n/k) * max_i ||row_i(U)||^2``.  Depends only on the span
    (any orthonormal basis of the same subspace gives the same value) and
    lies in ``[1, n/k]``: 1 for perfectly spread bases, n/k when the
    subspace contains a coordinate axis.
    """
    u = np.asarray(u, dtype=np.float64)
    _check_orthonormal(u, "coherence input")
    n, k = u.shape
    row_norms_sq = np.sum(u * u, axis=1)
    return float(n / k * np.max(row_norms_sq))


def omega_matrices(
    part: SpectralPartition, sample: ColumnSample
) -> tuple[np.ndarray, np.ndarray]:
    """The sampled-row blocks Omega_1 = U_1^T S and Omega_2 = U_2^T S.

    Both are gathers of rows of the eigenvector blocks (k x l and
    (n-k) x l); no arithmetic is applied.
    """
    if sample.n != part.n:
        raise ValueError(
            f"sample is over n={sample.n} but the partition has n={part.n}"
        )
    idx = list(sample.indices)
    omega1 = part.u1[idx, :].T.copy()
    omega2 = part.u2[idx, :].T.copy()
    return omega1, omega2


def min_eig_gram(u: np.ndarray, sample: ColumnSample) -> float:
    """Smallest eigenvalue of the Gram matrix of the sampled rows of u.

    This is ``lambda_k(U^T S S^T U)``; it is positive exactly when the
    sampled rows of u span all k directions, and ``1 / min_eig_gram`` is
    the squared spectral norm of ``(U^T S)^+``.
    """
    u = np.asarray(u, dtype=np.float64)
    if sample.n != u.shape[0]:
        raise ValueError(f"sample is over n={sample.n} but u has {u.shape[0]} rows")
    rows = u[list(sample.indices), :]
    g = rows.T @ rows
    return float(np.linalg.eigvalsh(g)[0])


def full_rank_tolerance(n: int) -> float:
    """Rank-decision threshold for the sampled Gram matrix: n * eps."""
    return n * EPS


def pinv_norm_sq_omega1(part: SpectralPartition, sample: ColumnSample) -> float:
    """``||Omega_1^+||_2^2``, computed as ``1 / min_eig_gram(U_1, S)``.

    Raises
    ------
    RankDeficientError
        When the smallest Gram eigenvalue is at or below ``n * eps``,
        i.e. the sample misses part of the dominant subspace.
    """
    m = min_eig_gram(part.u1, sample)
    tol = full_rank_tolerance(part.n)
    if m <= tol:
        raise RankDeficientError(m, tol)
    return 1.0 / m


def deterministic_bound(part: SpectralPartition, sample: ColumnSample) -> float:
    """Structural error bound ``||Sigma_2||_2 * (1 + ||Omega_2 Omega_1^+||_2^2)``.

    Valid for any PSD matrix and any sample for which Omega_1 has full row
    rank; dominates the spectral error of the extension built from the
    same sample.

    Raises
    ------
    BoundInapplicableError
        When Omega_1 is numerically rank deficient (min Gram eigenvalue
        at or below ``n * eps``), in which case the bound does not apply.
    """
    m = min_eig_gram(part.u1, sample)
    tol = full_rank_tolerance(part.n)
    if m <= tol:
        raise BoundInapplicableError(m, tol)
    omega1, omega2 = omega_matrices(part, sample)
    sigma2_norm = float(np.max(np.abs(part.sigma2))) if part.sigma2.size else 0.0
    cross = spectral_norm(omega2 @ pinv(omega1))
    return sigma2_norm * (1.0 + cross**2)


def required_samples(k: int, tau: float, delta: float, epsilon: float) -> int:
    """Samples sufficient for the probabilistic guarantee.

    The smallest integer ``l`` with
    ``l >= 2 * tau * k * ln(k / delta) / (1 - epsilon)^2``, floored at 1.
    At ``epsilon = 1/2`` the prefactor is ``8 tau k``.
    """
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    if not tau >= 1.0 - 1e-9:
        raise ValueError(f"tau must be >= 1, got {tau!r}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    value = 2.0 * tau * k * math.log(k / delta) / (1.0 - epsilon) ** 2
    return max(1, math.ceil(value))


def probabilistic_bound(lambda_k1: float, n: int, l: int, epsilon: float) -> float:
    """High-probability error level ``lambda_k1 * (1 + n / (epsilon * l))``.

    With ``l`` at least :func:`required_samples`, the spectral error of the
    extension stays below this value with probability above ``1 - delta``.
    At ``epsilon = 1/2`` the factor is ``1 + 2n/l``.
    """
    if lambda_k1 < 0.0:
        raise ValueError(f"lambda_k1 must be >= 0, got {lambda_k1!r}")
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    if not isinstance(l, (int, np.integer)) or not 1 <= l <= n:
        raise ValueError(f"l must be an integer in [1, n={n}], got {l!r}")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    return float(lambda_k1) * (1.0 + n / (epsilon * l))


def chernoff_tail(k: int, tau: float, l: int, epsilon: float) -> float:
    """Failure-probability bound ``k * exp(-(1-eps)^2 * l / (2 k tau))``.

    Bounds the probability that the sampled rows of the dominant basis
    lose their smallest Gram eigenvalue, i.e. that
    ``lambda_k(U^T S S^T U) <= eps * l / n``.  ``epsilon`` may take the
    closed endpoints: at ``epsilon = 1`` the bound is the trivial ``k``.
    """
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    if not tau >= 1.0 - 1e-9:
        raise ValueError(f"tau must be >= 1, got {tau!r}")
    if not isinstance(l, (int, np.integer)) or l < 1:
        raise ValueError(f"l must be a positive integer, got {l!r}")
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon!r}")
    return k * math.exp(-((1.0 - epsilon) ** 2) * l / (2.0 * k * tau))


def davis_kahan_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Spectral distance between two subspaces: ``||P_U - P_V||_2``.

    Both arguments are orthonormal bases (n x k).  The value equals the
    sine of the largest principal angle, so it lies in [0, 1]; it is 0
    exactly for equal spans and 1 when some direction of one span is
    orthogonal to all of the other.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    _check_orthonormal(u, "first basis")
    _check_orthonormal(v, "second basis")
    if u.shape != v.shape:
        raise ValueError(f"basis shapes differ: {u.shape} vs {v.shape}")
    return spectral_norm(u @ u.T - v @ v.T)


def davis_kahan_bound(a: SymMatrix, a_tilde: SymMatrix, k: int) -> float:
    """Perturbation bound on the dominant-subspace distance.

    ``||A - A_tilde||_2 / (lambda_k(A) - lambda_{k+1}(A_tilde))``, valid
    when the gap in the denominator is positive; it dominates
    ``davis_kahan_distance`` between the two dominant-k eigenspaces.

    Raises
    ------
    GapViolatedError
        When ``lambda_k(A) <= lambda_{k+1}(A_tilde)``.
    """
    if a.n != a_tilde.n:
        raise ValueError(f"matrix sizes differ: {a.n} vs {a_tilde.n}")
    if not 1 <= k <= a.n - 1:
        raise ValueError(f"k={k} out of range [1, {a.n - 1}]")
    lam_a = sym_eig(a).eigenvalues
    lam_t = sym_eig(a_tilde).eigenvalues
    gap = float(lam_a[k - 1] - lam_t[k])
    if gap <= 0.0:
        raise GapViolatedError(gap)
    return spectral_norm(a.entries - a_tilde.entries) / gap


def davis_kahan_bound_substituted(a: SymMatrix, k: int, error_bound: float) -> float:
    """Subspace bound with the approximation error substituted for the gap.

    When only an upper bound ``error_bound >= ||A - A_tilde||_2`` is known
    (not A_tilde itself), the denominator gap can be lower-bounded through
    Weyl's inequality, giving
    ``error_bound / (lambda_k(A) - lambda_{k+1}(A) - error_bound)``.
    Derived convenience form; the quotient form above is the primitive.

    Raises
    ------
    GapViolatedError
        When the substituted denominator is not positive.
    """
    if not 1 <= k <= a.n - 1:
        raise ValueError(f"k={k} out of range [1, {a.n - 1}]")
    if error_bound < 0.0:
        raise ValueError(f"error_bound must be >= 0, got {error_bound!r}")
    lam = sym_eig(a).eigenvalues
    denom = float(lam[k - 1] - lam[k]) - error_bound
    if denom <= 0.0:
        raise GapViolatedError(denom)
    return error_bound / denom


def bound_report(
    n: int,
    k: int,
    tau: float,
    epsilon: float,
    delta: float,
    l: int | None = None,
    lambda_k1: float = 1.0,
    det_bound: float | None = None,
) -> BoundReport:
    """Assemble the probabilistic quantities for one parameter setting.

    ``l`` defaults to ``min(required_samples(...), n)`` - the formula has
    no n in it and can exceed the matrix size, in which case sampling
    without replacement saturates at full sampling.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    if not isinstance(k, (int, np.integer)) or not 1 <= k <= n:
        raise ValueError(f"k must be an integer in [1, n={n}], got {k!r}")
    if not (1.0 - 1e-9) <= tau <= n / k + 1e-9:
        raise ValueError(f"tau must lie in [1, n/k={n / k:g}], got {tau!r}")
    l_required = required_samples(k, tau, delta, epsilon)
    l_eff = int(l) if l is not None else min(l_required, n)
    return BoundReport(
        k=int(k),
        tau=float(tau),
        epsilon=float(epsilon),
        delta=float(delta),
        l_required=l_required,
        prob_bound=probabilistic_bound(lambda_k1, n, l_eff, epsilon),
        det_bound=det_bound,
        chernoff_tail=chernoff_tail(k, tau, l_eff, epsilon),
    )
