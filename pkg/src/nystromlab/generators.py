"""Synthetic PSD instances with planted spectrum and planted coherence.

An instance is ``A = U diag(lambdas) U^T`` for an explicitly constructed
orthogonal U, so the dominant subspace, its coherence, and every
eigenvalue are known exactly - which is what lets the Monte-Carlo harness
compare measured errors against the bounds without estimating anything.

Coherence plans
---------------
``flat``      columns of the normalized Sylvester-Hadamard matrix; every
              row norm is identical, so the dominant subspace has
              coherence exactly 1 (n must be a power of two).
``low``       Haar-random orthogonal basis; coherence is small but random,
              typically a few multiples of max(k, ln n)/k.
``spiked(m)`` the first m dominant directions are standard basis vectors,
              the rest Haar in their orthogonal complement; the dominant
              subspace then contains a coordinate axis and its coherence
              is exactly n/k, the worst case.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import coherence
from .matcore import DEGENERACY_REL_TOL, SpectralPartition, SymMatrix, spectral_norm
from .sampling import RngSeed, rng_from

_SPECTRUM_KINDS = ("exact-rank-k", "exp-decay", "power-law", "custom")
_PLAN_TARGETS = ("flat", "low", "spiked")


@dataclass(frozen=True)
class SpectrumSpec:
    """Recipe for a non-increasing, non-negative eigenvalue profile.

    kind:
      * ``exact-rank-k``: linear descent ``lambda1 * (k - j + 1) / k`` over
        the top k, exactly zero after - rank k with no ties.
      * ``exp-decay``: ``lambda1 * rate ** (j - 1)``, full rank.
      * ``power-law``: ``lambda1 * j ** (-exponent)``, full rank.
      * ``custom``: explicit values (length n).
    """

    kind: str
    n: int
    k: int
    lambda1: float = 1.0
    rate: float | None = None
    exponent: float | None = None
    values: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in _SPECTRUM_KINDS:
            raise ValueError(
                f"unknown spectrum kind {self.kind!r}; expected one of {_SPECTRUM_KINDS}"
            )
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 1 <= self.k <= self.n:
            raise ValueError(f"k must lie in [1, n={self.n}], got {self.k}")
        if self.kind != "custom" and not self.lambda1 > 0.0:
            raise ValueError(f"lambda1 must be > 0, got {self.lambda1!r}")
        if self.kind == "exp-decay":
            if self.rate is None or not 0.0 < self.rate <= 1.0:
                raise ValueError(f"exp-decay needs rate in (0, 1], got {self.rate!r}")
        if self.kind == "power-law":
            if self.exponent is None or not self.exponent > 0.0:
                raise ValueError(
                    f"power-law needs a positive exponent, got {self.exponent!r}"
                )
        if self.kind == "custom":
            if self.values is None or len(self.values) != self.n:
                got = None if self.values is None else len(self.values)
                raise ValueError(f"custom spectrum needs exactly n={self.n} values, got {got}")

    def eigenvalues(self) -> np.ndarray:
        """Materialize the profile as a length-n non-increasing array."""
        j = np.arange(1, self.n + 1, dtype=np.float64)
        if self.kind == "exact-rank-k":
            vals = np.where(j <= self.k, self.lambda1 * (self.k - j + 1) / self.k, 0.0)
        elif self.kind == "exp-decay":
            vals = self.lambda1 * np.asarray(self.rate) ** (j - 1)
        elif self.kind == "power-law":
            vals = self.lambda1 * j ** (-self.exponent)
        else:
            vals = np.asarray(self.values, dtype=np.float64)
        if np.any(vals < 0.0):
            raise ValueError("spectrum contains a negative eigenvalue")
        if np.any(np.diff(vals) > 0.0):
            raise ValueError("spectrum is not non-increasing")
        return vals


@dataclass(frozen=True)
class CoherencePlan:
    """Which orthogonal basis to plant: flat, low (Haar), or spiked(m)."""

    target: str
    m: int = 1

    def __post_init__(self):
        if self.target not in _PLAN_TARGETS:
            raise ValueError(
                f"unknown coherence plan {self.target!r}; expected one of {_PLAN_TARGETS}"
            )
        if self.target == "spiked" and self.m < 1:
            raise ValueError(f"spiked plan needs m >= 1, got {self.m}")


def random_orthonormal(n: int, k: int, seed: RngSeed) -> np.ndarray:
    """Haar-distributed n x k orthonormal basis.

    QR of an iid standard normal matrix with the sign of each R diagonal
    folded into the corresponding Q column, which is what makes the
    distribution exactly Haar rather than QR-convention dependent.
    """
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    rng = rng_from(seed)
    g = rng.standard_normal((n, k))
    q, r = np.linalg.qr(g)
    sign = np.sign(np.diag(r))
    sign[sign == 0.0] = 1.0
    return q * sign


def flat_orthonormal(n: int, k: int) -> np.ndarray:
    """First k columns of the normalized Sylvester-Hadamard matrix.

    Every entry is +-1/sqrt(n), so all row norms agree and the coherence of
    the span is exactly 1 for any k.  Deterministic; n must be a power of
    two.
    """
    if n < 1 or (n & (n - 1)) != 0:
        raise ValueError(f"flat basis needs n to be a power of two, got {n}")
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    h = np.ones((1, 1))
    while h.shape[0] < n:
        h = np.block([[h, h], [h, -h]])
    return h[:, :k] / np.sqrt(n)


def psd_from_spectrum(u: np.ndarray, lambdas: np.ndarray) -> SymMatrix:
    """Assemble ``U diag(lambdas) U^T`` from an n x n orthogonal U.

    The eigenvalues must already be non-increasing and non-negative; this
    is a constructor, so nothing is clamped here.
    """
    u = np.asarray(u, dtype=np.float64)
    lam = np.asarray(lambdas, dtype=np.float64)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"u must be square orthogonal, got shape {u.shape}")
    n = u.shape[0]
    if lam.shape != (n,):
        raise ValueError(f"lambdas must have shape ({n},), got {lam.shape}")
    dev = spectral_norm(u.T @ u - np.eye(n))
    if dev > 1e-8:
        raise ValueError(f"u is not orthogonal: ||U^T U - I||_2 = {dev:.3e}")
    if np.any(lam < 0.0):
        raise ValueError("lambdas must be non-negative")
    if np.any(np.diff(lam) > 0.0):
        raise ValueError("lambdas must be non-increasing")
    return SymMatrix((u * lam) @ u.T)


def _planted_basis(n: int, plan: CoherencePlan, k: int, seed: RngSeed) -> np.ndarray:
    """Full n x n orthogonal matrix realizing the coherence plan for U_1."""
    if plan.target == "flat":
        return flat_orthonormal(n, n)
    if plan.target == "low":
        return random_orthonormal(n, n, seed)
    # spiked(m): m distinct coordinate axes first, Haar in the complement.
    m = plan.m
    if m > k:
        raise ValueError(f"spiked plan m={m} exceeds k={k}")
    if m >= n:
        raise ValueError(f"spiked plan m={m} must be < n={n}")
    rng = rng_from(seed)
    spikes = [int(x) for x in rng.permutation(n)[:m]]
    rest = [i for i in range(n) if i not in set(spikes)]
    g = rng.standard_normal((n - m, n - m))
    q, r = np.linalg.qr(g)
    sign = np.sign(np.diag(r))
    sign[sign == 0.0] = 1.0
    q = q * sign
    u = np.zeros((n, n))
    u[spikes, np.arange(m)] = 1.0
    u[np.ix_(rest, np.arange(m, n))] = q
    return u


def planted_instance(
    spec: SpectrumSpec, plan: CoherencePlan, seed: RngSeed
) -> tuple[SymMatrix, SpectralPartition, float]:
    """Build a PSD instance with known spectrum and known dominant subspace.

    Returns ``(A, partition, tau)`` where the partition's blocks are the
    planted eigenvector/eigenvalue blocks at the spec's k and tau is the
    exact coherence of the planted dominant basis.
    """
    n, k = spec.n, spec.k
    lam = spec.eigenvalues()
    u = _planted_basis(n, plan, k, seed)
    a = psd_from_spectrum(u, lam)
    degenerate = False
    if k < n:
        scale = max(abs(float(lam[0])), 1.0)
        degenerate = float(lam[k - 1] - lam[k]) <= DEGENERACY_REL_TOL * scale
    part = SpectralPartition(
        u1=u[:, :k],
        u2=u[:, k:],
        sigma1=lam[:k].copy(),
        sigma2=lam[k:].copy(),
        degenerate=degenerate,
    )
    tau = coherence(part.u1)
    return a, part, tau


def parse_spectrum(text: str, n: int, k: int, lambda1: float = 1.0) -> SpectrumSpec:
    """Parse a CLI spectrum string.

    Grammar: ``exact-rank-k`` | ``exp:RATE`` | ``pow:EXPONENT`` |
    ``custom:v1,v2,...``.
    """
    text = text.strip()
    if text == "exact-rank-k":
        return SpectrumSpec(kind="exact-rank-k", n=n, k=k, lambda1=lambda1)
    if text.startswith("exp:"):
        return SpectrumSpec(
            kind="exp-decay", n=n, k=k, lambda1=lambda1, rate=float(text[4:])
        )
    if text.startswith("pow:"):
        return SpectrumSpec(
            kind="power-law", n=n, k=k, lambda1=lambda1, exponent=float(text[4:])
        )
    if text.startswith("custom:"):
        values = tuple(float(tok) for tok in text[7:].split(",") if tok.strip())
        return SpectrumSpec(kind="custom", n=n, k=k, values=values)
    raise ValueError(
        f"unrecognized spectrum {text!r}; expected 'exact-rank-k', 'exp:RATE', "
        f"'pow:EXPONENT', or 'custom:v1,v2,...'"
    )


def parse_plan(text: str) -> CoherencePlan:
    """Parse a CLI coherence-plan string: ``flat`` | ``low`` | ``spiked:M``."""
    text = text.strip()
    if text in ("flat", "low"):
        return CoherencePlan(target=text)
    if text.startswith("spiked"):
        m = 1
        if ":" in text:
            m = int(text.split(":", 1)[1])
        return CoherencePlan(target="spiked", m=m)
    raise ValueError(
        f"unrecognized coherence plan {text!r}; expected 'flat', 'low', or 'spiked:M'"
    )
