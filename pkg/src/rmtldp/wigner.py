"""Wigner matrix assembly, magnitude-band truncation, and spike planting."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .matcore import HermMatrix, eigvals, opnorm, trace_power
from .randsrc import GaussianProfile, TailProfile, draw_wigner_entries

__all__ = [
    "assemble_wigner",
    "TruncationSplit",
    "truncation_split",
    "count_nonzero",
    "PlantSpec",
    "plant_deformation",
    "LowRankTraceCheck",
    "low_rank_trace_check",
]


def source_beta(source) -> int:
    if isinstance(source, GaussianProfile):
        return source.beta
    if isinstance(source, TailProfile):
        return source.matrix_beta
    raise TypeError(f"unknown entry source {type(source).__name__}")


def _dense_from_entries(n: int, diag, off, beta: int) -> np.ndarray:
    dtype = np.complex128 if beta == 2 else np.float64
    mat = np.zeros((n, n), dtype=dtype)
    iu = np.triu_indices(n, k=1)
    mat[iu] = off
    mat[np.diag_indices(n)] = diag
    return mat


def assemble_wigner(n: int, source, rng: np.random.Generator) -> tuple[HermMatrix, HermMatrix]:
    """Draw one Wigner matrix; returns (raw, raw / sqrt(n))."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    beta = source_beta(source)
    diag, off = draw_wigner_entries(source, n, rng)
    raw = HermMatrix(beta, _dense_from_entries(n, diag, off, beta))
    return raw, raw.scaled(1.0 / math.sqrt(n))


@dataclass(frozen=True)
class TruncationSplit:
    """Four-way decomposition of the normalized matrix by raw-entry
    magnitude: small / intermediate / deviation-carrying / huge bands.

    The supports are pairwise disjoint and the parts sum back to the
    normalized matrix entry-exactly.
    """

    small: HermMatrix
    intermediate: HermMatrix
    deviation: HermMatrix
    huge: HermMatrix
    eps: float
    d: float
    p: int

    def total(self) -> HermMatrix:
        return HermMatrix(
            self.small.beta,
            self.small.matrix + self.intermediate.matrix + self.deviation.matrix + self.huge.matrix,
        )


def truncation_split(
    raw: HermMatrix,
    p: int,
    eps: float = 0.1,
    d: float | None = None,
    alpha: float | None = None,
) -> TruncationSplit:
    """Band the raw entries by magnitude and rescale each part by 1/sqrt(n).

    Thresholds: (log n)**d closes the small band; eps * n**(1/2+1/p) and
    n**(1/2+1/p) / eps bound the deviation-carrying band (both ends
    closed); the intermediate band is open on both sides.  d defaults to
    2/alpha + 0.5 so that alpha*d > 1 holds with margin.
    """
    n = raw.n
    if n < 3:
        raise ValueError("truncation bands are degenerate for n < 3 (log n <= 1)")
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if d is None:
        if alpha is None:
            raise ValueError("either d or alpha must be given")
        d = 2.0 / alpha + 0.5
    if alpha is not None and alpha * d <= 1.0:
        raise ValueError(f"need alpha*d > 1, got alpha*d = {alpha * d}")

    t1 = math.log(n) ** d
    t2 = eps * n ** (0.5 + 1.0 / p)
    t3 = n ** (0.5 + 1.0 / p) / eps
    mag = np.abs(raw.matrix)
    m_small = mag <= t1
    m_mid = ~m_small & (mag < t2)
    m_dev = ~m_small & ~m_mid & (mag <= t3)
    m_huge = ~(m_small | m_mid | m_dev)

    # multiply by the reciprocal so parts reassemble the normalized matrix
    # bit-exactly (assemble_wigner scales the same way)
    scaled = raw.matrix * (1.0 / math.sqrt(n))
    parts = [HermMatrix(raw.beta, np.where(m, scaled, 0.0)) for m in (m_small, m_mid, m_dev, m_huge)]
    return TruncationSplit(*parts, eps=float(eps), d=float(d), p=int(p))


def count_nonzero(C: HermMatrix) -> int:
    """Number of ordered pairs (i, j), both triangles, with a nonzero entry."""
    return int(np.count_nonzero(C.matrix))


@dataclass(frozen=True)
class PlantSpec:
    """Deformation shape and size: a diagonal spike of (n*delta)**(1/p) or
    an off-diagonal Hermitian pair of (n*delta/2)**(1/p)."""

    shape: str
    delta: float
    p: int

    def __post_init__(self):
        if self.shape not in ("diag_spike", "offdiag_pair"):
            raise ValueError(f"unknown plant shape {self.shape!r}")
        if self.delta <= 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.p < 3:
            raise ValueError(f"p must be >= 3, got {self.p}")

    def theta(self, n: int) -> float:
        if self.shape == "diag_spike":
            return (n * self.delta) ** (1.0 / self.p)
        return (n * self.delta / 2.0) ** (1.0 / self.p)


def plant_deformation(X_N: HermMatrix, spec: PlantSpec) -> HermMatrix:
    """Replace the designated entries of the normalized matrix with the
    deformation magnitude (the original entry is removed, not added to)."""
    n = X_N.n
    theta = spec.theta(n)
    if spec.shape == "diag_spike":
        return X_N.with_entry(0, 0, theta)
    if n < 2:
        raise ValueError("offdiag_pair needs n >= 2")
    return X_N.with_entry(0, 1, theta)


@dataclass(frozen=True)
class LowRankTraceCheck:
    lhs: float
    rhs: float
    rank: int
    ok: bool


def low_rank_trace_check(H: HermMatrix, C: HermMatrix, p: int) -> LowRankTraceCheck:
    """Check |tr (H+C)^p - tr H^p - tr C^p| <= 2^p r max_k ||H||^k ||C||^(p-k)
    with r the numerical rank of C (tolerance 1e-10 * opnorm)."""
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    lam_c = eigvals(C)
    top = float(np.max(np.abs(lam_c)))
    rank = int(np.count_nonzero(np.abs(lam_c) > 1e-10 * top)) if top > 0 else 0
    lhs = abs(trace_power(H + C, p) - trace_power(H, p) - trace_power(C, p))
    nh, nc = opnorm(H), opnorm(C)
    rhs = 0.0
    if rank > 0:
        rhs = (2.0 ** p) * rank * max(nh ** k * nc ** (p - k) for k in range(1, p))
    return LowRankTraceCheck(lhs=lhs, rhs=rhs, rank=rank, ok=lhs <= rhs * (1.0 + 1e-9))
