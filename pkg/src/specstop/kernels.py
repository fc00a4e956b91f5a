"""Kernel evaluation, normalized Gram matrices, and eigensystem utilities.

Everything downstream works in the eigenbasis of the normalized Gram matrix
``K[i, j] = k(x_i, x_j) / n``: responses are rotated into that basis once and
all filter trajectories, risks, and stopping rules are evaluated on the
resulting coordinates.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

# Relative threshold (against the top eigenvalue) for the numerical rank.
RANK_TOL = 1e-10
# Eigenvalues below this (relative to the top one) trigger a warning before
# being clamped to zero: the Gram matrix should be positive semidefinite.
NEG_EIG_WARN = -1e-8
# Symmetry tolerance on eigensystem inputs.
SYM_TOL = 1e-12

_KIND_NAMES = ("sobolev_min", "polynomial", "gaussian", "laplace")


# ---------------------------------------------------------------------------
# kernel kinds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KernelKind:
    """A positive-semidefinite kernel on scalar inputs.

    Parameters
    ----------
    name : str
        One of ``"sobolev_min"`` (``min(x, y)`` on [0, 1]), ``"polynomial"``
        (``(1 + x*y)**degree``), ``"gaussian"``
        (``exp(-(x - y)**2 / (2 * bandwidth**2))``), or ``"laplace"``
        (``exp(-|x - y| / bandwidth)``).
    degree : int, optional
        Polynomial degree; required for ``"polynomial"``, at least 1.
    bandwidth : float, optional
        Length scale; required for ``"gaussian"`` and ``"laplace"``,
        strictly positive.
    """

    name: str
    degree: Optional[int] = None
    bandwidth: Optional[float] = None

    def __post_init__(self):
        if self.name not in _KIND_NAMES:
            raise ValueError(f"unknown kernel kind {self.name!r}")
        if self.name == "polynomial":
            if self.degree is None or int(self.degree) < 1 or self.degree != int(self.degree):
                raise ValueError("polynomial kernel needs an integer degree >= 1")
        if self.name in ("gaussian", "laplace"):
            if self.bandwidth is None or not np.isfinite(self.bandwidth) or self.bandwidth <= 0:
                raise ValueError(f"{self.name} kernel needs a bandwidth > 0")


def sobolev_min() -> KernelKind:
    return KernelKind("sobolev_min")


def polynomial(degree: int) -> KernelKind:
    return KernelKind("polynomial", degree=degree)


def gaussian(bandwidth: float) -> KernelKind:
    return KernelKind("gaussian", bandwidth=bandwidth)


def laplace(bandwidth: float) -> KernelKind:
    return KernelKind("laplace", bandwidth=bandwidth)


def _check_domain(kind: KernelKind, values: np.ndarray) -> None:
    if not np.all(np.isfinite(values)):
        raise ValueError("kernel inputs must be finite")
    if kind.name == "sobolev_min" and (np.any(values < 0.0) or np.any(values > 1.0)):
        raise ValueError("sobolev_min kernel inputs must lie in [0, 1]")


def _pairwise(kind: KernelKind, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Kernel matrix k(xs[i], ys[j]), unnormalized."""
    if kind.name == "sobolev_min":
        return np.minimum(xs[:, None], ys[None, :])
    if kind.name == "polynomial":
        return (1.0 + np.outer(xs, ys)) ** kind.degree
    diff = xs[:, None] - ys[None, :]
    if kind.name == "gaussian":
        return np.exp(-(diff**2) / (2.0 * kind.bandwidth**2))
    return np.exp(-np.abs(diff) / kind.bandwidth)


def eval_kernel(kind: KernelKind, x: float, y: float) -> float:
    """Evaluate the kernel at a single pair of points."""
    pts = np.array([x, y], dtype=float)
    _check_domain(kind, pts)
    return float(_pairwise(kind, pts[:1], pts[1:])[0, 0])


def kernel_cross(kind: KernelKind, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Unnormalized kernel matrix between two point sets (used by prediction)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    _check_domain(kind, xs)
    _check_domain(kind, ys)
    return _pairwise(kind, xs, ys)


def build_gram(kind: KernelKind, xs: np.ndarray) -> np.ndarray:
    """Normalized Gram matrix with entries ``k(x_i, x_j) / n``."""
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 1 or xs.size < 2:
        raise ValueError("need a 1-D design with at least two points")
    _check_domain(kind, xs)
    gram = _pairwise(kind, xs, xs) / xs.size
    if not np.all(np.isfinite(gram)):
        raise FloatingPointError("non-finite kernel value in Gram matrix")
    return gram


# ---------------------------------------------------------------------------
# samples
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DesignSample:
    """Covariates and responses of one regression dataset."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        if xs.ndim != 1 or ys.ndim != 1 or xs.size != ys.size:
            raise ValueError("xs and ys must be 1-D vectors of equal length")
        if xs.size < 2:
            raise ValueError("need at least two observations")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise ValueError("covariates and responses must be finite")

    @property
    def n(self) -> int:
        return self.xs.size


# ---------------------------------------------------------------------------
# eigensystems
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Eigendecomposition of a normalized Gram matrix.

    ``eigenvalues`` is sorted nonincreasing with negatives clamped to zero,
    ``eigenvectors`` holds the matching orthonormal basis in its columns, and
    ``rank`` counts eigenvalues above ``rank_tol`` relative to the largest.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    rank: int
    n: int


def eigensystem(gram: np.ndarray, rank_tol: float = RANK_TOL) -> EigenSystem:
    """Symmetric eigendecomposition with clamping and rank detection.

    Parameters
    ----------
    gram : ndarray
        Symmetric (within ``SYM_TOL``) normalized Gram matrix.
    rank_tol : float
        Numerical rank threshold, relative to the top eigenvalue.

    Returns
    -------
    EigenSystem
    """
    gram = np.asarray(gram, dtype=float)
    if gram.ndim != 2 or gram.shape[0] != gram.shape[1]:
        raise ValueError("gram matrix must be square")
    if np.max(np.abs(gram - gram.T)) > SYM_TOL:
        raise ValueError(f"matrix is not symmetric within {SYM_TOL}")
    # Absorb roundoff before handing the matrix to the solver.
    sym = 0.5 * (gram + gram.T)
    try:
        vals, vecs = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - eigh rarely fails
        raise FloatingPointError(f"eigendecomposition failed: {exc}") from exc
    vals = vals[::-1]
    vecs = vecs[:, ::-1]
    top = float(vals[0]) if vals.size else 0.0
    floor = NEG_EIG_WARN * max(top, 0.0)
    if np.any(vals < floor):
        warnings.warn(
            "Gram matrix has eigenvalues significantly below zero "
            f"(min {vals.min():.3e}); clamping to 0",
            UserWarning,
        )
    vals = np.clip(vals, 0.0, None)
    rank = int(np.count_nonzero(vals > rank_tol * top)) if top > 0 else 0
    return EigenSystem(eigenvalues=vals, eigenvectors=vecs, rank=rank, n=vals.size)


def eigensystem_debug(eig: EigenSystem) -> dict:
    """JSON-ready debug dump of an eigensystem."""
    return {
        "n": eig.n,
        "rank": eig.rank,
        "eigenvalues": [float(v) for v in eig.eigenvalues],
    }


# ---------------------------------------------------------------------------
# rotation
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RotatedSample:
    """Responses expressed in the Gram eigenbasis.

    ``z`` are the rotated responses; ``g_star`` holds the rotated values of
    the true regression function when the truth is known, and ``sigma2`` the
    known noise variance. Both optional fields exist so that benchmark rules
    can be evaluated against the truth on synthetic data.
    """

    z: np.ndarray
    g_star: Optional[np.ndarray] = None
    sigma2: Optional[float] = None


def rotate(
    eig: EigenSystem,
    y: np.ndarray,
    f_star: Optional[np.ndarray] = None,
    sigma2: Optional[float] = None,
) -> RotatedSample:
    """Rotate responses (and optionally the truth) into the eigenbasis."""
    y = np.asarray(y, dtype=float)
    if y.shape != (eig.n,):
        raise ValueError(f"response vector must have length {eig.n}")
    z = eig.eigenvectors.T @ y
    g_star = None
    if f_star is not None:
        f_star = np.asarray(f_star, dtype=float)
        if f_star.shape != (eig.n,):
            raise ValueError(f"truth vector must have length {eig.n}")
        g_star = eig.eigenvectors.T @ f_star
    return RotatedSample(z=z, g_star=g_star, sigma2=sigma2)
