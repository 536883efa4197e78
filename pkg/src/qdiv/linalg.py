"""Dense Hermitian/positive operator algebra.

Everything downstream (divergences, induced divergences, decoding bounds)
reduces to eigendecompositions of small dense Hermitian matrices.  The
classes here validate structural invariants once, at construction, and cache
spectral data so the functional layer stays pure and cheap.

Conventions: logarithms elsewhere in the package are base 2; matrix
functions with a pole at zero always act on the support only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

HERM_TOL = 1e-10
PSD_TOL = 1e-9
TRACE_TOL = 1e-9
RECON_TOL = 1e-8
DEFAULT_DIM_CAP = 2**13

_EPS = np.finfo(np.float64).eps


class ValidationError(ValueError):
    """An operator or argument failed a structural invariant."""


def as_matrix(op) -> np.ndarray:
    """Coerce an operator wrapper or array-like to a square complex matrix."""
    mat = np.asarray(getattr(op, "mat", op), dtype=np.complex128)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {mat.shape}")
    return mat


def support_cutoff(eigenvalues: np.ndarray, dim: int) -> float:
    """Eigenvalue threshold below which spectrum is treated as kernel."""
    top = float(np.max(eigenvalues, initial=0.0))
    return max(dim, 8) * _EPS * max(top, _EPS)


class HermitianOperator:
    """A validated dense Hermitian matrix.

    Instances are immutable: the stored matrix is symmetrized once and its
    buffer is marked read-only, so they are safe to share across threads.
    """

    __slots__ = ("mat", "dim")

    def __init__(self, mat, herm_tol: float = HERM_TOL):
        mat = as_matrix(mat)
        scale = max(1.0, float(np.max(np.abs(mat), initial=0.0)))
        defect = float(np.max(np.abs(mat - mat.conj().T), initial=0.0))
        if defect > herm_tol * scale:
            raise ValidationError(f"matrix is not Hermitian (defect {defect:.3e})")
        herm = 0.5 * (mat + mat.conj().T)
        herm.setflags(write=False)
        self.mat = herm
        self.dim = herm.shape[0]

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"

    @property
    def trace(self) -> float:
        return float(np.trace(self.mat).real)


class PositiveOperator(HermitianOperator):
    """Hermitian operator with spectrum >= -PSD_TOL, clamped to >= 0.

    Eigenvalues in [-psd_tol, 0) come from round-off (tensor products,
    partial traces) and are clamped to zero; anything lower is an error.
    The spectral decomposition is computed once and cached.
    """

    __slots__ = ("eigenvalues", "eigenvectors")

    def __init__(self, mat, psd_tol: float = PSD_TOL, herm_tol: float = HERM_TOL):
        super().__init__(mat, herm_tol=herm_tol)
        evals, evecs = np.linalg.eigh(self.mat)
        scale = max(1.0, float(evals[-1]) if evals.size else 1.0)
        if evals.size and evals[0] < -psd_tol * scale:
            raise ValidationError(
                f"matrix is not positive semidefinite (min eigenvalue {evals[0]:.3e})"
            )
        if evals.size and evals[0] < 0.0:
            evals = np.clip(evals, 0.0, None)
            rebuilt = (evecs * evals) @ evecs.conj().T
            rebuilt = 0.5 * (rebuilt + rebuilt.conj().T)
            rebuilt.setflags(write=False)
            self.mat = rebuilt
        evals.setflags(write=False)
        evecs.setflags(write=False)
        self.eigenvalues = evals
        self.eigenvectors = evecs

    @property
    def cutoff(self) -> float:
        return support_cutoff(self.eigenvalues, self.dim)

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.eigenvalues > self.cutoff))


class DensityOperator(PositiveOperator):
    """Positive operator with unit trace."""

    __slots__ = ()

    def __init__(self, mat, trace_tol: float = TRACE_TOL, **kwargs):
        super().__init__(mat, **kwargs)
        tr = self.trace
        if abs(tr - 1.0) > trace_tol:
            raise ValidationError(f"trace is {tr!r}, expected 1")


def as_herm(op) -> HermitianOperator:
    return op if isinstance(op, HermitianOperator) else HermitianOperator(op)


def as_positive(op) -> PositiveOperator:
    return op if isinstance(op, PositiveOperator) else PositiveOperator(op)


def as_density(op) -> DensityOperator:
    return op if isinstance(op, DensityOperator) else DensityOperator(op)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Ascending eigenvalues and the unitary of column eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


@dataclass(frozen=True)
class SupportProjector:
    projector: PositiveOperator
    rank: int
    cutoff: float


def eig_hermitian(op) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian operator, eigenvalues ascending."""
    herm = as_herm(op)
    evals, evecs = np.linalg.eigh(herm.mat)
    return SpectralDecomposition(evals, evecs)


def mat_fn(op, f: Callable[[float], float], support_only: bool = False) -> HermitianOperator:
    """Apply a scalar function to the spectrum of a positive operator.

    With ``support_only`` set, eigenvalues at or below the support cutoff map
    to zero without evaluating ``f`` there; this is how negative powers such
    as x**-1/2 are taken as pseudo-inverses on the support.
    """
    pos = as_positive(op)
    evals = pos.eigenvalues
    if support_only:
        cut = pos.cutoff
        out = np.array([f(x) if x > cut else 0.0 for x in evals], dtype=np.float64)
    else:
        out = np.array([f(x) for x in evals], dtype=np.float64)
    v = pos.eigenvectors
    return HermitianOperator((v * out) @ v.conj().T)


def support_projector(op) -> SupportProjector:
    """Projector onto the support (eigenvalues above the cutoff)."""
    pos = as_positive(op)
    cut = pos.cutoff
    mask = pos.eigenvalues > cut
    v = pos.eigenvectors[:, mask]
    proj = v @ v.conj().T
    return SupportProjector(PositiveOperator(proj), int(mask.sum()), cut)


def tensor(*ops) -> HermitianOperator:
    """Kronecker product of Hermitian operators."""
    if not ops:
        raise ValidationError("tensor() needs at least one operator")
    out = as_herm(ops[0]).mat
    for op in ops[1:]:
        out = np.kron(out, as_herm(op).mat)
    return HermitianOperator(out)


def _ptrace(mat: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    dims = list(dims)
    n = len(dims)
    if int(np.prod(dims)) != mat.shape[0]:
        raise ValidationError(f"dims {dims} do not multiply to {mat.shape[0]}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= n for k in keep):
        raise ValidationError(f"keep indices {keep} out of range for {n} systems")
    t = mat.reshape(dims + dims)
    traced = 0
    for idx in range(n):
        if idx in keep:
            continue
        axis = idx - traced
        ndim_half = t.ndim // 2
        t = np.trace(t, axis1=axis, axis2=axis + ndim_half)
        traced += 1
    d_keep = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(d_keep, d_keep)


def partial_trace(op, dims: Sequence[int], keep: Iterable[int]) -> HermitianOperator:
    """Trace out every subsystem not listed in ``keep`` (order preserved)."""
    mat = as_herm(op).mat
    return HermitianOperator(_ptrace(mat, dims, list(keep)))


def permute_systems(op, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors so input subsystem order[i] lands at slot i."""
    mat = as_matrix(op)
    dims = list(dims)
    n = len(dims)
    order = list(order)
    if sorted(order) != list(range(n)):
        raise ValidationError(f"order {order} is not a permutation of {n} systems")
    if int(np.prod(dims)) != mat.shape[0]:
        raise ValidationError(f"dims {dims} do not multiply to {mat.shape[0]}")
    t = mat.reshape(dims + dims)
    perm = order + [n + k for k in order]
    t = np.transpose(t, perm)
    d = int(np.prod(dims))
    return np.ascontiguousarray(t.reshape(d, d))


def trace_distance(rho, sigma) -> float:
    """Half the trace norm of rho - sigma."""
    a, b = as_matrix(rho), as_matrix(sigma)
    if a.shape != b.shape:
        raise ValidationError("trace_distance needs equal dimensions")
    evals = np.linalg.eigvalsh(a - b)
    return 0.5 * float(np.sum(np.abs(evals)))


def fidelity_and_purified(rho, sigma) -> tuple[float, float]:
    """Fidelity ||sqrt(rho) sqrt(sigma)||_1 and purified distance sqrt(1-F^2)."""
    r = as_positive(rho)
    s = as_positive(sigma)
    if r.dim != s.dim:
        raise ValidationError("fidelity needs equal dimensions")
    sqrt_s = mat_fn(s, math.sqrt).mat
    inner = sqrt_s @ r.mat @ sqrt_s
    evals = np.clip(np.linalg.eigvalsh(0.5 * (inner + inner.conj().T)), 0.0, None)
    fid = float(np.sum(np.sqrt(evals)))
    fid = min(max(fid, 0.0), 1.0)
    return fid, math.sqrt(max(0.0, 1.0 - fid * fid))


def positive_part_trace(op) -> float:
    """Sum of the positive eigenvalues, i.e. Tr of the positive part."""
    evals = np.linalg.eigvalsh(as_herm(op).mat)
    return float(np.sum(evals[evals > 0.0]))


def op_meet(rho, sigma) -> HermitianOperator:
    """Operator meet (rho + sigma - |rho - sigma|) / 2."""
    a = as_positive(rho).mat
    b = as_positive(sigma).mat
    if a.shape != b.shape:
        raise ValidationError("op_meet needs equal dimensions")
    diff = a - b
    evals, evecs = np.linalg.eigh(diff)
    absdiff = (evecs * np.abs(evals)) @ evecs.conj().T
    return HermitianOperator(0.5 * (a + b - absdiff))
