"""Parent quantum divergences with full support-case analysis.

Implements the sandwiched Renyi family Q_alpha / D_alpha (all branches and
the alpha in {0, 1, inf} closed forms), the hypothesis-testing divergence via
an exact quantum Neyman-Pearson construction, the information-spectrum
divergence, the pinching lower bound on the measured relative entropy, and
the direct-sum identity check.  All logarithms are base 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import _roots
from .linalg import (
    PositiveOperator,
    ValidationError,
    as_density,
    as_matrix,
    as_positive,
    positive_part_trace,
)

INF = math.inf

_EPS = np.finfo(np.float64).eps


def canon_alpha(alpha) -> float:
    """Validate a Renyi order; values within 1e-9 of {0, 1} snap exactly."""
    a = float(alpha)
    if math.isnan(a):
        raise ValidationError("alpha is NaN")
    if -1e-9 <= a < 0.0:
        a = 0.0
    if a < 0.0:
        raise ValidationError(f"alpha must be >= 0, got {a}")
    if math.isinf(a):
        return INF
    for special in (0.0, 1.0):
        if abs(a - special) <= 1e-9:
            return special
    return a


@dataclass(frozen=True)
class DivergenceValue:
    """Extended-real divergence value and the definition branch that fired."""

    value: float
    support_case: str

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.value)

    def __float__(self) -> float:
        return self.value


def _check_dims(a: PositiveOperator, b: PositiveOperator) -> None:
    if a.dim != b.dim:
        raise ValidationError(f"dimension mismatch: {a.dim} vs {b.dim}")


def _is_orthogonal(rho: PositiveOperator, sigma: PositiveOperator) -> bool:
    overlap = float(np.trace(rho.mat @ sigma.mat).real)
    scale = max(1.0, float(rho.eigenvalues[-1])) * max(1.0, float(sigma.eigenvalues[-1]))
    return overlap <= 1e-12 * scale


def _support_leak(rho: PositiveOperator, sigma: PositiveOperator) -> float:
    """Weight of rho outside the support of sigma."""
    mask = sigma.eigenvalues <= sigma.cutoff
    if not np.any(mask):
        return 0.0
    v = sigma.eigenvectors[:, mask]
    return float(np.einsum("ij,jk,ki->", v.conj().T, rho.mat, v).real)


def _is_contained(rho: PositiveOperator, sigma: PositiveOperator) -> bool:
    return _support_leak(rho, sigma) <= 1e-10 * max(1.0, rho.trace)


def _spectral_power(op: PositiveOperator, power: float) -> np.ndarray:
    """op**power; powers <= 0 act on the support only (pseudo-inverse)."""
    evals = op.eigenvalues
    if power <= 0.0:
        cut = op.cutoff
        out = np.where(evals > cut, evals, 1.0) ** power
        out[evals <= cut] = 0.0
    else:
        out = np.clip(evals, 0.0, None) ** power
    v = op.eigenvectors
    return (v * out) @ v.conj().T


def q_alpha(rho, sigma, alpha) -> float:
    """Q_alpha(rho || sigma) = Tr (sigma^((1-a)/2a) rho sigma^((1-a)/2a))^a.

    Computed on supports.  The first argument may be any positive operator
    (normalization is not required).  alpha = 0 uses the limit convention
    Q_0(rho || sigma) = Tr[sigma Pi_rho], consistent with D_0 = D_min;
    alpha = 1 gives the pinched overlap Tr[Pi_sigma rho].
    """
    a = canon_alpha(alpha)
    if math.isinf(a):
        raise ValidationError("q_alpha requires finite alpha")
    r = as_positive(rho)
    s = as_positive(sigma)
    _check_dims(r, s)
    if a == 0.0:
        mask = r.eigenvalues > r.cutoff
        v = r.eigenvectors[:, mask]
        return float(np.einsum("ij,jk,ki->", v.conj().T, s.mat, v).real)
    power = (1.0 - a) / (2.0 * a)
    half = _spectral_power(s, power)
    inner = half @ r.mat @ half
    evals = np.clip(np.linalg.eigvalsh(0.5 * (inner + inner.conj().T)), 0.0, None)
    return float(np.sum(evals**a))


def d_min(rho, sigma) -> DivergenceValue:
    """Min relative entropy -log Tr[sigma Pi_rho]."""
    r = as_density(rho)
    s = as_positive(sigma)
    _check_dims(r, s)
    overlap = q_alpha(r, s, 0.0)
    if overlap <= 0.0 or _is_orthogonal(r, s):
        return DivergenceValue(INF, "orthogonal")
    return DivergenceValue(-math.log2(overlap), "min")


def d_max(rho, sigma) -> DivergenceValue:
    """Max relative entropy log min{t : t sigma >= rho}."""
    r = as_density(rho)
    s = as_positive(sigma)
    _check_dims(r, s)
    if not _is_contained(r, s):
        return DivergenceValue(INF, "not_contained")
    half = _spectral_power(s, -0.5)
    inner = half @ r.mat @ half
    top = float(np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))[-1])
    if top <= 0.0:
        return DivergenceValue(-INF, "max")
    return DivergenceValue(math.log2(top), "max")


def d_umegaki(rho, sigma) -> DivergenceValue:
    """Umegaki relative entropy Tr[rho log rho] - Tr[rho log sigma]."""
    r = as_density(rho)
    s = as_positive(sigma)
    _check_dims(r, s)
    if not _is_contained(r, s):
        return DivergenceValue(INF, "not_contained")
    r_evals = r.eigenvalues
    r_cut = r.cutoff
    ent = float(sum(x * math.log2(x) for x in r_evals if x > r_cut))
    mask = s.eigenvalues > s.cutoff
    v = s.eigenvectors[:, mask]
    weights = np.einsum("ji,jk,ki->i", v.conj(), r.mat, v).real
    cross = float(np.dot(weights, np.log2(s.eigenvalues[mask])))
    return DivergenceValue(ent - cross, "umegaki")


def d_alpha(rho, sigma, alpha) -> DivergenceValue:
    """Sandwiched Renyi relative entropy with the full case table.

    Branches: alpha in [1/2, 1) or alpha > 1 use Q_alpha(rho||sigma); alpha
    in [0, 1/2) uses the dual Q_(1-alpha)(sigma||rho); alpha in {0, 1, inf}
    dispatch to D_min, Umegaki, and D_max.  Support violations return +inf,
    never raise.
    """
    a = canon_alpha(alpha)
    if a == 0.0:
        return d_min(rho, sigma)
    if a == 1.0:
        return d_umegaki(rho, sigma)
    if math.isinf(a):
        return d_max(rho, sigma)
    r = as_density(rho)
    s = as_positive(sigma)
    _check_dims(r, s)
    if a > 1.0:
        if not _is_contained(r, s):
            return DivergenceValue(INF, "not_contained")
        q = q_alpha(r, s, a)
        if q <= 0.0:
            return DivergenceValue(INF, "degenerate")
        return DivergenceValue(math.log2(q) / (a - 1.0), "renyi_primary")
    if _is_orthogonal(r, s):
        return DivergenceValue(INF, "orthogonal")
    if a >= 0.5:
        q = q_alpha(r, s, a)
        case = "renyi_primary"
    else:
        q = q_alpha(s, r, 1.0 - a)
        case = "renyi_dual"
    if q <= 0.0:
        return DivergenceValue(INF, "degenerate")
    return DivergenceValue(math.log2(q) / (a - 1.0), case)


@dataclass(frozen=True)
class NeymanPearsonTest:
    """Optimal effect for the hypothesis-testing divergence."""

    mu: float
    effect: PositiveOperator
    alpha_err: float  # Tr[rho Lambda], >= 1 - eps at return
    beta: float  # Tr[sigma Lambda]


def _np_split(mat: np.ndarray, band: float):
    evals, vecs = np.linalg.eigh(mat)
    pos = vecs[:, evals > band]
    ker = vecs[:, np.abs(evals) <= band]
    return pos @ pos.conj().T, ker @ ker.conj().T


def d_hypothesis(rho, sigma, eps: float) -> tuple[DivergenceValue, NeymanPearsonTest]:
    """Hypothesis-testing divergence, exact via quantum Neyman-Pearson.

    The optimal effect is the projector onto the positive part of
    mu*rho - sigma plus a fractional weight on its kernel eigenspace; mu is
    found by bisection on the nondecreasing map mu -> Tr[rho P_+(mu)], and
    the kernel weight is chosen so Tr[rho Lambda] = 1 - eps exactly.
    """
    if not 0.0 <= eps < 1.0:
        raise ValidationError(f"eps must be in [0, 1), got {eps}")
    r = as_density(rho)
    s = as_positive(sigma)
    _check_dims(r, s)

    if eps == 0.0:
        mask = r.eigenvalues > r.cutoff
        v = r.eigenvectors[:, mask]
        proj = v @ v.conj().T
        beta = float(np.trace(s.mat @ proj).real)
        alpha_pass = float(np.trace(r.mat @ proj).real)
        test = NeymanPearsonTest(INF, PositiveOperator(proj), alpha_pass, beta)
        if beta <= 0.0:
            return DivergenceValue(INF, "orthogonal"), test
        return DivergenceValue(-math.log2(beta), "hypothesis"), test

    target = 1.0 - eps
    scale = max(1.0, float(s.eigenvalues[-1]))

    def cond(mu: float) -> float:
        mat = mu * r.mat - s.mat
        band = 64.0 * _EPS * max(1.0, float(np.max(np.abs(mat))))
        evals, vecs = np.linalg.eigh(mat)
        sel = vecs[:, evals > band]
        return float(np.einsum("ij,jk,ki->", sel.conj().T, r.mat, sel).real)

    lo, hi = 0.0, max(1.0, scale)
    for _ in range(_roots.BISECT_MAX_ITER):
        if cond(hi) >= target:
            break
        hi *= 2.0
        if hi > 2.0**120:
            raise ValidationError("Neyman-Pearson multiplier bracketing failed")
    for _ in range(_roots.BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if cond(mid) >= target:
            hi = mid
        else:
            lo = mid
        if hi - lo <= _roots.BISECT_TOL:
            break

    mu = hi
    mat = mu * r.mat - s.mat
    norm = max(1.0, float(np.max(np.abs(mat))))
    band = max(4.0 * (hi - lo) * float(r.eigenvalues[-1]), 64.0 * _EPS * norm)
    p_pos, p_ker = _np_split(mat, band)
    a_pos = float(np.trace(r.mat @ p_pos).real)
    a_ker = float(np.trace(r.mat @ p_ker).real)
    if a_ker > 1e-15:
        w = min(max((target - a_pos) / a_ker, 0.0), 1.0)
    else:
        w = 0.0
    effect_mat = p_pos + w * p_ker
    alpha_pass = a_pos + w * a_ker
    beta = float(np.trace(s.mat @ effect_mat).real)
    test = NeymanPearsonTest(mu, PositiveOperator(effect_mat), alpha_pass, beta)
    if beta <= 0.0:
        return DivergenceValue(INF, "orthogonal"), test
    return DivergenceValue(-math.log2(beta), "hypothesis"), test


def d_tilde_max(rho, sigma, eps: float) -> DivergenceValue:
    """Information-spectrum divergence inf{lam : Tr(rho - 2^lam sigma)_+ <= eps}."""
    if not 0.0 < eps < 1.0:
        raise ValidationError(f"eps must be in (0, 1), got {eps}")
    r = as_density(rho)
    s = as_positive(sigma)
    _check_dims(r, s)
    if s.trace <= 0.0:
        raise ValidationError("sigma is zero; no finite threshold exists")

    def margin(lam: float) -> float:
        return positive_part_trace(r.mat - (2.0**lam) * s.mat) - eps

    hi = _roots.expand_up(margin, 0.0, limit=220.0)
    if hi is None:
        return DivergenceValue(INF, "not_contained")
    if margin(0.0) < 0.0:
        lo = _roots.expand_down(margin, 0.0, limit=-220.0)
    else:
        lo = 0.0
    root = _roots.bisect_decreasing(margin, lo, hi)
    return DivergenceValue(root, "ispec")


def sigma_pinching_projectors(sigma) -> list[np.ndarray]:
    """Spectral projectors of sigma, one per (numerically) distinct eigenvalue."""
    s = as_positive(sigma)
    evals, vecs = s.eigenvalues, s.eigenvectors
    tol = 16.0 * max(s.dim, 8) * _EPS * max(float(evals[-1]), _EPS)
    projectors = []
    start = 0
    for i in range(1, s.dim + 1):
        if i == s.dim or evals[i] - evals[start] > tol:
            block = vecs[:, start:i]
            projectors.append(block @ block.conj().T)
            start = i
    return projectors


class PinchedBound(NamedTuple):
    value: DivergenceValue
    spectrum_size: int
    pinched: np.ndarray


def pinched_measured_lower_bound(rho, sigma, alpha) -> PinchedBound:
    """D_alpha of the sigma-pinched rho against sigma, plus |spec(sigma)|.

    Pinching block-diagonalizes rho in the eigenspaces of sigma; the result
    commutes with sigma, so this is a measured-relative-entropy lower bound.
    """
    a = canon_alpha(alpha)
    if not (0.0 <= a <= 2.0):
        raise ValidationError(f"pinched bound is defined for alpha in [0, 2], got {a}")
    r = as_density(rho)
    s = as_positive(sigma)
    _check_dims(r, s)
    projectors = sigma_pinching_projectors(s)
    pinched = np.zeros_like(r.mat)
    for p in projectors:
        pinched = pinched + p @ r.mat @ p
    value = d_alpha(as_density(pinched), s, a)
    return PinchedBound(value, len(projectors), pinched)


@dataclass(frozen=True)
class DirectSumReport:
    lhs: float
    rhs: float
    gap: float
    ok: bool


def check_direct_sum(probs, rhos: Sequence, sigmas: Sequence, alpha, tol: float = 1e-9) -> DirectSumReport:
    """Verify Q_alpha(rho^XA || sigma^XA) = sum_x p_x Q_alpha(rho_x || sigma_x)."""
    p = np.asarray(probs, dtype=np.float64)
    if len(rhos) != p.size or len(sigmas) != p.size:
        raise ValidationError("probability vector and block lists must match")
    rho_blocks = [as_matrix(r) for r in rhos]
    sigma_blocks = [as_matrix(s) for s in sigmas]
    d = rho_blocks[0].shape[0]
    k = p.size
    big_rho = np.zeros((k * d, k * d), dtype=np.complex128)
    big_sigma = np.zeros_like(big_rho)
    for x in range(k):
        sl = slice(x * d, (x + 1) * d)
        big_rho[sl, sl] = p[x] * rho_blocks[x]
        big_sigma[sl, sl] = p[x] * sigma_blocks[x]
    lhs = q_alpha(PositiveOperator(big_rho), PositiveOperator(big_sigma), alpha)
    rhs = float(
        sum(
            p[x] * q_alpha(PositiveOperator(rho_blocks[x]), PositiveOperator(sigma_blocks[x]), alpha)
            for x in range(k)
            if p[x] > 0.0
        )
    )
    gap = abs(lhs - rhs)
    return DirectSumReport(lhs, rhs, gap, gap <= tol)
