"""Mutual-information layer built on the divergences.

I_alpha minimizes the parent divergence over the second marginal; the inner
problem is convex in the reference state for alpha in {1, 2}, so it is
solved by matrix exponentiated-gradient (mirror descent) with analytic
gradients obtained from the divided-difference Frechet derivative of the
inverse square root.  Channel quantities maximize over input distributions
with multi-start projected gradient ascent; the reported value is always
attained by a feasible point, hence a certified lower bound on the supremum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .divergences import canon_alpha, d_umegaki
from .induced import InducedResult, induced_renyi
from .linalg import (
    DensityOperator,
    PositiveOperator,
    ValidationError,
    as_density,
    _ptrace,
    permute_systems,
    support_cutoff,
    trace_distance,
)
from .states import Channel, rng_from_seed, random_probability

_LN2 = math.log(2.0)
_EPS = np.finfo(np.float64).eps


# ---------------------------------------------------------------------------
# Frechet machinery for x -> x^(-1/2)
# ---------------------------------------------------------------------------


def _invsqrt_divided_differences(evals: np.ndarray, cut: float) -> np.ndarray:
    """Loewner matrix of first divided differences of x^(-1/2) on the support."""
    n = evals.size
    phi = np.zeros((n, n))
    f = np.where(evals > cut, np.where(evals > cut, evals, 1.0) ** -0.5, 0.0)
    for i in range(n):
        for j in range(n):
            if evals[i] <= cut or evals[j] <= cut:
                continue
            dx = evals[i] - evals[j]
            if abs(dx) > 1e-8 * max(evals[i], evals[j]):
                phi[i, j] = (f[i] - f[j]) / dx
            else:
                mid = 0.5 * (evals[i] + evals[j])
                phi[i, j] = -0.5 * mid**-1.5
    return phi


def q2_and_gradient(rho_mat: np.ndarray, x_mat: np.ndarray) -> tuple[float, np.ndarray]:
    """Q_2(rho || X) and G with dQ_2 = Tr[G dX] (gradient in the 2nd slot)."""
    evals, vecs = np.linalg.eigh(x_mat)
    dim = x_mat.shape[0]
    cut = support_cutoff(evals, dim)
    inv_sqrt = np.where(evals > cut, np.where(evals > cut, evals, 1.0) ** -0.5, 0.0)
    k = (vecs * inv_sqrt) @ vecs.conj().T
    kr = k @ rho_mat
    q2 = float(np.trace(kr @ kr).real)
    w = rho_mat @ k @ rho_mat
    wt = vecs.conj().T @ w @ vecs
    phi = _invsqrt_divided_differences(evals, cut)
    g = 2.0 * (vecs @ (phi * wt) @ vecs.conj().T)
    g = 0.5 * (g + g.conj().T)
    return q2, g


def q2_value(rho_mat: np.ndarray, x_mat: np.ndarray) -> float:
    """Q_2(rho || X) computed on the support of X."""
    evals, vecs = np.linalg.eigh(x_mat)
    cut = support_cutoff(evals, x_mat.shape[0])
    inv_sqrt = np.where(evals > cut, np.where(evals > cut, evals, 1.0) ** -0.5, 0.0)
    k = (vecs * inv_sqrt) @ vecs.conj().T
    return float(np.trace(rho_mat @ k @ rho_mat @ k).real)


def _contract_first(g: np.ndarray, rho_a: np.ndarray, da: int, db: int) -> np.ndarray:
    """M with Tr[G (rho_A (x) H)] = Tr[M H] for every H on the second factor."""
    g4 = g.reshape(da, db, da, db)
    return np.einsum("abcd,ca->bd", g4, rho_a)


def _contract_second(g: np.ndarray, rho_b: np.ndarray, da: int, db: int) -> np.ndarray:
    """M with Tr[G (H (x) rho_B)] = Tr[M H] for every H on the first factor."""
    g4 = g.reshape(da, db, da, db)
    return np.einsum("abcd,db->ac", g4, rho_b)


def _entropy(mat: np.ndarray) -> float:
    evals = np.linalg.eigvalsh(mat)
    cut = support_cutoff(evals, mat.shape[0])
    return float(-sum(x * math.log2(x) for x in evals if x > cut))


# ---------------------------------------------------------------------------
# Optimizers
# ---------------------------------------------------------------------------


_ITERATE_FLOOR = 1e-8


def _expm_density(l_mat: np.ndarray) -> np.ndarray:
    evals, vecs = np.linalg.eigh(l_mat)
    e = np.exp(evals - evals[-1])
    mat = (vecs * e) @ vecs.conj().T
    mat = mat / np.trace(mat).real
    # keep iterates strictly inside the state space: objectives built on
    # support-projected inverse powers lose accuracy at singular arguments
    dim = mat.shape[0]
    return (1.0 - _ITERATE_FLOOR) * mat + _ITERATE_FLOOR * np.eye(dim) / dim


def minimize_density(
    value_and_grad: Callable[[np.ndarray], tuple[float, np.ndarray]],
    dim: int,
    step: float = 0.5,
    max_iter: int = 500,
    tol: float = 1e-7,
    sigma0: np.ndarray | None = None,
) -> tuple[np.ndarray, float, int, float]:
    """Exponentiated-gradient descent over density operators.

    Returns (sigma, value, iterations, residual) where the residual is the
    trace-norm displacement of the last accepted step divided by its step
    size (a gradient-mapping surrogate on the matrix simplex).
    """
    if sigma0 is None:
        l_mat = np.zeros((dim, dim), dtype=np.complex128)
    else:
        evals, vecs = np.linalg.eigh(np.asarray(sigma0, dtype=np.complex128))
        evals = np.clip(evals, 1e-14, None)
        l_mat = (vecs * np.log(evals)) @ vecs.conj().T
    sigma = _expm_density(l_mat)
    value, grad = value_and_grad(sigma)
    iterations = 0
    residual = math.inf
    for it in range(max_iter):
        iterations = it + 1
        eta = step
        accepted = False
        for _ in range(40):
            l_try = l_mat - eta * grad
            l_try = l_try - (np.trace(l_try).real / dim) * np.eye(dim)
            sig_try = _expm_density(l_try)
            val_try, grad_try = value_and_grad(sig_try)
            if val_try <= value + 1e-12:
                accepted = True
                break
            eta *= 0.5
        if not accepted:
            residual = 0.0
            break
        diff = np.linalg.eigvalsh(sig_try - sigma)
        residual = float(np.sum(np.abs(diff))) / eta
        l_mat, sigma, value, grad = l_try, sig_try, val_try, grad_try
        if residual <= tol:
            break
    return sigma, value, iterations, residual


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    cond = u - css / idx > 0
    r = int(np.nonzero(cond)[0][-1]) + 1
    theta = css[r - 1] / r
    return np.clip(v - theta, 0.0, None)


def maximize_simplex(
    value_and_grad: Callable[[np.ndarray], tuple[float, np.ndarray]],
    starts: Sequence[np.ndarray],
    max_iter: int = 200,
) -> tuple[float, np.ndarray]:
    """Multi-start projected gradient ascent over the simplex."""
    best_val = -math.inf
    best_p = None
    for p0 in starts:
        p = project_simplex(np.asarray(p0, dtype=np.float64))
        val, grad = value_and_grad(p)
        for _ in range(max_iter):
            moved = False
            eta = 1.0
            for _ in range(40):
                cand = project_simplex(p + eta * grad)
                if float(np.max(np.abs(cand - p))) < 1e-15:
                    break
                val_c, grad_c = value_and_grad(cand)
                if val_c > val + 1e-12:
                    p, val, grad = cand, val_c, grad_c
                    moved = True
                    break
                eta *= 0.5
            if not moved:
                break
        if val > best_val:
            best_val, best_p = val, p
    return best_val, best_p


# ---------------------------------------------------------------------------
# Mutual information
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MutualInfoResult:
    value: float
    optimal_sigma: DensityOperator
    iterations: int
    gradient_residual: float


def _split_dims(rho: DensityOperator, dims: tuple[int, int]) -> tuple[int, int]:
    da, db = int(dims[0]), int(dims[1])
    if da * db != rho.dim:
        raise ValidationError(f"bipartition {dims} does not match dim {rho.dim}")
    return da, db


def mutual_info(rho, dims: tuple[int, int], alpha) -> MutualInfoResult:
    """I_alpha(A:B) = min over sigma on B of D_alpha(rho || rho_A (x) sigma).

    alpha = 1 has the closed-form minimizer sigma = rho_B; alpha = 2 and
    alpha = inf run mirror descent over the reference state.
    """
    a = canon_alpha(alpha)
    r = as_density(rho)
    da, db = _split_dims(r, dims)
    rho_a = _ptrace(r.mat, [da, db], [0])
    rho_b = _ptrace(r.mat, [da, db], [1])

    if a == 1.0:
        value = d_umegaki(r, PositiveOperator(np.kron(rho_a, rho_b))).value
        return MutualInfoResult(value, DensityOperator(rho_b), 0, 0.0)

    if a == 2.0:

        def value_grad(sigma: np.ndarray) -> tuple[float, np.ndarray]:
            x = np.kron(rho_a, sigma)
            q2, g = q2_and_gradient(r.mat, x)
            grad = _contract_first(g, rho_a, da, db) / (q2 * _LN2)
            return math.log2(q2), 0.5 * (grad + grad.conj().T)

        sigma, value, iters, res = minimize_density(value_grad, db, sigma0=rho_b)
        return MutualInfoResult(value, DensityOperator(sigma), iters, res)

    if math.isinf(a):

        def value_grad(sigma: np.ndarray) -> tuple[float, np.ndarray]:
            x = np.kron(rho_a, sigma)
            evals, vecs = np.linalg.eigh(x)
            cut = support_cutoff(evals, x.shape[0])
            inv_sqrt = np.where(evals > cut, np.where(evals > cut, evals, 1.0) ** -0.5, 0.0)
            k = (vecs * inv_sqrt) @ vecs.conj().T
            m = k @ r.mat @ k
            m_evals, m_vecs = np.linalg.eigh(0.5 * (m + m.conj().T))
            top = float(m_evals[-1])
            v = m_vecs[:, -1:]
            w_top = r.mat @ k @ (v @ v.conj().T)
            w_top = w_top + w_top.conj().T
            wt = vecs.conj().T @ w_top @ vecs
            phi = _invsqrt_divided_differences(evals, cut)
            g = vecs @ (phi * wt) @ vecs.conj().T
            grad = _contract_first(g, rho_a, da, db) / (top * _LN2)
            return math.log2(top), 0.5 * (grad + grad.conj().T)

        sigma, value, iters, res = minimize_density(value_grad, db, sigma0=rho_b)
        return MutualInfoResult(value, DensityOperator(sigma), iters, res)

    raise ValidationError(f"mutual_info supports alpha in {{1, 2, inf}}, got {a}")


class InducedMutualInfo(NamedTuple):
    value: float  # raw induced divergence at the optimal reference state
    optimal_sigma: DensityOperator
    result: InducedResult
    iterations: int
    gradient_residual: float


def induced_mutual_info_2(rho, dims: tuple[int, int], eps: float) -> InducedMutualInfo:
    """min over sigma on A of the raw induced D_2(rho^AB || sigma^A (x) rho^B).

    The threshold t*(sigma) is differentiated implicitly through the defining
    equation Q_2(rho || rho + t sigma (x) rho_B) = 1 - eps.
    """
    r = as_density(rho)
    da, db = _split_dims(r, dims)
    rho_b = _ptrace(r.mat, [da, db], [1])

    def value_grad(sigma: np.ndarray) -> tuple[float, np.ndarray]:
        tau = np.kron(sigma, rho_b)
        res = induced_renyi(r, PositiveOperator(tau), 2.0, eps)
        if not res.is_finite:
            return math.inf, np.zeros((da, da), dtype=np.complex128)
        t = res.t_star
        x = r.mat + t * tau
        _, g = q2_and_gradient(r.mat, x)
        df_dlam = _LN2 * t * float(np.trace(g @ tau).real)
        m = _contract_second(g, rho_b, da, db)
        if abs(df_dlam) < 1e-300:
            return res.raw, np.zeros((da, da), dtype=np.complex128)
        grad = -(t * m) / df_dlam
        return res.raw, 0.5 * (grad + grad.conj().T)

    sigma, _, iters, res_grad = minimize_density(value_grad, da)
    final = induced_renyi(r, PositiveOperator(np.kron(sigma, rho_b)), 2.0, eps)
    return InducedMutualInfo(final.raw, DensityOperator(sigma), final, iters, res_grad)


@dataclass(frozen=True)
class SmoothedResult:
    value: float
    smoothing_state: DensityOperator
    distance_used: float
    is_upper_bound: bool
    candidate: str


_LADDER = tuple(0.5**j for j in range(1, 11))


def _truncated_renormalized(rho: DensityOperator, quantile: float) -> np.ndarray | None:
    evals = rho.eigenvalues
    cum = np.cumsum(evals)
    drop = int(np.searchsorted(cum, quantile + 1e-15, side="right"))
    drop = min(drop, rho.dim - 1)
    if drop == 0:
        return None
    kept = evals.copy()
    kept[:drop] = 0.0
    mass = kept.sum()
    if mass <= 0.0:
        return None
    v = rho.eigenvectors
    return (v * (kept / mass)) @ v.conj().T


def smoothed_mutual_info_2(rho, dims: tuple[int, int], eps: float) -> SmoothedResult:
    """Upper bound on the smoothed I_2 from a nested candidate family.

    Candidates inside the eps-ball: rho itself, depolarized mixtures toward
    the maximally mixed state, and eigenvalue-truncated renormalizations,
    both taken at a fixed dyadic ladder of trace distances (so a larger ball
    can only lower the bound).  The true minimum over the ball can be lower;
    the flag records that this is an upper bound.
    """
    if not 0.0 < eps < 1.0:
        raise ValidationError(f"eps must be in (0, 1), got {eps}")
    r = as_density(rho)
    _split_dims(r, dims)
    uniform = np.eye(r.dim, dtype=np.complex128) / r.dim
    td_uniform = trace_distance(r.mat, uniform)

    candidates: list[tuple[str, np.ndarray]] = [("rho", r.mat)]
    for d in _LADDER:
        if d > eps + 1e-12:
            continue
        if td_uniform > 1e-14:
            s = min(1.0, d / td_uniform)
            candidates.append((f"depolarized@{d:g}", (1.0 - s) * r.mat + s * uniform))
        trunc = _truncated_renormalized(r, d)
        if trunc is not None:
            candidates.append((f"truncated@{d:g}", trunc))

    best: tuple[str, np.ndarray, float, MutualInfoResult] | None = None
    for name, mat in candidates:
        dist = trace_distance(mat, r.mat)
        if dist > eps + 1e-10:
            continue
        mi = mutual_info(mat, dims, 2.0)
        if best is None or mi.value < best[3].value:
            best = (name, mat, dist, mi)
    name, mat, dist, mi = best
    return SmoothedResult(mi.value, DensityOperator(mat), dist, True, name)


# ---------------------------------------------------------------------------
# Channel mutual information
# ---------------------------------------------------------------------------

MAX_CHANNEL_INPUTS = 8


class ChannelMutualInfo(NamedTuple):
    value: float
    best_p: np.ndarray
    alpha: float | None
    epsilon: float | None


def _diag_vectors(chan: Channel) -> list[np.ndarray] | None:
    if not chan.is_classical():
        return None
    return [np.diag(o.mat).real.copy() for o in chan.outputs]


def _induced_channel_value_grad(chan: Channel, eps: float) -> Callable:
    """Objective p -> raw induced D_2 of the cq state, with implicit gradient.

    The direct-sum identity reduces the defining condition to blocks of size
    |B|: sum_x p_x Q_2(sigma_x || sigma_x + t sigma_bar) = 1 - eps.
    """
    from . import _roots

    diag = _diag_vectors(chan)
    mats = [o.mat for o in chan.outputs]
    k = chan.input_size
    target = 1.0 - eps

    def value_grad(p: np.ndarray) -> tuple[float, np.ndarray]:
        if diag is not None:
            sbar = sum(p[x] * diag[x] for x in range(k))

            def g_of(t: float) -> float:
                total = 0.0
                for x in range(k):
                    if p[x] <= 0.0:
                        continue
                    dx = diag[x] + t * sbar
                    mask = dx > 0.0
                    total += p[x] * float(np.sum(diag[x][mask] ** 2 / dx[mask]))
                return total

        else:
            sbar = sum(p[x] * mats[x] for x in range(k))

            def g_of(t: float) -> float:
                total = 0.0
                for x in range(k):
                    if p[x] <= 0.0:
                        continue
                    total += p[x] * q2_value(mats[x], mats[x] + t * sbar)
                return total

        def margin(lam: float) -> float:
            return g_of(2.0**lam) - target

        lam0 = math.log2(eps / (1.0 - eps))
        if margin(lam0) >= 0.0:
            lo = lam0
            hi = _roots.expand_up(margin, lam0, limit=200.0)
        else:
            hi = lam0
            lo = _roots.expand_down(margin, lam0, limit=-200.0)
        lam = _roots.bisect_decreasing(margin, lo, hi, value_tol=1e-10)
        t = 2.0**lam

        # implicit gradient of lam(p) through g(p, t) = 1 - eps
        dgdp = np.zeros(k)
        dgdt = 0.0
        if diag is not None:
            grads = []
            for x in range(k):
                dx = diag[x] + t * sbar
                mask = dx > 0.0
                vq = np.zeros_like(dx)
                vq[mask] = -(diag[x][mask] ** 2) / dx[mask] ** 2
                q2x = float(np.sum(diag[x][mask] ** 2 / dx[mask]))
                grads.append((q2x, vq))
            for x in range(k):
                q2x, _ = grads[x]
                cross = sum(
                    p[y] * float(np.dot(grads[y][1], diag[x])) for y in range(k) if p[y] > 0.0
                )
                dgdp[x] = q2x + t * cross
            dgdt = sum(
                p[y] * float(np.dot(grads[y][1], sbar)) for y in range(k) if p[y] > 0.0
            )
        else:
            grads = []
            for x in range(k):
                q2x, gx = q2_and_gradient(mats[x], mats[x] + t * sbar)
                grads.append((q2x, gx))
            for x in range(k):
                q2x, _ = grads[x]
                cross = sum(
                    p[y] * float(np.trace(grads[y][1] @ mats[x]).real)
                    for y in range(k)
                    if p[y] > 0.0
                )
                dgdp[x] = q2x + t * cross
            dgdt = sum(
                p[y] * float(np.trace(grads[y][1] @ sbar).real) for y in range(k) if p[y] > 0.0
            )
        dgdlam = _LN2 * t * dgdt
        if abs(dgdlam) < 1e-300:
            return lam, np.zeros(k)
        return lam, -dgdp / dgdlam

    return value_grad


def _holevo_value_grad(chan: Channel) -> Callable:
    mats = [o.mat for o in chan.outputs]
    k = chan.input_size
    entropies = [_entropy(m) for m in mats]

    def value_grad(p: np.ndarray) -> tuple[float, np.ndarray]:
        sbar = sum(p[x] * mats[x] for x in range(k))
        evals, vecs = np.linalg.eigh(sbar)
        cut = support_cutoff(evals, sbar.shape[0])
        mask = evals > cut
        v = vecs[:, mask]
        logs = np.log2(evals[mask])
        value = 0.0
        grad = np.zeros(k)
        for x in range(k):
            weights = np.einsum("ji,jk,ki->i", v.conj(), mats[x], v).real
            cross = float(np.dot(weights, logs))
            grad[x] = -cross - entropies[x]
            if p[x] > 0.0:
                value += p[x] * grad[x]
        return value, grad

    return value_grad


def _collision_channel_value_grad(chan: Channel) -> Callable:
    mats = [o.mat for o in chan.outputs]
    k = chan.input_size
    db = chan.output_dim

    def value_grad(p: np.ndarray) -> tuple[float, np.ndarray]:
        sbar = sum(p[x] * mats[x] for x in range(k))

        def inner(sigma: np.ndarray) -> tuple[float, np.ndarray]:
            total = 0.0
            grad = np.zeros((db, db), dtype=np.complex128)
            per_x = []
            for x in range(k):
                q2x, gx = q2_and_gradient(mats[x], sigma)
                per_x.append(q2x)
                if p[x] > 0.0:
                    total += p[x] * q2x
                    grad = grad + p[x] * gx
            return math.log2(total), grad / (total * _LN2)

        sigma, value, _, _ = minimize_density(inner, db, sigma0=sbar)
        total = 0.0
        qs = np.zeros(k)
        for x in range(k):
            qs[x] = q2_value(mats[x], sigma)
            if p[x] > 0.0:
                total += p[x] * qs[x]
        return value, qs / (total * _LN2)

    return value_grad


def channel_mutual_info(
    chan: Channel,
    alpha=1.0,
    eps: float | None = None,
    seed: int = 0,
    restarts: int = 20,
) -> ChannelMutualInfo:
    """Maximize the (induced) mutual information over input distributions.

    With ``eps`` given, the objective is the raw induced collision divergence
    of the cq state against the product of its marginals; otherwise it is
    I_alpha for alpha in {1, 2}.  Multi-start projected gradient ascent with
    ``restarts`` seeded random starts plus the uniform start.
    """
    k = chan.input_size
    if k > MAX_CHANNEL_INPUTS:
        raise ValidationError(f"channel input size {k} exceeds {MAX_CHANNEL_INPUTS}")
    if eps is not None:
        if not 0.0 < eps < 1.0:
            raise ValidationError(f"eps must be in (0, 1), got {eps}")
        vg = _induced_channel_value_grad(chan, eps)
        a = None
    else:
        a = canon_alpha(alpha)
        if a == 1.0:
            vg = _holevo_value_grad(chan)
        elif a == 2.0:
            vg = _collision_channel_value_grad(chan)
        else:
            raise ValidationError("channel_mutual_info supports alpha in {1, 2}")
    rng = rng_from_seed(seed)
    starts = [np.full(k, 1.0 / k)]
    for _ in range(restarts):
        starts.append(random_probability(k, rng))
    value, best_p = maximize_simplex(vg, starts)
    return ChannelMutualInfo(value, best_p, a, eps)


# ---------------------------------------------------------------------------
# Conditional combination
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CondMutualInfo:
    """Smoothed conditional mutual information of order 2.

    value = I_2^{delta0}(RB:A) - induced I_2^{delta1}(B:A), assembled exactly
    from the recorded sub-results.
    """

    delta0: float
    delta1: float
    smoothed_term: SmoothedResult
    induced_term: float
    value: float
    induced_detail: InducedMutualInfo


def cond_mutual_info(
    rho_rab, dims: tuple[int, int, int], delta0: float, delta1: float
) -> CondMutualInfo:
    r = as_density(rho_rab)
    dr, da, db = (int(d) for d in dims)
    if dr * da * db != r.dim:
        raise ValidationError(f"tripartition {dims} does not match dim {r.dim}")
    mat_rba = permute_systems(r.mat, [dr, da, db], [0, 2, 1])
    smoothed = smoothed_mutual_info_2(DensityOperator(mat_rba), (dr * db, da), delta0)
    mat_ab = _ptrace(r.mat, [dr, da, db], [1, 2])
    ind = induced_mutual_info_2(DensityOperator(mat_ab), (da, db), delta1)
    return CondMutualInfo(
        delta0, delta1, smoothed, ind.value, smoothed.value - ind.value, ind
    )
