import math

import numpy as np
import pytest

from oracles import blahut_arimoto_capacity, grid_i2_classical, grid_induced_mi_classical

from qdiv import (
    DensityOperator,
    ValidationError,
    channel_mutual_info,
    cond_mutual_info,
    induced_mutual_info_2,
    mutual_info,
    smoothed_mutual_info_2,
    trace_distance,
)
from qdiv.info import q2_and_gradient, minimize_density
from qdiv.states import (
    apply_kraus,
    basis_state,
    channel,
    classical_channel,
    maximally_entangled,
    random_density,
    random_isometry_channel,
)


def product_state(seed_a, seed_b, da=2, db=2):
    a = random_density(da, da, seed_a)
    b = random_density(db, db, seed_b)
    return DensityOperator(np.kron(a.mat, b.mat))


def classical_joint(pmf, da, db):
    return DensityOperator(np.diag(np.asarray(pmf, dtype=float)).astype(complex)), (da, db)


# ---------------------------------------------------------------------------
# gradients
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("seed", range(4))
def test_q2_gradient_finite_differences(seed):
    rho = random_density(4, 4, seed).mat
    x = (1.0 + 0.3 * seed) * random_density(4, 4, seed + 40).mat
    _, grad = q2_and_gradient(rho, x)
    direction = random_density(4, 4, seed + 80).mat - np.eye(4) / 4
    t = 1e-6
    fd = (q2_and_gradient(rho, x + t * direction)[0] - q2_and_gradient(rho, x - t * direction)[0]) / (2 * t)
    analytic = float(np.trace(grad @ direction).real)
    assert abs(fd - analytic) < 1e-6 * max(1.0, abs(fd))


def test_minimize_density_quadratic():
    # minimize Tr[sigma^2] over density operators: optimum is maximally mixed
    def vg(sigma):
        return float(np.trace(sigma @ sigma).real), 2.0 * sigma

    sigma, value, iters, res = minimize_density(vg, 3)
    assert abs(value - 1.0 / 3.0) < 1e-8
    assert np.max(np.abs(sigma - np.eye(3) / 3)) < 1e-6


# ---------------------------------------------------------------------------
# mutual information
# ---------------------------------------------------------------------------


def test_mutual_info_product_zero():
    rho = product_state(1, 2)
    for alpha in (1.0, 2.0, math.inf):
        mi = mutual_info(rho, (2, 2), alpha)
        assert abs(mi.value) < 1e-6


def test_mutual_info_bell_alpha1():
    mi = mutual_info(maximally_entangled(2), (2, 2), 1.0)
    assert abs(mi.value - 2.0) < 1e-10


@pytest.mark.parametrize("seed", range(4))
def test_mutual_info_alpha_ordering(seed):
    rho = random_density(4, 4, seed)
    v1 = mutual_info(rho, (2, 2), 1.0).value
    v2 = mutual_info(rho, (2, 2), 2.0).value
    assert v2 >= v1 - 1e-7
    assert v1 >= -1e-7


def test_mutual_info_objective_reproduction():
    from qdiv.divergences import q_alpha
    from qdiv import PositiveOperator
    from qdiv.linalg import _ptrace

    rho = random_density(4, 4, 17)
    mi = mutual_info(rho, (2, 2), 2.0)
    rho_a = _ptrace(rho.mat, [2, 2], [0])
    val = math.log2(q_alpha(rho, PositiveOperator(np.kron(rho_a, mi.optimal_sigma.mat)), 2.0))
    assert abs(val - mi.value) <= 1e-7


def test_mutual_info_matches_diag_grid():
    # classical correlated pmf on 2x2; grid over diagonal sigma at 1e-3
    pmf = [0.4, 0.1, 0.15, 0.35]
    rho, dims = classical_joint(pmf, 2, 2)
    mi = mutual_info(rho, dims, 2.0)
    oracle = grid_i2_classical(pmf, 2, 2)
    assert abs(mi.value - oracle) < 1e-3


def test_mutual_info_rejects_bad_alpha():
    with pytest.raises(ValidationError):
        mutual_info(product_state(3, 4), (2, 2), 1.7)
    with pytest.raises(ValidationError):
        mutual_info(product_state(3, 4), (3, 2), 2.0)


# ---------------------------------------------------------------------------
# induced mutual information
# ---------------------------------------------------------------------------


def test_induced_mi_product():
    rho = product_state(5, 6)
    eps = 0.3
    out = induced_mutual_info_2(rho, (2, 2), eps)
    assert abs(out.value - math.log2(eps / (1.0 - eps))) < 1e-7


def test_induced_mi_matches_diag_grid():
    pmf = [0.45, 0.05, 0.05, 0.45]  # nearly perfectly correlated bits
    rho, dims = classical_joint(pmf, 2, 2)
    eps = 0.3
    out = induced_mutual_info_2(rho, dims, eps)
    oracle = grid_induced_mi_classical(pmf, 2, 2, eps)
    assert out.value <= oracle + 1e-6  # optimizer at least as good as the grid
    assert abs(out.value - oracle) < 1e-3


def test_induced_mi_monotone_in_eps():
    rho = random_density(4, 4, 23)
    v_small = induced_mutual_info_2(rho, (2, 2), 0.2).value
    v_large = induced_mutual_info_2(rho, (2, 2), 0.5).value
    assert v_large >= v_small - 1e-8


# ---------------------------------------------------------------------------
# smoothed mutual information
# ---------------------------------------------------------------------------


def test_smoothed_tiny_eps_equals_i2():
    rho = random_density(4, 4, 29)
    sm = smoothed_mutual_info_2(rho, (2, 2), 5e-4)
    mi = mutual_info(rho, (2, 2), 2.0)
    assert abs(sm.value - mi.value) < 1e-9
    assert sm.candidate == "rho"


def test_smoothed_pure_state_improves():
    rho = random_density(4, 1, 31)
    sm = smoothed_mutual_info_2(rho, (2, 2), 0.25)
    mi = mutual_info(rho, (2, 2), 2.0)
    assert sm.value < mi.value - 1e-3
    assert sm.candidate != "rho"


@pytest.mark.parametrize("seed", range(4))
def test_smoothed_upper_bound_and_ball(seed):
    rho = random_density(4, 4, seed + 60)
    eps = 0.2
    sm = smoothed_mutual_info_2(rho, (2, 2), eps)
    assert sm.is_upper_bound
    assert sm.value <= mutual_info(rho, (2, 2), 2.0).value + 1e-12
    assert sm.distance_used <= eps + 1e-10
    assert trace_distance(sm.smoothing_state, rho) <= eps + 1e-10


def test_smoothed_monotone_in_eps():
    rho = random_density(4, 4, 71)
    v1 = smoothed_mutual_info_2(rho, (2, 2), 0.1).value
    v2 = smoothed_mutual_info_2(rho, (2, 2), 0.2).value
    assert v2 <= v1 + 1e-12  # nested dyadic candidate ladder


# ---------------------------------------------------------------------------
# channel mutual information
# ---------------------------------------------------------------------------


def test_channel_replacement():
    omega = random_density(2, 2, 81)
    chan = channel([omega, omega])
    assert abs(channel_mutual_info(chan, 1.0).value) < 1e-9
    cm = channel_mutual_info(chan, eps=0.3)
    assert abs(cm.value - math.log2(0.3 / 0.7)) < 1e-8


@pytest.mark.parametrize("k", [2, 3, 4])
def test_channel_classical_identity(k):
    chan = classical_channel(np.eye(k))
    assert abs(channel_mutual_info(chan, 1.0).value - math.log2(k)) < 1e-7


def test_channel_orthogonal_binary():
    chan = channel([basis_state(0, 2), basis_state(1, 2)])
    assert abs(channel_mutual_info(chan, 1.0).value - 1.0) < 1e-8


@pytest.mark.parametrize("seed", range(3))
def test_channel_matches_blahut_arimoto(seed):
    outs = [random_density(2, 2, seed * 10 + j) for j in range(3)]
    chan = channel(outs)
    mine = channel_mutual_info(chan, 1.0).value
    oracle = blahut_arimoto_capacity([o.mat for o in outs])
    assert abs(mine - oracle) < 1e-6


def test_channel_permutation_invariance():
    outs = [random_density(2, 2, 90 + j) for j in range(3)]
    v1 = channel_mutual_info(channel(outs), 1.0).value
    v2 = channel_mutual_info(channel(outs[::-1]), 1.0).value
    assert abs(v1 - v2) < 1e-6


@pytest.mark.parametrize("alpha", [1.0, 2.0])
def test_channel_dpi_post_processing(alpha):
    outs = [random_density(2, 2, 100 + j) for j in range(2)]
    chan = channel(outs)
    kraus = random_isometry_channel(2, 2, 2, 7)
    degraded = channel([DensityOperator(apply_kraus(o, kraus)) for o in outs])
    before = channel_mutual_info(chan, alpha).value
    after = channel_mutual_info(degraded, alpha).value
    assert after <= before + 1e-6


def test_channel_input_size_cap():
    outs = [random_density(2, 2, s) for s in range(9)]
    with pytest.raises(ValidationError):
        channel_mutual_info(channel(outs), 1.0)


# ---------------------------------------------------------------------------
# conditional combination
# ---------------------------------------------------------------------------


def test_cond_mutual_info_product():
    # rho = rho^R (x) rho^A (x) rho^B: smoothed term vanishes, induced term
    # collapses to its raw normalizer, value is the normalizer difference
    a = random_density(2, 2, 112)
    r = random_density(2, 2, 113)
    b = random_density(2, 2, 114)
    rho = DensityOperator(np.kron(np.kron(r.mat, a.mat), b.mat))
    out = cond_mutual_info(rho, (2, 2, 2), 0.01, 0.01)
    assert abs(out.smoothed_term.value) < 1e-6
    assert abs(out.induced_term - math.log2(0.01 / 0.99)) < 1e-6
    assert abs(out.value - (out.smoothed_term.value - out.induced_term)) < 1e-15


def test_cond_mutual_info_delta0_monotone():
    rho = random_density(8, 8, 121)
    a = cond_mutual_info(rho, (2, 2, 2), 0.05, 0.01)
    b = cond_mutual_info(rho, (2, 2, 2), 0.2, 0.01)
    assert b.smoothed_term.value <= a.smoothed_term.value + 1e-12


def test_cond_mutual_info_validates_dims():
    rho = random_density(8, 8, 122)
    with pytest.raises(ValidationError):
        cond_mutual_info(rho, (2, 2, 3), 0.1, 0.1)
