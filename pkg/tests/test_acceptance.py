"""Acceptance gate: every criterion at its stated tolerance and budget.

Run with ``pytest -s tests/test_acceptance.py`` to see one PASS/FAIL line per
criterion; each test also asserts, so a plain pytest run enforces the gate.
"""

import math
import time

import numpy as np

from qdiv import (
    DensityOperator,
    ParentDivergence,
    PositiveOperator,
    brute_force_tc,
    cli,
    convex_split_check,
    d_alpha,
    d_hypothesis,
    d_max,
    d_min,
    d_tilde_max,
    distill_lower_bound,
    eqsr_cost_bound,
    induced,
    induced_renyi,
    op_meet,
    pbd_simulate,
    q_alpha,
)
from qdiv.linalg import _ptrace, mat_fn
from qdiv.states import basis_state, maximally_mixed, random_density, rng_from_seed, save_state
from qdiv.suites import _comm_channel, conditioned_density, derived_seed


def _report(name: str, ok: bool, elapsed: float, budget: float, detail: str = ""):
    status = "PASS" if ok and elapsed < budget else "FAIL"
    print(f"{status} {name}: {detail} [{elapsed:.2f}s / budget {budget:.0f}s]")
    assert ok, f"{name}: {detail}"
    assert elapsed < budget, f"{name} exceeded runtime budget ({elapsed:.2f}s)"


def test_criterion_1_normalization():
    start = time.monotonic()
    worst = 0.0
    half = PositiveOperator(np.eye(2, dtype=complex) / 2)
    for alpha in (0.0, 0.5, 1.0, 2.0, math.inf):
        worst = max(worst, abs(d_alpha(basis_state(0, 2), half, alpha).value - 1.0))
    for m in range(2, 9):
        worst = max(worst, abs(d_min(basis_state(0, m), maximally_mixed(m)).value - math.log2(m)))
    _report("criterion 1 (normalization)", worst <= 1e-10, time.monotonic() - start, 1.0, f"worst gap {worst:.2e}")


def test_criterion_2_self_induced():
    start = time.monotonic()
    worst = 0.0
    for i in range(200):
        seed = derived_seed("acc2", 2024, i)
        dim = 2 + i % 2
        rho = random_density(dim, dim, seed)
        sigma = random_density(dim, dim, seed + 1)
        for eps in (0.1, 0.5, 0.9):
            gap_min = abs(induced(ParentDivergence.min_(), rho, sigma, eps).normalized - d_min(rho, sigma).value)
            gap_max = abs(induced(ParentDivergence.max_(), rho, sigma, eps).normalized - d_max(rho, sigma).value)
            worst = max(worst, gap_min, gap_max)
    _report("criterion 2 (self-induced)", worst <= 1e-8, time.monotonic() - start, 10.0, f"worst gap {worst:.2e}")


def test_criterion_3_inequality_web():
    start = time.monotonic()
    tol = 1e-6
    n_inst = 500
    eps_cycle = (0.15, 0.3, 0.6)
    min_margin = math.inf
    for i in range(n_inst):
        seed = derived_seed("acc3", 515, i)
        rng = rng_from_seed(seed)
        dim = 2 + i % 2
        eps = eps_cycle[i % 3]
        rho = random_density(dim, dim, seed)
        sigma = random_density(dim, dim, seed + 1)

        raws = {a: induced_renyi(rho, sigma, a, eps) for a in (0.0, 0.5, 1.0, 2.0)}
        dh = d_hypothesis(rho, sigma, eps)[0].value
        # raw induced <= hypothesis-testing + log2(eps)
        for a in (0.0, 0.5, 1.0, 2.0):
            min_margin = min(min_margin, dh + math.log2(eps) - raws[a].raw)
        # raw induced >= both smoothed lower bounds
        for a in (1.5, 2.0):
            res = induced_renyi(rho, sigma, a, eps)
            mu = 1.0 - (1.0 - eps) ** (a - 1.0)
            min_margin = min(min_margin, res.raw - d_tilde_max(rho, sigma, 1.0 - mu).value)
            for frac in (0.25, 0.75):
                delta = frac * mu
                dh_d = d_hypothesis(rho, sigma, delta)[0].value
                min_margin = min(min_margin, res.raw - (dh_d + math.log2(mu - delta)))
        # min/max sandwich of the normalized value (reusing the Renyi family)
        dmin_v, dmax_v = d_min(rho, sigma).value, d_max(rho, sigma).value
        for a in (0.5, 1.0, 2.0):
            min_margin = min(min_margin, raws[a].normalized - dmin_v)
            min_margin = min(min_margin, dmax_v - raws[a].normalized)
        # parent + log2(1/eps) upper bound
        for a in (1.0, 2.0):
            pv = d_alpha(rho, sigma, a).value
            min_margin = min(min_margin, pv + math.log2(1.0 / eps) - raws[a].normalized)
        # positive-part and operator-meet trace inequalities on fresh positive pairs
        pos_r = PositiveOperator((0.3 + rng.random()) * random_density(dim, dim, seed + 2).mat)
        pos_s = PositiveOperator((0.3 + rng.random()) * random_density(dim, 1 + i % dim, seed + 3).mat)
        total = PositiveOperator(pos_r.mat + pos_s.mat)
        ptp = float(np.sum(np.clip(np.linalg.eigvalsh(pos_r.mat - pos_s.mat), 0.0, None)))
        for a in (0.5, 2.0):
            min_margin = min(min_margin, q_alpha(pos_r, total, a) - ptp)
        half = mat_fn(total, lambda x: x**-0.5, support_only=True).mat
        cheng_rhs = float(np.trace(pos_r.mat @ half @ pos_s.mat @ half).real)
        meet_tr = float(np.trace(op_meet(pos_r, pos_s).mat).real)
        min_margin = min(min_margin, meet_tr - cheng_rhs)
    ok = min_margin >= -tol
    _report(
        "criterion 3 (inequality web)",
        ok,
        time.monotonic() - start,
        120.0,
        f"min margin {min_margin:.2e} over {n_inst} instances",
    )


def test_criterion_4_limit_proxies():
    start = time.monotonic()
    worst_one = worst_zero = 0.0
    for i in range(100):
        seed = derived_seed("acc4", 44, i)
        rho = conditioned_density(2, seed)
        sigma = conditioned_density(2, seed + 1)
        worst_one = max(
            worst_one,
            abs(induced_renyi(rho, sigma, 2.0, 0.999).normalized - d_alpha(rho, sigma, 2.0).value),
        )
        dmin_v = d_min(rho, sigma).value
        for a in (0.0, 0.5, 1.0, 2.0):
            worst_zero = max(worst_zero, abs(induced_renyi(rho, sigma, a, 1e-4).normalized - dmin_v))
    ok = worst_one <= 2e-2 and worst_zero <= 5e-2
    _report(
        "criterion 4 (limit proxies)",
        ok,
        time.monotonic() - start,
        60.0,
        f"eps->1 gap {worst_one:.2e}, eps->0 gap {worst_zero:.2e}",
    )


def test_criterion_5_aep_trend():
    start = time.monotonic()
    endpoint_ok = True
    monotone_count = 0
    n_inst = 20
    for i in range(n_inst):
        seed = derived_seed("acc5", 55, i)
        rng = rng_from_seed(seed)
        p = 0.8 * (rng.random(2) + 0.1)
        p /= p.sum()
        q = 0.8 * (rng.random(2) + 0.1)
        q /= q.sum()
        dvg = float(np.sum(p * (np.log2(p) - np.log2(q))))
        rho_c = np.diag(p.astype(complex))
        sigma_c = np.diag(q.astype(complex))
        gaps = []
        rho_n, sigma_n = rho_c, sigma_c
        for n in range(1, 7):
            if n > 1:
                rho_n = np.kron(rho_n, rho_c)
                sigma_n = np.kron(sigma_n, sigma_c)
            res = induced_renyi(DensityOperator(rho_n), PositiveOperator(sigma_n), 2.0, 0.3)
            gaps.append(abs(res.raw / n - dvg))
        endpoint_ok = endpoint_ok and gaps[-1] <= gaps[0] + 1e-12
        if all(b <= a + 1e-9 for a, b in zip(gaps, gaps[1:])):
            monotone_count += 1
    frac = monotone_count / n_inst
    ok = endpoint_ok and frac >= 0.9
    _report(
        "criterion 5 (AEP trend)",
        ok,
        time.monotonic() - start,
        60.0,
        f"endpoint ok {endpoint_ok}, monotone fraction {frac:.2f}",
    )


def test_criterion_6_decoding_guarantee():
    start = time.monotonic()
    ok = True
    details = []
    for i in range(20):
        eps = (0.3, 0.5)[i % 2]
        base = derived_seed("acc6", 66, i)
        rho = sigma = None
        for attempt in range(64):
            seed = base + 1000 * attempt
            cand = random_density(4, 4, seed)
            rho_r = _ptrace(cand.mat, [2, 2], [0])
            sig = DensityOperator(np.kron(rho_r, random_density(2, 2, seed + 1).mat))
            probe = induced_renyi(cand, sig, 2.0, eps)
            if probe.is_finite and probe.t_star <= 7.5:
                rho, sigma = cand, sig
                break
        rep = pbd_simulate(rho, sigma, (2, 2), eps)
        good = rep.min_success >= 1.0 - eps - 1e-8 and rep.n <= rep.n_old_bound
        ok = ok and good
        details.append(rep.n)
    _report(
        "criterion 6 (position-based decoding)",
        ok,
        time.monotonic() - start,
        120.0,
        f"family sizes {sorted(set(details))}",
    )


def test_criterion_7_comm_bound_consistency():
    start = time.monotonic()
    ok = True
    checked = 0
    for i in range(10):
        seed = derived_seed("acc7", 77, i)
        chan, name = _comm_channel(i, seed)
        eps = (0.2, 0.4)[i % 2]
        bound = distill_lower_bound(chan, eps, seed=seed)
        mat = chan.stochastic_matrix()
        k = mat.shape[0]
        max_m = bound.floor_m
        while k**max_m > 10**5:
            max_m -= 1
        for m in range(1, max_m + 1):
            checked += 1
            if brute_force_tc(mat, m) > eps + 1e-9:
                ok = False
    _report(
        "criterion 7 (communication-bound consistency)",
        ok,
        time.monotonic() - start,
        60.0,
        f"{checked} (channel, m) pairs against the exact oracle",
    )


def test_criterion_8_convex_split():
    start = time.monotonic()
    ok = True
    cases = 0
    for i in range(10):
        seed = derived_seed("acc8", 88, i)
        if i % 2 == 0:
            from qdiv.suites import _correlated_extension

            ext, sigma = _correlated_extension(seed)
        else:
            ext = random_density(8, 8, seed)
            rng = rng_from_seed(seed + 7)
            s = 0.2 + 0.6 * rng.random()
            sigma = DensityOperator(np.diag([s, 1.0 - s]).astype(complex))
        for n in range(1, 6):
            rep = convex_split_check(ext, (4, 2), sigma, n)
            cases += 1
            if rep.actual_p > rep.epsilon_n + 1e-8:
                ok = False
    _report(
        "criterion 8 (convex split)",
        ok and cases == 50,
        time.monotonic() - start,
        120.0,
        f"{cases} cases",
    )


def test_criterion_9_cost_bound_plumbing(tmp_path):
    start = time.monotonic()
    ok = True
    for i in range(10):
        seed = derived_seed("acc9", 99, i)
        rho = random_density(8, 8, seed)
        bound = eqsr_cost_bound(rho, (2, 2, 2), 0.5, 0.005, 0.005)
        if not (math.isfinite(bound.q_bound) and bound.assembly_gap() <= 1e-12):
            ok = False
    # infeasible parameters refused with exit code 2 at the CLI surface
    state_path = tmp_path / "tri.json"
    save_state(random_density(8, 8, 7), state_path, dims=[2, 2, 2])
    code = cli.main(
        ["qsr", "--state", str(state_path), "--eps", "0.1", "--delta0", "0.05", "--delta1", "0.05"]
    )
    ok = ok and code == 2
    _report("criterion 9 (cost-bound plumbing)", ok, time.monotonic() - start, 60.0, f"refusal exit code {code}")


def test_criterion_10_determinism(tmp_path):
    start = time.monotonic()
    out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
    argv = ["verify", "--suite", "all", "--instances", "5", "--seed", "7", "--format", "json"]
    code1 = cli.main(argv + ["--out", str(out1)])
    code2 = cli.main(argv + ["--out", str(out2)])
    identical = out1.read_bytes() == out2.read_bytes()
    ok = code1 == 0 and code2 == 0 and identical
    _report(
        "criterion 10 (determinism)",
        ok,
        time.monotonic() - start,
        300.0,
        f"exit codes ({code1}, {code2}), byte-identical {identical}",
    )
