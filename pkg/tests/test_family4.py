import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from mapcones import cones
from mapcones import family4 as f4
from mapcones import numerics as nm
from mapcones.family4 import FamilyParams
from mapcones.superop import compose, depolarizing, diagonal_expectation, identity, transposition

LN3 = math.log(3)
XI = 2.2055694304005904  # root of x^3 - 2x^2 - 1


def random_params(rng, n):
    return FamilyParams(*rng.uniform(-1, 1, 4), n=n)


def test_to_superop_matches_assembly(rng):
    for n in (2, 3):
        p = random_params(rng, n)
        S = (depolarizing(n) * p.alpha + diagonal_expectation(n) * p.beta
             + transposition(n) * p.gamma + identity(n) * p.delta)
        assert np.max(np.abs(p.to_superop().choi - S.choi)) <= 1e-12


def test_choi_eigs_examples():
    eigs = f4.choi_eigs(FamilyParams(0, 0, 0, 1, 2))
    spectrum = sorted(v for v, m in eigs for _ in range(m))
    assert np.allclose(spectrum, [0, 0, 0, 2])
    eigs = f4.choi_eigs(FamilyParams(1, 0, 0, 0, 2))
    assert all(np.isclose(v, 0.5) for v, m in eigs)
    assert [m for _, m in f4.choi_eigs(FamilyParams(1, 2, 3, 4, 3))] == [3, 3, 2, 1]
    for n in (2, 3, 4, 5):
        assert sum(m for _, m in f4.choi_eigs(FamilyParams(1, 0, 0, 0, n))) == n * n


def test_choi_eigs_match_numeric_spectrum(rng):
    worst = 0.0
    for i in range(600):
        n = (2, 3, 4)[i % 3]
        p = random_params(rng, n)
        closed = np.sort([v for v, m in f4.choi_eigs(p) for _ in range(m)])
        numeric = nm.hermitian_eig(p.to_superop().choi)[0]
        worst = max(worst, np.max(np.abs(closed - np.sort(numeric))))
    assert worst <= 1e-9


def test_choi_eigenvectors_are_the_joint_eigenspaces():
    n = 3
    p = FamilyParams(0.3, -0.7, 0.4, 1.1, n)
    C = p.to_superop().choi
    e = np.eye(n)
    anti = np.kron(e[0], e[1]) - np.kron(e[1], e[0])
    sym = np.kron(e[0], e[1]) + np.kron(e[1], e[0])
    diag = np.kron(e[0], e[0]) - np.kron(e[1], e[1])
    omega = sum(np.kron(e[i], e[i]) for i in range(n))
    vals = [v for v, _ in f4.choi_eigs(p)]
    for vec, lam in zip((anti, sym, diag, omega), vals):
        assert np.allclose(C @ vec, lam * vec)


def test_is_cp_family_examples():
    assert f4.is_cp_family(FamilyParams(0, 0, 0, 1, 2))
    for n in (1, 2, 3):
        assert not f4.is_cp_family(FamilyParams(0, 0, 1, 0, n))
    assert f4.is_cp_family(FamilyParams(2, 0, 1, 0, 2))
    assert f4.cp_slack(FamilyParams(2, 0, 1, 0, 2)) == 0
    assert sorted(v for v, m in f4.choi_eigs(FamilyParams(2, 0, 1, 0, 2)) for _ in range(m)) == [0, 2, 2, 2]


def test_is_cp_family_matches_is_cp(rng):
    mismatches = 0
    for i in range(1500):
        n = (2, 3, 4)[i % 3]
        p = random_params(rng, n)
        if abs(f4.cp_slack(p)) < 1e-6:
            continue
        mismatches += f4.is_cp_family(p) != (cones.is_cp(p.to_superop()).status == cones.MEMBER)
    assert mismatches == 0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4), st.sampled_from([2, 3, 4]))
def test_cp_slack_sign_matches_min_eig(c, n):
    p = FamilyParams(*c, n=n)
    lam = f4.min_choi_eig(p)
    # the slack rescales eigenvalue margins, so only compare away from zero
    assume(abs(lam) > 1e-10)
    assert (f4.cp_slack(p) >= 0) == (lam >= 0)


def test_k_positive_slice_examples():
    assert f4.is_k_positive_10(2, -1, 1, 2)
    assert not f4.is_k_positive_10(2, -1, 2, 2)
    assert f4.is_k_positive_01(0, 1, 1, 2)
    assert not f4.is_k_positive_01(0, 1, 2, 2)
    for n in (2, 3):
        for g in (-0.5, 0.7):
            assert all(f4.is_k_positive_01(n * abs(g), g, k, n) for k in range(1, n + 1))
    with pytest.raises(ValueError):
        f4.is_k_positive_10(1, 0, 3, 2)
    with pytest.raises(ValueError):
        f4.is_k_positive_01(1, 0, 0, 2)


def test_k_positive_slice_k_equals_n_is_cp(rng):
    for _ in range(500):
        n = int(rng.integers(2, 5))
        a, x = rng.uniform(-1, 2), rng.uniform(-1, 1)
        assert f4.is_k_positive_10(a, x, n, n) == f4.is_cp_family(FamilyParams(a, 0, 0, x, n))
        assert f4.is_k_positive_01(a, x, n, n) == f4.is_cp_family(FamilyParams(a, 0, x, 0, n))


def test_k_positive_family_dispatch():
    assert f4.is_k_positive_family(FamilyParams(2, 0, 0, -1, 2), 1)
    assert not f4.is_k_positive_family(FamilyParams(0, 0, 1, 0, 2), 2)
    assert f4.is_k_positive_family(FamilyParams(1, 1, 1, 1, 3), 2) is None
    assert f4.is_k_positive_family(FamilyParams(1, 1, 0.1, 0.1, 2), 2) is True


def test_slice_falses_are_witnessed(rng):
    found = 0
    for i in range(60):
        n, k = (2, 3)[i % 2], 1 + (i // 2) % 2
        a, x = rng.uniform(0, 2), rng.uniform(-1, 0)
        if i % 4 < 2:
            p, ok = FamilyParams(a, 0, 0, x, n), f4.is_k_positive_10(a, x, k, n)
            margin = abs(x + a / (k * n))
        else:
            p, ok = FamilyParams(a, 0, x, 0, n), f4.is_k_positive_01(a, x, k, n)
            margin = abs(a - (max(0, -n * x) if k == 1 else n * abs(x)))
        if ok or margin < 1e-3:
            continue
        v = cones.is_k_positive_witnessed(p.to_superop(), k, samples=500, seed=i)
        assert v.status == cones.NOT_MEMBER
        found += 1
    assert found > 10


def test_evolve_family_examples():
    assert f4.evolve_family(FamilyParams(0.3, -1, 2, 0.5, 2), 0).coeffs == (0, 0, 0, 1)
    for a in (0.5, 1.0, 3.0):
        q = f4.evolve_family(FamilyParams(a, 0, 0, -a, 2), 0.7)
        assert np.allclose(q.coeffs, (1 - math.exp(-0.7 * a), 0, 0, math.exp(-0.7 * a)), atol=1e-15)
    q = f4.evolve_family(FamilyParams(1, 0, 0, -1, 2), math.log(2))
    assert np.allclose(q.coeffs, (0.5, 0, 0, 0.5), atol=1e-15)
    with pytest.raises(ValueError):
        f4.evolve_family(FamilyParams(1, 0, 0, -1), -1.0)


def test_evolve_family_matches_expm(rng):
    for i in range(60):
        n = (2, 3)[i % 2]
        L = random_params(rng, n)
        t = rng.uniform(0, 20) if i % 3 else rng.uniform(0, 1)
        E = f4.evolve_family(L, t).to_superop().natural
        ref = nm.expm(t * L.to_superop().natural)
        assert np.max(np.abs(E - ref)) <= 1e-9 * max(1.0, np.max(np.abs(ref)))


def test_compose_family_matches_superop_composition(rng):
    for n in (2, 3):
        p1, p2 = random_params(rng, n), random_params(rng, n)
        lhs = f4.compose_family(p1, p2).to_superop()
        rhs = compose(p1.to_superop(), p2.to_superop())
        assert np.max(np.abs(lhs.choi - rhs.choi)) <= 1e-12
    with pytest.raises(ValueError):
        f4.compose_family(FamilyParams(1, 0, 0, 0, 2), FamilyParams(1, 0, 0, 0, 3))


def test_semigroup_law(rng):
    for _ in range(200):
        L = random_params(rng, int(rng.integers(2, 5)))
        s, t = rng.uniform(0, 3, 2)
        lhs = f4.compose_family(f4.evolve_family(L, s), f4.evolve_family(L, t))
        rhs = f4.evolve_family(L, s + t)
        assert np.allclose(lhs.coeffs, rhs.coeffs, rtol=1e-9, atol=1e-9)


def test_entry_time_depolarizing_ppt():
    for a in (0.5, 1.0, 2.0):
        r = f4.entry_time(FamilyParams(a, 0, 0, -a, 2), "EB")
        assert r.status == "entered" and r.method == "both"
        assert abs(r.t_star - LN3 / a) <= 1e-8
        assert abs(r.closed_form - r.bisection) <= 1e-8
    r = f4.entry_time(FamilyParams(1, 0, 0, -1, 3), "PPT")
    assert abs(r.t_star - math.log(4)) <= 1e-8


def test_entry_time_depol_transpose():
    L = FamilyParams(1, 0, 1, -2, 2)
    cp = f4.entry_time(L, "CP")
    assert abs(cp.t_star - math.log((1 + math.sqrt(5)) / 2)) <= 1e-8
    assert abs(cp.closed_form - cp.bisection) <= 1e-8
    eb = f4.entry_time(L, "EB")
    assert abs(eb.t_star - math.log(XI)) <= 1e-8
    assert abs(XI**3 - 2 * XI**2 - 1) <= 1e-12
    assert abs(eb.closed_form - eb.bisection) <= 1e-8


def test_entry_time_one_sided_crossing(rng):
    cases = [(FamilyParams(1, 0, 0, -1, 2), "EB"), (FamilyParams(1, 0, 1, -2, 2), "CP"),
             (FamilyParams(1, 0, 1, -2, 2), "PPT"), (FamilyParams(0.7, 0, 0.7, -1.4, 3), "CP")]
    for L, cone in cases:
        r = f4.entry_time(L, cone)
        inside = lambda t: f4.cone_margin(f4.evolve_family(L, t), cone) >= 0  # noqa: E731
        assert not inside(r.t_star - 1e-6) and inside(r.t_star + 1e-6)


def test_entry_time_never_and_inside():
    r = f4.entry_time(FamilyParams(0, 0, 0, 0, 2), "CP")
    assert r.status == "inside" and r.t_star == 1e-8
    r = f4.entry_time(FamilyParams(0, 0, 1, -1, 2), "CP")
    assert r.status == "never_in_bracket" and math.isinf(r.t_star)
    assert r.to_dict()["t_star"] == "inf"
    with pytest.raises(ValueError):
        f4.entry_time(FamilyParams(1, 0, 0, -1, 2), "CP", bracket=(1.0, 0.5))
    with pytest.raises(ValueError):
        f4.cone_margin(FamilyParams(1, 0, 0, 0, 3), "EB")


def test_cp_entry_inequality_residual(rng):
    for _ in range(20):
        a = rng.uniform(0.2, 3)
        g = a * rng.uniform(0.1, 2)
        n = int(rng.integers(2, 5))
        L = FamilyParams(a, 0, g, -a - g, n)
        r = f4.entry_time(L, "CP")
        if r.status != "entered":
            continue
        t = r.t_star
        residual = 2 * math.expm1(a * t) - n * abs(-math.expm1(-2 * t * g))
        assert abs(residual) <= 1e-8


def test_monotone_improvement(rng):
    for _ in range(20):
        a, g = rng.uniform(0.2, 3), rng.uniform(-2, 2)
        n = int(rng.integers(2, 5))
        L = FamilyParams(a, 0, g, -a - g, n)
        r = f4.entry_time(L, "CP")
        if r.status == "never_in_bracket":
            continue
        for t in np.geomspace(r.t_star * (1 + 1e-6) + 1e-9, 100, 20):
            assert f4.is_cp_family(f4.evolve_family(L, t))


def test_ppt_determinant_examples():
    L = FamilyParams(1, 0, 0, -1, 2)
    assert f4.ppt_determinant_condition(L, 0, "depolarizing") == -1
    assert abs(f4.ppt_determinant_condition(L, 60, "depolarizing") - 0.25) <= 1e-12
    # x = e^{-t}: 1/4 (1 - 2x - 3x^2)
    for t in (0.1, 1.0, 2.5):
        x = math.exp(-t)
        assert np.isclose(f4.ppt_determinant_condition(L, t, "depolarizing"), 0.25 * (1 - 2 * x - 3 * x * x))
    assert abs(f4.ppt_determinant_condition(L, LN3, "depolarizing")) <= 1e-15
    L2 = FamilyParams(1, 0, 1, -2, 2)
    t = math.log(XI)
    assert f4.ppt_determinant_condition(L2, t - 1e-6, "depol+transpose") < 0
    assert f4.ppt_determinant_condition(L2, t + 1e-6, "depol+transpose") > 0
    with pytest.raises(ValueError):
        f4.ppt_determinant_condition(L2, 1.0, "depolarizing")
    with pytest.raises(ValueError):
        f4.ppt_determinant_condition(FamilyParams(1, 0, 0, -1, 3), 1.0, "depolarizing")


def test_ppt_determinant_sign_matches_is_ppt():
    for L, variant in ((FamilyParams(1, 0, 0, -1, 2), "depolarizing"),
                       (FamilyParams(1, 0, 1, -2, 2), "depol+transpose"),
                       (FamilyParams(0.6, 0, 0.3, -0.9, 2), "depol+transpose")):
        t_entry = f4.entry_time(L, "PPT").t_star
        for t in np.linspace(0.01, 4, 80):
            if abs(t - t_entry) < 1e-4:
                continue
            det = f4.ppt_determinant_condition(L, t, variant)
            S = f4.evolve_family(L, t).to_superop()
            if f4.is_cp_family(f4.evolve_family(L, t), 1e-12):
                assert (det > 0) == (cones.is_ppt(S).status == cones.MEMBER)


def test_trajectory_rows():
    L = FamilyParams(1, 0, 0, -1, 2)
    rows = f4.trajectory(L, [0.5, 2.0])
    assert tuple(rows[0]) == f4.TRAJECTORY_COLUMNS
    assert rows[0]["eb"] is False and rows[1]["eb"] is True
    assert f4.trajectory(FamilyParams(1, 0, 0, -1, 3), [1.0])[0]["eb"] is None
