import numpy as np
import pytest

from slitflow.driving import (DrivingPath, RandomSeed, brownian_increments, brownian_path,
                              deterministic_path, holder_half_seminorm, standard_normals,
                              tangent_angle_constant)


def test_zero_kappa_gives_zero_path():
    u = brownian_path(0.0, 1e-2, 1.0, 5)
    assert np.all(u.values == 0)


def test_reproducible_bit_exact():
    a = brownian_path(2.0, 1e-3, 1.0, RandomSeed(7, 3))
    b = brownian_path(2.0, 1e-3, 1.0, RandomSeed(7, 3))
    assert np.array_equal(a.values, b.values)
    c = brownian_path(2.0, 1e-3, 1.0, RandomSeed(7, 4))
    assert not np.array_equal(a.values, c.values)


def test_normal_slices_are_consistent():
    seed = RandomSeed(11)
    full = standard_normals(seed, 0, 3000)
    np.testing.assert_array_equal(standard_normals(seed, 1000, 1500), full[1000:2500])
    np.testing.assert_array_equal(standard_normals(seed, 1023, 2), full[1023:1025])


def test_path_starts_at_zero_and_matches_increments():
    u = brownian_path(3.0, 1e-3, 0.5, 2)
    assert u.values[0] == 0 and u.times[0] == 0
    np.testing.assert_allclose(np.diff(u.values), brownian_increments(3.0, 1e-3, RandomSeed(2), 0, 500))


def terminal_values(kappa, dt, T, n):
    steps = int(round(T / dt))
    return np.array([np.sqrt(kappa * dt) * standard_normals(RandomSeed(1, i), 0, steps).sum()
                     for i in range(n)])


def test_terminal_moments():
    kappa, T, n = 2.0, 1.0, 10_000
    uT = terminal_values(kappa, 0.01, T, n)
    assert abs(uT.mean()) < 3 * np.sqrt(kappa * T / n)
    assert abs(uT.var() - kappa * T) < 0.1 * kappa * T


def test_refinement_variance():
    # summing pairs of fine increments has the coarse variance
    n, steps = 10_000, 50
    coarse = np.array([np.sqrt(0.02) * standard_normals(RandomSeed(3, i), 0, steps)
                       for i in range(200)]).ravel()
    fine = np.array([np.sqrt(0.01) * standard_normals(RandomSeed(4, i), 0, 2 * steps)
                     for i in range(200)]).reshape(-1, 2).sum(axis=1)
    assert coarse.size == fine.size == n
    assert abs(fine.var() / coarse.var() - 1) < 0.05


def test_deterministic_kinds():
    assert np.all(deterministic_path("constant0", dt=0.1, T=1).values == 0)
    lin = deterministic_path("linear", {"mu": 2.0}, 0.1, 1.0)
    np.testing.assert_allclose(lin.values, 2 * lin.times)
    sq = deterministic_path("sqrt", {"c": 1.5}, 0.01, 1.0)
    np.testing.assert_allclose(sq.values, 1.5 * np.sqrt(sq.times))
    assert tangent_angle_constant(np.pi / 2) == 0
    assert tangent_angle_constant(np.pi / 4) == pytest.approx(4 / np.sqrt(3))
    with pytest.raises(ValueError):
        tangent_angle_constant(0.0)
    with pytest.raises(ValueError):
        deterministic_path("bogus")


def test_invariants_enforced():
    with pytest.raises(ValueError):
        DrivingPath([0, 1], [1, 2])
    with pytest.raises(ValueError):
        DrivingPath([0, 1, 1], [0, 1, 2])
    with pytest.raises(ValueError):
        DrivingPath([0.1, 1], [0, 1])


def test_linear_interpolation_and_slices():
    u = DrivingPath([0, 1, 2], [0, 2, 0])
    assert u(0.5) == 1.0 and u(1.5) == 1.0
    s = u.shifted(1.0)
    assert s.values[0] == 0 and s(1.0) == -2.0
    t = u.truncated(1.5)
    assert t.horizon == 1.5 and t(1.5) == 1.0


def test_csv_round_trip(tmp_path):
    u = brownian_path(1.0, 1e-2, 0.5, 9)
    path = tmp_path / "u.csv"
    u.to_csv(path)
    assert path.read_text().splitlines()[0] == "t,u"
    assert DrivingPath.from_csv(path) == u


def test_holder_seminorm():
    assert holder_half_seminorm(deterministic_path("zero", dt=0.01, T=1), 0.1) == 0
    sq = deterministic_path("sqrt", {"c": 2.0}, 1e-4, 1.0)
    assert holder_half_seminorm(sq, 1e-3) == pytest.approx(2.0, rel=1e-6)
    lin = deterministic_path("linear", {"mu": 3.0}, 1e-2, 1.0)
    assert holder_half_seminorm(lin, 0.25) == pytest.approx(3.0 * np.sqrt(0.25), rel=1e-9)


def test_holder_seminorm_monotone():
    u = brownian_path(2.0, 1e-3, 0.3, 0)
    vals = [holder_half_seminorm(u, w) for w in (0.1, 0.03, 0.01, 0.003)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
