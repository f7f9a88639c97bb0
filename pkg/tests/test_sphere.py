import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import antipodal, tetrahedron
from oracles import area, cap_area_elementary
from rieszsphere import (
    Cap,
    ConfigMeta,
    Configuration,
    InvalidArgumentError,
    ParseError,
    cap_area,
    cap_counts,
    cap_fraction,
    read_config,
    sample_uniform,
    separation,
    sphere_area,
    write_config,
)
from rieszsphere.sphere import make_rng, random_rotation, spiral_points


class TestSampleUniform:
    def test_unit_norm(self):
        X = sample_uniform(2, 100, seed=7).points
        assert np.max(np.abs(np.linalg.norm(X, axis=1) - 1)) <= 1e-12

    def test_hemisphere_fraction(self):
        X = sample_uniform(2, 100_000, seed=1).points
        north = Cap(np.array([0.0, 0.0, 1.0]), math.sqrt(2))
        frac = np.count_nonzero(north.contains(X)) / len(X)
        assert abs(frac - 0.5) <= 0.01

    def test_bit_identical(self):
        a = sample_uniform(3, 50, seed=3).points
        b = sample_uniform(3, 50, seed=3).points
        assert a.tobytes() == b.tobytes()

    def test_streams_differ(self):
        assert not np.array_equal(sample_uniform(2, 5, seed=3, stream=0).points,
                                  sample_uniform(2, 5, seed=3, stream=1).points)

    @pytest.mark.parametrize("d,n", [(1, 10), (2, 0)])
    def test_invalid(self, d, n):
        with pytest.raises(InvalidArgumentError):
            sample_uniform(d, n)

    def test_cap_counts_binomial(self):
        n = 100_000
        rng = make_rng(11)
        c = rng.standard_normal(3)
        cap = Cap(c / np.linalg.norm(c), 0.7)
        p = cap_area(2, 0.7) / sphere_area(2)
        opened, closed = cap_counts(sample_uniform(2, n, seed=5), cap)
        assert opened == closed
        assert abs(opened - n * p) <= 4 * math.sqrt(n * p * (1 - p))

    def test_separation_positive(self):
        for seed in range(5):
            assert separation(sample_uniform(2, 2000, seed=seed)).min_dist > 0


class TestCapArea:
    def test_full_sphere(self):
        assert cap_area(2, 2.0) == pytest.approx(4 * math.pi, rel=1e-14)

    def test_two_sphere_small(self):
        assert cap_area(2, 0.3) == pytest.approx(0.28274333882308138, rel=1e-13)
        assert cap_area(2, 0.3, method="quadrature") == pytest.approx(math.pi * 0.09, rel=1e-12)

    def test_three_sphere_full(self):
        assert cap_area(3, 2.0) == pytest.approx(2 * math.pi**2, rel=1e-14)

    @given(st.integers(2, 6), st.floats(1e-3, 2.0))
    def test_beta_matches_quadrature(self, d, r):
        assert cap_area(d, r) == pytest.approx(cap_area(d, r, method="quadrature"), rel=1e-11)

    @pytest.mark.parametrize("d", [2, 3])
    def test_elementary(self, d):
        for r in (0.05, 0.5, 1.3, 1.99):
            assert cap_area(d, r) == pytest.approx(cap_area_elementary(d, r), rel=1e-11)

    @pytest.mark.parametrize("d", [2, 3, 4, 5])
    def test_monotone_and_full(self, d):
        rs = np.linspace(0.01, 2.0, 200)
        vals = [cap_area(d, r) for r in rs]
        assert np.all(np.diff(vals) > 0)
        assert cap_area(d, 2.0) == pytest.approx(area(d), rel=1e-13)

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_small_radius_ball_volume(self, d):
        ball = math.pi ** (d / 2) / math.gamma(d / 2 + 1)
        for r in (1e-2, 5e-3, 1e-3):
            assert cap_area(d, r) / r**d == pytest.approx(ball, rel=0.01)

    @pytest.mark.parametrize("r", [0.0, -0.1, 2.0001])
    def test_invalid_radius(self, r):
        with pytest.raises(InvalidArgumentError):
            cap_area(2, r)

    def test_fraction_two_sphere_closed_form(self):
        t = np.linspace(-1, 1, 41)
        assert np.allclose(cap_fraction(2, t), (1 - t) / 2, atol=1e-15)


class TestCap:
    def test_open_membership(self):
        # r = 2 covers everything except the antipode, which lies on the boundary
        cap = Cap(np.array([0.0, 0.0, 1.0]), 2.0)
        south = np.array([[0.0, 0.0, -1.0]])
        assert not cap.contains(south)[0]
        assert cap.contains(south, closed=True)[0]
        assert cap_counts(Configuration(2, south), cap) == (0, 1)

    def test_bad_center(self):
        with pytest.raises(InvalidArgumentError):
            Cap(np.array([0.0, 0.0, 2.0]), 1.0)


class TestSeparation:
    def test_antipodal(self):
        sep = separation(antipodal())
        assert sep.min_dist == pytest.approx(2.0)
        assert sep.scaled == pytest.approx(2 * math.sqrt(2))

    def test_tetrahedron(self):
        assert separation(tetrahedron()).min_dist == pytest.approx(math.sqrt(8 / 3), rel=1e-14)

    def test_repeated_point(self):
        X = np.array([[0, 0, 1.0], [1, 0, 0], [0, 0, 1.0]])
        with pytest.raises(InvalidArgumentError):
            separation(Configuration(2, X))

    def test_single_point(self):
        with pytest.raises(InvalidArgumentError):
            separation(Configuration(2, np.array([[0, 0, 1.0]])))

    def test_near_duplicates(self):
        X = np.array([[0, 0, 1.0], [1e-9, 0, 1.0], [1, 0, 0]])
        X /= np.linalg.norm(X, axis=1)[:, None]
        sep = separation(Configuration(2, X))
        assert 0 < sep.min_dist < 2e-9


class TestConfigFile:
    def test_round_trip(self, tmp_path):
        cfg = sample_uniform(3, 40, seed=2).with_meta(s=0.0, seed=99)
        path = tmp_path / "x.sphpts"
        write_config(cfg, path)
        back = read_config(path)
        assert np.array_equal(back.points, cfg.points)
        assert back.meta.s == 0.0 and back.meta.seed == 99
        assert path.read_text().splitlines()[0] == "# sphpts v1 d=3 n=40 s=log seed=99"

    @given(st.integers(2, 5), st.integers(1, 30), st.integers(0, 2**32))
    def test_round_trip_property(self, tmp_path_factory, d, n, seed):
        cfg = sample_uniform(d, n, seed=seed)
        path = tmp_path_factory.mktemp("rt") / "p.sphpts"
        write_config(cfg, path)
        assert np.array_equal(read_config(path).points, cfg.points)

    def _write(self, path, text):
        path.write_text(text)
        return path

    def test_wrong_coordinate_count(self, tmp_path):
        p = self._write(tmp_path / "a", "# sphpts v1 d=2 n=2 s=1 seed=0\n0 0 1\n0 0 0 1 0\n")
        with pytest.raises(ParseError, match="line 3"):
            read_config(p)

    def test_non_unit(self, tmp_path):
        p = self._write(tmp_path / "b", "# sphpts v1 d=2 n=2 s=1 seed=0\n0 0 1.01\n0 1 0\n")
        with pytest.raises(ParseError, match="line 2"):
            read_config(p)

    def test_bad_header(self, tmp_path):
        p = self._write(tmp_path / "c", "# points d=2\n0 0 1\n")
        with pytest.raises(ParseError, match="line 1"):
            read_config(p)

    def test_count_mismatch(self, tmp_path):
        p = self._write(tmp_path / "d", "# sphpts v1 d=2 n=3 s=1 seed=0\n0 0 1\n0 1 0\n")
        with pytest.raises(ParseError):
            read_config(p)


def test_random_rotation_orthogonal():
    Q = random_rotation(4, make_rng(0))
    assert np.allclose(Q @ Q.T, np.eye(4), atol=1e-13)


def test_spiral_points_unit_and_distinct():
    X = spiral_points(500)
    cfg = Configuration(2, X)
    assert separation(cfg).scaled > 1.0


def test_configuration_renormalizes():
    X = np.array([[0, 0, 1 + 1e-11], [0, 1.0, 0]])
    cfg = Configuration(2, X, ConfigMeta())
    assert np.max(np.abs(np.linalg.norm(cfg.points, axis=1) - 1)) <= 1e-12
