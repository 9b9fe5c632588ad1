import math

import numpy as np
import pytest

from basicvar.models import (Domain, Endpoint, ExtrapolationError,
                             QuotientModel, SINGULAR_LEAF,
                             full_consistency_deviation,
                             leaf_volume_asymptotics, load_model,
                             make_flat_torus_model, make_sphere_clifford_model,
                             make_sphere_latitude_model, mean_curvature,
                             resolve_model, total_volume)

TWO_PI = 2.0 * math.pi


class TestFlatTorus:
    def test_density_and_dimensions(self):
        model = make_flat_torus_model(3, 2)
        q = model.quotient
        assert q.min_leaf_dim == 2
        assert q.domain.is_circle and q.domain.length == TWO_PI
        t = np.linspace(0.0, TWO_PI, 7)
        assert np.allclose(q.density_at(t), 4.0 * math.pi ** 2)

    def test_total_volume(self):
        q = make_flat_torus_model(3).quotient
        assert total_volume(q) == pytest.approx(TWO_PI ** 3, rel=1e-12)

    def test_leaf_dim_out_of_range(self):
        with pytest.raises(ValueError):
            make_flat_torus_model(2, 2)
        with pytest.raises(ValueError):
            make_flat_torus_model(3, 0)

    def test_higher_dim_quotient_rejected(self):
        with pytest.raises(ValueError, match="1-d quotient"):
            make_flat_torus_model(4, 2)


class TestCliffordModel:
    def test_total_volume_closed_form(self, clifford):
        # antiderivative of the density is -pi^2 cos(2t)
        T = clifford.quotient.domain.length
        oracle = -math.pi ** 2 * (math.cos(2 * T) - 1.0)
        assert oracle == pytest.approx(2.0 * math.pi ** 2, rel=1e-15)
        assert total_volume(clifford.quotient) == pytest.approx(oracle, rel=1e-12)

    def test_density_midpoint(self, clifford):
        assert float(clifford.quotient.density_at(math.pi / 4)) \
            == pytest.approx(2.0 * math.pi ** 2, rel=1e-15)

    def test_singular_endpoints_order_one(self, clifford):
        for ep in clifford.quotient.endpoints:
            assert ep.kind == SINGULAR_LEAF and ep.order == 1


class TestLatitudeModel:
    def test_total_volume_n2(self, latitude2):
        assert total_volume(latitude2.quotient) == pytest.approx(4.0 * math.pi,
                                                                 rel=1e-12)

    def test_density_equator_n3(self, latitude3):
        assert float(latitude3.quotient.density_at(math.pi / 2)) \
            == pytest.approx(4.0 * math.pi, rel=1e-14)

    def test_ineligible(self, latitude2):
        assert latitude2.quotient.min_leaf_dim == 0
        assert not latitude2.quotient.eligible


class TestMeanCurvature:
    def test_clifford_minimal_at_quarter_pi(self, clifford):
        assert abs(mean_curvature(clifford.quotient, math.pi / 4)) <= 1e-12

    def test_clifford_sign_change(self, clifford):
        assert mean_curvature(clifford.quotient, math.pi / 4 - 0.2) < 0.0
        assert mean_curvature(clifford.quotient, math.pi / 4 + 0.2) > 0.0

    def test_latitude3_closed_form(self, latitude3):
        for t in (0.4, 1.0, 2.2):
            assert mean_curvature(latitude3.quotient, t) \
                == pytest.approx(-2.0 / math.tan(t), rel=1e-12)

    def test_flat_torus_zero(self, flat_torus):
        assert mean_curvature(flat_torus.quotient, 1.234) == 0.0

    def test_rejects_endpoints(self, clifford):
        q = clifford.quotient
        for t in (0.0, q.domain.length, -0.1, q.domain.length + 0.1):
            with pytest.raises(ValueError):
                mean_curvature(q, t)

    def test_circle_wraps(self, flat_torus):
        q = flat_torus.quotient
        assert mean_curvature(q, -1.0) == mean_curvature(q, TWO_PI - 1.0)

    def test_matches_log_density_difference_at_second_order(self, clifford,
                                                            latitude2):
        for model in (clifford, latitude2):
            q = model.quotient
            T = q.domain.length
            probes = np.linspace(0.2 * T, 0.8 * T, 7)
            errs = []
            for h in (T / 100.0, T / 200.0):
                fd = -(np.log(q.density_at(probes + h))
                       - np.log(q.density_at(probes - h))) / (2.0 * h)
                exact = np.array([mean_curvature(q, t) for t in probes])
                errs.append(np.max(np.abs(fd - exact)))
            assert math.log2(errs[0] / errs[1]) >= 1.9


class TestLeafVolumeAsymptotics:
    def test_clifford_limit(self, clifford):
        limit = leaf_volume_asymptotics(clifford.quotient, 0)
        assert limit == pytest.approx(4.0 * math.pi ** 2, rel=1e-10)
        # the right endpoint sees the same collapse rate by symmetry
        limit = leaf_volume_asymptotics(clifford.quotient, 1)
        assert limit == pytest.approx(4.0 * math.pi ** 2, rel=1e-10)

    def test_latitude2_limit(self, latitude2):
        assert leaf_volume_asymptotics(latitude2.quotient, 0) \
            == pytest.approx(TWO_PI, rel=1e-10)

    def test_wrong_declared_order_diverges(self, clifford):
        q = clifford.quotient
        wrong = QuotientModel(
            name="wrong-order", ambient_dim=q.ambient_dim,
            min_leaf_dim=q.min_leaf_dim, domain=q.domain, density=q.density,
            density_derivative=q.density_derivative,
            endpoints=(Endpoint(SINGULAR_LEAF, 2), Endpoint(SINGULAR_LEAF, 1)))
        with pytest.raises(ExtrapolationError):
            leaf_volume_asymptotics(wrong, 0)

    def test_too_small_declared_order_rejected(self, latitude3):
        q = latitude3.quotient
        wrong = QuotientModel(
            name="wrong-order", ambient_dim=q.ambient_dim,
            min_leaf_dim=q.min_leaf_dim, domain=q.domain, density=q.density,
            density_derivative=q.density_derivative,
            endpoints=(Endpoint(SINGULAR_LEAF, 1), Endpoint(SINGULAR_LEAF, 2)))
        with pytest.raises(ExtrapolationError):
            leaf_volume_asymptotics(wrong, 0)

    def test_circle_has_no_endpoints(self, flat_torus):
        with pytest.raises(ValueError):
            leaf_volume_asymptotics(flat_torus.quotient, 0)


class TestFullModelConsistency:
    @pytest.mark.parametrize("factory", [make_flat_torus_model,
                                         make_sphere_clifford_model,
                                         lambda: make_sphere_latitude_model(2)])
    def test_metric_product_rebuilds_density(self, factory):
        model = factory()
        assert full_consistency_deviation(model) <= 1e-12


class TestCustomModels:
    @staticmethod
    def _payload():
        # the standard three-sphere torus density, given as samples, with a
        # rescaled-but-consistent pair of metric coefficients
        ts = np.linspace(0.0, math.pi / 2, 81)
        v = 4.0 * math.pi ** 2 * np.cos(ts) * np.sin(ts)
        return {
            "name": "sampled-clifford", "n": 3, "d_star": 1,
            "domain": {"kind": "interval", "T": math.pi / 2,
                       "endpoints": [{"kind": "singular-leaf", "order": 1},
                                     {"kind": "singular-leaf", "order": 1}]},
            "density_samples": [[float(t), float(x)] for t, x in zip(ts, v)],
            "metric_coeff_samples": [
                [float(t), float(2.0 * math.cos(t) ** 2),
                 float(0.5 * math.sin(t) ** 2)] for t in ts],
        }

    def test_load_full_model(self):
        model = load_model(self._payload())
        q = model.quotient
        assert q.eligible and model.leaf_coord_count == 2
        assert total_volume(q) == pytest.approx(2.0 * math.pi ** 2, rel=1e-5)
        assert leaf_volume_asymptotics(q, 0) \
            == pytest.approx(4.0 * math.pi ** 2, rel=1e-3)

    def test_quotient_only_when_metric_missing(self):
        payload = self._payload()
        del payload["metric_coeff_samples"]
        model = load_model(payload)
        assert isinstance(model, QuotientModel)

    def test_inconsistent_metric_rejected(self):
        payload = self._payload()
        payload["metric_coeff_samples"] = [
            [row[0], 2.0 * row[1], 2.0 * row[2]]
            for row in payload["metric_coeff_samples"]]
        with pytest.raises(ValueError, match="inconsistent"):
            load_model(payload)

    def test_descending_samples_rejected(self):
        payload = self._payload()
        payload["density_samples"] = payload["density_samples"][::-1]
        with pytest.raises(ValueError):
            load_model(payload)


def test_resolve_model_names():
    assert resolve_model("clifford").quotient.name == "clifford"
    assert resolve_model("flat-torus-4").quotient.ambient_dim == 4
    assert resolve_model("latitude-3").quotient.min_leaf_dim == 0
    with pytest.raises(KeyError):
        resolve_model("nope")


def test_domain_validation():
    with pytest.raises(ValueError):
        Domain("triangle", 1.0)
    with pytest.raises(ValueError):
        Domain("interval", -1.0)
    with pytest.raises(ValueError):
        Endpoint(SINGULAR_LEAF, order=None)
