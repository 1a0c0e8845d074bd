import math

import numpy as np
import pytest

from statkpz import contours as ct
from statkpz import specfun as sf


class TestContourCv:
    def test_apex_formula(self):
        c = ct.contour_cv([0.0], [1.0], math.pi / 4)
        assert abs(c.segments[0].anchor() - 0.5) < 1e-14

    def test_apex_two_drifts(self):
        c = ct.contour_cv([-1.0, 0.0], [2.0], math.pi / 8)
        assert abs(c.segments[0].anchor() - 1.0) < 1e-14

    def test_parameter_error(self):
        with pytest.raises(ct.GeometryError):
            ct.contour_cv([1.0], [0.5], math.pi / 8)

    def test_stays_clear_of_gamma_poles(self):
        a = [0.2, 0.0]
        alpha = [1.2]
        c = ct.contour_cv(a, alpha, math.pi / 4 - 0.02)
        q = ct.build_quadrature(c, n_per_segment=12, truncation=25.0)
        poles = [an - j for an in a for j in range(0, 30)]
        assert ct.pole_clearance(q, poles) > 0.1
        # and remains left of min(alpha)
        assert np.max(np.real(q.nodes)) < 1.2


class TestContourCs:
    def test_five_segments(self):
        c = ct.contour_cs(v=0.5 + 1.0j, a=[0.0], alpha=[1.0])
        assert len(c.segments) == 5

    def test_nodes_clear_of_integers(self):
        c = ct.contour_cs(v=0.5 + 1.0j, a=[0.0], alpha=[1.0], d=0.1)
        q = ct.build_quadrature(c, n_per_segment=10, truncation=20.0)
        dist = np.abs(q.nodes[:, None] - np.arange(0, 40)[None, :]).min()
        assert dist >= min(0.1, 0.5) - 1e-12

    def test_apex_case_avoids_alpha_pole(self):
        # alpha - a = 1: the j=0 pole of Gamma(alpha - v - s) sits near s = 1/2
        # for v near the apex; the crossing must dodge it.
        a, alpha = [0.2] + [0.0] * 8, [1.2]
        mu = 0.5 * max(a) + 0.5 * min(alpha)
        v = complex(mu, 0.0) + 0.05 * complex(-math.cos(0.76), math.sin(0.76))
        c = ct.contour_cs(v, a, alpha)
        q = ct.build_quadrature(c, n_per_segment=10, truncation=20.0)
        spoles = [complex(al, 0.0) - v + j for al in alpha for j in range(3)]
        assert ct.pole_clearance(q, spoles) > 0.05

    def test_shifted_path_misses_wedge(self):
        a, alpha = [0.0], [1.0]
        phi = math.pi / 4 - 0.02
        cv = ct.contour_cv(a, alpha, phi)
        qv = ct.build_quadrature(cv, n_per_segment=12, truncation=25.0)
        for v in qv.nodes[:: len(qv.nodes) // 7]:
            cs = ct.contour_cs(v, a, alpha, phi=phi)
            qs = ct.build_quadrature(cs, n_per_segment=8, truncation=15.0)
            shifted = v + qs.nodes
            assert np.min(np.abs(shifted[:, None] - qv.nodes[None, :])) > 1e-3


class TestVerticalLine:
    def test_endpoints(self):
        c = ct.vertical_line(0.25, 10.0)
        assert c.segments[0].start == 0.25 - 10.0j
        assert c.segments[0].end == 0.25 + 10.0j

    def test_conjugate_symmetric_weights(self):
        q = ct.build_quadrature(ct.vertical_line(1.0, 8.0), n_per_segment=16)
        order = np.argsort(q.nodes.imag)
        nodes = q.nodes[order]
        weights = q.weights[order]
        assert np.allclose(nodes, np.conj(nodes[::-1]))
        # dz/(2 pi i) weights of a vertical line are real and mirror-symmetric,
        # so real-symmetric integrands produce real sums
        assert np.allclose(weights.imag, 0.0)
        assert np.allclose(weights, np.conj(weights[::-1]))

    def test_gaussian_tail_negligible(self):
        # integrand exp(z^3/3) on 1 + iR decays like exp(-y^2): mass beyond
        # |Im z| = 8 is < 1e-14 of the peak
        q = ct.build_quadrature(ct.vertical_line(1.0, 16.0), n_per_segment=16)
        f = np.exp(q.nodes ** 3 / 3.0)
        peak = np.max(np.abs(f))
        tail = np.abs(f[np.abs(q.nodes.imag) > 8.0])
        assert np.all(tail < 1e-14 * peak)


class TestBuildQuadrature:
    def test_residue_theorem_closed_rectangle(self):
        c = ct.rectangle(-1.0, 2.0, -1.5, 1.0)
        q = ct.build_quadrature(c, n_per_segment=40)
        val = np.sum(q.weights / (q.nodes - (0.3 - 0.2j)))
        assert abs(val - 1.0) < 1e-10

    def test_airy_representation(self):
        # (1/2 pi i) int_{1+iR} exp(z^3/3 - z) dz = Ai(1)
        q = ct.build_quadrature(ct.vertical_line(1.0, 14.0), n_per_segment=16, panel_max=0.5)
        val = np.sum(np.exp(q.nodes ** 3 / 3.0 - q.nodes) * q.weights)
        assert abs(val - sf.airy_ai(1.0)) < 1e-9
        assert abs(val.imag) < 1e-12

    def test_self_convergence_doubling(self):
        c = ct.vertical_line(1.0, 12.0)

        def value(n):
            q = ct.build_quadrature(c, n, panel_max=2.0)
            return np.sum(np.exp(q.nodes ** 3 / 3.0 - 2.0 * q.nodes) * q.weights)

        ref = value(96)
        errs = [abs(value(n) - ref) for n in (6, 12, 24)]
        assert errs[1] <= errs[0] * 0.5 + 1e-15
        assert errs[2] <= errs[1] * 0.5 + 1e-15

    def test_polynomial_exactness_per_segment(self):
        # degree 2n-1 exact on a single line segment
        rng = np.random.default_rng(3)
        n = 9
        seg = ct.Contour(segments=(ct.Segment(-1.0 - 0.5j, 2.0 + 1.0j),))
        q = ct.build_quadrature(seg, n_per_segment=n)
        coeffs = rng.standard_normal(2 * n) + 1j * rng.standard_normal(2 * n)
        poly = np.polynomial.Polynomial(coeffs)
        ipoly = poly.integ()
        exact = (ipoly(2.0 + 1.0j) - ipoly(-1.0 - 0.5j)) / (2.0j * math.pi)
        got = np.sum(poly(q.nodes) * q.weights)
        assert abs(got - exact) < 1e-12 * max(1.0, abs(exact))

    def test_marker_refinement_resolves_near_pole(self):
        # 1/(z - (0.5 + 0.05i)) along [0,1]: marker refinement recovers accuracy
        seg = ct.Contour(segments=(ct.Segment(0.0 + 0j, 1.0 + 0j),), markers=(0.5 + 0.05j,))
        q = ct.build_quadrature(seg, n_per_segment=16)
        pole = 0.5 + 0.05j
        val = np.sum(q.weights / (q.nodes - pole)) * ct.TWO_PI_I
        exact = np.log((1.0 - pole) / (0.0 - pole))
        assert abs(val - exact) < 1e-10

    def test_not_simple_raises(self):
        bow = ct.Contour(
            segments=(
                ct.Segment(0j, 1.0 + 1.0j),
                ct.Segment(1.0 + 1.0j, 1.0 + 0j),
                ct.Segment(1.0 + 0j, 0.0 + 1.0j),
            )
        )
        with pytest.raises(ct.GeometryError):
            ct.build_quadrature(bow, n_per_segment=6)


class TestHalfline:
    def test_exponential(self):
        q = ct.halfline_quadrature(n=64, scale=1.0)
        assert abs(np.sum(np.exp(-q.nodes) * q.weights) - 1.0) < 1e-10

    def test_gamma_integral(self):
        q = ct.halfline_quadrature(n=96, scale=4.0)
        assert abs(np.sum(q.nodes * np.exp(-q.nodes / 4.0) * q.weights) - 16.0) < 1e-8

    def test_airy_integral(self):
        q = ct.halfline_quadrature(n=160, scale=2.0)
        val = np.sum(sf.airy_ai(np.real(q.nodes)) * np.real(q.weights))
        assert abs(val - 1.0 / 3.0) < 1e-8

    def test_positive_nodes_weights(self):
        q = ct.halfline_quadrature(n=48, scale=2.0)
        assert np.all(q.nodes > 0)
        assert np.all(q.weights > 0)

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            ct.halfline_quadrature(n=4)


class TestAudits:
    def test_pole_clearance_reported(self):
        q = ct.build_quadrature(ct.vertical_line(1.0, 5.0), n_per_segment=8)
        assert ct.pole_clearance(q, [0.0]) >= 1.0
        assert ct.pole_clearance(q, []) == math.inf

    def test_truncation_radius_scan(self):
        r = ct.truncation_radius_for(lambda z: np.exp(-np.abs(z - 1.0) ** 2), 1.0, 1.0j, r_max=100.0)
        assert 5.0 < r < 40.0
