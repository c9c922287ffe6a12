"""Transport and holonomy tests against closed-form references.

Each oracle here is computed analytically and frozen, independently of the
implementation: planar flux phases by Stokes, sphere holonomies by enclosed
solid angle, the small-loop expansion from a hand-computed curvature.
"""

import math
import os

import numpy as np
import pytest

from loopfiber.errors import NonAntiHermitianSample, PhaseStepTooLarge
from loopfiber.transport import (
    BaseLoop,
    ConnectionSpec,
    TransportFrame,
    _transport_chain,
    abelian2d,
    chern_winding,
    flat,
    holonomy,
    latitude_family,
    load_loop_csv,
    monopole,
    parallel_transport,
    refinement_delta,
    rotated_twist,
    save_loop_csv,
    su2sample,
    su2sample_curvature,
    transport_reversed,
)

S1 = np.array([[0, 1], [1, 0]], dtype=complex)
S2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
S3 = np.array([[1, 0], [0, -1]], dtype=complex)


def u1_distance(h, exact):
    # distance between phases, insensitive to 2 pi wrapping
    return abs(np.angle(complex(h) * np.conj(complex(exact))))


def latitude_loop(u):
    su, cu = math.sin(u), math.cos(u)
    w = 2.0 * math.pi

    def fn(t):
        c, s = math.cos(w * t), math.sin(w * t)
        return np.array([su * c, su * s, cu]), np.array([-w * su * s, w * su * c, 0.0])

    return BaseLoop(3, fn)


class TestBaseLoop:
    def test_circle_points(self):
        loop = BaseLoop.circle(2.0, center=(1.0, -1.0))
        assert np.allclose(loop.point(0.0), [3.0, -1.0])
        assert np.allclose(loop.point(0.25), [1.0, 1.0])
        x, v = loop.xv(0.0)
        assert np.allclose(v, [0.0, 4.0 * math.pi])

    def test_open_curve_rejected(self):
        with pytest.raises(ValueError, match="does not close"):
            BaseLoop.from_function(2, lambda t: (np.array([t, 0.0]),
                                                 np.array([1.0, 0.0])))

    def test_rotation_shifts_parameter(self):
        loop = BaseLoop.circle(1.0)
        rot = loop.rotated(0.3)
        for t in [0.0, 0.41, 0.9]:
            assert np.allclose(rot.point(t), loop.point(t + 0.3))

    def test_from_samples_interpolates_nodes(self):
        base = BaseLoop.circle(1.0)
        M = 128
        pts = np.array([base.point(j / M) for j in range(M)])
        loop = BaseLoop.from_samples(pts)
        for j in [0, 17, 127]:
            assert np.allclose(loop.point(j / M), pts[j], atol=1e-12)
        # midpoints: cubic accuracy on a smooth curve
        assert np.allclose(loop.point(0.5 / M), base.point(0.5 / M), atol=1e-6)


class TestFlux:
    """Plane with uniform curvature B: holonomy phase equals the flux."""

    @pytest.mark.parametrize("B", [1.0, 2.5])
    @pytest.mark.parametrize("r", [0.5, 1.0, 1.5])
    def test_circle_flux_phase(self, B, r):
        h = holonomy(abelian2d(B), BaseLoop.circle(r), N=2048)[0, 0]
        exact = np.exp(1j * B * math.pi * r * r)
        assert abs(abs(h) - 1.0) < 1e-12
        assert u1_distance(h, exact) < 1e-8

    def test_flux_independent_of_center(self):
        # uniform curvature: only enclosed area matters
        conn = abelian2d(1.0)
        h = holonomy(conn, BaseLoop.circle(0.8, center=(2.0, -3.0)), N=2048)[0, 0]
        assert u1_distance(h, np.exp(1j * math.pi * 0.64)) < 1e-8

    def test_flat_transport_is_identity(self):
        frame = parallel_transport(flat(n=2), BaseLoop.circle(1.0), N=64)
        assert np.allclose(frame.holonomy, np.eye(2), atol=1e-14)
        assert frame.raw_defect < 1e-14
        assert frame.Ts.shape == (65, 2, 2)

    def test_rk4_fourth_order_on_raw_chain(self):
        conn = abelian2d(1.0)
        loop = BaseLoop.circle(1.0)
        exact = np.exp(1j * math.pi)
        errs = []
        for N in (256, 512):
            raw = parallel_transport(conn, loop, N=N).raw_holonomy[0, 0]
            errs.append(abs(raw - exact))
        ratio = errs[0] / errs[1]
        assert 12.0 < ratio < 20.0

    def test_refinement_delta_small(self):
        delta = refinement_delta(abelian2d(1.0), BaseLoop.circle(1.0), N=512)
        assert delta < 1e-10


class TestMonopole:
    def test_latitude_holonomy_solid_angle(self):
        for q in (1, 2):
            conn = monopole(q)
            for u in (math.pi / 3, math.pi / 2, 2 * math.pi / 3):
                h = holonomy(conn, latitude_loop(u), N=2048)[0, 0]
                exact = np.exp(-1j * q * math.pi * (1.0 - math.cos(u)))
                assert u1_distance(h, exact) < 1e-8

    def test_constant_loop_at_pole(self):
        north = BaseLoop.from_function(
            3, lambda t: (np.array([0.0, 0.0, 1.0]), np.zeros(3)))
        h = holonomy(monopole(1), north, N=16)[0, 0]
        assert abs(h - 1.0) < 1e-14

    @pytest.mark.parametrize("q", [1, 2, -1])
    def test_family_winding_equals_charge(self, q):
        assert chern_winding(monopole(q), latitude_family()) == q

    def test_flat_family_winding_zero(self):
        fam = latitude_family()

        def flat3_family(s):
            return fam(s)

        conn = ConnectionSpec(1, 3, lambda x, v: np.zeros((1, 1)), name="flat3")
        assert chern_winding(conn, flat3_family, N=32, M=16) == 0

    def test_winding_rejects_matrix_connection(self):
        with pytest.raises(ValueError, match="n = 1"):
            chern_winding(su2sample(), latitude_family())

    def test_unresolvable_family_raises(self):
        # discontinuous family: a 0.9 pi phase jump survives every
        # refinement, so the sweep must refuse rather than alias
        conn = abelian2d(1.2)

        def family(s):
            return BaseLoop.circle(0.5 if s < 0.5 else 1.0)

        with pytest.raises(PhaseStepTooLarge):
            chern_winding(conn, family, N=64, M=8, max_family_grid=64)


class TestSu2:
    def test_curvature_helper_matches_frozen_matrix(self):
        # hand-derived at x = (0.7, -0.4):
        #   F = i(-0.164 s1 + 0.0788 s2 - 0.44 s3)
        F = su2sample_curvature(np.array([0.7, -0.4]))
        frozen = 1j * (-0.164 * S1 + 0.0788 * S2 - 0.44 * S3)
        assert np.allclose(F, frozen, atol=1e-15)

    def test_small_circle_expansion(self):
        # Hol(circle of radius eps at x0) = I - pi eps^2 F(x0) + O(eps^3)
        conn = su2sample()
        x0 = np.array([0.7, -0.4])
        F = 1j * (-0.164 * S1 + 0.0788 * S2 - 0.44 * S3)
        errs = []
        for eps in (0.2, 0.1, 0.05):
            h = holonomy(conn, BaseLoop.circle(eps, center=tuple(x0)), N=256)
            errs.append(np.linalg.norm(h - (np.eye(2) - math.pi * eps * eps * F)))
        # third-order remainder: log-log slope across the three radii
        slope = np.polyfit(np.log([0.2, 0.1, 0.05]), np.log(errs), 1)[0]
        assert slope > 2.7, (slope, errs)
        assert errs[2] < 2e-3, errs

    def test_holonomy_unitary(self):
        frame = parallel_transport(su2sample(), BaseLoop.circle(1.3), N=512)
        h = frame.holonomy
        assert np.linalg.norm(h.conj().T @ h - np.eye(2)) < 1e-12
        assert frame.unitarity_defect() < 1e-12
        assert frame.raw_defect < 1e-9


class TestSegments:
    def test_composition_of_partial_transports(self):
        conn = su2sample()
        loop = BaseLoop.circle(1.3, center=(0.2, -0.1))
        frame = parallel_transport(conn, loop, N=512)
        first, _, _ = _transport_chain(conn, loop.xv, 0.0, 0.5, 256,
                                       keep_chain=False)
        second, _, _ = _transport_chain(conn, loop.xv, 0.5, 1.0, 256,
                                        keep_chain=False)
        assert np.linalg.norm(second[-1] @ first[-1] - frame.holonomy) < 1e-8
        assert np.linalg.norm(first[-1] - frame.Ts[256]) < 1e-10

    @pytest.mark.parametrize("t", [0.25, 0.5, 0.75])
    def test_reversed_partial_path_inverts(self, t):
        conn = su2sample()
        loop = BaseLoop.circle(1.3)
        frame = parallel_transport(conn, loop, N=512)
        V = transport_reversed(conn, loop, t, N=512)
        T = frame.Ts[int(round(t * 512))]
        assert np.linalg.norm(V - T.conj().T) < 1e-8

    def test_reversed_whole_loop_inverts_holonomy(self):
        conn = su2sample()
        loop = BaseLoop.circle(1.3)
        h = holonomy(conn, loop, N=512)
        hrev = transport_reversed(conn, loop, 1.0, N=512)
        assert np.linalg.norm(hrev - h.conj().T) < 1e-8


class TestRotatedTwist:
    def test_matches_holonomy_of_rotated_loop(self):
        conn = su2sample()
        loop = BaseLoop.circle(1.1, center=(0.3, 0.0))
        frame = parallel_transport(conn, loop, N=512)
        for t in (0.25, 0.625):
            tau = rotated_twist(frame, t)
            direct = holonomy(conn, loop.rotated(t), N=512)
            assert np.linalg.norm(tau - direct) < 1e-7

    def test_off_grid_rejected(self):
        frame = parallel_transport(flat(n=1), BaseLoop.circle(1.0), N=100)
        with pytest.raises(ValueError, match="grid"):
            rotated_twist(frame, 1.0 / 3.0)
        assert np.allclose(rotated_twist(frame, 0.13), np.eye(1))

    def test_endpoints_give_holonomy(self):
        frame = parallel_transport(su2sample(), BaseLoop.circle(1.0), N=64)
        assert np.allclose(rotated_twist(frame, 0.0), frame.holonomy)
        hol = frame.holonomy
        conj = hol @ hol @ hol.conj().T
        assert np.allclose(rotated_twist(frame, 1.0), conj)


class TestValidation:
    def test_hermitian_sample_rejected(self):
        bad = ConnectionSpec(2, 2, lambda x, v: v[0] * S3, name="bad")
        with pytest.raises(NonAntiHermitianSample) as info:
            parallel_transport(bad, BaseLoop.circle(1.0), N=16)
        assert info.value.defect > 1.0

    def test_scalar_hermitian_sample_rejected(self):
        bad = ConnectionSpec(1, 2, lambda x, v: np.array([[v[0]]]), name="bad")
        with pytest.raises(NonAntiHermitianSample):
            holonomy(bad, BaseLoop.circle(1.0), N=16)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            parallel_transport(abelian2d(1.0), latitude_loop(1.0))


class TestCsv:
    def test_roundtrip_preserves_holonomy(self, tmp_path):
        loop = BaseLoop.circle(1.0)
        path = os.path.join(tmp_path, "circle.csv")
        save_loop_csv(loop, path, M=512)
        back = load_loop_csv(path)
        h0 = holonomy(abelian2d(1.0), loop, N=1024)[0, 0]
        h1 = holonomy(abelian2d(1.0), back, N=1024)[0, 0]
        assert u1_distance(h0, h1) < 1e-6

    def test_nodes_exact(self, tmp_path):
        loop = BaseLoop.circle(0.7, center=(0.1, 0.2))
        path = os.path.join(tmp_path, "c.csv")
        save_loop_csv(loop, path, M=64)
        back = load_loop_csv(path)
        assert np.allclose(back.point(5 / 64), loop.point(5 / 64), atol=1e-12)

    def test_bad_header_rejected(self, tmp_path):
        path = os.path.join(tmp_path, "bad.csv")
        with open(path, "w") as fh:
            fh.write("time,x1\n0.0,1.0\n")
        with pytest.raises(ValueError, match="header"):
            load_loop_csv(path)

    def test_nonuniform_grid_rejected(self, tmp_path):
        path = os.path.join(tmp_path, "bad.csv")
        with open(path, "w") as fh:
            fh.write("t,x1,x2\n")
            for t in [0.0, 0.3, 0.5, 0.75]:
                fh.write(f"{t},1.0,0.0\n")
        with pytest.raises(ValueError, match="uniform"):
            load_loop_csv(path)


class TestThreading:
    def test_winding_same_under_thread_pool(self, monkeypatch):
        monkeypatch.setenv("LOOPFIBER_THREADS", "4")
        assert chern_winding(monopole(1), latitude_family(), N=64, M=16) == 1
