"""Parallel transport and holonomy over loops in a chart.

Conventions, fixed once for the whole package:

  * base loops are maps x : R/Z -> R^d, closed to 1e-12;
  * a connection is an anti-Hermitian-matrix-valued 1-form, sampled as
    A(x, v), linear in the velocity v;
  * transport solves T'(t) = -A(x(t), x'(t)) T(t), T(0) = I, by classical
    RK4 with polar re-unitarization after every step (the raw, uncorrected
    chain is integrated alongside and its drift reported);
  * the holonomy of a loop is T(1), so an abelian connection gives
    Hol = exp(-loop integral of A).

Under these conventions the plane preset with form (i B / 2)(x dy - y dx)
gives Hol = exp(-i B pi r^2) on a counterclockwise radius-r circle, and the
sphere preset below gives the classical solid-angle holonomy on latitude
circles.
"""

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import NonAntiHermitianSample, PhaseStepTooLarge

__all__ = [
    "BaseLoop",
    "ConnectionSpec",
    "flat",
    "abelian2d",
    "monopole",
    "su2sample",
    "TransportFrame",
    "parallel_transport",
    "holonomy",
    "transport_reversed",
    "refinement_delta",
    "rotated_twist",
    "latitude_loop",
    "latitude_family",
    "chern_winding",
    "save_loop_csv",
    "load_loop_csv",
]

CLOSURE_TOL = 1e-12
ANTIHERM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class BaseLoop:
    """A closed parametrized curve t -> x(t) in R^d with period 1.

    Wraps a callback returning (position, velocity); sampled curves are
    interpolated with a periodic cubic spline.
    """

    d: int
    fn: object

    @classmethod
    def from_function(cls, d, fn, check_closure=True):
        loop = cls(d, fn)
        if check_closure:
            x0, _ = loop.xv(0.0)
            x1, _ = loop.xv(1.0)
            gap = float(np.linalg.norm(x1 - x0))
            if gap > CLOSURE_TOL:
                raise ValueError(f"loop does not close: |x(1)-x(0)| = {gap:.3e}")
        return loop

    @classmethod
    def from_samples(cls, points):
        """Periodic cubic interpolation of samples on the uniform grid j/M."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 4:
            raise ValueError("need at least 4 sample points, shape (M, d)")
        M, d = pts.shape
        ts = np.linspace(0.0, 1.0, M + 1)
        closed = np.vstack([pts, pts[:1]])
        spline = CubicSpline(ts, closed, axis=0, bc_type="periodic")
        deriv = spline.derivative()

        def fn(t):
            return spline(t), deriv(t)

        return cls(d, fn)

    @classmethod
    def circle(cls, radius=1.0, center=(0.0, 0.0)):
        cx, cy = center
        w = 2.0 * math.pi

        def fn(t):
            c, s = math.cos(w * t), math.sin(w * t)
            x = np.array([cx + radius * c, cy + radius * s])
            v = np.array([-w * radius * s, w * radius * c])
            return x, v

        return cls(2, fn)

    def xv(self, t):
        x, v = self.fn(t % 1.0 if t != 1.0 else 1.0)
        return np.asarray(x, dtype=float), np.asarray(v, dtype=float)

    def point(self, t):
        return self.xv(t)[0]

    def rotated(self, s0):
        """The reparametrized loop t -> x(t + s0)."""
        base = self.fn

        def fn(t):
            return base((t + s0) % 1.0)

        return BaseLoop(self.d, fn)


@dataclass(frozen=True, eq=False)
class ConnectionSpec:
    """An anti-Hermitian n x n matrix 1-form on a d-dimensional chart.

    `form(x, v)` must be linear in v and anti-Hermitian to 1e-10 at every
    sampled point; transport verifies the latter sample by sample.
    """

    n: int
    d: int
    form: object
    name: str = "custom"


def flat(n=1, d=2):
    Z = np.zeros((n, n), dtype=complex)

    def form(x, v):
        return Z

    return ConnectionSpec(n, d, form, name="flat")


def abelian2d(B=1.0):
    """Uniform-curvature U(1) form -(i B / 2)(x dy - y dx) on the plane.

    Stokes: the holonomy of a counterclockwise circle of radius r is
    exp(+i B pi r^2), i.e. the holonomy phase equals the enclosed flux
    B pi r^2.
    """

    def form(x, v):
        return np.array([[-0.5j * B * (x[0] * v[1] - x[1] * v[0])]])

    return ConnectionSpec(1, 2, form, name="abelian2d")


def monopole(q):
    """Charge-q U(1) monopole field around the origin of R^3.

    The chart is R^3 minus the nonpositive x3-axis (where the potential's
    string sits); on the unit sphere this is the sphere minus its south
    pole.  In spherical terms the form is (i q / 2)(1 - cos u) d phi, which
    is regular along the north direction.  A counterclockwise latitude
    circle at polar angle u picks up exp(-i q Omega / 2) with
    Omega = 2 pi (1 - cos u) the enclosed solid angle.

    q must be an integer for the field to be globally consistent; the
    evaluation itself never needs that.
    """

    def form(x, v):
        num = x[0] * v[1] - x[1] * v[0]
        if num == 0.0:
            # exactly radial or stationary: d phi term vanishes (this also
            # covers v = 0 sitting on the axis, where A . 0 = 0 by linearity)
            return np.zeros((1, 1), dtype=complex)
        rho2 = x[0] * x[0] + x[1] * x[1]
        r = math.sqrt(rho2 + x[2] * x[2])
        return np.array([[0.5j * q * (1.0 - x[2] / r) * num / rho2]])

    return ConnectionSpec(1, 3, form, name="monopole")


_S1 = np.array([[0, 1], [1, 0]], dtype=complex)
_S2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
_S3 = np.array([[1, 0], [0, -1]], dtype=complex)


def su2sample():
    """A fixed nonabelian SU(2) form on the plane with polynomial coefficients.

    A = A0 dx + A1 dy with A0 = i(0.3 s1 + 0.2 y s3) and
    A1 = i(0.4 s2 - 0.1 x s1 + 0.15 s3), s* the Pauli matrices.  Chosen so
    the curvature F = dA + A ^ A is position dependent and noncommuting.
    """

    def form(x, v):
        A0 = 1j * (0.3 * _S1 + 0.2 * x[1] * _S3)
        A1 = 1j * (0.4 * _S2 - 0.1 * x[0] * _S1 + 0.15 * _S3)
        return v[0] * A0 + v[1] * A1

    return ConnectionSpec(2, 2, form, name="su2sample")


def su2sample_curvature(x):
    """Analytic curvature F_01 = d0 A1 - d1 A0 + [A0, A1] of su2sample."""
    a, b, c, dd, e = 0.3, 0.2, 0.4, -0.1, 0.15
    coef1 = dd + 2.0 * b * c * x[1]
    coef2 = 2.0 * a * e - 2.0 * b * dd * x[0] * x[1]
    coef3 = -(b + 2.0 * a * c)
    return 1j * (coef1 * _S1 + coef2 * _S2 + coef3 * _S3)


@dataclass(frozen=True, eq=False)
class TransportFrame:
    """Transport matrices T(t_i) on the uniform grid t_i = i/N.

    Ts[i] is unitary (polar corrected); raw_defect is the worst unitarity
    defect of the never-corrected RK4 chain, and raw_holonomy its endpoint.
    """

    loop: BaseLoop
    conn: ConnectionSpec
    N: int
    Ts: np.ndarray
    raw_defect: float
    raw_holonomy: np.ndarray

    @property
    def n(self):
        return self.conn.n

    @property
    def holonomy(self):
        return self.Ts[-1]

    def T(self, i):
        return self.Ts[i]

    def unitarity_defect(self):
        G = np.einsum("tji,tjk->tik", self.Ts.conj(), self.Ts)
        return float(np.linalg.norm(G - np.eye(self.n), axis=(1, 2)).max())


def _sample_form(conn, xv, t):
    x, v = xv(t)
    A = np.asarray(conn.form(x, v), dtype=complex)
    defect = float(np.linalg.norm(A + A.conj().T))
    if defect > ANTIHERM_TOL:
        raise NonAntiHermitianSample(defect, t)
    return A


def _transport_chain_scalar(conn, xv, t0, t1, steps, keep_chain):
    """n = 1 fast path with plain complex arithmetic."""
    h = (t1 - t0) / steps
    T = 1.0 + 0.0j
    R = 1.0 + 0.0j
    chain = [T] if keep_chain else None
    raw_defect = 0.0
    form = conn.form

    def m(t):
        x, v = xv(t)
        a = complex(form(x, v)[0][0])
        defect = 2.0 * abs(a.real)
        if defect > ANTIHERM_TOL:
            raise NonAntiHermitianSample(defect, t)
        return -a

    for i in range(steps):
        t = t0 + i * h
        m0, mh, m1 = m(t), m(t + 0.5 * h), m(t + h)

        def step(y):
            k1 = m0 * y
            k2 = mh * (y + 0.5 * h * k1)
            k3 = mh * (y + 0.5 * h * k2)
            k4 = m1 * (y + h * k3)
            return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

        R = step(R)
        raw_defect = max(raw_defect, abs(abs(R) ** 2 - 1.0))
        T = step(T)
        T /= abs(T)
        if keep_chain:
            chain.append(T)
    Ts = (np.array(chain, dtype=complex).reshape(-1, 1, 1)
          if keep_chain else np.array([[[T]]], dtype=complex))
    return Ts, np.array([[R]], dtype=complex), raw_defect


def _transport_chain(conn, xv, t0, t1, steps, keep_chain=True):
    if conn.n == 1:
        return _transport_chain_scalar(conn, xv, t0, t1, steps, keep_chain)
    n = conn.n
    h = (t1 - t0) / steps
    I = np.eye(n, dtype=complex)
    T = I.copy()
    R = I.copy()
    chain = np.empty((steps + 1, n, n), dtype=complex) if keep_chain else None
    if keep_chain:
        chain[0] = T
    raw_defect = 0.0
    for i in range(steps):
        t = t0 + i * h
        M0 = -_sample_form(conn, xv, t)
        Mh = -_sample_form(conn, xv, t + 0.5 * h)
        M1 = -_sample_form(conn, xv, t + h)

        def step(Y):
            k1 = M0 @ Y
            k2 = Mh @ (Y + (0.5 * h) * k1)
            k3 = Mh @ (Y + (0.5 * h) * k2)
            k4 = M1 @ (Y + h * k3)
            return Y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

        R = step(R)
        raw_defect = max(raw_defect,
                         float(np.linalg.norm(R.conj().T @ R - I)))
        U, _, Vh = np.linalg.svd(step(T))
        T = U @ Vh
        if keep_chain:
            chain[i + 1] = T
    if not keep_chain:
        chain = T[None]
    return chain, R, raw_defect


def parallel_transport(conn, loop, N=2048):
    """Integrate the transport frame over the whole loop on an N-grid."""
    if conn.d != loop.d:
        raise ValueError(
            f"chart dimension mismatch: connection d={conn.d}, loop d={loop.d}")
    if N < 1:
        raise ValueError("N must be >= 1")
    Ts, R, raw = _transport_chain(conn, loop.xv, 0.0, 1.0, N)
    return TransportFrame(loop, conn, N, Ts, raw, R)


def holonomy(conn, loop, N=2048):
    """Transport once around: Hol = T(1)."""
    Ts, _, _ = _transport_chain(conn, loop.xv, 0.0, 1.0, N, keep_chain=False)
    return Ts[-1]


def transport_reversed(conn, loop, t, N=2048):
    """Transport along the time-reversed partial path s -> x(t - s), s in [0, t].

    Starts at x(t) and runs backwards to x(0); the result approximates
    T(t)^{-1}, which is how untwisting maps are realized geometrically.
    """
    steps = max(int(round(t * N)), 1)

    def xv(s):
        x, v = loop.xv(t - s)
        return x, -v

    Ts, _, _ = _transport_chain(conn, xv, 0.0, t, steps, keep_chain=False)
    return Ts[-1]


def refinement_delta(conn, loop, N=2048):
    """Frobenius change of the holonomy when the grid is refined to 2N."""
    return float(np.linalg.norm(holonomy(conn, loop, N)
                                - holonomy(conn, loop, 2 * N)))


def rotated_twist(frame, t):
    """The twist of the loop rotated by t: tau = T(t) Hol T(t)^{-1}.

    t must lie on the frame's grid (t = i/N for integer i).
    """
    pos = t * frame.N
    i = int(round(pos))
    if abs(pos - i) > 1e-9 or not (0 <= i <= frame.N):
        raise ValueError(f"t={t} is not on the {frame.N}-point grid")
    T = frame.Ts[i]
    return T @ frame.holonomy @ T.conj().T


def latitude_loop(u):
    """Counterclockwise latitude circle at polar angle u on the unit sphere."""
    su, cu = math.sin(u), math.cos(u)
    w = 2.0 * math.pi

    def fn(t):
        c, sn = math.cos(w * t), math.sin(w * t)
        x = np.array([su * c, su * sn, cu])
        v = np.array([-w * su * sn, w * su * c, 0.0])
        return x, v

    return BaseLoop(3, fn)


def latitude_family():
    """Latitude circles on the unit sphere, swept from south pole to north.

    family(s) is the counterclockwise latitude circle at polar angle
    u = pi (1 - s); the endpoint loops are the constant loops at the poles,
    so a holonomy along the family is a closed path in U(1).  Under the
    monopole(q) preset the winding of that path is exactly q.
    """

    def family(s):
        return latitude_loop(math.pi * (1.0 - s))

    return family


def _worker_count():
    raw = os.environ.get("LOOPFIBER_THREADS", "")
    try:
        return max(int(raw), 1)
    except ValueError:
        return 1


def _holonomy_samples(conn, family, M, N):
    ss = [j / M for j in range(M + 1)]
    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hols = list(pool.map(
                lambda s: holonomy(conn, family(s), N)[0, 0], ss))
    else:
        hols = [holonomy(conn, family(s), N)[0, 0] for s in ss]
    return np.array(hols)


def chern_winding(conn, family, N=256, M=64, max_family_grid=4096):
    """Winding number of s -> holonomy(family(s)) for a U(1) connection.

    The family grid M doubles until successive phase steps are below
    pi/2; PhaseStepTooLarge is raised beyond `max_family_grid`.  For a
    closed family (constant endpoint loops) the sum of steps is a whole
    number of turns, which is the first Chern number of the bundle the
    family sweeps out.
    """
    if conn.n != 1:
        raise ValueError("winding needs a U(1) connection (n = 1)")
    while True:
        h = _holonomy_samples(conn, family, M, N)
        if np.abs(h).min() < 1e-8:
            raise PhaseStepTooLarge("holonomy sample too close to zero")
        steps = np.angle(h[1:] / h[:-1])
        if np.abs(steps).max() < np.pi / 2:
            return int(round(steps.sum() / (2.0 * np.pi)))
        M *= 2
        if M > max_family_grid:
            raise PhaseStepTooLarge(
                f"family phase steps still exceed pi/2 at grid {max_family_grid}")


def save_loop_csv(loop, path, M=256):
    """Write samples t, x1, ..., xd at t = j/M, j = 0..M-1."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"x{i + 1}" for i in range(loop.d)])
        for j in range(M):
            t = j / M
            x = loop.point(t)
            w.writerow([repr(t)] + [repr(float(c)) for c in x])


def load_loop_csv(path):
    """Read a loop from CSV with header t, x1, ..., xd; t uniform in [0, 1)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0] or rows[0][0].strip() != "t":
        raise ValueError("expected header t,x1,...,xd")
    d = len(rows[0]) - 1
    if d < 1:
        raise ValueError("no coordinate columns")
    data = np.array([[float(c) for c in row] for row in rows[1:]])
    if data.ndim != 2 or data.shape[1] != d + 1:
        raise ValueError("ragged CSV rows")
    ts, pts = data[:, 0], data[:, 1:]
    M = len(ts)
    if np.any(np.diff(ts) <= 0) or ts[0] != 0.0 or ts[-1] >= 1.0:
        raise ValueError("t column must be sorted in [0, 1) starting at 0")
    if np.abs(ts - np.arange(M) / M).max() > 1e-9:
        raise ValueError("t column must be the uniform grid j/M")
    return BaseLoop.from_samples(pts)
