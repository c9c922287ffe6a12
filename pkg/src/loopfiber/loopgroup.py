"""Matrix-valued loops with pointwise-unitary values.

A LoopGroupElement is a trigonometric polynomial gamma(theta) =
sum_k A_k e^{ik theta} with n x n matrix coefficients whose values on the
circle are unitary (to tolerance).  Products and applications to vector
loops are exact coefficient convolutions, so the group operations never
truncate; unitarity defects only ever come from the inputs.

The central constructor is loop_from_subspace, which rebuilds the loop
gamma from the subspace W = gamma . (truncated nonnegative-frequency
space): the columns of gamma are an orthonormal basis of W cap (zW)^perp,
and pointwise unitarity of the result certifies the construction.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import IntersectionDimension, PhaseStepTooLarge, UnitarityViolation
from .fourier import TruncatedLoop
from .subspaces import intersect_shift_complement

__all__ = [
    "LoopGroupElement",
    "identity_element",
    "constant_element",
    "diag_zpowers",
    "multiply",
    "inverse",
    "apply",
    "unitarity_defect",
    "theta_variation",
    "det_winding",
    "random_loop",
    "loop_from_subspace",
    "element_to_dict",
    "element_from_dict",
]

UNITARITY_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class LoopGroupElement:
    """Sparse matrix-coefficient loop sum_k A_k e^{ik theta}."""

    n: int
    mcoeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"matrix dimension must be >= 1, got {self.n}")
        clean = {}
        for k, A in self.mcoeffs.items():
            arr = np.array(A, dtype=complex)
            if arr.shape != (self.n, self.n):
                raise ValueError(
                    f"coefficient at k={k} has shape {arr.shape}, "
                    f"expected ({self.n}, {self.n})")
            if arr.any():
                arr.setflags(write=False)
                clean[int(k)] = arr
        object.__setattr__(self, "mcoeffs", clean)

    @property
    def band(self):
        if not self.mcoeffs:
            return (0, 0)
        ks = self.mcoeffs.keys()
        return (min(ks), max(ks))

    def column(self, j):
        """Column j as a TruncatedLoop (gamma(theta) e_j)."""
        return TruncatedLoop(
            self.n, {k: A[:, j] for k, A in self.mcoeffs.items()})

    def evaluate(self, theta):
        th = np.asarray(theta, dtype=float)
        out = np.zeros(th.shape + (self.n, self.n), dtype=complex)
        for k, A in self.mcoeffs.items():
            out += np.exp(1j * k * th)[..., None, None] * A
        return out

    def grid_samples(self, N):
        """Exact values at theta_j = 2 pi j / N via FFT binning, (N, n, n)."""
        bins = np.zeros((N, self.n, self.n), dtype=complex)
        for k, A in self.mcoeffs.items():
            bins[k % N] += A
        return np.fft.ifft(bins, axis=0) * N


def identity_element(n):
    return LoopGroupElement(n, {0: np.eye(n, dtype=complex)})


def constant_element(U):
    U = np.asarray(U, dtype=complex)
    return LoopGroupElement(U.shape[0], {0: U})


def diag_zpowers(powers):
    """diag(z^{p_1}, ..., z^{p_n}) as a LoopGroupElement."""
    n = len(powers)
    mc = {}
    for j, p in enumerate(powers):
        A = mc.setdefault(int(p), np.zeros((n, n), dtype=complex))
        A[j, j] = 1.0
    return LoopGroupElement(n, mc)


def multiply(g, h):
    """Pointwise product gamma(theta) eta(theta); coefficients convolve."""
    if g.n != h.n:
        raise ValueError("dimension mismatch")
    out = {}
    for k, A in g.mcoeffs.items():
        for l, B in h.mcoeffs.items():
            m = k + l
            out[m] = out[m] + A @ B if m in out else A @ B
    return LoopGroupElement(g.n, out)


def inverse(g):
    """Pointwise inverse, which for unitary values is gamma(theta)^H.

    Coefficientwise: the inverse has coefficients A_{-k}^H.
    """
    return LoopGroupElement(
        g.n, {-k: A.conj().T for k, A in g.mcoeffs.items()})


def apply(g, a):
    """The vector loop gamma(theta) a(theta) by matrix-vector convolution."""
    if g.n != a.n:
        raise ValueError("dimension mismatch")
    out = {}
    for k, A in g.mcoeffs.items():
        for l, c in a.coeffs.items():
            m = k + l
            v = A @ c
            out[m] = out[m] + v if m in out else v
    return TruncatedLoop(a.n, out)


def unitarity_defect(g, N=256):
    """Max Frobenius defect ||gamma^H gamma - I|| over an N-point grid.

    Returns (defect, theta_at_max).
    """
    S = g.grid_samples(N)
    G = np.einsum("tji,tjk->tik", S.conj(), S)
    D = np.linalg.norm(G - np.eye(g.n), axis=(1, 2))
    i = int(np.argmax(D))
    return float(D[i]), 2.0 * np.pi * i / N


def det_winding(g, start_grid=256, max_grid=2 ** 16):
    """Winding number of theta -> det gamma(theta) by phase accumulation.

    The grid doubles until every successive phase step is below pi/2;
    PhaseStepTooLarge is raised past `max_grid`, or when |det| falls
    below 1e-8 (impossible for genuinely unitary values, so it signals a
    corrupt input rather than insufficient resolution).

    The start grid is sized from the frequency band: a near-unitary
    determinant is close to a unimodular monomial c z^w with |w| bounded
    by n * max|k|, so sampling 8x faster than that rules out phase
    aliasing that the step criterion alone cannot detect.
    """
    kmin, kmax = g.band
    speed = g.n * max(abs(kmin), abs(kmax), 1)
    N = start_grid
    while N < 8 * speed:
        N *= 2
        if N > max_grid:
            raise PhaseStepTooLarge(
                f"band implies phase speed ~{speed}, beyond grid {max_grid}")
    while True:
        d = np.linalg.det(g.grid_samples(N))
        if np.abs(d).min() < 1e-8:
            raise PhaseStepTooLarge(
                "determinant passes near zero; input is not a unitary loop")
        steps = np.angle(np.roll(d, -1) / d)
        if np.abs(steps).max() < np.pi / 2:
            total = steps.sum()
            return int(round(total / (2.0 * np.pi)))
        N *= 2
        if N > max_grid:
            raise PhaseStepTooLarge(
                f"phase steps still exceed pi/2 at grid {max_grid}")


def theta_variation(g, N=256):
    """Max Frobenius deviation of gamma(theta) from its grid mean.

    Returns (variation, mean_matrix).  Zero exactly when the loop is a
    constant matrix; used to certify theta-independence.
    """
    S = g.grid_samples(N)
    mean = S.mean(axis=0)
    var = float(np.linalg.norm(S - mean, axis=(1, 2)).max())
    return var, mean


def _polar_stack(S):
    """Closest unitary to each matrix in a stack, via batched SVD."""
    U, _, Vh = np.linalg.svd(S)
    return U @ Vh


def random_loop(n, band, seed, scale=0.8, grid=512):
    """A reproducible random element of the unitary loop group.

    Draws an anti-Hermitian trigonometric polynomial X with generator band
    [-band, band], exponentiates it pointwise on a `grid`-point circle,
    truncates the resulting Fourier tail, and re-unitarizes the truncated
    samples by polar projection.  The returned element carries the (fast
    decaying) band of the projected samples, so `band` controls how wiggly
    the loop is rather than the literal final band.
    """
    if band < 1:
        raise ValueError("band must be >= 1")
    rng = np.random.default_rng(seed)

    def draw():
        return (rng.standard_normal((n, n))
                + 1j * rng.standard_normal((n, n)))

    C0 = draw()
    xco = {0: scale * 0.5 * (C0 - C0.conj().T)}
    for k in range(1, band + 1):
        Ck = scale / (1 + k) * draw()
        xco[k] = Ck
        xco[-k] = -Ck.conj().T

    # evaluate X on the grid, then exp(X) = U e^{i lam} U^H with H = -iX
    bins = np.zeros((grid, n, n), dtype=complex)
    for k, A in xco.items():
        bins[k % grid] += A
    X = np.fft.ifft(bins, axis=0) * grid
    lam, U = np.linalg.eigh(-1j * X)
    S = np.einsum("tij,tj,tkj->tik", U, np.exp(1j * lam), U.conj())

    spec = np.fft.fft(S, axis=0) / grid
    mags = np.linalg.norm(spec, axis=(1, 2))
    keep = mags > 1e-11 * mags.max()
    bins2 = np.where(keep[:, None, None], spec, 0.0)
    S_trunc = np.fft.ifft(bins2, axis=0) * grid

    S_fixed = _polar_stack(S_trunc)
    spec2 = np.fft.fft(S_fixed, axis=0) / grid
    mags2 = np.linalg.norm(spec2, axis=(1, 2))
    floor = 1e-14 * mags2.max()
    half = (grid + 1) // 2
    mc = {}
    for m in range(grid):
        if mags2[m] > floor:
            mc[m if m < half else m - grid] = spec2[m]
    g = LoopGroupElement(n, mc)
    defect, theta = unitarity_defect(g)
    if defect > UNITARITY_TOL:
        raise UnitarityViolation(defect, theta)
    return g


def _canonical_basis_rotation(mc, n, sv_tol=1e-8):
    """Constant unitary fixing the intersection basis ambiguity.

    Right-multiplying all blocks by X makes the lowest-frequency invertible
    block Hermitian positive definite, so e.g. the standard nonnegative
    window reproduces the identity loop exactly rather than an arbitrary
    constant rotation of it.  Loops with no invertible block (such as
    diag(1, z)) are left untouched.
    """
    for k in sorted(mc, key=lambda k: (abs(k), k)):
        U, sv, Vh = np.linalg.svd(mc[k])
        if sv[-1] > sv_tol:
            return Vh.conj().T @ U.conj().T
    return np.eye(n, dtype=complex)


def loop_from_subspace(W, tol=UNITARITY_TOL):
    """Rebuild the unitary loop whose shifted column span is W.

    W must be an orthonormal frame for gamma . span{ z^p e_j : 0 <= p <= P }.
    The intersection W cap (zW)^perp is computed; its dimension must be
    exactly n (else IntersectionDimension).  Its orthonormal basis loops
    w_1..w_n become the columns of gamma, i.e. the k-th Fourier coefficient
    of w_j is column j of A_k, so gamma(theta) e_j = w_j(theta).  Pointwise
    unitarity on a 256-point grid certifies the result (UnitarityViolation
    otherwise); it is equivalent to the w_j forming orthonormal frames of
    the values for every theta.

    The basis of the intersection is only defined up to a constant unitary;
    it is canonicalized so the lowest-frequency invertible coefficient
    block comes out Hermitian positive definite.
    """
    inter = intersect_shift_complement(W)
    d = 0 if inter is None else inter.dim
    if d != W.n:
        raise IntersectionDimension(d, W.n)
    n = W.n
    mc = {}
    for j, w in enumerate(inter.columns):
        for k, c in w.coeffs.items():
            A = mc.setdefault(k, np.zeros((n, n), dtype=complex))
            A[:, j] = c
    X = _canonical_basis_rotation(mc, n)
    mc = {k: A @ X for k, A in mc.items()}
    g = LoopGroupElement(n, mc)
    defect, theta = unitarity_defect(g)
    if defect > tol:
        raise UnitarityViolation(defect, theta)
    return g


def element_to_dict(g):
    """JSON-ready dict {"n": n, "mcoeffs": {"k": [[[re, im] x n] x n]}}."""
    return {
        "n": g.n,
        "mcoeffs": {
            str(k): [[[float(z.real), float(z.imag)] for z in row]
                     for row in g.mcoeffs[k]]
            for k in sorted(g.mcoeffs)
        },
    }


def element_from_dict(d):
    n = int(d["n"])
    mc = {}
    for key, rows in d["mcoeffs"].items():
        mc[int(key)] = np.array(
            [[complex(re, im) for re, im in row] for row in rows],
            dtype=complex)
    return LoopGroupElement(n, mc)
