"""Truncated Fourier representation of vector-valued loops on the circle.

A smooth loop in C^n is approximated by a trigonometric polynomial

    a(theta) = sum_k c_k e^{i k theta},      c_k in C^n,

stored sparsely as a map from integer frequency to coefficient vector.
The circle carries total measure 1, so the constant loop e_1 has norm 1 and
the integral pairing becomes the Parseval sum over shared frequencies.  The
pairing is conjugate-linear in its FIRST argument throughout the package.

Frequency bands grow exactly under arithmetic (shifts reindex, products
convolve); nothing is ever silently truncated.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TruncatedLoop",
    "zero_loop",
    "constant_loop",
    "basis_loop",
    "inner_product",
    "norm",
    "shift",
    "project_plus",
    "project_minus",
    "evaluate",
    "evaluate_grid",
    "from_grid_samples",
    "scalar_multiply",
    "loop_allclose",
    "loop_to_dict",
    "loop_from_dict",
]


@dataclass(frozen=True, eq=False)
class TruncatedLoop:
    """A C^n-valued trigonometric polynomial, stored sparsely by frequency.

    Attributes
    ----------
    n : int
        Ambient vector dimension.
    coeffs : dict[int, np.ndarray]
        Maps frequency k to the coefficient vector c_k (shape (n,), complex).
        Exactly-zero vectors are dropped on construction; instances are
        treated as immutable.
    """

    n: int
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"vector dimension must be >= 1, got {self.n}")
        clean = {}
        for k, c in self.coeffs.items():
            arr = np.array(c, dtype=complex)
            if arr.shape != (self.n,):
                raise ValueError(
                    f"coefficient at k={k} has shape {arr.shape}, "
                    f"expected ({self.n},)")
            if arr.any():
                arr.setflags(write=False)
                clean[int(k)] = arr
        object.__setattr__(self, "coeffs", clean)

    @property
    def band(self):
        """Frequency window (kmin, kmax); (0, 0) for the zero loop."""
        if not self.coeffs:
            return (0, 0)
        ks = self.coeffs.keys()
        return (min(ks), max(ks))

    @property
    def is_zero(self):
        return not self.coeffs

    def __add__(self, other):
        if not isinstance(other, TruncatedLoop):
            return NotImplemented
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        out = {k: np.array(c) for k, c in self.coeffs.items()}
        for k, c in other.coeffs.items():
            out[k] = out[k] + c if k in out else c
        return TruncatedLoop(self.n, out)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, scalar):
        if isinstance(scalar, TruncatedLoop):
            return NotImplemented
        s = complex(scalar)
        return TruncatedLoop(self.n, {k: s * c for k, c in self.coeffs.items()})

    __rmul__ = __mul__

    def __neg__(self):
        return (-1.0) * self


def zero_loop(n):
    return TruncatedLoop(n, {})


def constant_loop(vector):
    """The constant loop with value `vector`."""
    v = np.asarray(vector, dtype=complex)
    return TruncatedLoop(v.shape[0], {0: v})


def basis_loop(n, component=0, frequency=0, amplitude=1.0):
    """Return amplitude * z^frequency * e_component."""
    v = np.zeros(n, dtype=complex)
    v[component] = amplitude
    return TruncatedLoop(n, {frequency: v})


def inner_product(a, b):
    """Parseval pairing sum_k <c_k(a), c_k(b)>, conjugate-linear in `a`."""
    if a.n != b.n:
        raise ValueError("dimension mismatch")
    small, big = (a, b) if len(a.coeffs) <= len(b.coeffs) else (b, a)
    acc = 0.0 + 0.0j
    for k in small.coeffs:
        if k in big.coeffs:
            acc += np.vdot(a.coeffs[k], b.coeffs[k])
    return acc


def norm(a):
    return float(np.sqrt(sum(
        np.linalg.norm(c) ** 2 for c in a.coeffs.values())))


def shift(a, p):
    """Multiply by z^p: coefficients reindex k -> k + p, band shifts by p."""
    return TruncatedLoop(a.n, {k + p: c for k, c in a.coeffs.items()})


def project_plus(a):
    """Keep frequencies k >= 0 (the Hardy-type nonnegative part)."""
    return TruncatedLoop(a.n, {k: c for k, c in a.coeffs.items() if k >= 0})


def project_minus(a):
    """Keep frequencies k < 0, the complement of project_plus."""
    return TruncatedLoop(a.n, {k: c for k, c in a.coeffs.items() if k < 0})


def evaluate(a, theta):
    """Evaluate a(theta) = sum_k c_k e^{ik theta}.

    theta may be a scalar or an array; the result has shape
    theta.shape + (n,).
    """
    th = np.asarray(theta, dtype=float)
    out = np.zeros(th.shape + (a.n,), dtype=complex)
    for k, c in a.coeffs.items():
        out += np.exp(1j * k * th)[..., None] * c
    return out


def evaluate_grid(a, N):
    """Evaluate on the uniform grid theta_j = 2 pi j / N, j = 0..N-1.

    Uses FFT binning (frequencies folded mod N), which reproduces the exact
    trigonometric-polynomial values at the grid points for any N >= 1.
    Returns shape (N, n).
    """
    bins = np.zeros((N, a.n), dtype=complex)
    for k, c in a.coeffs.items():
        bins[k % N] += c
    return np.fft.ifft(bins, axis=0) * N


def from_grid_samples(samples):
    """Recover the loop with band [-N/2, N/2-1] from N uniform grid samples.

    Inverse of evaluate_grid whenever the original band fits inside
    [-N/2, N/2-1].  samples has shape (N, n).
    """
    samples = np.asarray(samples, dtype=complex)
    N, n = samples.shape
    spec = np.fft.fft(samples, axis=0) / N
    half = (N + 1) // 2
    coeffs = {}
    for m in range(N):
        k = m if m < half else m - N
        coeffs[k] = spec[m]
    return TruncatedLoop(n, coeffs)


def scalar_multiply(f, a):
    """Pointwise product f(theta) a(theta) for scalar f (the module action).

    Coefficients convolve, so the band grows exactly from band(f) + band(a).
    """
    if f.n != 1:
        raise ValueError(f"scalar factor must have n=1, got n={f.n}")
    out = {}
    for k, fk in f.coeffs.items():
        s = fk[0]
        for l, cl in a.coeffs.items():
            m = k + l
            out[m] = out[m] + s * cl if m in out else s * cl
    return TruncatedLoop(a.n, out)


def loop_allclose(a, b, tol=1e-12):
    """True when ||a - b|| <= tol in the loop norm."""
    return norm(a - b) <= tol


def loop_to_dict(a):
    """JSON-ready dict {"n": n, "coeffs": {"k": [[re, im] x n]}}."""
    return {
        "n": a.n,
        "coeffs": {
            str(k): [[float(z.real), float(z.imag)] for z in a.coeffs[k]]
            for k in sorted(a.coeffs)
        },
    }


def loop_from_dict(d):
    n = int(d["n"])
    coeffs = {}
    for key, pairs in d["coeffs"].items():
        coeffs[int(key)] = np.array(
            [complex(re, im) for re, im in pairs], dtype=complex)
    return TruncatedLoop(n, coeffs)
