"""Sections of holonomy-twisted loop bundles and their trivializations.

A twist is a gauge transformation tau sampled on the grid t_i = i/N; a
twisted section is a vector path sigma with the quasi-periodic seam
sigma(t + 1) = tau(t) sigma(t), stored as samples sigma_0 .. sigma_N.

For the twist tau(t) = T(t) Hol T(t)^* induced by a transport frame, the
maps here realize the bundle's flat trivialization: `section_from_loop`
sends an ordinary coefficient loop p to sigma(t) = T(t) p(t), and
`phi_inverse` undoes it, p(t) = T(t)^* sigma(t), which is genuinely
periodic and so has a Fourier expansion.  `j_embed` and `j_extend` are the
special cases p = v and p = f v that exhibit the section space as a free
module over scalar loops.
"""

from dataclasses import InitVar, dataclass

import numpy as np

from .errors import PeriodicityDefect
from .fourier import evaluate_grid, from_grid_samples, project_minus, project_plus

__all__ = [
    "GaugeTwist",
    "identity_twist",
    "holonomy_twist",
    "shifted_twist",
    "TwistedSection",
    "j_embed",
    "j_extend",
    "section_from_loop",
    "module_scale",
    "phi_inverse",
    "fourier_decompose_twisted",
    "rotate",
    "untwisted_comparison",
    "fiber_intertwiner",
    "section_to_dict",
    "section_from_dict",
]

SEAM_TOL = 1e-7
TWIST_UNITARY_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class GaugeTwist:
    """Unitary twist values tau(t_i) on the grid t_i = i/N, i = 0..N-1.

    tau itself is 1-periodic, so N samples determine it on the grid.
    """

    n: int
    N: int
    kind: str
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex)
        if vals.shape != (self.N, self.n, self.n):
            raise ValueError(
                f"twist values must have shape {(self.N, self.n, self.n)}, "
                f"got {vals.shape}")
        gram = np.einsum("tji,tjk->tik", vals.conj(), vals)
        defect = float(np.linalg.norm(gram - np.eye(self.n), axis=(1, 2)).max())
        if defect > TWIST_UNITARY_TOL:
            raise ValueError(f"twist values not unitary: defect {defect:.3e}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


def identity_twist(n, N):
    vals = np.broadcast_to(np.eye(n, dtype=complex), (N, n, n)).copy()
    return GaugeTwist(n, N, "identity", vals)


def holonomy_twist(frame):
    """tau(t_i) = T_i Hol T_i^* from a transport frame."""
    Ts = frame.Ts[:-1]
    vals = np.einsum("tij,jk,tlk->til", Ts, frame.holonomy, Ts.conj())
    return GaugeTwist(frame.n, frame.N, "holonomy", vals)


def shifted_twist(twist, steps):
    """The twist seen from the loop rotated by steps/N: values rolled."""
    vals = np.roll(np.asarray(twist.values), -steps, axis=0)
    return GaugeTwist(twist.n, twist.N, twist.kind, vals)


@dataclass(frozen=True, eq=False)
class TwistedSection:
    """Samples sigma(t_i), i = 0..N, with seam sigma_N = tau(0) sigma_0.

    The seam is checked on construction (to 1e-7) whenever the twist is
    known: explicitly attached, or implied by twist_kind "identity".  Pass
    validate=False to build a deliberately broken section.
    """

    samples: np.ndarray
    twist_kind: str = "identity"
    twist: GaugeTwist | None = None
    validate: InitVar[bool] = True

    def __post_init__(self, validate):
        arr = np.array(self.samples, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] < 2:
            raise ValueError("samples must have shape (N + 1, n) with N >= 1")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        if self.twist is not None:
            if (self.twist.n, self.twist.N) != (self.n, self.N):
                raise ValueError("twist grid does not match section grid")
        if validate:
            residual = self.seam_residual()
            if residual is not None and residual > SEAM_TOL:
                raise PeriodicityDefect(residual)

    @property
    def N(self):
        return self.samples.shape[0] - 1

    @property
    def n(self):
        return self.samples.shape[1]

    def seam_residual(self):
        """||sigma_N - tau(0) sigma_0||, or None when the twist is unknown."""
        if self.twist is not None:
            tau0 = self.twist.values[0]
        elif self.twist_kind == "identity":
            tau0 = np.eye(self.n, dtype=complex)
        else:
            return None
        return float(np.linalg.norm(self.samples[-1] - tau0 @ self.samples[0]))


def _require_match(frame, section):
    if frame.N != section.N or frame.n != section.n:
        raise ValueError(
            f"frame grid ({frame.N}, n={frame.n}) does not match "
            f"section grid ({section.N}, n={section.n})")


def j_embed(frame, v):
    """The twisted section sigma(t) = T(t) v of a fiber vector v."""
    v = np.asarray(v, dtype=complex)
    if v.shape != (frame.n,):
        raise ValueError(f"fiber vector must have shape ({frame.n},)")
    samples = np.einsum("tij,j->ti", frame.Ts, v)
    return TwistedSection(samples, "holonomy", holonomy_twist(frame))


def j_extend(frame, f, v):
    """sigma(t) = f(t) T(t) v for a scalar loop f: the module structure.

    The closing sample reuses f(0) = f(1), keeping the seam exact.
    """
    if f.n != 1:
        raise ValueError(f"scalar loop must have n=1, got n={f.n}")
    v = np.asarray(v, dtype=complex)
    fvals = evaluate_grid(f, frame.N)[:, 0]
    fext = np.append(fvals, fvals[0])
    samples = fext[:, None] * np.einsum("tij,j->ti", frame.Ts, v)
    return TwistedSection(samples, "holonomy", holonomy_twist(frame))


def section_from_loop(frame, p):
    """Trivialization inverse: the section sigma(t) = T(t) p(t).

    Generalizes j_embed (constant p) and j_extend (p = f v); every twisted
    section over the frame arises this way.
    """
    if p.n != frame.n:
        raise ValueError(f"loop dimension {p.n} != fiber dimension {frame.n}")
    pvals = evaluate_grid(p, frame.N)
    pext = np.vstack([pvals, pvals[:1]])
    samples = np.einsum("tij,tj->ti", frame.Ts, pext)
    return TwistedSection(samples, "holonomy", holonomy_twist(frame))


def module_scale(f, section):
    """Multiply a section pointwise by a scalar loop, twist unchanged."""
    if f.n != 1:
        raise ValueError(f"scalar loop must have n=1, got n={f.n}")
    fvals = evaluate_grid(f, section.N)[:, 0]
    fext = np.append(fvals, fvals[0])
    return TwistedSection(fext[:, None] * section.samples,
                          section.twist_kind, section.twist)


def phi_inverse(frame, section, check=True):
    """Untwist a section into an ordinary loop: p(t) = T(t)^* sigma(t).

    For a section quasi-periodic under the frame's own holonomy twist, p is
    1-periodic; its first N samples determine the coefficient loop on the
    band [-N/2, N/2 - 1].  The periodicity residual ||p_N - p_0|| is
    enforced (1e-7) unless check=False.
    """
    _require_match(frame, section)
    p = np.einsum("tji,tj->ti", frame.Ts.conj(), section.samples)
    residual = float(np.linalg.norm(p[-1] - p[0]))
    if check and residual > SEAM_TOL:
        raise PeriodicityDefect(residual)
    return from_grid_samples(p[:-1])


def fourier_decompose_twisted(frame, section, check=True):
    """Split a twisted section into nonnegative and negative frequency parts.

    Returns (plus, minus): untwist, split the coefficient loop at frequency
    zero, and re-twist each part.  Their samples sum back to the section.
    """
    p = phi_inverse(frame, section, check=check)
    return (section_from_loop(frame, project_plus(p)),
            section_from_loop(frame, project_minus(p)))


def rotate(section, steps):
    """The section shifted by steps/N: sigma'(t) = sigma(t + steps/N).

    Samples beyond the stored window are continued through the seam rule
    sigma(t + 1) = tau(t) sigma(t).  The result carries the correspondingly
    shifted twist.  |steps| must not exceed N.
    """
    N = section.N
    if not -N <= steps <= N:
        raise ValueError(f"|steps| must be <= {N}")
    if section.twist is not None:
        tau = np.asarray(section.twist.values)
    elif section.twist_kind == "identity":
        tau = np.broadcast_to(np.eye(section.n, dtype=complex),
                              (N, section.n, section.n))
    else:
        raise ValueError("cannot rotate a section with unknown twist values")
    old = section.samples
    if steps >= 0:
        ext = list(old)
        for j in range(N + 1, N + steps + 1):
            ext.append(tau[(j - N) % N] @ ext[j - N])
        new = np.array(ext[steps:steps + N + 1])
    else:
        below = {}
        for j in range(-1, steps - 1, -1):
            upper = old[j + N] if j + N >= 0 else below[j + N]
            below[j] = tau[j % N].conj().T @ upper
        new = np.array([below[i + steps] if i + steps < 0 else old[i + steps]
                        for i in range(N + 1)])
    twist = (shifted_twist(section.twist, steps)
             if section.twist is not None else None)
    return TwistedSection(new, section.twist_kind, twist)


def untwisted_comparison(frame0, frame1):
    """Grid comparison maps H(t_i) = T1(t_i)^* T0(t_i), shape (N+1, n, n).

    Each H(t_i) is unitary.  H is 1-periodic only when the two holonomies
    agree: the seam gap ||H_N - H_0|| equals ||Hol1 - Hol0||, which is the
    obstruction to comparing the two twisted bundles by a plain loop map.
    """
    if frame0.N != frame1.N or frame0.n != frame1.n:
        raise ValueError("frames must share grid and fiber dimension")
    return np.einsum("tji,tjk->tik", frame1.Ts.conj(), frame0.Ts)


def fiber_intertwiner(frame0, frame1):
    """G(t_i) = T1(t_i) T0(t_i)^*, intertwining the two twists.

    Continued through the seam (G(t + 1) = T1 Hol1 (T0 Hol0)^*), it
    satisfies G(t + 1) tau0(t) = tau1(t) G(t).
    """
    if frame0.N != frame1.N or frame0.n != frame1.n:
        raise ValueError("frames must share grid and fiber dimension")
    return np.einsum("tij,tkj->tik", frame1.Ts, frame0.Ts.conj())


def section_to_dict(section):
    """JSON form: twist recorded by kind only, values are not embedded."""
    arr = section.samples
    return {
        "n": section.n,
        "N": section.N,
        "twist_kind": section.twist_kind,
        "samples": [[[float(c.real), float(c.imag)] for c in row]
                    for row in arr],
    }


def section_from_dict(d, twist=None):
    samples = np.array([[complex(re, im) for re, im in row]
                        for row in d["samples"]])
    if samples.shape != (d["N"] + 1, d["n"]):
        raise ValueError("sample array does not match declared shape")
    validate = twist is not None or d["twist_kind"] == "identity"
    return TwistedSection(samples, d["twist_kind"], twist, validate=validate)
