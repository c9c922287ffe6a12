"""Certification and reduction of sampled shift-filtered subspace families.

A SubspaceFamily carries, over a finite path or cycle of base samples, a
shift-filtration window at each point plus optional loop-group transition
data between neighbours.  `audit_family` checks the three fiberwise axioms
that make the family a genuine frequency-split structure:

  (a) shifting by z maps the depth-P window into the depth-(P+1) window,
  (b) the window dimension grows by exactly n per depth step,
  (c) the fiber meets the shifted complement in exactly n directions and
      those directions assemble into a pointwise-unitary loop.

`reduction_cocycle` conjugates each transition by the per-point loops from
(c); for a certified family the conjugated transitions are constant in the
loop parameter, producing a plain unitary cocycle.  A transition with
nonzero determinant winding can never reduce this way, and the failure is
reported together with the family's total winding.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    IntersectionDimension,
    NonConstantReducedTransition,
    UnitarityViolation,
)
from .fourier import basis_loop, shift
from .loopgroup import (
    constant_element,
    det_winding,
    element_from_dict,
    element_to_dict,
    inverse,
    loop_from_subspace,
    multiply,
    theta_variation,
    unitarity_defect,
)
from .subspaces import (
    expand_filtration,
    filtration_from_dict,
    filtration_to_dict,
    FiltrationSubspace,
    intersect_shift_complement,
    orthonormalize,
    principal_angles,
    stack_loops,
    union_band,
)

__all__ = [
    "SubspaceFamily",
    "PointAudit",
    "AuditReport",
    "audit_family",
    "ReductionCertificate",
    "reduction_cocycle",
    "build_model_decomposition",
    "filtration",
    "family_to_dict",
    "family_from_dict",
]

SHIFT_RESIDUAL_TOL = 1e-8
CONTINUITY_COS = 0.9
VARIATION_TOL = 1e-6
COCYCLE_UNITARY_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class SubspaceFamily:
    """Filtration windows over a sampled base with optional transitions.

    points are opaque labels; edges index into them (a path or a cycle).
    transitions, when present, run parallel to edges: transitions[e] maps
    the trivialized fiber at edges[e][0] to the one at edges[e][1].
    """

    points: tuple
    edges: tuple
    psi: tuple
    transitions: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))
        object.__setattr__(self, "psi", tuple(self.psi))
        if self.transitions is not None:
            object.__setattr__(self, "transitions", tuple(self.transitions))
        m = len(self.points)
        if len(self.psi) != m:
            raise ValueError("one filtration window per base point required")
        if m == 0:
            raise ValueError("family needs at least one base point")
        n = self.psi[0].n
        if any(f.n != n for f in self.psi):
            raise ValueError("fiber dimension varies across the family")
        for e in self.edges:
            if len(e) != 2 or not all(0 <= i < m for i in e):
                raise ValueError(f"edge {e} does not index the point list")
        if self.transitions is not None:
            if len(self.transitions) != len(self.edges):
                raise ValueError("one transition per edge required")
            if any(c.n != n for c in self.transitions):
                raise ValueError("transition dimension mismatch")

    @property
    def n(self):
        return self.psi[0].n

    @property
    def size(self):
        return len(self.points)


@dataclass(frozen=True)
class PointAudit:
    point: int
    shift_residual: float
    dim_at_depth: int
    dim_above: int
    growth: int
    intersection_dim: int
    unitarity_defect: float
    failure: str
    passed_a: bool
    passed_b: bool
    passed_c: bool

    @property
    def passed(self):
        return self.passed_a and self.passed_b and self.passed_c

    def to_dict(self):
        return {
            "point": self.point,
            "shift_residual": self.shift_residual,
            "dim_at_depth": self.dim_at_depth,
            "dim_above": self.dim_above,
            "growth": self.growth,
            "intersection_dim": self.intersection_dim,
            "unitarity_defect": self.unitarity_defect,
            "failure": self.failure,
            "passed": [self.passed_a, self.passed_b, self.passed_c],
        }


@dataclass(frozen=True)
class AuditReport:
    point_audits: tuple
    edge_cosines: tuple
    continuity_ok: bool

    @property
    def axioms_ok(self):
        return all(p.passed for p in self.point_audits)

    @property
    def all_ok(self):
        return self.axioms_ok and self.continuity_ok

    def to_dict(self):
        return {
            "points": [p.to_dict() for p in self.point_audits],
            "edge_min_cosines": list(self.edge_cosines),
            "continuity_ok": self.continuity_ok,
            "axioms_ok": self.axioms_ok,
            "all_ok": self.all_ok,
        }


def _shift_residual(frame_p, frame_p1):
    """max over the depth-P frame of the part of z*w outside the P+1 frame."""
    shifted = [shift(w, 1) for w in frame_p.columns]
    band = union_band(shifted + list(frame_p1.columns))
    rows = stack_loops(shifted, band=band)
    basis = stack_loops(frame_p1.columns, band=band)
    resid = rows - (rows @ basis.conj().T) @ basis
    return float(np.linalg.norm(resid, axis=1).max())


def _audit_point(x, f):
    n = f.n
    frame_p = expand_filtration(f)
    frame_p1 = expand_filtration(f, f.depth + 1)
    residual = _shift_residual(frame_p, frame_p1)
    growth = frame_p1.dim - frame_p.dim

    inter = intersect_shift_complement(frame_p)
    inter_dim = 0 if inter is None else inter.dim
    defect = float("nan")
    failure = ""
    passed_c = False
    try:
        gamma = loop_from_subspace(frame_p)
    except (IntersectionDimension, UnitarityViolation) as exc:
        failure = str(exc)
        if isinstance(exc, UnitarityViolation):
            defect = exc.defect
    else:
        defect = unitarity_defect(gamma)[0]
        passed_c = inter_dim == n
    return PointAudit(
        point=x,
        shift_residual=residual,
        dim_at_depth=frame_p.dim,
        dim_above=frame_p1.dim,
        growth=growth,
        intersection_dim=inter_dim,
        unitarity_defect=defect,
        failure=failure,
        passed_a=residual <= SHIFT_RESIDUAL_TOL,
        passed_b=growth == n,
        passed_c=passed_c,
    )


def audit_family(fam):
    """Check the fiberwise axioms at every base point; never raises.

    Failures land in the report: per point the shift residual (a), the
    window growth (b), the intersection dimension and loop unitarity (c),
    plus per-edge continuity cosines between neighbouring generator spans.
    """
    point_audits = tuple(_audit_point(x, f) for x, f in enumerate(fam.psi))
    cosines = []
    for (i, j) in fam.edges:
        a = orthonormalize(fam.psi[i].generators)
        b = orthonormalize(fam.psi[j].generators)
        cosines.append(float(principal_angles(a, b).min()))
    continuity_ok = all(c >= CONTINUITY_COS for c in cosines)
    return AuditReport(point_audits, tuple(cosines), continuity_ok)


@dataclass(frozen=True, eq=False)
class ReductionCertificate:
    """Constant unitary transitions obtained by conjugating the cocycle.

    constants[e] is the polar-projected mean of the conjugated transition
    over edge e; variations[e] its grid variation (certified <= 1e-6);
    gammas[x] the per-point loop used for the conjugation, whose
    determinant windings are recorded alongside.
    """

    edges: tuple
    constants: tuple
    variations: tuple
    gammas: tuple
    gamma_windings: tuple

    @property
    def max_variation(self):
        return max(self.variations) if self.variations else 0.0

    def to_dict(self):
        return {
            "edges": [list(e) for e in self.edges],
            "constants": [[[[float(z.real), float(z.imag)] for z in row]
                           for row in U] for U in self.constants],
            "variations": list(self.variations),
            "gamma_windings": list(self.gamma_windings),
            "max_variation": self.max_variation,
        }


def _polar(M):
    U, _, Vh = np.linalg.svd(M)
    return U @ Vh


def reduction_cocycle(fam, variation_tol=VARIATION_TOL):
    """Conjugate each transition into a constant unitary, or refuse.

    Per point, the filtration window determines a pointwise-unitary loop
    gamma_x; each transition c over an edge (x, y) is replaced by
    gamma_y^{-1} c gamma_x.  For a certified family this is constant in
    the loop parameter; the constants form the reduced cocycle.  A
    variation above `variation_tol` raises NonConstantReducedTransition
    carrying the total determinant winding of the input transitions, the
    integer obstruction that forbids any such reduction.
    """
    if fam.transitions is None:
        raise ValueError("family carries no transition data")
    gammas = tuple(loop_from_subspace(expand_filtration(f)) for f in fam.psi)
    gamma_windings = tuple(det_winding(g) for g in gammas)
    constants = []
    variations = []
    for e_idx, (i, j) in enumerate(fam.edges):
        c = fam.transitions[e_idx]
        reduced = multiply(inverse(gammas[j]), multiply(c, gammas[i]))
        var, mean = theta_variation(reduced)
        if var > variation_tol:
            total = sum(det_winding(t) for t in fam.transitions)
            raise NonConstantReducedTransition((i, j), var, winding_sum=total)
        constants.append(_polar(mean))
        variations.append(float(var))
    return ReductionCertificate(fam.edges, tuple(constants),
                                tuple(variations), gammas, gamma_windings)


def build_model_decomposition(U_cocycle, depth=3):
    """The constant-window family over a cycle with the given transitions.

    Each fiber is the nonnegative-frequency window on constant generators;
    constant unitary transitions preserve it, so the audit passes by
    construction and reduction recovers the input cocycle.
    """
    mats = [np.asarray(U, dtype=complex) for U in U_cocycle]
    if not mats:
        raise ValueError("inconsistent cocycle: no transitions given")
    n = mats[0].shape[0]
    for U in mats:
        if U.shape != (n, n):
            raise ValueError("inconsistent cocycle: mixed matrix shapes")
        if np.linalg.norm(U.conj().T @ U - np.eye(n)) > COCYCLE_UNITARY_TOL:
            raise ValueError("inconsistent cocycle: transition not unitary")
    m = len(mats)
    gens = [basis_loop(n, component=j, frequency=0) for j in range(n)]
    window = FiltrationSubspace(gens, depth)
    return SubspaceFamily(
        points=tuple(range(m)),
        edges=tuple((i, (i + 1) % m) for i in range(m)),
        psi=tuple(window for _ in range(m)),
        transitions=tuple(constant_element(U) for U in mats),
    )


def filtration(fam, k):
    """The k-th member of the exhausting chain: every window shifted by -k."""
    if not isinstance(k, (int, np.integer)) or k < 0:
        raise ValueError("k must be a nonnegative integer")
    if k == 0:
        return fam
    psi = tuple(
        FiltrationSubspace([shift(g, -k) for g in f.generators], f.depth)
        for f in fam.psi)
    return SubspaceFamily(fam.points, fam.edges, psi, fam.transitions)


def family_to_dict(fam):
    return {
        "points": list(fam.points),
        "edges": [list(e) for e in fam.edges],
        "psi": [filtration_to_dict(f) for f in fam.psi],
        "transitions": (None if fam.transitions is None
                        else [element_to_dict(c) for c in fam.transitions]),
    }


def family_from_dict(d):
    transitions = d.get("transitions")
    return SubspaceFamily(
        points=tuple(d["points"]),
        edges=tuple(tuple(e) for e in d["edges"]),
        psi=tuple(filtration_from_dict(f) for f in d["psi"]),
        transitions=(None if transitions is None
                     else tuple(element_from_dict(c) for c in transitions)),
    )
