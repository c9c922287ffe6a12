"""Batch front door: run projections, loop rebuilds, holonomy experiments,
twist checks, and family audits from data files.

Exit codes are a stable contract:
  0  success
  2  malformed input or bad parameters
  3  subspace-to-loop failure (wrong intersection dimension or unitarity)
  4  numerical refinement failure (phase steps cannot be resolved)
  5  audit or reduction failure

Reports are JSON objects with a fixed "schema" version, emitted to stdout
and optionally to files (written atomically).  With --no-meta the report
carries no timestamp, so identical configurations produce byte-identical
output.
"""

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from . import decomp, fourier, loopgroup, subspaces, transport, twistbundle
from .errors import (
    IntersectionDimension,
    NonConstantReducedTransition,
    PeriodicityDefect,
    PhaseStepTooLarge,
    RankDeficiency,
    UnitarityViolation,
)

SCHEMA = 1

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SUBSPACE = 3
EXIT_REFINEMENT = 4
EXIT_AUDIT = 5


class InputError(ValueError):
    """Raised for malformed files or inconsistent parameters (exit 2)."""


@dataclass(frozen=True)
class RunConfig:
    """Everything a subcommand run depends on, normalized from argv."""

    subcommand: str
    input: str = None
    output: str = None
    no_meta: bool = False
    N: int = 2048
    M: int = 64
    depth: int = None
    band: int = 4
    seed: int = 0
    preset: str = None
    B: float = 1.0
    q: int = 1
    n: int = 1
    radius: float = 1.0
    latitude: float = None
    csv: str = None
    variation_tol: float = None
    unitarity_tol: float = None
    tol_scale: float = 1.0

    def __post_init__(self):
        for name in ("N", "M"):
            if getattr(self, name) < 1:
                raise InputError(f"{name} must be a positive integer")
        if self.depth is not None and self.depth < 0:
            raise InputError("depth must be >= 0")
        if self.band < 0:
            raise InputError("band must be >= 0")
        if self.radius <= 0:
            raise InputError("radius must be positive")
        if self.n < 1:
            raise InputError("n must be a positive integer")
        if self.latitude is not None and not 0 < self.latitude < math.pi:
            raise InputError("latitude must lie strictly between 0 and pi")
        if self.tol_scale <= 0:
            raise InputError("tol-scale must be positive")
        for name in ("variation_tol", "unitarity_tol"):
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise InputError(f"{name.replace('_', '-')} must be positive")


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def _dump(report):
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def _write_atomic(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".part")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _matrix_json(M):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(M)]


def _report(cfg, command, payload):
    report = {"schema": SCHEMA, "command": command}
    report.update(payload)
    if not cfg.no_meta:
        report["meta"] = {
            "timestamp": datetime.now(timezone.utc).isoformat()}
    return report


def _connection(cfg):
    if cfg.preset == "flat":
        d = 3 if cfg.latitude is not None else 2
        return transport.flat(n=cfg.n, d=d)
    if cfg.preset == "abelian2d":
        return transport.abelian2d(cfg.B)
    if cfg.preset == "monopole":
        return transport.monopole(cfg.q)
    if cfg.preset == "su2sample":
        return transport.su2sample()
    raise InputError(f"unknown preset {cfg.preset!r}")


def _base_loop(cfg, conn):
    if cfg.input is not None:
        try:
            loop = transport.load_loop_csv(cfg.input)
        except (OSError, ValueError) as exc:
            raise InputError(f"cannot load loop from {cfg.input}: {exc}") from exc
    elif cfg.latitude is not None:
        loop = transport.latitude_loop(cfg.latitude)
    elif conn.d == 3:
        loop = transport.latitude_loop(math.pi / 2.0)
    else:
        loop = transport.BaseLoop.circle(cfg.radius)
    if loop.d != conn.d:
        raise InputError(
            f"loop dimension {loop.d} does not match connection chart {conn.d}")
    return loop


def cmd_project(cfg):
    data = _load_json(cfg.input)
    try:
        loop = fourier.loop_from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"not a coefficient loop file: {exc}") from exc
    plus = fourier.project_plus(loop)
    minus = fourier.project_minus(loop)
    payload = {
        "input": cfg.input,
        "n": loop.n,
        "bands": {
            "input": list(loop.band),
            "plus": list(plus.band),
            "minus": list(minus.band),
        },
        "norms": {
            "input": fourier.norm(loop),
            "plus": fourier.norm(plus),
            "minus": fourier.norm(minus),
        },
    }
    if cfg.output:
        files = {
            "plus": cfg.output + ".plus.json",
            "minus": cfg.output + ".minus.json",
        }
        _write_atomic(files["plus"],
                      _dump(fourier.loop_to_dict(plus)))
        _write_atomic(files["minus"],
                      _dump(fourier.loop_to_dict(minus)))
        payload["files"] = files
    else:
        payload["plus"] = fourier.loop_to_dict(plus)
        payload["minus"] = fourier.loop_to_dict(minus)
    return _report(cfg, "project", payload), EXIT_OK


def cmd_subspace_loop(cfg):
    data = _load_json(cfg.input)
    try:
        if "generators" in data:
            filt = subspaces.filtration_from_dict(data)
            depth = cfg.depth if cfg.depth is not None else filt.depth
            frame = subspaces.expand_filtration(filt, depth)
        elif "columns" in data:
            frame = subspaces.frame_from_dict(data)
        else:
            raise InputError(
                "expected a filtration file (generators/depth) or a frame "
                "file (n/columns)")
    except InputError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"not a subspace file: {exc}") from exc

    tol = cfg.unitarity_tol if cfg.unitarity_tol else loopgroup.UNITARITY_TOL
    payload = {"input": cfg.input, "n": frame.n, "subspace_dim": frame.dim}
    try:
        g = loopgroup.loop_from_subspace(frame, tol=tol)
    except (IntersectionDimension, UnitarityViolation) as exc:
        payload.update({
            "status": "failed",
            "diagnostic": str(exc),
            "element": None,
        })
        return _report(cfg, "subspace-loop", payload), EXIT_SUBSPACE
    payload.update({
        "status": "ok",
        "diagnostic": None,
        "element": loopgroup.element_to_dict(g),
        "unitarity_defect": loopgroup.unitarity_defect(g)[0],
        "det_winding": loopgroup.det_winding(g),
    })
    return _report(cfg, "subspace-loop", payload), EXIT_OK


def cmd_holonomy(cfg):
    conn = _connection(cfg)
    loop = _base_loop(cfg, conn)
    frame = transport.parallel_transport(conn, loop, N=cfg.N)
    again = transport.holonomy(conn, loop, N=2 * cfg.N)
    payload = {
        "preset": conn.name,
        "N": cfg.N,
        "holonomy": _matrix_json(frame.holonomy),
        "unitarity_defect": frame.raw_defect,
        "refinement_delta": float(np.linalg.norm(frame.holonomy - again)),
    }
    return _report(cfg, "holonomy", payload), EXIT_OK


def cmd_obstruction(cfg):
    if cfg.preset != "monopole":
        raise InputError("obstruction sweeps are defined for --preset monopole")
    conn = transport.monopole(cfg.q)
    family = transport.latitude_family()
    winding = transport.chern_winding(conn, family, N=cfg.N, M=cfg.M)
    payload = {
        "preset": conn.name,
        "q": cfg.q,
        "N": cfg.N,
        "M": cfg.M,
        "winding": winding,
        "csv": cfg.csv,
    }
    if cfg.csv:
        lines = ["s,re,im"]
        for j in range(cfg.M + 1):
            s = j / cfg.M
            h = complex(transport.holonomy(conn, family(s), N=cfg.N)[0, 0])
            lines.append(f"{s!r},{h.real!r},{h.imag!r}")
        _write_atomic(cfg.csv, "\n".join(lines) + "\n")
    return _report(cfg, "obstruction", payload), EXIT_OK


def _twistcheck_residuals(conn, loop, N, band, seed):
    frame = transport.parallel_transport(conn, loop, N=N)
    rng = np.random.default_rng(seed)
    n = conn.n

    def rand_loop(dim, scale=1.0):
        coeffs = {k: scale * (rng.normal(size=dim) + 1j * rng.normal(size=dim))
                  for k in range(-band, band + 1)}
        return fourier.TruncatedLoop(dim, coeffs)

    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    f = rand_loop(1)
    p = rand_loop(n)

    embed = twistbundle.j_embed(frame, v)
    embed_back = twistbundle.phi_inverse(frame, embed)
    embed_res = fourier.norm(embed_back - fourier.constant_loop(v))

    extend = twistbundle.j_extend(frame, f, v)
    extend_back = twistbundle.phi_inverse(frame, extend)
    extend_res = fourier.norm(
        extend_back - fourier.scalar_multiply(f, fourier.constant_loop(v)))

    section = twistbundle.section_from_loop(frame, p)
    resection = twistbundle.section_from_loop(
        frame, twistbundle.phi_inverse(frame, section))
    section_res = float(np.abs(resection.samples - section.samples).max())

    seam = max(embed.seam_residual(), extend.seam_residual(),
               section.seam_residual())

    steps = N // 4
    rot_frame = transport.parallel_transport(
        conn, loop.rotated(steps / N), N=N)
    lhs = twistbundle.rotate(embed, steps)
    rhs = twistbundle.j_embed(rot_frame, frame.Ts[steps] @ v)
    rotation_res = float(np.abs(lhs.samples - rhs.samples).max())

    return {
        "embed_roundtrip": float(embed_res),
        "extend_roundtrip": float(extend_res),
        "section_roundtrip": section_res,
        "seam_residual": float(seam),
        "rotation_equivariance": rotation_res,
    }


TWISTCHECK_TOLS = {
    "embed_roundtrip": 1e-8,
    "extend_roundtrip": 1e-8,
    "section_roundtrip": 1e-7,
    "seam_residual": 1e-7,
    "rotation_equivariance": 1e-6,
}


def cmd_twistcheck(cfg):
    conn = _connection(cfg)
    loop = _base_loop(cfg, conn)
    residuals = _twistcheck_residuals(conn, loop, cfg.N, cfg.band, cfg.seed)
    tols = {k: t * cfg.tol_scale for k, t in TWISTCHECK_TOLS.items()}
    failures = [k for k, r in residuals.items() if r > tols[k]]
    payload = {
        "preset": conn.name,
        "N": cfg.N,
        "band": cfg.band,
        "seed": cfg.seed,
        "residuals": residuals,
        "tolerances": tols,
        "failures": failures,
        "all_ok": not failures,
    }
    code = EXIT_OK if not failures else EXIT_AUDIT
    return _report(cfg, "twistcheck", payload), code


def cmd_audit(cfg):
    data = _load_json(cfg.input)
    try:
        fam = decomp.family_from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"not a family file: {exc}") from exc
    report = decomp.audit_family(fam)
    payload = {"input": cfg.input, "audit": report.to_dict()}
    code = EXIT_OK if report.all_ok else EXIT_AUDIT
    if fam.transitions is not None and report.axioms_ok:
        tol = (cfg.variation_tol if cfg.variation_tol
               else decomp.VARIATION_TOL)
        try:
            cert = decomp.reduction_cocycle(fam, variation_tol=tol)
        except NonConstantReducedTransition as exc:
            payload["reduction"] = {
                "failed": str(exc),
                "edge": list(exc.edge),
                "variation": exc.variation,
                "winding_sum": exc.winding_sum,
            }
            code = EXIT_AUDIT
        else:
            payload["reduction"] = cert.to_dict()
    else:
        payload["reduction"] = None
    payload["all_ok"] = code == EXIT_OK
    return _report(cfg, "audit", payload), code


HANDLERS = {
    "project": cmd_project,
    "subspace-loop": cmd_subspace_loop,
    "holonomy": cmd_holonomy,
    "obstruction": cmd_obstruction,
    "twistcheck": cmd_twistcheck,
    "audit": cmd_audit,
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="loopfiber",
        description="Loop-space frequency splittings, transport holonomy, "
                    "and twisted-bundle checks.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-o", "--output", help="write the report (or report "
                        "prefix) here instead of only stdout")
    common.add_argument("--no-meta", action="store_true",
                        help="omit timestamps for byte-identical reports")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("project", parents=[common],
                       help="split a coefficient loop at frequency zero")
    p.add_argument("input", help="coefficient loop JSON file")

    p = sub.add_parser("subspace-loop", parents=[common],
                       help="rebuild the unitary loop spanning a subspace")
    p.add_argument("input", help="filtration or frame JSON file")
    p.add_argument("--depth", type=int, default=None,
                   help="override the filtration depth")
    p.add_argument("--unitarity-tol", type=float, default=None)

    p = sub.add_parser("holonomy", parents=[common],
                       help="transport around a loop and report the holonomy")
    p.add_argument("--preset", required=True,
                   choices=["flat", "abelian2d", "monopole", "su2sample"])
    p.add_argument("--B", type=float, default=1.0, help="curvature of abelian2d")
    p.add_argument("--q", type=int, default=1, help="charge of monopole")
    p.add_argument("--n", type=int, default=1, help="fiber dimension of flat")
    p.add_argument("--circle", dest="radius", type=float, default=1.0,
                   help="planar circle radius")
    p.add_argument("--latitude", type=float, default=None,
                   help="polar angle of a sphere latitude loop")
    p.add_argument("--loop", dest="input", default=None,
                   help="CSV loop file instead of a built-in loop")
    p.add_argument("--N", type=int, default=2048, help="transport grid")

    p = sub.add_parser("obstruction", parents=[common],
                       help="winding of the holonomy over the latitude sweep")
    p.add_argument("--preset", required=True, choices=["monopole"])
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--N", type=int, default=256, help="transport grid")
    p.add_argument("--M", type=int, default=64, help="family grid")
    p.add_argument("--csv", default=None,
                   help="write the per-parameter holonomy sweep here")

    p = sub.add_parser("twistcheck", parents=[common],
                       help="round-trip and equivariance checks for twisted "
                            "sections")
    p.add_argument("--preset", required=True,
                   choices=["flat", "abelian2d", "monopole", "su2sample"])
    p.add_argument("--B", type=float, default=1.0)
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--circle", dest="radius", type=float, default=1.0)
    p.add_argument("--latitude", type=float, default=None)
    p.add_argument("--loop", dest="input", default=None)
    p.add_argument("--N", type=int, default=2048)
    p.add_argument("--band", type=int, default=4,
                   help="frequency band of the random test data")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol-scale", type=float, default=1.0)

    p = sub.add_parser("audit", parents=[common],
                       help="audit a subspace family and reduce its cocycle")
    p.add_argument("input", help="family JSON file")
    p.add_argument("--variation-tol", type=float, default=None)

    return parser


def _config_from_args(args):
    fields = {f for f in RunConfig.__dataclass_fields__}
    values = {k: v for k, v in vars(args).items() if k in fields and v is not None}
    return RunConfig(**values)


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        report, code = HANDLERS[cfg.subcommand](cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, json.JSONDecodeError, RankDeficiency) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (IntersectionDimension, UnitarityViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SUBSPACE
    except PhaseStepTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REFINEMENT
    except (PeriodicityDefect, NonConstantReducedTransition) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_AUDIT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    text = _dump(report)
    sys.stdout.write(text)
    if cfg.output:
        path = cfg.output
        if cfg.subcommand == "project":
            path = cfg.output + ".json"
        _write_atomic(path, text)
    return code


def entrypoint():
    raise SystemExit(main())
