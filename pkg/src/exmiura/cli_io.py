"""Command line, job configuration, exporters (FOLD, OBJ, SVG) and reports.

Every float written by this module goes through :func:`fmt_float` (17
significant digits), and every JSON document through :func:`dumps`, so equal
inputs give byte-identical files.
"""
from __future__ import annotations

import argparse
import json
import math
import re
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .extrusion import ExtrudedModel, ExtrusionSpec, build_extruded_model, validate_mesh, validate_model
from .fold_sim import (
    ConvergenceFailure,
    MissingFinalState,
    construct_final_state,
    find_sigma_zero_states,
    fold_both_ways,
    triangulate_skins,
    write_trace,
)
from .mesh import ROLES, FoldedMesh
from .miura import DegenerateParameters, MiuraParams
from .tiling import (
    MalformedState,
    NoBracket,
    classify_tiling,
    coverage_error,
    measure_gap_and_shift,
    solve_double_tiling,
    verify_dual_tiling_structure,
)

__all__ = [
    "UsageError",
    "JobConfig",
    "parse_angle",
    "fmt_float",
    "dumps",
    "load_config",
    "fold_document",
    "export_fold",
    "import_fold",
    "obj_text",
    "svg_text",
    "export_obj_svg",
    "run_cli",
    "main",
]

FORMAT_VERSION = "exmiura-report/1"


class UsageError(ValueError):
    pass


# ----------------------------------------------------------------------------
# number formatting and JSON
# ----------------------------------------------------------------------------


def fmt_float(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot format non-finite value {x}")
    s = format(x, ".17g")
    if "." not in s and "e" not in s:
        s += ".0"
    return s


def _emit(obj, indent: int, level: int, out: list) -> None:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or obj is True or obj is False or isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(fmt_float(obj) if math.isfinite(obj) else "null")
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = list(obj.items())
        for i, (k, v) in enumerate(items):
            out.append(pad + json.dumps(str(k)) + ": ")
            _emit(v, indent, level + 1, out)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            out.append("[]")
            return
        # short numeric rows stay on one line
        if all(not isinstance(v, (list, tuple, dict, np.ndarray)) for v in seq):
            parts = []
            for v in seq:
                parts.append("")
                tmp: list = []
                _emit(v, indent, level + 1, tmp)
                parts[-1] = "".join(tmp)
            out.append("[" + ", ".join(parts) + "]")
            return
        out.append("[\n")
        for i, v in enumerate(seq):
            out.append(pad)
            _emit(v, indent, level + 1, out)
            out.append(",\n" if i < len(seq) - 1 else "\n")
        out.append(end + "]")
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with fixed 17-digit floats; non-finite floats become null."""
    out: list = []
    _emit(obj, indent, 0, out)
    return "".join(out) + "\n"


def _write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(text)


# ----------------------------------------------------------------------------
# configuration
# ----------------------------------------------------------------------------

_ANGLE = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)?\s*\*?\s*(pi|π)\s*$")


def parse_angle(v) -> float:
    """Radians from a number or a multiple of pi written as ``0.223pi``."""
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return float(v)
    if not isinstance(v, str):
        raise UsageError(f"not an angle: {v!r}")
    m = _ANGLE.match(v)
    if m:
        return float(m.group(1) or 1.0) * math.pi
    try:
        return float(v)
    except ValueError:
        raise UsageError(f"not an angle: {v!r} (use radians or a multiple like 0.223pi)") from None


def _pair(v, conv=float):
    if isinstance(v, str):
        v = v.split(",")
    v = [conv(x) for x in v]
    if len(v) != 2:
        raise UsageError(f"expected two values, got {v!r}")
    return (v[0], v[1])


def _cuts(v):
    if v is None or v == "auto":
        return None
    if isinstance(v, str):
        v = [x for x in v.split(",") if x.strip()]
    return tuple(int(x) for x in v)


@dataclass(frozen=True)
class JobConfig:
    l: float = 14.26
    w: float = 10.0
    theta: float = 0.223 * math.pi
    rho: float = 0.756 * math.pi
    depth: float = 14.294
    mode: str = "ordinary"
    accordion_angle: float | None = None
    cuts: tuple | None = None
    rows: int = 4
    cols: int = 4
    out: str = "out"
    input: str | None = None
    # validation
    angle_tol: float = 1e-8
    planarity_tol: float = 1e-9
    skin_tol: float = 1e-8
    intersection_tol: float = 1e-9
    check_intersections: bool = True
    # simulation
    phi_from: float = 0.0
    phi_to: float = math.pi
    step: float = 0.02
    min_step: float = 1e-6
    triangulate: bool = True
    sigma_tol: float = 1e-9
    # final state and tiling
    plane: str = "top"
    plane_tol: float = 1e-7
    share_tol: float = 1e-7
    epsilon: float | None = None
    free_param: str = "rho"
    bracket: tuple = (0.55 * math.pi, 0.97 * math.pi)
    s_target: float | None = None
    outer_param: str = "rho"
    outer_bracket: tuple | None = None
    scan: int = 0
    tol: float = 1e-7
    s_tol: float = 1e-7

    def params(self) -> MiuraParams:
        return MiuraParams(self.l, self.w, self.theta, self.rho)

    def spec(self) -> ExtrusionSpec:
        return ExtrusionSpec(self.depth, self.cuts, self.mode, self.accordion_angle)

    def resolved(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


_ANGLE_KEYS = {"theta", "rho", "accordion_angle", "phi_from", "phi_to"}
_CONVERT = {
    "rows": int,
    "cols": int,
    "scan": int,
    "cuts": _cuts,
    "bracket": lambda v: _pair(v, parse_angle),
    "outer_bracket": lambda v: None if v is None else _pair(v, parse_angle),
    "check_intersections": bool,
    "triangulate": bool,
    "mode": str,
    "plane": str,
    "free_param": str,
    "outer_param": str,
    "out": str,
    "input": lambda v: None if v is None else str(v),
}
_KEYS = {f.name for f in fields(JobConfig)}

# per-command defaults that differ from the dataclass defaults
COMMAND_DEFAULTS = {
    "simulate": {"rows": 3, "cols": 4, "cuts": (3,)},
    "solve": {"rows": 6, "cols": 6},
    "classify": {"rows": 6, "cols": 6},
}


def _convert(key: str, value):
    if key not in _KEYS:
        raise UsageError(f"unknown configuration key {key!r}")
    if value is None:
        return None
    try:
        if key in _ANGLE_KEYS:
            return parse_angle(value)
        if key in _CONVERT:
            return _CONVERT[key](value)
        return float(value)
    except (TypeError, ValueError) as e:
        raise UsageError(f"bad value for {key}: {e}") from None


def load_config(path) -> dict:
    """Read a JSON configuration file; unknown keys are rejected."""
    try:
        data = json.loads(Path(path).read_text())
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise UsageError(f"config {path} is not valid JSON: {e}") from None
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    return {k: _convert(k, v) for k, v in data.items()}


def _resolve(command: str, file_values: dict, flag_values: dict) -> JobConfig:
    values = dict(COMMAND_DEFAULTS.get(command, {}))
    values.update(file_values)
    values.update({k: v for k, v in flag_values.items() if v is not None})
    cfg = JobConfig(**values)
    if cfg.plane not in ("top", "bottom"):
        raise UsageError("plane must be top or bottom")
    if cfg.rows < 1 or cfg.cols < 1:
        raise UsageError("rows and cols must be positive")
    if cfg.step <= 0:
        raise UsageError("step must be positive")
    return cfg


# ----------------------------------------------------------------------------
# FOLD
# ----------------------------------------------------------------------------


def _as_mesh(obj) -> FoldedMesh:
    if isinstance(obj, ExtrudedModel):
        return obj.folded
    if isinstance(obj, FoldedMesh):
        return obj
    raise TypeError("expected an ExtrudedModel or FoldedMesh")


def _edge_table(mesh: FoldedMesh):
    """(edges, assignments, fold angles in degrees); auxiliary diagonals appended as F."""
    edges = [tuple(int(x) for x in e) for e in mesh.edges]
    assign = mesh.assignments()
    angles = [None if np.isnan(a) else math.degrees(a) for a in mesh.fold_angles()]
    have = set(edges)
    for e in sorted(mesh.aux_edges):
        e = (min(e), max(e))
        if e in have:
            assign[edges.index(e)] = "F"
            continue
        edges.append(e)
        assign.append("F")
        angles.append(None)
    return edges, assign, angles


def fold_document(obj) -> dict:
    mesh = _as_mesh(obj)
    edges, assign, angles = _edge_table(mesh)
    doc = {
        "file_spec": 1.1,
        "file_creator": "exmiura",
        "file_classes": ["singleModel"],
        "frame_classes": ["foldedForm"],
        "frame_attributes": ["3D"],
        "vertices_coords": [[float(c) for c in v] for v in mesh.vertices],
        "edges_vertices": [list(e) for e in edges],
        "edges_assignment": assign,
        "edges_foldAngle": angles,
        "faces_vertices": [list(f) for f in mesh.faces],
        "exmiura:face_roles": list(mesh.roles),
    }
    if mesh.pattern is not None:
        doc["file_frames"] = [
            {
                "frame_classes": ["creasePattern"],
                "frame_attributes": ["2D"],
                "frame_parent": 0,
                "frame_inherit": True,
                "vertices_coords": [[float(c) for c in v] for v in mesh.pattern],
            }
        ]
    return doc


def export_fold(obj, path) -> None:
    _write(path, dumps(fold_document(obj)))


def import_fold(path) -> FoldedMesh:
    """Read a FOLD file written by :func:`export_fold` (or any with a 3D folded frame)."""
    doc = json.loads(Path(path).read_text())
    verts = np.array(doc["vertices_coords"], dtype=float)
    if verts.ndim != 2 or verts.shape[1] not in (2, 3):
        raise ValueError("vertices_coords must be 2D or 3D points")
    if verts.shape[1] == 2:
        verts = np.column_stack([verts, np.zeros(len(verts))])
    faces = [tuple(f) for f in doc["faces_vertices"]]
    roles = doc.get("exmiura:face_roles") or ["miura"] * len(faces)
    pattern = None
    for fr in doc.get("file_frames", []):
        if "creasePattern" in fr.get("frame_classes", []):
            pattern = np.array(fr["vertices_coords"], dtype=float)[:, :2]
    face_edges = {(min(a, b), max(a, b)) for f in faces for a, b in zip(f, f[1:] + f[:1])}
    aux = frozenset(
        (min(e), max(e))
        for e, a in zip(doc.get("edges_vertices", []), doc.get("edges_assignment", []))
        if a == "F" and (min(e), max(e)) not in face_edges
    )
    return FoldedMesh(verts, faces, roles, pattern=pattern, aux_edges=aux)


# ----------------------------------------------------------------------------
# OBJ and SVG
# ----------------------------------------------------------------------------


def obj_text(obj) -> str:
    mesh = _as_mesh(obj)
    lines = ["# exmiura folded mesh", "mtllib exmiura.mtl"]
    for v in mesh.vertices:
        lines.append("v " + " ".join(fmt_float(c) for c in v))
    for role in ROLES:
        idx = mesh.role_faces(role)
        if not idx:
            continue
        lines += [f"g {role}", f"usemtl {role}"]
        for fi in idx:
            lines.append("f " + " ".join(str(i + 1) for i in mesh.faces[fi]))
    return "\n".join(lines) + "\n"


SVG_MARGIN = 5.0

_SVG_STYLE = {
    "M": 'stroke="#d62728" stroke-width="0.3"',
    "V": 'stroke="#1f77b4" stroke-width="0.3" stroke-dasharray="1.5,1"',
    "B": 'stroke="#000000" stroke-width="0.6"',
    "F": 'stroke="#7f7f7f" stroke-width="0.15"',
    "A": 'stroke="#7f7f7f" stroke-width="0.2" stroke-dasharray="0.3,0.6"',
}


def svg_text(obj, margin: float = SVG_MARGIN) -> str:
    """Crease pattern, one user unit per model length unit, y pointing up."""
    mesh = _as_mesh(obj)
    if mesh.pattern is None:
        raise ValueError("mesh has no crease pattern to draw")
    P = mesh.pattern
    lo, hi = P.min(axis=0), P.max(axis=0)
    width, height = hi - lo + 2 * margin
    edges, assign, _ = _edge_table(mesh)
    aux = {(min(e), max(e)) for e in mesh.aux_edges}

    def xy(i):
        return fmt_float(P[i, 0] - lo[0] + margin), fmt_float(hi[1] - P[i, 1] + margin)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{fmt_float(width)}" '
        f'height="{fmt_float(height)}" viewBox="0 0 {fmt_float(width)} {fmt_float(height)}">',
    ]
    groups = {"B": "boundary", "M": "mountain", "V": "valley", "F": "flat", "A": "auxiliary"}
    for key, name in groups.items():
        sel = [
            e
            for e, a in zip(edges, assign)
            if (key == "A" and e in aux) or (key != "A" and a == key and e not in aux)
        ]
        if not sel:
            continue
        out.append(f'<g id="{name}" fill="none" stroke-linecap="round" {_SVG_STYLE[key]}>')
        for a, b in sel:
            (x1, y1), (x2, y2) = xy(a), xy(b)
            out.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}"/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def export_obj_svg(obj, path, format: str) -> None:
    if format == "obj":
        _write(path, obj_text(obj))
    elif format == "svg":
        _write(path, svg_text(obj))
    else:
        raise ValueError(f"unknown format {format!r}")


# ----------------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------------


def _build(cfg: JobConfig) -> ExtrudedModel:
    p = cfg.params()
    p.require_foldable()
    return build_extruded_model(p, cfg.spec(), cfg.rows, cfg.cols)


def _validation(cfg: JobConfig, mesh_or_model) -> dict:
    kw = dict(
        angle_tol=cfg.angle_tol,
        planarity_tol=cfg.planarity_tol,
        skin_tol=cfg.skin_tol,
        intersection_tol=cfg.intersection_tol,
        intersections=cfg.check_intersections,
    )
    if isinstance(mesh_or_model, ExtrudedModel):
        rep = validate_model(mesh_or_model, **kw)
    else:
        rep = validate_mesh(mesh_or_model, **kw)
    return rep.summary()


def _cmd_generate(cfg: JobConfig):
    model = _build(cfg)
    mesh = triangulate_skins(model).mesh
    out = Path(cfg.out)
    export_fold(mesh, out / "model.fold")
    export_obj_svg(mesh, out / "model.obj", "obj")
    export_obj_svg(mesh, out / "model.svg", "svg")
    val = _validation(cfg, model)
    result = {
        "vertices": mesh.n_vertices,
        "faces": len(mesh.faces),
        "cuts": list(model.cuts),
        "direction": [float(c) for c in model.direction],
        "skin_separation": model.height,
        "validation": val,
        "files": ["model.fold", "model.obj", "model.svg"],
    }
    return (0 if val["ok"] else 1), result


def _cmd_simulate(cfg: JobConfig):
    model = _build(cfg)
    t = triangulate_skins(model, triangulate=cfg.triangulate)
    out = Path(cfg.out)
    try:
        path = fold_both_ways(t, cfg.step, lo=cfg.phi_from, hi=cfg.phi_to, min_step=cfg.min_step)
    except ConvergenceFailure as e:
        return 1, {"continuation": "failed", "message": str(e), "last_phi": e.last_phi}
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "trace.csv", "w", encoding="ascii", newline="\n") as fh:
        write_trace(path, fh)
    states = find_sigma_zero_states(path, tol=cfg.sigma_tol)
    result = {
        "continuation": "ok",
        "samples": len(path),
        "phi_range": [float(path.phi.min()), float(path.phi.max())],
        "phi_construction": path.meta.get("phi_construction"),
        "drive_switch": path.meta.get("drive_switch"),
        "sigma_zero_states": [{"label": s.label, "phi": s.phi, "sigma": s.sigma} for s in states],
        "files": ["trace.csv"],
    }
    return 0, result


def _tiling_result(cfg: JobConfig, final: FoldedMesh) -> dict:
    rep = measure_gap_and_shift(final, cfg.plane, tol=cfg.tol, epsilon=cfg.epsilon)
    other = measure_gap_and_shift(final, "bottom" if cfg.plane == "top" else "top", tol=cfg.tol, epsilon=cfg.epsilon)
    dual = verify_dual_tiling_structure(final)
    return {
        "report": rep.as_dict(),
        "class": str(classify_tiling(rep, cfg.epsilon)),
        "coverage_error": {cfg.plane: coverage_error(rep), other.plane: coverage_error(other)},
        "dual_tiling": {"ok": dual.ok, "max_spread": dual.max_spread},
    }


def _cmd_solve(cfg: JobConfig):
    p = cfg.params()
    spec = cfg.spec()
    q = solve_double_tiling(
        p,
        spec,
        free_param=cfg.free_param,
        bracket=cfg.bracket,
        rows=cfg.rows,
        cols=cfg.cols,
        s_target=cfg.s_target,
        outer_param=cfg.outer_param,
        outer_bracket=cfg.outer_bracket,
        scan=cfg.scan,
        tol=cfg.tol,
        s_tol=cfg.s_tol,
    )
    model = build_extruded_model(q, spec, cfg.rows, cfg.cols)
    final = construct_final_state(model)
    export_fold(final, Path(cfg.out) / "final.fold")
    result = {
        "solution": {"l": q.l, "w": q.w, "theta": q.theta, "rho": q.rho},
        "solution_over_pi": {"theta": q.theta / math.pi, "rho": q.rho / math.pi},
        **_tiling_result(cfg, final),
        "files": ["final.fold"],
    }
    return 0, result


def _cmd_classify(cfg: JobConfig):
    if cfg.input is None:
        model = _build(cfg)
        final = construct_final_state(model)
        source = "constructed"
    else:
        final = import_fold(cfg.input)
        source = cfg.input
    return 0, {"source": source, **_tiling_result(cfg, final)}


def _cmd_validate(cfg: JobConfig):
    target = import_fold(cfg.input) if cfg.input is not None else _build(cfg)
    val = _validation(cfg, target)
    return (0 if val["ok"] else 1), {"source": cfg.input or "generated", "validation": val}


COMMANDS = {
    "generate": (_cmd_generate, "build, validate and export an extruded Miura-Ori"),
    "simulate": (_cmd_simulate, "trace the folding motion and report sigma = 0 states"),
    "solve": (_cmd_solve, "solve for a double-tiling configuration (g = 0, optional s target)"),
    "classify": (_cmd_classify, "measure g and s on a final state and classify the tiling"),
    "validate": (_cmd_validate, "developability, planarity, skin and intersection report"),
}

_FLAGS = [
    ("--l", "Miura parallelogram side along the oblique creases"),
    ("--w", "Miura parallelogram side along the mirror creases"),
    ("--theta", "parallelogram angle (radians or e.g. 0.223pi)"),
    ("--rho", "mirror-crease fold angle (radians or e.g. 0.756pi)"),
    ("--depth", "extrusion depth"),
    ("--mode", "base folding mode: ordinary or alternate"),
    ("--accordion-angle", "opening angle for the alternate mode"),
    ("--cuts", "comma-separated cut start columns, or 'auto'"),
    ("--rows", "face rows"),
    ("--cols", "face columns"),
    ("--out", "output directory"),
    ("--input", "input FOLD file (classify, validate)"),
    ("--angle-tol", "angle-defect tolerance in radians (default 1e-8)"),
    ("--planarity-tol", "face planarity tolerance, relative to model size (default 1e-9)"),
    ("--skin-tol", "skin-plane tolerance, relative to model size (default 1e-8)"),
    ("--intersection-tol", "penetration tolerance, relative to model size (default 1e-9)"),
    ("--phi-from", "lower end of the fold-angle range (default 0)"),
    ("--phi-to", "upper end of the fold-angle range (default pi)"),
    ("--step", "largest fold-angle step (default 0.02)"),
    ("--min-step", "smallest step before continuation gives up (default 1e-6)"),
    ("--sigma-tol", "sigma = 0 tolerance (default 1e-9)"),
    ("--plane", "skin plane measured: top or bottom"),
    ("--plane-tol", "two-plane tolerance, relative (default 1e-7)"),
    ("--share-tol", "shared-edge tolerance, relative (default 1e-7)"),
    ("--epsilon", "classification tolerance (default 1e-6 * d)"),
    ("--free-param", "inner solve parameter: rho, theta or w_over_l"),
    ("--bracket", "inner bracket lo,hi"),
    ("--s-target", "shift distance target for the outer solve"),
    ("--outer-param", "outer solve parameter"),
    ("--outer-bracket", "outer bracket lo,hi"),
    ("--scan", "samples for bracket scanning (default 0: none)"),
    ("--tol", "gap tolerance, relative to max(l, w) (default 1e-7)"),
    ("--s-tol", "shift tolerance, relative to d (default 1e-7)"),
]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="exmiura", description="Extruded Miura-Ori generator, simulator and tiling solver.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    for name, (_, helptext) in COMMANDS.items():
        sp = sub.add_parser(name, help=helptext, description=helptext)
        sp.add_argument("--config", help="JSON configuration file; flags override it")
        for flag, h in _FLAGS:
            sp.add_argument(flag, default=None, help=h)
        sp.add_argument("--no-intersections", action="store_true", help="skip the self-intersection scan")
        sp.add_argument("--untriangulated", action="store_true", help="keep skin faces as rigid quads")
    return parser


def _flag_values(ns: argparse.Namespace) -> dict:
    out = {}
    for flag, _ in _FLAGS:
        key = flag[2:].replace("-", "_")
        val = getattr(ns, key)
        if val is not None:
            out[key] = _convert(key, val)
    if ns.no_intersections:
        out["check_intersections"] = False
    if ns.untriangulated:
        out["triangulate"] = False
    return out


def run_cli(argv=None, stdout=None, stderr=None) -> int:
    """Run one command; returns 0 (success), 1 (validation or solver failure) or 2 (usage)."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.command is None:
            raise UsageError("a command is required")
        file_values = load_config(ns.config) if ns.config else {}
        cfg = _resolve(ns.command, file_values, _flag_values(ns))
        cfg.params()
        cfg.spec()
    except (UsageError, ValueError, TypeError) as e:
        stderr.write(parser.format_usage())
        stderr.write(f"error: {e}\n")
        return 2
    func = COMMANDS[ns.command][0]
    try:
        code, result = func(cfg)
    except DegenerateParameters as e:
        stderr.write(parser.format_usage())
        stderr.write(f"error: {e}\n")
        return 2
    except (ConvergenceFailure, MissingFinalState, MalformedState, NoBracket, ValueError) as e:
        code, result = 1, {"error": type(e).__name__, "message": str(e)}
    report = {
        "format": FORMAT_VERSION,
        "command": ns.command,
        "exit_code": code,
        "config": cfg.resolved(),
        "result": result,
    }
    text = dumps(report)
    stdout.write(text)
    _write(Path(cfg.out) / f"{ns.command}_report.json", text)
    return code


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
