"""Command-line front end: run studies, generate/inspect meshes, export fields.

Subcommands: run | mesh | export | presets. Exit codes: 0 success,
2 configuration/argument error, 3 solver nonconvergence (artifacts
written up to the failure are retained).

Heavy imports happen inside the command handlers so thread-count
environment variables set from flags take effect before the numerical
libraries load.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGENCE = 3


def _set_threads(n: int) -> None:
    if n and n > 0:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
            os.environ[var] = str(n)


def _safe_name(key: str) -> str:
    return "".join(c if c.isalnum() or c in "-._" else "_" for c in key)


def _write_csv(path, run) -> None:
    import numpy as np

    names = sorted(run.series)
    cols = [run.times, run.activation] + [run.series[n] for n in names]
    header = ",".join(["time", "activation"] + names)
    data = np.column_stack(cols)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(header + "\n")
        for row in data:
            fh.write(",".join("%.17g" % v for v in row) + "\n")


def _write_snapshots(outdir: str, key: str, run, study: str) -> None:
    from .dynamics import write_state
    from .vtk_export import export_vtk

    state, disc = run.final_state, run.disc
    if state is None or disc is None:
        return
    n_p = state.p.size // len(disc.mesh.cells)
    act = run.activation[-1] if run.activation is not None else 0.0
    base = os.path.join(outdir, _safe_name(key))
    write_state(base + ".state", state, n_p, act)
    export_vtk(base + ".vtk", disc.mesh, state, act,
               title=f"{study} {key} t={state.t:.6g}")


def cmd_run(args) -> int:
    _set_threads(1 if args.deterministic else args.threads)
    from .config import load_config, parse_config_text, preset_text, resolved_text
    from .errors import ConfigError, NonConvergence
    from .scenarios import run_study

    try:
        sets = list(args.set or [])
        if args.config:
            cfg = load_config(args.config, sets=sets)
        elif args.preset:
            cfg = parse_config_text(preset_text(args.preset),
                                    origin=f"<preset {args.preset}>",
                                    sets=sets)
        else:
            raise ConfigError("run needs --config FILE or --preset NAME")
        if args.output_dir:
            cfg.output_dir = args.output_dir
        if args.threads:
            cfg.threads = args.threads
        if args.deterministic:
            cfg.deterministic, cfg.threads = True, 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    os.makedirs(cfg.output_dir, exist_ok=True)
    with open(os.path.join(cfg.output_dir, "resolved.ini"), "w",
              encoding="utf-8") as fh:
        fh.write(resolved_text(cfg))

    t0 = time.perf_counter()
    summary = {"study": cfg.study, "status": "ok", "runs": {}}
    code = EXIT_OK
    try:
        runs = run_study(cfg.study, cfg.study_config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonConvergence as exc:
        summary["status"] = "nonconverged"
        summary["error"] = str(exc)
        runs = {}
        code = EXIT_NONCONVERGENCE
        print(f"nonconvergence: {exc}", file=sys.stderr)

    for key, run in sorted(runs.items()):
        _write_csv(os.path.join(cfg.output_dir, _safe_name(key) + ".csv"),
                   run)
        if cfg.snapshots:
            _write_snapshots(cfg.output_dir, key, run, cfg.study)
        summary["runs"][key] = {
            "steps": len(run.newton_iters),
            "final_time": float(run.times[-1]),
            "newton_iterations_total": int(sum(run.newton_iters)),
            "newton_iterations_max": int(max(run.newton_iters, default=0)),
            "final_residual": run.final_residual,
        }
    summary["wall_time_s"] = time.perf_counter() - t0
    with open(os.path.join(cfg.output_dir, "summary.json"), "w",
              encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return code


def _parse_divisions(raw: str):
    try:
        parts = tuple(int(p) for p in raw.replace(",", " ").split())
        if len(parts) != 3:
            raise ValueError
        return parts
    except ValueError:
        raise SystemExit(f"myofem mesh: bad --divisions {raw!r} "
                         "(expected three integers)")


def cmd_mesh(args) -> int:
    from .errors import GeometryInfeasible, ParseError, ValidationError
    from .mesh import (BlockGeometry, GastrocGeometry, GeometrySpec,
                       export_mesh, generate_block, generate_gastroc,
                       import_mesh)

    if args.mesh_cmd == "generate":
        divisions = _parse_divisions(args.divisions)
        try:
            if args.kind == "block":
                spec = GeometrySpec(block=BlockGeometry(), divisions=divisions)
                mesh = generate_block(spec, divisions, degree=args.degree)
            else:
                spec = GeometrySpec(gastroc=GastrocGeometry(),
                                    divisions=divisions)
                mesh = generate_gastroc(spec, divisions, degree=args.degree)
        except (ValidationError, GeometryInfeasible) as exc:
            print(f"mesh error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        export_mesh(mesh, args.out)
        print(f"wrote {args.out}: {len(mesh.nodes)} nodes, "
              f"{len(mesh.cells)} cells")
        return EXIT_OK

    try:
        mesh = import_mesh(args.file)
    except (ParseError, ValidationError) as exc:
        print(f"mesh error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.mesh_cmd == "convert":
        from .vtk_export import export_vtk
        export_vtk(args.out, mesh, title=f"mesh {os.path.basename(args.file)}")
        print(f"wrote {args.out}")
        return EXIT_OK

    # inspect
    regions = {}
    for tag in mesh.region_tag:
        regions[tag] = regions.get(tag, 0) + 1
    vol = mesh.volume()
    print(f"nodes: {len(mesh.nodes)}")
    print(f"cells: {len(mesh.cells)} (degree {mesh.degree})")
    print("regions: " + ", ".join(f"{k}={v}" for k, v in sorted(regions.items())))
    print(f"volume: {vol:.9e} m^3 ({vol * 1e9:.6f} mm^3)")
    print("face sets: " + ", ".join(
        f"{k}({len(v)})" for k, v in sorted(mesh.face_sets.items())))
    if mesh.fibres is not None and mesh.fibres.region:
        for tag, vec in sorted(mesh.fibres.region.items()):
            angle = math.degrees(math.atan2(vec[2], vec[0]))
            print(f"fibres[{tag}]: ({vec[0]:.6f}, {vec[1]:.6f}, {vec[2]:.6f})"
                  f"  x-z angle {angle:.4f} deg")
    print("invariant checks passed")
    return EXIT_OK


def cmd_export(args) -> int:
    from .dynamics import read_state
    from .errors import ParseError, ValidationError
    from .mesh import import_mesh
    from .vtk_export import export_vtk

    try:
        state, activation = read_state(args.state)
        mesh = import_mesh(args.mesh)
        export_vtk(args.out, mesh, state, activation,
                   title=f"checkpoint t={state.t:.6g}")
    except (OSError, ParseError, ValidationError) as exc:
        print(f"export error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_presets(args) -> int:
    from .config import PRESETS, parse_config_text, preset_text, resolved_text
    from .errors import ConfigError

    if not args.name:
        for name in PRESETS:
            print(name)
        return EXIT_OK
    try:
        cfg = parse_config_text(preset_text(args.name),
                                origin=f"<preset {args.name}>")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    sys.stdout.write(resolved_text(cfg))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="myofem",
        description="Finite-element studies of active muscle tissue")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a configured study")
    p_run.add_argument("--config", help="run configuration file")
    p_run.add_argument("--preset", help="run a named preset at its defaults")
    p_run.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                       help="override one configuration value (repeatable)")
    p_run.add_argument("--output-dir", help="artifact directory")
    p_run.add_argument("--threads", type=int, default=0,
                       help="thread count for numerical libraries")
    p_run.add_argument("--deterministic", action="store_true",
                       help="single-threaded, bit-reproducible run")
    p_run.set_defaults(func=cmd_run)

    p_mesh = sub.add_parser("mesh", help="generate, inspect, or convert meshes")
    mesh_sub = p_mesh.add_subparsers(dest="mesh_cmd", required=True)
    m_gen = mesh_sub.add_parser("generate", help="write a mesh preset")
    m_gen.add_argument("--kind", choices=("block", "gastroc"), default="block")
    m_gen.add_argument("--divisions", default="6,2,2")
    m_gen.add_argument("--degree", type=int, choices=(1, 2), default=2)
    m_gen.add_argument("--out", required=True)
    m_ins = mesh_sub.add_parser("inspect", help="report mesh contents")
    m_ins.add_argument("file")
    m_con = mesh_sub.add_parser("convert", help="convert a mesh for viewers")
    m_con.add_argument("file")
    m_con.add_argument("--out", required=True)
    p_mesh.set_defaults(func=cmd_mesh)

    p_exp = sub.add_parser("export", help="export checkpoint fields")
    p_exp.add_argument("--state", required=True, help="checkpoint file")
    p_exp.add_argument("--mesh", required=True, help="mesh file")
    p_exp.add_argument("--out", required=True, help="output field file")
    p_exp.set_defaults(func=cmd_export)

    p_pre = sub.add_parser("presets", help="list presets or show one resolved")
    p_pre.add_argument("name", nargs="?")
    p_pre.set_defaults(func=cmd_presets)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
