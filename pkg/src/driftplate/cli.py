"""Command-line entry point: ``driftplate {run,converge,identities,oracle,list-geometries}``.

Exit codes: 0 all checks pass, 1 usage or configuration error, 2 a check
failed or the pipeline could not certify its result.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import oracles
from .catalogue import build, describe
from .config import load, shipped_configs
from .errors import ConfigError, DriftPlateError
from .geometry import DriftSpec, identity_suite, interior_samples, random_polynomial_probe, translator_residual
from .pipeline import (IDENTITY_SEED, SCHEMA_VERSION, convergence_plot, converge, make_domain, run,
                       write_report)

OUT_ENV = "DRIFTPLATE_OUT"
DEFAULT_OUT = "driftplate_reports"
EXIT_OK, EXIT_USAGE, EXIT_CHECK = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _out_dir(args, cfg=None) -> Path:
    if args.out:
        return Path(args.out)
    if cfg is not None and cfg.output.dir:
        return Path(cfg.output.dir)
    return Path(os.environ.get(OUT_ENV, DEFAULT_OUT))


def _levels(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise ConfigError(f"--levels expects comma-separated integers, got {text!r}") from None


def cmd_run(args) -> int:
    cfg = load(args.config)
    if args.deterministic:
        cfg = cfg.with_output(deterministic=True)
    report = run(cfg)
    paths = write_report(report, _out_dir(args, cfg), cfg.name)
    print(f"{cfg.name}: Lambda = {np.array2string(np.asarray(report.spectrum['eigenvalues']), precision=10)}")
    print(report.table())
    print(f"report: {paths[0]}")
    return EXIT_OK if report.passed else EXIT_CHECK


def cmd_converge(args) -> int:
    cfg = load(args.config)
    if not args.levels:
        raise ConfigError("converge needs --levels, e.g. --levels 25,50,100,200")
    table = converge(cfg, _levels(args.levels))
    out = _out_dir(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{cfg.name}_convergence.json").write_text(table.to_json())
    (out / f"{cfg.name}_convergence.csv").write_text(table.csv())
    print(table.table())
    if args.plot:
        print(f"plot: {convergence_plot(table, out / f'{cfg.name}_convergence.svg')}")
    return EXIT_OK if table.monotone else EXIT_CHECK


def cmd_identities(args) -> int:
    cfg = load(args.config)
    imm = build(cfg.geometry.name, cfg.geometry.params)
    drift = DriftSpec(np.asarray(cfg.drift.nu, dtype=float), unit_flag=cfg.drift.unit)
    dom = make_domain(cfg, imm)
    rng = np.random.default_rng(IDENTITY_SEED)
    pts = interior_samples(dom.box, cfg.checks.identity_samples, rng)
    probes = [random_polynomial_probe(rng, imm.intrinsic_dim) for _ in range(3)]
    rep = identity_suite(imm, drift, pts, probes)
    result = rep.as_dict()
    ok = rep.worst <= cfg.checks.identity_tol
    if drift.unit_flag:
        result["translator_residual"] = translator_residual(imm, drift, pts)
    for k, v in result.items():
        print(f"{k:<28}{v:.3g}" if isinstance(v, float) else f"{k:<28}{v}")
    print("PASS" if ok else "FAIL")
    if args.out or os.environ.get(OUT_ENV):
        out = _out_dir(args, cfg)
        out.mkdir(parents=True, exist_ok=True)
        payload = {"schema_version": SCHEMA_VERSION, "identities": result, "passed": ok}
        (out / f"{cfg.name}_identities.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_oracle(args) -> int:
    if args.name == "beam":
        vals = oracles.beam_reference(args.count)
    elif args.name == "conjugation":
        vals = oracles.conjugation_oracle(args.length, args.b, args.count).eigenvalues
    else:
        nu = [float(x) for x in args.nu.split(",")]
        vals = oracles.fd_plate_oracle(args.width, args.height, nu, args.count).eigenvalues
    for i, v in enumerate(vals, 1):
        print(f"{i:>3} {v:.12g}")
    return EXIT_OK


def cmd_list(args) -> int:
    for name, doc in describe():
        print(f"{name:<20}{doc}")
    if args.configs:
        print()
        for name in shipped_configs():
            print(f"config  {name}")
    return EXIT_OK


def parser() -> argparse.ArgumentParser:
    p = _Parser(prog="driftplate", description="Clamped drift-plate eigenvalue laboratory.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, plot=False):
        sp.add_argument("--config", required=True, help="TOML file or shipped config name")
        sp.add_argument("--out", help=f"output directory (default: config, then ${OUT_ENV}, then ./{DEFAULT_OUT})")
        sp.add_argument("--deterministic", action="store_true", help="omit timings so reports are byte-stable")
        if plot:
            sp.add_argument("--plot", action="store_true", help="write an SVG error plot")

    r = sub.add_parser("run", help="assemble, solve and check one experiment")
    common(r)
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("converge", help="refinement study on nested meshes")
    common(c, plot=True)
    c.add_argument("--levels", help="comma-separated element counts, each a multiple of the previous")
    c.set_defaults(func=cmd_converge)

    i = sub.add_parser("identities", help="coordinate-function identities at random interior points")
    common(i)
    i.set_defaults(func=cmd_identities)

    o = sub.add_parser("oracle", help="reference spectra independent of the FEM path")
    o.add_argument("name", choices=["beam", "conjugation", "plate"])
    o.add_argument("count", type=int)
    o.add_argument("--length", type=float, default=1.0)
    o.add_argument("--b", type=float, default=0.0, help="drift magnitude (conjugation)")
    o.add_argument("--width", type=float, default=1.0)
    o.add_argument("--height", type=float, default=1.0)
    o.add_argument("--nu", default="0,0", help="tangential drift 'a,b' (plate)")
    o.set_defaults(func=cmd_oracle)

    g = sub.add_parser("list-geometries", help="catalogue entries")
    g.add_argument("--configs", action="store_true", help="also list shipped configs")
    g.set_defaults(func=cmd_list)
    return p


def main(argv=None) -> int:
    args = parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DriftPlateError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
