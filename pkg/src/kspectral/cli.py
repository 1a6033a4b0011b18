"""Command-line interface.

Exit codes: 0 success, 2 input error, 3 numeric or geometric precondition
failure, 4 acceptance threshold failure (the report is still written).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import io as kio
from .convex import ConvexRegion, numrange_boundary
from .curves import BoundaryCurve, discretize
from .decomposition import (
    Contour, decompose_operator, idempotent_system, orthogonalize, system_report,
)
from .double_layer import elementary_measure, np_matrix, range_margin, reconstruct, semispectral_density
from .errors import InputError, NumericError
from .gleason import GleasonConfig, get_domain, gleason_distance_lb
from .linalg import spectral_norm
from .rational import RationalFunction, SearchConfig, estimate_K, rat_eval_matrix, region_sampler
from .scenarios import Scenario, load_bundled, run

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_THRESHOLD = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _seed(default: int) -> int:
    env = os.environ.get("SDL_SEED")
    if env is None:
        return default
    try:
        return int(env)
    except ValueError as exc:
        raise InputError(f"SDL_SEED must be an integer, got {env!r}") from exc


def _point(text: str) -> complex:
    try:
        parts = [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected re,im but got {text!r}") from exc
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected re,im but got {text!r}")
    return complex(*parts)


def _formats(text: str) -> set:
    fmts = set(text.split(","))
    if not fmts <= {"json", "csv", "svg"}:
        raise argparse.ArgumentTypeError(f"unknown format in {text!r}")
    return fmts


def _outputs(out: Path, names, force: bool) -> list:
    paths = [out / n for n in names]
    if not force:
        clash = [str(p) for p in paths if p.exists()]
        if clash:
            raise InputError(f"refusing to overwrite {', '.join(clash)} (use --force)")
    return paths


def _write_all(files: dict, force: bool) -> None:
    for path, text in files.items():
        kio.atomic_write(path, text, force)


def _matrix(path) -> np.ndarray:
    return kio.matrix_from_json(kio.read_json(path))


# subcommands --------------------------------------------------------------------


def cmd_numrange(a) -> int:
    t = _matrix(a.matrix)
    region = numrange_boundary(t, a.m)
    names = {"json": "region.json", "svg": "region.svg", "csv": "region.csv"}
    paths = dict(zip(sorted(a.format), _outputs(a.out, [names[f] for f in sorted(a.format)], a.force)))
    files = {}
    if "json" in paths:
        files[paths["json"]] = kio.dumps(region.to_json())
    if "svg" in paths:
        files[paths["svg"]] = kio.svg_polyline(region.witness)
    if "csv" in paths:
        rows = [["theta", "support", "re_witness", "im_witness"]]
        rows += [[th, h, w.real, w.imag] for th, h, w in zip(region.angles, region.support, region.witness)]
        files[paths["csv"]] = kio.csv_text(rows)
    _write_all(files, a.force)
    return EXIT_OK


def cmd_kbound(a) -> int:
    t = _matrix(a.matrix)
    (path,) = _outputs(a.out, ["kbound.json"], a.force)
    if a.disc is not None:
        cx, cy, r = a.disc
        region = ConvexRegion.disc(complex(cx, cy), r, a.m)
    else:
        region = numrange_boundary(t, a.m).inflate(a.inflate)
    cfg = SearchConfig.from_json(kio.read_json(a.config)) if a.config else SearchConfig()
    cfg.seed = _seed(cfg.seed if a.seed is None else a.seed)
    est = estimate_K(t, region_sampler(region), cfg)
    doc = {
        "K": est.K,
        "certificate": est.certificate.to_json(),
        "ratios": est.ratios,
        "flagged": est.flagged,
        "config": cfg.to_json(),
        "region": region.to_json(),
    }
    _write_all({path: kio.dumps(doc)}, a.force)
    return EXIT_OK


def cmd_dilation(a) -> int:
    t = _matrix(a.matrix)
    curve = BoundaryCurve.from_json(kio.read_json(a.curve)) if a.curve else BoundaryCurve.disc(0, 1)
    fns = [RationalFunction.from_json(u) for u in kio.read_json(a.functions)] if a.functions else [
        RationalFunction.constant(1.0), RationalFunction.coordinate()]
    paths = _outputs(a.out, ["dilation.json", "grid.csv", "measure.csv"], a.force)
    grid = discretize(curve, a.M)
    op = np_matrix(grid)
    dens = semispectral_density(grid, t, a.margin)
    residuals = [spectral_norm(reconstruct(u, t, grid, op, dens) - rat_eval_matrix(u, t)) for u in fns]
    f = np.zeros(t.shape[0], dtype=complex)
    f[0] = 1.0
    mu = elementary_measure(t, grid, op, f, f, dens)
    doc = {
        "M": grid.M,
        "curve": curve.to_json(),
        "range_margin": range_margin(grid, t),
        "functions": [u.to_json() for u in fns],
        "residuals": residuals,
        "hermitian_defect": dens.hermitian_defect(),
        "min_eigenvalue": dens.min_eigenvalue(),
        "sum_residual": spectral_norm(dens.total() - np.eye(t.shape[0])),
        "measure_total_variation": mu.total_variation(),
    }
    _write_all({
        paths[0]: kio.dumps(doc),
        paths[1]: kio.csv_text(grid.to_csv_rows()),
        paths[2]: kio.csv_text(mu.to_csv_rows()),
    }, a.force)
    return EXIT_OK


def cmd_decompose(a) -> int:
    t = _matrix(a.matrix)
    data = kio.read_json(a.contours)
    if not isinstance(data, list):
        raise InputError("contours file must hold a JSON list")
    contours = [Contour.from_json(c) for c in data]
    paths = _outputs(a.out, ["system.json", "similarity.json", "blocks.json", "hull.json"], a.force)
    osys = orthogonalize(idempotent_system(t, contours))
    dec = decompose_operator(t, osys)
    report = system_report(osys, dec)
    report["S_minus_I"] = spectral_norm(osys.S - np.eye(t.shape[0]))
    blocks = [numrange_boundary(b, a.m) for b in dec.blocks]
    hull = {
        "whole": numrange_boundary(dec.t_similar, a.m).to_json(),
        "blocks": [r.to_json() for r in blocks],
    }
    _write_all({
        paths[0]: kio.dumps(report),
        paths[1]: kio.dumps(kio.matrix_to_json(osys.S)),
        paths[2]: kio.dumps([kio.matrix_to_json(b) for b in dec.blocks]),
        paths[3]: kio.dumps(hull),
    }, a.force)
    return EXIT_OK


def cmd_gleason(a) -> int:
    domain = get_domain(a.domain)
    (path,) = _outputs(a.out, ["gleason.json"], a.force)
    cfg = GleasonConfig(degree=a.degree, seed=_seed(a.seed if a.seed is not None else 0))
    est = gleason_distance_lb(a.x1, a.x2, domain, cfg)
    _write_all({path: kio.dumps({**est.to_json(), "domain": domain.id, "config": cfg.to_json()})}, a.force)
    return EXIT_OK


def cmd_scenario(a) -> int:
    env = os.environ.get("SDL_SEED")
    override = _seed(0) if env is not None else None
    if a.bundled:
        s = load_bundled(a.bundled, override)
    elif a.file:
        s = Scenario.from_json(kio.read_json(a.file), override)
    else:
        raise InputError("give a scenario file or --bundled NAME")
    _outputs(a.out, ["report.json", "report.csv"], a.force)
    report = run(s, workers=a.workers)
    report.write(a.out, force=a.force)
    for c in report.checks:
        status = "pass" if c.passed else "FAIL"
        print(f"{c.criterion} {c.metric} {c.value} {c.op} {c.threshold}: {status}")
    for e in report.errors:
        print(f"trial {e['trial']}: {e['error']}: {e['message']}")
    return EXIT_OK if report.passed else EXIT_THRESHOLD


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kspectral", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--out", type=Path, required=True, help="output directory")
        sp.add_argument("--force", action="store_true", help="overwrite existing outputs")

    sp = sub.add_parser("numrange", help="support-function samples and SVG of W(T)")
    sp.add_argument("--matrix", required=True)
    sp.add_argument("--m", type=int, default=720)
    sp.add_argument("--format", type=_formats, default={"json", "svg"})
    common(sp)
    sp.set_defaults(func=cmd_numrange)

    sp = sub.add_parser("kbound", help="estimate the spectral constant K")
    sp.add_argument("--matrix", required=True)
    sp.add_argument("--m", type=int, default=720)
    sp.add_argument("--inflate", type=float, default=0.05)
    sp.add_argument("--disc", type=float, nargs=3, metavar=("CX", "CY", "R"))
    sp.add_argument("--config", help="search config JSON")
    sp.add_argument("--seed", type=int)
    common(sp)
    sp.set_defaults(func=cmd_kbound)

    sp = sub.add_parser("dilation", help="double-layer reconstruction and semispectral measure")
    sp.add_argument("--matrix", required=True)
    sp.add_argument("--curve", help="boundary curve JSON (default: unit circle)")
    sp.add_argument("--functions", help="JSON list of rational functions")
    sp.add_argument("--M", type=int, default=512)
    sp.add_argument("--margin", type=float)
    common(sp)
    sp.set_defaults(func=cmd_dilation)

    sp = sub.add_parser("decompose", help="Riesz decomposition with orthogonalizing similarity")
    sp.add_argument("--matrix", required=True)
    sp.add_argument("--contours", required=True)
    sp.add_argument("--m", type=int, default=720)
    common(sp)
    sp.set_defaults(func=cmd_decompose)

    sp = sub.add_parser("gleason", help="lower bound for the Gleason distance")
    sp.add_argument("--domain", required=True)
    sp.add_argument("--x1", type=_point, required=True)
    sp.add_argument("--x2", type=_point, required=True)
    sp.add_argument("--degree", type=int, default=16)
    sp.add_argument("--seed", type=int)
    common(sp)
    sp.set_defaults(func=cmd_gleason)

    sp = sub.add_parser("scenario", help="run a scenario and write its report")
    sp.add_argument("file", nargs="?")
    sp.add_argument("--bundled", help="name of a bundled scenario")
    sp.add_argument("--workers", type=int, default=1)
    common(sp)
    sp.set_defaults(func=cmd_scenario)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, FileExistsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
