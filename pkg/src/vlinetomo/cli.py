"""Command line interface.

Subcommands: phantom | forward | invert | metrics | render | selftest.

Shared numeric settings come from built-in defaults, optionally overridden
by a JSON config file (``--config``, kebab-case or snake_case keys) and then
by explicit command-line flags.  Exit codes: 0 success, 2 usage error,
3 malformed data file, 4 structurally degenerate inversion.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DataFormatError, DegenerateDataError
from .grids import GridSpec, ScalarGrid, SymmetricTensorField
from .inversion import (DEFAULT_N_MAX, WeightPair,
                        invert_weighted_vline, reconstruct_2tensor_componentwise,
                        reconstruct_decomposition, reconstruct_from_moments,
                        reconstruct_vector_componentwise)
from .io import (GRID_MAGIC, SINO_MAGIC, read_grid, read_sinogram, write_grid,
                 write_pgm, write_sinogram)
from .kernels import HAVE_COMPILED
from .metrics import metrics_report
from .operators import synthesize_from_potentials
from .phantoms import PHANTOM_KINDS, make_phantom
from .selftest import SelftestConfig, run_selftest
from .vforward import (VGridSpec, vline_mixed, vline_mixed_via_radon,
                       vline_moment, vline_weighted_scalar,
                       vline_weighted_via_radon)

DEFAULTS = {
    "nx": 256, "ny": 256,
    "n_phi": 360, "n_psi": 180, "s_min": 0.01, "s_max": 0.99,
    "n_max": DEFAULT_N_MAX, "step_factor": 0.5, "method": "perry",
    "seed": 0,
}


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataFormatError(f"config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise DataFormatError(f"config {path}: expected a JSON object")
    cfg = {k.replace("-", "_"): v for k, v in raw.items()}
    unknown = set(cfg) - set(DEFAULTS)
    if unknown:
        raise DataFormatError(f"config {path}: unknown keys {sorted(unknown)}")
    return cfg


def _resolve(args, config: dict):
    """Fill every None-valued shared setting from config, then defaults."""
    for key, default in DEFAULTS.items():
        if getattr(args, key, None) is None and hasattr(args, key):
            setattr(args, key, config.get(key, default))
    return args


def _add_shared(p: argparse.ArgumentParser, keys):
    types = {"nx": int, "ny": int, "n_phi": int, "n_psi": int,
             "s_min": float, "s_max": float, "n_max": int,
             "step_factor": float, "method": str, "seed": int}
    for key in keys:
        kw = {"type": types[key], "default": None,
              "help": f"default {DEFAULTS[key]}"}
        if key == "method":
            kw["choices"] = ["perry", "cormack"]
        p.add_argument("--" + key.replace("_", "-"), dest=key, **kw)


def _vgrid(args) -> VGridSpec:
    return VGridSpec(args.n_phi, args.n_psi, args.s_min, args.s_max)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vlinetomo",
        description="Forward and inverse generalized V-line transforms of "
                    "symmetric tensor fields on the unit disk.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="JSON file overriding the built-in "
                                         "numeric defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="generate a reproducible test field")
    p.add_argument("--kind", choices=PHANTOM_KINDS, default="gaussian-bumps")
    p.add_argument("--order", "-m", type=int, default=1,
                   help="tensor order m (default 1)")
    p.add_argument("--out", required=True, help="output .vgrid path")
    p.add_argument("--potentials-prefix",
                   help="also write each potential chi_j to PREFIX_chi<j>.vgrid")
    _add_shared(p, ["nx", "ny", "seed"])

    p = sub.add_parser("forward", help="compute a V-line transform of a field")
    p.add_argument("--field", required=True, help="input .vgrid")
    p.add_argument("--transform", required=True,
                   choices=["Vw", "L", "T", "M", "Lk", "Tk"])
    p.add_argument("--ell", type=int, help="perpendicular contractions (M)")
    p.add_argument("--k", type=int, help="moment order (Lk/Tk)")
    p.add_argument("--c1", type=float, default=1.0, help="u-branch weight (Vw)")
    p.add_argument("--c2", type=float, default=1.0, help="v-branch weight (Vw)")
    p.add_argument("--out", required=True, help="output .vsino path")
    p.add_argument("--dual-path", action="store_true",
                   help="also compute the Radon-composition path, write it "
                        "next to --out and report the max relative deviation")
    _add_shared(p, ["n_phi", "n_psi", "s_min", "s_max", "step_factor"])

    p = sub.add_parser("invert", help="reconstruct a field from V-line data")
    p.add_argument("--pipeline", required=True,
                   choices=["weighted", "decomposition", "componentwise",
                            "moments"])
    p.add_argument("--data", required=True, nargs="+",
                   help="input .vsino file(s); roles are read from headers")
    p.add_argument("--kind", choices=["longitudinal", "transverse"],
                   default="longitudinal", help="moment-chain kind")
    p.add_argument("--c1", type=float, help="override u-branch weight (weighted)")
    p.add_argument("--c2", type=float, help="override v-branch weight (weighted)")
    p.add_argument("--out", required=True, help="output .vgrid path")
    p.add_argument("--report", help="write a JSON report (masks, residuals)")
    _add_shared(p, ["nx", "ny", "n_max", "method", "step_factor"])

    p = sub.add_parser("metrics", help="compare a reconstruction to a reference")
    p.add_argument("--recon", required=True, help=".vgrid under test")
    p.add_argument("--reference", required=True, help="reference .vgrid")
    p.add_argument("--out", help="write the JSON report here as well")

    p = sub.add_parser("render", help="render a .vgrid/.vsino to 8-bit PGM")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True,
                   help="output .pgm (tensor fields get _c<p> suffixes)")

    p = sub.add_parser("selftest", help="run the built-in verification battery")
    p.add_argument("--flip-q-sign", action="store_true",
                   help="inject a known sign error (the battery must fail)")
    _add_shared(p, ["nx", "ny", "n_phi", "n_psi", "n_max", "seed", "method"])
    return parser


# ---------------------------------------------------------------------------
# Subcommand bodies

def _cmd_phantom(args) -> int:
    pots = make_phantom(args.kind, args.order, args.seed,
                        GridSpec(args.nx, args.ny))
    field = synthesize_from_potentials(pots)
    write_grid(args.out, field)
    if args.potentials_prefix:
        for j, chi in enumerate(pots.potentials):
            write_grid(f"{args.potentials_prefix}_chi{j}.vgrid", chi)
    print(json.dumps({"kind": args.kind, "order": args.order,
                      "seed": args.seed, "out": args.out}))
    return 0


def _forward_one(field, args, via_radon: bool):
    tr = args.transform
    if tr == "Vw":
        if not isinstance(field, ScalarGrid):
            raise DataFormatError("Vw requires a scalar .vgrid")
        if via_radon:
            return vline_weighted_via_radon(field, args.c1, args.c2,
                                            _vgrid(args))
        return vline_weighted_scalar(field, args.c1, args.c2, _vgrid(args),
                                     args.step_factor)
    if isinstance(field, ScalarGrid):
        field = SymmetricTensorField.from_scalar(field)
    m = field.order
    if tr in ("L", "T", "M"):
        ell = {"L": 0, "T": m, "M": args.ell}[tr]
        if ell is None:
            raise DataFormatError("transform M requires --ell")
        if via_radon:
            return vline_mixed_via_radon(field, ell, _vgrid(args))
        return vline_mixed(field, ell, _vgrid(args), args.step_factor)
    if args.k is None:
        raise DataFormatError(f"transform {tr} requires --k")
    if via_radon:
        raise DataFormatError("moment transforms have no Radon-composition path")
    kind = "longitudinal" if tr == "Lk" else "transverse"
    return vline_moment(field, kind, args.k, _vgrid(args), args.step_factor)


def _cmd_forward(args) -> int:
    field = read_grid(args.field)
    sino = _forward_one(field, args, via_radon=False)
    write_sinogram(args.out, sino)
    info = {"transform": args.transform, "out": args.out}
    if args.dual_path:
        alt = _forward_one(field, args, via_radon=True)
        out = Path(args.out)
        alt_path = str(out.with_name(out.stem + ".radon" + out.suffix))
        write_sinogram(alt_path, alt)
        scale = float(np.max(np.abs(sino.values))) or 1.0
        info["radon_out"] = alt_path
        info["max_relative_deviation"] = float(
            np.max(np.abs(sino.values - alt.values)) / scale)
    print(json.dumps(info))
    return 0


def _cmd_invert(args) -> int:
    sinos = [read_sinogram(p) for p in args.data]
    spec = GridSpec(args.nx, args.ny)
    report = {"pipeline": args.pipeline, "method": args.method,
              "n_max": args.n_max, "out": args.out}

    if args.pipeline == "weighted":
        if len(sinos) != 1:
            raise DataFormatError("weighted inversion takes exactly one sinogram")
        d = sinos[0]
        c1 = args.c1 if args.c1 is not None else d.c1
        c2 = args.c2 if args.c2 is not None else d.c2
        grid, mask = invert_weighted_vline(d, WeightPair(c1, c2), spec,
                                           args.method, args.n_max)
        write_grid(args.out, grid)
        report["mask"] = mask.to_json()

    elif args.pipeline == "decomposition":
        m = sinos[0].order
        data = {}
        for d in sinos:
            if d.order != m:
                raise DataFormatError("mixed tensor orders in --data")
            ell = {"L": 0, "T": m}.get(d.transform, d.ell)
            if d.transform not in ("L", "T", "M") or ell in data:
                raise DataFormatError(f"unexpected/duplicate sinogram "
                                      f"tagged {d.transform} ell={ell}")
            data[ell] = d
        _, field, masks = reconstruct_decomposition(data, m, spec,
                                                    args.method, args.n_max)
        write_grid(args.out, field)
        report["order"] = m
        report["masks"] = {str(ell): mk.to_json() for ell, mk in masks.items()}

    elif args.pipeline == "componentwise":
        by_tag = {d.transform: d for d in sinos}
        m = sinos[0].order
        if m == 1 and set(by_tag) == {"L", "T"}:
            field, mask = reconstruct_vector_componentwise(
                by_tag["L"], by_tag["T"], spec,
                method=args.method, n_max=args.n_max)
        elif m == 2 and set(by_tag) == {"L", "T", "M"}:
            field, mask = reconstruct_2tensor_componentwise(
                by_tag["L"], by_tag["T"], by_tag["M"], spec,
                args.method, args.n_max)
        else:
            raise DataFormatError(
                "componentwise inversion needs L,T (m=1) or L,T,M (m=2) data")
        write_grid(args.out, field)
        report["order"] = m
        report["mask"] = mask.to_json()

    else:  # moments
        m = sinos[0].order
        data = {}
        for d in sinos:
            if d.order != m or d.k in data:
                raise DataFormatError("inconsistent/duplicate moment sinograms")
            data[d.k] = d
        _, field, masks, residuals = reconstruct_from_moments(
            data, m, spec, args.kind, args.method, args.n_max,
            args.step_factor)
        write_grid(args.out, field)
        report["order"] = m
        report["kind"] = args.kind
        report["masks"] = {str(k): mk.to_json() for k, mk in masks.items()}
        report["residuals"] = {str(k): r for k, r in residuals.items()}

    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=2))
    print(json.dumps(report))
    return 0


def _cmd_metrics(args) -> int:
    recon, ref = read_grid(args.recon), read_grid(args.reference)
    if type(recon) is not type(ref):
        raise DataFormatError("recon and reference are of different kinds")
    rep = metrics_report(recon, ref)
    text = json.dumps(rep, indent=2)
    if args.out:
        Path(args.out).write_text(text)
    print(text)
    return 0


def _cmd_render(args) -> int:
    magic = Path(args.input).open("rb").read(4)
    if magic == SINO_MAGIC:
        write_pgm(args.out, read_sinogram(args.input).values)
        written = [args.out]
    elif magic == GRID_MAGIC:
        obj = read_grid(args.input)
        if isinstance(obj, ScalarGrid):
            write_pgm(args.out, obj.values)
            written = [args.out]
        else:
            out = Path(args.out)
            written = []
            for p in range(obj.order + 1):
                path = str(out.with_name(out.stem + f"_c{p}" + out.suffix))
                write_pgm(path, obj.components[p])
                written.append(path)
    else:
        raise DataFormatError(f"{args.input}: not a .vgrid or .vsino file")
    print(json.dumps({"written": written}))
    return 0


def _cmd_selftest(args) -> int:
    cfg = SelftestConfig(nx=args.nx, ny=args.ny, n_phi=args.n_phi,
                         n_psi=args.n_psi, n_max=args.n_max, seed=args.seed,
                         backend=args.method, flip_q_sign=args.flip_q_sign)
    print(f"kernel backend: {'compiled' if HAVE_COMPILED else 'pure python'}")
    results = run_selftest(cfg)
    failed = 0
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        failed += not r.passed
        print(f"{status}  {r.name:<22} {r.detail}  [{r.seconds:.1f}s]")
    print(f"{len(results) - failed}/{len(results)} suites passed")
    return 0 if failed == 0 else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _resolve(args, _load_config(args.config))
        handler = {"phantom": _cmd_phantom, "forward": _cmd_forward,
                   "invert": _cmd_invert, "metrics": _cmd_metrics,
                   "render": _cmd_render, "selftest": _cmd_selftest}
        return handler[args.command](args)
    except DataFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except DegenerateDataError as exc:
        print(f"error: degenerate data: {exc}", file=sys.stderr)
        return 4
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
