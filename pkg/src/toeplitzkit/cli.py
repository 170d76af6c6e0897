"""Command-line experiment runner.

    toeplitzkit run <experiment> [--config FILE] [flags]
    toeplitzkit list-symbols
    toeplitzkit describe <experiment>
    toeplitzkit render REPORT.json OUT.svg [--log-y]

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O.
"""

from __future__ import annotations

import argparse
import configparser
import sys
import warnings
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ParameterError, ToeplitzKitError
from .reports import atomic_write, dumps, load_report, render_svg, report_series

EXPERIMENTS = {
    "fock-intrep": "Riemann-sum kernel representation on the Fock space; relative error versus r.",
    "bergman-intrep": "Double-lattice kernel representation on the Bergman disc; relative error versus r.",
    "localization": "Off-diagonal kernel mass E(r) (and E'(r) on the ball) of a Toeplitz operator.",
    "a-l-decay": "Bump-Toeplitz approximant A_l against its lattice rank-one sum, error versus l.",
    "compact-synth": "C0-symbol Toeplitz synthesis of a sum of kernel projections.",
    "berezin-product": "Berezin transform diagnostics of a product of Toeplitz operators.",
    "lattice-partition": "Greedy partition of a separated lattice and the pushforward separation check.",
}

# defaults per experiment; anything absent falls back to COMMON
COMMON = {"t": 1.0, "p": 2.0, "n": 1, "seed": 0}
DEFAULTS = {
    "fock-intrep": {"N": 24, "symbol": "gauss", "operators": "toeplitz,rank-one,square", "r_grid": "0.5:4:0.5", "h": 0.35, "R_z": 5.0},
    "bergman-intrep": {
        "N": 20,
        "N_inner": 80,
        "symbol": "radial-poly",
        "operators": "toeplitz",
        "r_grid": "0.5:2.5:0.5",
        "rho_max": 0.99,
        "z": "0.3",
    },
    "localization": {"space": "fock", "N": 24, "symbol": "one", "r_grid": "0:3:1", "z": "0"},
    "a-l-decay": {"N": 20, "symbol": "radial-defect", "l_grid": "0.4,0.2,0.1,0.05", "delta": 0.7, "radius": 1.5, "z": "0.3"},
    "compact-synth": {"N": 24, "l": 0.05, "targets": "0:1"},
    "berezin-product": {"space": "bergman", "N": 24, "symbols": "c0-bump,c0-bump"},
    "lattice-partition": {"delta": 0.7, "r": 1.5, "rho": 0.5, "points": 40, "radius": 2.0},
}


@dataclass
class ExperimentConfig:
    experiment: str
    t: float | None = None
    p: float | None = None
    n: int | None = None
    N: int | None = None
    N_inner: int | None = None
    space: str | None = None
    symbol: str | None = None
    symbols: str | None = None
    operators: str | None = None
    r_grid: str | None = None
    l_grid: str | None = None
    h: float | None = None
    R_z: float | None = None
    rho_max: float | None = None
    extent: float | None = None
    delta: float | None = None
    radius: float | None = None
    r: float | None = None
    rho: float | None = None
    points: int | None = None
    z: str | None = None
    l: float | None = None
    targets: str | None = None
    fd_step: float | None = None
    seed: int | None = None

    def resolved(self) -> dict:
        if self.experiment not in EXPERIMENTS:
            raise ParameterError(f"unknown experiment {self.experiment!r}")
        out = dict(COMMON)
        out.update(DEFAULTS[self.experiment])
        for f in fields(self):
            v = getattr(self, f.name)
            if v is not None:
                out[f.name] = v
        return out


_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(key: str, value: str):
    kind = _TYPES.get(key)
    if kind is None:
        raise ParameterError(f"unknown config key {key!r}")
    try:
        if "int" in kind:
            return int(value)
        if "float" in kind:
            return float(value)
    except ValueError:
        raise ParameterError(f"config key {key!r}: cannot parse {value!r}") from None
    return value


def read_config_file(path) -> dict:
    """key = value lines, optionally under [section] headers (sections are merged)."""
    text = Path(path).read_text(encoding="utf-8")
    if not text.lstrip().startswith("["):
        text = "[run]\n" + text
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ParameterError(f"{path}: {exc}") from None
    out = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            key = key.replace("-", "_")
            out[key] = _coerce(key, value.strip())
    return out


def parse_grid(text: str, name: str) -> list[float]:
    """'a:b:step' (inclusive) or a comma list; must be nonempty."""
    text = str(text).strip()
    if not text:
        raise ParameterError(f"{name} is empty")
    try:
        if ":" in text:
            a, b, step = (float(x) for x in text.split(":"))
            if step <= 0 or b < a:
                raise ParameterError(f"{name}: need a <= b and a positive step")
            count = int(np.floor((b - a) / step + 1e-9)) + 1
            vals = [round(a + k * step, 12) for k in range(count)]
        else:
            vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ParameterError(f"{name}: cannot parse {text!r}") from None
    if not vals:
        raise ParameterError(f"{name} is empty")
    return vals


def _point(text: str) -> np.ndarray:
    try:
        return np.array([complex(s.strip().replace(" ", "")) for s in str(text).split(",")])
    except ValueError:
        raise ParameterError(f"cannot parse point {text!r}") from None


def _positive(cfg: dict, *keys):
    for k in keys:
        if not cfg[k] > 0:
            raise ParameterError(f"{k} must be positive")


# ----------------------------------------------------------------- experiments


def _fock_params(cfg):
    from .fock import FockParams

    return FockParams(t=cfg["t"], p=cfg["p"], n=cfg["n"], N=cfg["N"])


def _bergman_params(cfg, N=None):
    from .bergman import BergmanParams

    return BergmanParams(p=cfg["p"], n=cfg["n"], N=cfg["N"] if N is None else N)


def _operator(kind: str, symbol, params, z):
    from .operators import rank_one, toeplitz_matrix

    if kind == "toeplitz":
        return toeplitz_matrix(symbol, params)
    if kind == "rank-one":
        return rank_one(z, z, params)
    if kind == "square":
        T = toeplitz_matrix(symbol, params)
        return T @ T
    raise ParameterError(f"unknown operator kind {kind!r} (toeplitz, rank-one, square)")


def _series(report, label):
    doc = report.to_dict()
    doc["label"] = label
    return doc


def run_fock_intrep(cfg):
    from .representation import fock_intrep_scan
    from .symbols import make_symbol

    params = _fock_params(cfg)
    grid = parse_grid(cfg["r_grid"], "r_grid")
    _positive(cfg, "h", "R_z")
    sym = make_symbol(cfg["symbol"])
    zero = np.zeros(params.n, complex)
    series = []
    for kind in _split(cfg["operators"]):
        A = _operator(kind, sym, params, zero)
        series.append(_series(fock_intrep_scan(A, grid, cfg["h"], cfg["R_z"]), kind))
    return {"series": series}


def run_bergman_intrep(cfg):
    from .representation import bergman_intrep_scan, ring_lattice
    from .symbols import make_symbol

    grid = parse_grid(cfg["r_grid"], "r_grid")
    if not 0 < cfg["rho_max"] < 1:
        raise ParameterError("rho_max must lie in (0, 1)")
    outer = _bergman_params(cfg)
    inner = _bergman_params(cfg, max(cfg["N_inner"], cfg["N"]))
    sym = make_symbol(cfg["symbol"])
    lattice = ring_lattice(rho_max=cfg["rho_max"], breaks=grid)
    z = _point(cfg["z"])
    series = []
    for kind in _split(cfg["operators"]):
        T = _operator(kind, sym, inner, z)
        series.append(_series(bergman_intrep_scan(T, grid, outer, lattice=lattice), kind))
    return {"series": series}


def run_localization(cfg):
    from .operators import identity, localization_scan, toeplitz_matrix
    from .symbols import make_symbol

    grid = parse_grid(cfg["r_grid"], "r_grid")
    space = cfg["space"]
    if space == "fock":
        params = _fock_params(cfg)
    elif space == "bergman":
        params = _bergman_params(cfg)
    else:
        raise ParameterError("space must be fock or bergman")
    if cfg["symbol"] == "one":
        T = identity(params)
    else:
        T = toeplitz_matrix(make_symbol(cfg["symbol"]), params)
    rep = localization_scan(T, params, grid, _point(cfg["z"]).reshape(-1, params.n), extent=cfg.get("extent"))
    return {"series": [rep.to_dict()]}


def run_a_l_decay(cfg):
    from .geometry import build_lattice
    from .representation import A_l_scan
    from .symbols import make_symbol

    grid = parse_grid(cfg["l_grid"], "l_grid")
    if any(not 0 < l < 1 for l in grid):
        raise ParameterError("l values must lie in (0, 1)")
    params = _bergman_params(cfg)
    lattice = build_lattice("bergman", cfg["delta"], cfg["radius"], seed=cfg["seed"], n=params.n)
    rep = A_l_scan(make_symbol(cfg["symbol"]), lattice, _point(cfg["z"]), grid, params)
    half = [b / a for a, b in zip(rep.errors, rep.errors[1:])]
    doc = _series(rep, cfg["symbol"])
    return {"series": [doc], "halving_ratios": half, "lattice_points": len(lattice)}


def run_compact_synth(cfg):
    from .representation import c0_decay_ratio, synthesize_compact

    params = _bergman_params(cfg)
    targets = []
    for item in _split(cfg["targets"], ";"):
        try:
            x, c = item.split(":")
            targets.append((_point(x), _point(x), complex(c)))
        except ValueError:
            raise ParameterError(f"target {item!r}: expected 'x:coefficient'") from None
    comb = synthesize_compact(targets, cfg["l"], params)
    return {"combination": comb.to_dict(), "error": comb.meta["error"], "shell_ratio": c0_decay_ratio(comb)}


def run_berezin_product(cfg):
    from .representation import product_berezin_diagnostics
    from .symbols import make_symbol

    params = _fock_params(cfg) if cfg["space"] == "fock" else _bergman_params(cfg)
    syms = [make_symbol(s) for s in _split(cfg["symbols"])]
    return {"diagnostics": product_berezin_diagnostics(syms, params)}


def run_lattice_partition(cfg):
    from .geometry import (
        build_lattice,
        disk_grid,
        partition_class_bound,
        partition_radius,
        partition_separated,
        pushforward_separated,
    )

    _positive(cfg, "delta", "r", "radius", "points")
    if not 0 < cfg["rho"] < 1:
        raise ParameterError("rho must lie in (0, 1)")
    lat = build_lattice("bergman", cfg["delta"], cfg["radius"], seed=cfg["seed"], max_points=cfg["points"])
    parted = partition_separated(lat, cfg["r"], cfg["rho"])
    grid = disk_grid(cfg["rho"])
    R = partition_radius(cfg["r"], cfg["rho"])
    bound = partition_class_bound(R, cfg["delta"], 1)
    ok = pushforward_separated(parted, cfg["r"], grid)
    return {
        "points": len(lat),
        "min_separation": lat.min_separation(),
        "classes": parted.num_classes,
        "class_bound": bound,
        "R": R,
        "separated": bool(ok),
        "within_bound": parted.num_classes <= bound,
        "lattice": parted.to_dict(),
    }


RUNNERS = {
    "fock-intrep": run_fock_intrep,
    "bergman-intrep": run_bergman_intrep,
    "localization": run_localization,
    "a-l-decay": run_a_l_decay,
    "compact-synth": run_compact_synth,
    "berezin-product": run_berezin_product,
    "lattice-partition": run_lattice_partition,
}


def _split(text: str, sep: str = ","):
    return [s.strip() for s in str(text).split(sep) if s.strip()]


def run(config: ExperimentConfig) -> dict:
    cfg = config.resolved()
    body = RUNNERS[config.experiment](cfg)
    doc = {"schema_version": 1, "kind": "experiment", "experiment": config.experiment, "version": __version__, "config": cfg}
    doc.update(body)
    return doc


def _csv_for(doc: dict) -> str | None:
    rows = []
    for s in doc.get("series", []):
        if s.get("kind") == "convergence":
            label = s.get("label", "")
            rows += [(label, g, e, s["norm_protocol"]) for g, e in zip(s["grid"], s["errors"])]
        elif s.get("kind") == "localization":
            ep = s["Eprime"] or [None] * len(s["r"])
            lines = ["r,E,Eprime"] + [f"{r!r},{e!r},{'' if p is None else repr(p)}" for r, e, p in zip(s["r"], s["E"], ep)]
            return "\n".join(lines) + "\n"
    if not rows:
        return None
    param = doc["series"][0]["param"]
    return "\n".join([f"series,{param},error,norm_protocol"] + [f"{a},{b!r},{c!r},{d}" for a, b, c, d in rows]) + "\n"


# ------------------------------------------------------------------ argparse


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="toeplitzkit", description="Toeplitz operator experiments on Fock and Bergman spaces.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment and write its report")
    r.add_argument("experiment")
    r.add_argument("--config", help="key = value file; flags override it")
    r.add_argument("--out", default="reports", help="output directory (default: reports)")
    r.add_argument("--csv", action="store_true", help="also write a CSV table")
    r.add_argument("--plot", action="store_true", help="also write an SVG chart")
    r.add_argument("--log-y", action="store_true", help="log scale for the chart")
    for f in fields(ExperimentConfig):
        if f.name == "experiment":
            continue
        flag = "--" + f.name.replace("_", "-")
        kind = int if "int" in f.type else float if "float" in f.type else str
        r.add_argument(flag, dest=f.name, type=kind, default=None)
    sub.add_parser("list-symbols", help="print the symbol registry as JSON")
    d = sub.add_parser("describe", help="describe an experiment")
    d.add_argument("experiment")
    p = sub.add_parser("render", help="render a report as an SVG chart")
    p.add_argument("report")
    p.add_argument("output")
    p.add_argument("--log-y", action="store_true")
    return ap


def _cmd_run(args) -> int:
    if args.experiment not in EXPERIMENTS:
        raise ParameterError(f"unknown experiment {args.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    values = read_config_file(args.config) if args.config else {}
    values.pop("experiment", None)
    for f in fields(ExperimentConfig):
        v = getattr(args, f.name, None) if f.name != "experiment" else None
        if v is not None:
            values[f.name] = v
    config = ExperimentConfig(args.experiment, **values)
    doc = run(config)
    out = Path(args.out)
    target = atomic_write(out / f"{args.experiment}.json", dumps(doc))
    print(target)
    if args.csv:
        table = _csv_for(doc)
        if table is not None:
            print(atomic_write(out / f"{args.experiment}.csv", table))
    if args.plot:
        try:
            svg = render_svg(report_series(doc), args.log_y, args.experiment)
            print(atomic_write(out / f"{args.experiment}.svg", svg))
        except ToeplitzKitError as exc:
            print(f"no chart: {exc}", file=sys.stderr)
    return 0


def _cmd_render(args) -> int:
    doc = load_report(args.report)
    svg = render_svg(report_series(doc), args.log_y, doc.get("experiment", doc.get("kind", "")))
    print(atomic_write(args.output, svg))
    return 0


def main(argv=None) -> int:
    ap = _build_parser()
    args = ap.parse_args(argv)
    warnings.simplefilter("default")
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "list-symbols":
            from .symbols import dump_registry

            sys.stdout.write(dump_registry())
            return 0
        if args.command == "describe":
            if args.experiment not in EXPERIMENTS:
                raise ParameterError(f"unknown experiment {args.experiment!r}")
            keys = {**COMMON, **DEFAULTS[args.experiment]}
            print(f"{args.experiment}: {EXPERIMENTS[args.experiment]}")
            for k, v in keys.items():
                print(f"  --{k.replace('_', '-')} (default {v})")
            return 0
        if args.command == "render":
            return _cmd_render(args)
    except ToeplitzKitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 4
    return 2


if __name__ == "__main__":
    sys.exit(main())
