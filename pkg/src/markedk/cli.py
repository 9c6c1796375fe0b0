"""Command line interface: simulate, test, power, classify, ks.

Every command echoes its full effective configuration into the output JSON,
and accepts ``--config`` pointing either at a config file or at a previous
output JSON (its embedded ``config`` object is reused), so runs can be
reproduced exactly.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .experiments import (
    ks_two_sample,
    local_scenario,
    power_scenario,
    run_classification,
    run_power,
)
from .pattern import MarkedPattern, Window
from .simulate import ScenarioSpec, generate
from .summaries import k_hat, kappa_tf_hat, ktf_hat
from .testing import (
    GLOBAL_HYPOTHESES,
    LOCAL_HYPOTHESES,
    global_test,
    local_test,
    reference_curve,
    sequential_procedure,
)
from .validation import check_grid

__all__ = ["main"]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


class _Parser(argparse.ArgumentParser):
    # usage errors exit with code 1; runtime errors with 2 (see main)
    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parse_window(text: str | None) -> Window | None:
    if text is None:
        return None
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 4:
        raise ValueError("window must be xmin,xmax,ymin,ymax")
    return Window(*parts)


def read_pattern_csv(path: str, window: Window | None = None):
    """Read an x,y,mark CSV; returns (pattern, extra column dict)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [h.strip().lower() for h in header]
        for col in ("x", "y"):
            if col not in header:
                raise ValueError(f"{path}: missing required column {col!r}")
        idx = {name: header.index(name) for name in header}
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}: line {lineno}: expected {len(header)} fields")
            try:
                vals = [float(c) for c in row]
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: non-numeric value") from None
            if not all(np.isfinite(v) for v in vals):
                raise ValueError(f"{path}: line {lineno}: non-finite value")
            rows.append(vals)
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    coords = data[:, [idx["x"], idx["y"]]]
    marks = data[:, idx["mark"]] if "mark" in idx else np.ones(len(rows))
    if window is None:
        if len(rows) == 0:
            raise ValueError(f"{path}: empty pattern and no window given")
        window = Window(
            float(coords[:, 0].min()),
            float(coords[:, 0].max()),
            float(coords[:, 1].min()),
            float(coords[:, 1].max()),
        )
    extras = {
        name: data[:, idx[name]]
        for name in header
        if name not in ("x", "y", "mark")
    }
    return MarkedPattern(coords, marks, window), extras


def write_pattern_csv(path: str, pattern: MarkedPattern, truth=None):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["x", "y", "mark"] + (["truth"] if truth is not None else [])
        writer.writerow(header)
        for k in range(pattern.n):
            row = [_fmt(pattern.coords[k, 0]), _fmt(pattern.coords[k, 1]), _fmt(pattern.marks[k])]
            if truth is not None:
                row.append(str(int(truth[k])))
            writer.writerow(row)


def write_curve_csv(path: str, grid, values):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "value"])
        for r, v in zip(grid.values, values):
            writer.writerow([_fmt(r), _fmt(v)])


def _emit(payload: dict, out: str | None):
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path) as fh:
        data = json.load(fh)
    if isinstance(data, dict) and isinstance(data.get("config"), dict):
        data = data["config"]
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return data


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _scenario_from_args(args) -> ScenarioSpec:
    if getattr(args, "scenario", None):
        return ScenarioSpec.from_dict(args.scenario)
    window = _parse_window(args.window) or Window(0.0, 1.0, 0.0, 1.0)
    gen_kind = args.generator
    if gen_kind == "hom-poisson":
        gen = {"kind": "hom_poisson", "rate": args.rate}
    elif gen_kind == "inhom-poisson-linear":
        gen = {"kind": "inhom_poisson_linear", "slope": args.slope}
    elif gen_kind == "thomas":
        gen = {
            "kind": "thomas_superposition",
            "background_rate": args.background_rate,
            "parent_rate": args.parent_rate,
            "offspring_mean": args.offspring_mean,
            "sigma": args.sigma,
        }
    elif gen_kind == "binomial":
        gen = {"kind": "binomial", "n": args.n_points}
    else:
        raise ValueError(f"unknown generator {gen_kind!r}")
    mk = args.marks
    if mk == "boundary-power":
        scheme = {"kind": "boundary_power", "h": args.h}
    elif mk == "iid-uniform":
        scheme = {"kind": "iid_uniform"}
    elif mk == "local-gaussian-centers":
        scheme = {
            "kind": "local_gaussian_centers",
            "k": args.k_centers,
            "radius": args.radius,
            "mark_mean": args.mark_mean,
            "mark_sd": args.mark_sd,
        }
    elif mk == "cluster-gaussian":
        scheme = {"kind": "cluster_gaussian", "mark_mean": args.mark_mean, "mark_sd": args.mark_sd}
    else:
        raise ValueError(f"unknown mark scheme {mk!r}")
    return ScenarioSpec.from_dict(
        {"generator": gen, "mark_scheme": scheme, "window": window.to_dict()}
    )


def cmd_simulate(args) -> int:
    spec = _scenario_from_args(args)
    lab = generate(spec, args.seed)
    d = spec.to_dict()
    labeled = (
        d["generator"]["kind"] == "thomas_superposition"
        or d["mark_scheme"]["kind"] == "local_gaussian_centers"
    )
    truth = lab.truth if labeled else None
    write_pattern_csv(args.output, lab.pattern, truth=truth)
    config = {"scenario": spec.to_dict(), "seed": args.seed, "output": args.output}
    _emit(
        {
            "command": "simulate",
            "config": config,
            "n": lab.pattern.n,
            "n_true": int(lab.truth.sum()),
        },
        args.out,
    )
    return 0


def _grid_for(args, pattern):
    return check_grid(pattern, None, grid_size=args.grid_size, rmax=args.rmax)


def _test_config(args, extra=None) -> dict:
    cfg = {
        "input": args.input,
        "hypothesis": args.hypothesis,
        "n_sim": args.n_sim,
        "alpha": args.alpha,
        "seed": args.seed,
        "grid_size": args.grid_size,
        "rmax": args.rmax,
        "intensity": args.intensity,
        "bandwidth": args.bandwidth,
        "edge": args.edge,
        "window": args.window,
        "local": args.local,
        "curves": args.curves,
        "local_out": args.local_out,
    }
    if extra:
        cfg.update(extra)
    return cfg


def cmd_test(args) -> int:
    pattern, _ = read_pattern_csv(args.input, _parse_window(args.window))
    if pattern.n < 2:
        raise ValueError("the pattern needs at least two points")
    grid = _grid_for(args, pattern)
    kwargs = dict(
        n_sim=args.n_sim,
        alpha=args.alpha,
        seed=args.seed,
        grid=grid,
        intensity=args.intensity,
        bandwidth=args.bandwidth,
        threads=args.threads,
        edge=args.edge,
    )
    payload = {"command": "test", "config": _test_config(args), "n": pattern.n}
    hyp = args.hypothesis.upper()
    if hyp == "SEQUENTIAL":
        outcome = sequential_procedure(pattern, **kwargs)
        payload["sequential"] = outcome.to_dict()
    elif hyp in GLOBAL_HYPOTHESES:
        payload["result"] = global_test(pattern, hyp, **kwargs).to_dict()
    else:
        raise ValueError(f"unknown hypothesis {args.hypothesis!r}")

    if args.local:
        local_hyp = hyp + "L" if hyp in GLOBAL_HYPOTHESES else "H1L"
        lres = local_test(pattern, local_hyp, **kwargs)
        payload["local"] = lres.to_dict()
        if args.local_out:
            with open(args.local_out, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["x", "y", "mark", "statistic", "p_value", "reject"])
                for k in range(pattern.n):
                    writer.writerow(
                        [
                            _fmt(pattern.coords[k, 0]),
                            _fmt(pattern.coords[k, 1]),
                            _fmt(pattern.marks[k]),
                            _fmt(lres.statistics[k]),
                            _fmt(lres.p_values[k]),
                            str(int(lres.reject[k])),
                        ]
                    )

    if args.curves:
        prefix = args.curves
        write_curve_csv(f"{prefix}_k.csv", grid, k_hat(pattern, grid, edge=args.edge).values)
        write_curve_csv(f"{prefix}_ktf.csv", grid, ktf_hat(pattern, grid, edge=args.edge).values)
        write_curve_csv(f"{prefix}_kappa.csv", grid, kappa_tf_hat(pattern, grid).values)
        for h in GLOBAL_HYPOTHESES:
            ref = reference_curve(pattern, grid, h, edge=args.edge)
            write_curve_csv(f"{prefix}_ref_{h.lower()}.csv", grid, ref.values)

    _emit(payload, args.out)
    return 0


def _split_numbers(text: str):
    return [float(v) for v in str(text).split(",")]


def cmd_power(args) -> int:
    config = {
        "hypothesis": args.hypothesis,
        "expected_n": args.expected_n,
        "h": args.h,
        "n_rep": args.n_rep,
        "n_sim": args.n_sim,
        "alpha": args.alpha,
        "seed": args.seed,
        "table": args.table,
    }
    cells = []
    for en in _split_numbers(args.expected_n):
        for h in _split_numbers(args.h):
            scenario = power_scenario(args.hypothesis, en, h)
            report = run_power(
                scenario,
                args.hypothesis,
                n_rep=args.n_rep,
                n_sim=args.n_sim,
                alpha=args.alpha,
                seed=args.seed + int(en) * 1000 + int(h * 10),
                threads=args.threads,
            )
            cells.append({"expected_n": en, "h": h, **report.to_dict()})
    if args.table:
        with open(args.table, "a", newline="") as fh:
            writer = csv.writer(fh)
            for cell in cells:
                writer.writerow(
                    [args.hypothesis.upper(), cell["expected_n"], cell["h"], f"{cell['power']:.2f}"]
                )
    _emit({"command": "power", "config": config, "cells": cells}, args.out)
    return 0


def cmd_classify(args) -> int:
    config = {
        "scenario_kind": args.scenario_kind,
        "hypothesis": args.hypothesis,
        "expected_n": args.expected_n,
        "k_centers": args.k_centers,
        "n_rep": args.n_rep,
        "n_sim": args.n_sim,
        "alpha": args.alpha,
        "seed": args.seed,
        "table": args.table,
    }
    hyp = args.hypothesis.upper().replace("_", "")
    if hyp not in LOCAL_HYPOTHESES:
        raise ValueError(f"unknown local hypothesis {args.hypothesis!r}")
    rows = []
    for en in _split_numbers(args.expected_n):
        scenario = local_scenario(args.scenario_kind, en, k_centers=args.k_centers)
        report = run_classification(
            scenario,
            hyp,
            n_rep=args.n_rep,
            n_sim=args.n_sim,
            alpha=args.alpha,
            seed=args.seed + int(en),
            threads=args.threads,
        )
        rows.append({"expected_n": en, **report.to_dict()})
    if args.table:
        with open(args.table, "a", newline="") as fh:
            writer = csv.writer(fh)
            for row in rows:
                writer.writerow(
                    [
                        hyp,
                        row["expected_n"],
                        f"{row['tpr']:.2f}",
                        f"{row['fpr']:.2f}",
                        f"{row['acc']:.2f}",
                    ]
                )
    _emit({"command": "classify", "config": config, "rows": rows}, args.out)
    return 0


def cmd_ks(args) -> int:
    with open(args.input, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip().lower() for h in next(reader)]
        data = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                data.append([float(c) for c in row])
            except ValueError:
                raise ValueError(f"{args.input}: line {lineno}: non-numeric value") from None
    table = np.array(data, dtype=float)
    if args.group not in header:
        raise ValueError(f"group column {args.group!r} not found")
    group = table[:, header.index(args.group)]
    levels = np.unique(group)
    if levels.size != 2:
        raise ValueError(f"group column {args.group!r} must be binary, found {levels.size} levels")
    names = [v.strip().lower() for v in args.variables.split(",")]
    results = {}
    for name in names:
        if name not in header:
            raise ValueError(f"variable column {name!r} not found")
        col = table[:, header.index(name)]
        results[name] = ks_two_sample(col[group == levels[0]], col[group == levels[1]]).to_dict()
    config = {"input": args.input, "group": args.group, "variables": args.variables}
    _emit({"command": "ks", "config": config, "results": results}, args.out)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_common(p):
    p.add_argument("--config", help="JSON config file or previous output JSON")
    p.add_argument("--out", help="write the output JSON here instead of stdout")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)


def build_parser() -> _Parser:
    parser = _Parser(prog="markedk", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a pattern CSV from a scenario")
    _add_common(p)
    p.add_argument("--generator", default="hom-poisson",
                   choices=["hom-poisson", "inhom-poisson-linear", "thomas", "binomial"])
    p.add_argument("--rate", type=float, default=100.0)
    p.add_argument("--slope", type=float, default=180.0)
    p.add_argument("--n-points", type=int, default=100)
    p.add_argument("--background-rate", type=float, default=35.0)
    p.add_argument("--parent-rate", type=float, default=5.0)
    p.add_argument("--offspring-mean", type=float, default=3.0)
    p.add_argument("--sigma", type=float, default=0.03)
    p.add_argument("--marks", default="iid-uniform",
                   choices=["boundary-power", "iid-uniform", "local-gaussian-centers", "cluster-gaussian"])
    p.add_argument("--h", type=float, default=1.0)
    p.add_argument("--k-centers", type=int, default=3)
    p.add_argument("--radius", type=float, default=0.05)
    p.add_argument("--mark-mean", type=float, default=5.0)
    p.add_argument("--mark-sd", type=float, default=1.0)
    p.add_argument("--window", default=None, help="xmin,xmax,ymin,ymax")
    p.add_argument("--scenario", type=json.loads, default=None,
                   help="full scenario spec as JSON (overrides the flags)")
    p.add_argument("-o", "--output", required=True, help="pattern CSV path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("test", help="run global/sequential/local tests on a pattern CSV")
    _add_common(p)
    p.add_argument("input", help="CSV with header x,y,mark")
    p.add_argument("--hypothesis", default="sequential",
                   help="H1, H2, H3 or sequential")
    p.add_argument("--n-sim", type=int, default=99)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--grid-size", type=int, default=128)
    p.add_argument("--rmax", type=float, default=None)
    p.add_argument("--intensity", default="constant", choices=["constant", "kernel"])
    p.add_argument("--bandwidth", type=float, default=None)
    p.add_argument("--edge", default="translation", choices=["translation", "none"],
                   help="edge correction applied to the estimated curves")
    p.add_argument("--window", default=None, help="xmin,xmax,ymin,ymax")
    p.add_argument("--local", action="store_true", help="also run the local variant")
    p.add_argument("--local-out", default=None, help="per-point CSV output path")
    p.add_argument("--curves", default=None, help="prefix for curve CSV exports")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("power", help="empirical power of the global test")
    _add_common(p)
    p.add_argument("--hypothesis", default="H1")
    p.add_argument("--expected-n", default="25,50,100")
    p.add_argument("--h", default="1,2,3")
    p.add_argument("--n-rep", type=int, default=100)
    p.add_argument("--n-sim", type=int, default=99)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--table", default=None, help="append table rows to this CSV")
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("classify", help="classification rates of the local test")
    _add_common(p)
    p.add_argument("--scenario-kind", default="point_mark",
                   choices=["point", "mark", "point_mark"])
    p.add_argument("--hypothesis", default="H1L")
    p.add_argument("--expected-n", default="25,50,100")
    p.add_argument("--k-centers", type=int, default=3)
    p.add_argument("--n-rep", type=int, default=100)
    p.add_argument("--n-sim", type=int, default=99)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--table", default=None, help="append table rows to this CSV")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("ks", help="two-sample KS tests split by a binary group column")
    _add_common(p)
    p.add_argument("input", help="CSV with a binary group column")
    p.add_argument("--group", required=True)
    p.add_argument("--variables", required=True, help="comma-separated column names")
    p.set_defaults(func=cmd_ks)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    # first pass to find --config, then re-parse with its values as defaults
    args, _ = parser.parse_known_args(argv) if argv else (None, None)
    try:
        if args is not None and getattr(args, "config", None):
            overrides = _load_config(args.config)
            sub_actions = [a for a in parser._actions if isinstance(a, argparse._SubParsersAction)]
            subparser = sub_actions[0].choices[args.command]
            known = {a.dest for a in subparser._actions}
            subparser.set_defaults(**{k: v for k, v in overrides.items() if k in known})
        args = parser.parse_args(argv)
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"markedk: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # numerical/runtime failures
        print(f"markedk: runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
