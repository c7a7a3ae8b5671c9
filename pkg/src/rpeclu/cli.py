"""Command-line interface: ``rpeclu cluster | bench | generate``."""

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import RpecluError
from .evaluation import ari, kmeans_baseline
from .gmm import COV_STRUCTURES, EmConfig
from .pipeline import RpecluConfig, run
from .simgen import N_SCENARIOS, generate, scenario_table, write_labeled_csv

logger = logging.getLogger("rpeclu")

EXIT_INPUT = 2
EXIT_CONFIG = 3


class InputError(Exception):
    """Unreadable or non-numeric input data."""


def _is_number(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_csv(path, truth_col=None):
    """Load a numeric CSV. Returns ``(x, truth or None, column names)``.

    A header is assumed when any field of the first row fails to parse as a
    number. ``truth_col`` is a header name, or a 0-based column index when
    the file has no header.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    if not rows:
        raise InputError(f"{path} is empty")
    header = None
    if not all(_is_number(v) for v in rows[0]):
        header, rows = [h.strip() for h in rows[0]], rows[1:]
    if not rows:
        raise InputError(f"{path} has no data rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise InputError(f"{path}: rows have differing numbers of fields")
    names = header or [f"x{j + 1}" for j in range(width)]

    truth_idx = None
    if truth_col is not None:
        if header is not None and truth_col in header:
            truth_idx = header.index(truth_col)
        elif str(truth_col).lstrip("-").isdigit() and -width <= int(truth_col) < width:
            truth_idx = int(truth_col) % width
        else:
            raise InputError(f"truth column {truth_col!r} not found in {path}")
    try:
        data = np.array([[float(v) for v in r] for r in rows])
    except ValueError as exc:
        raise InputError(f"{path}: non-numeric value ({exc})") from None
    if not np.all(np.isfinite(data)):
        raise InputError(f"{path}: missing or non-finite values")
    truth = None
    if truth_idx is not None:
        truth = data[:, truth_idx]
        data = np.delete(data, truth_idx, axis=1)
        names = names[:truth_idx] + names[truth_idx + 1:]
    return data, truth, names


def _fmt(v):
    return repr(float(v))


def write_outputs(out_dir, result, truth=None, source=None):
    """Write partition.csv, ranking.tsv, diagnostics.json and timings.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "partition.csv", "w", newline="", encoding="utf-8") as fh:
        fh.write("row,cluster\n")
        for i, lab in enumerate(result.final.labels, start=1):
            fh.write(f"{i},{lab}\n")

    selected = {s.projection_index for s in result.selected}
    with open(out / "ranking.tsv", "w", newline="", encoding="utf-8") as fh:
        fh.write("projection_index\tbic\tbic_gmm\tbic_reg\tselected\n")
        for s in result.ranking:
            flag = int(s.projection_index in selected)
            fh.write(f"{s.projection_index}\t{_fmt(s.bic)}\t{_fmt(s.bic_gmm)}\t{_fmt(s.bic_reg)}\t{flag}\n")

    diag = {k: v for k, v in result.diagnostics.items() if k != "timings"}
    diag["source"] = source
    diag["ari"] = ari(result.final, truth) if truth is not None else None
    diag["version"] = __version__
    with open(out / "diagnostics.json", "w", encoding="utf-8") as fh:
        json.dump(diag, fh, indent=2, sort_keys=True)
        fh.write("\n")
    # wall-clock numbers vary run to run, so they stay out of diagnostics.json
    with open(out / "timings.json", "w", encoding="utf-8") as fh:
        json.dump(result.diagnostics["timings"], fh, indent=2, sort_keys=True)
        fh.write("\n")


def config_from_args(args, g):
    em = EmConfig(n_starts=args.em_starts)
    return RpecluConfig(
        g=g,
        d=args.d,
        b=args.b,
        b_star=args.b_star,
        seed=args.seed,
        gmm_cov=args.cov,
        reg_structure=args.reg,
        em=em,
        threads=args.threads,
    )


def dataset_seed(seed, scenario_id, replicate):
    """Data-generation seed for one benchmark cell."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(scenario_id), int(replicate)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def run_bench(scenario_ids, replicates, config, seed=0, kmeans_starts=5, n_per_group=None):
    """RPEClu versus k-means on simulated scenarios.

    ``config`` supplies everything except ``g``, which each scenario sets;
    ``config.d=None`` means the default for that g.
    Returns a list of dicts with keys scenario, replicate, method, ari, seconds.
    """
    rows = []
    for sid in scenario_ids:
        for rep in range(1, replicates + 1):
            sc = scenario_table(sid, seed=dataset_seed(seed, sid, rep))
            if n_per_group is not None:
                sc = replace(sc, n_per_group=n_per_group)
            ds = generate(sc)
            cfg = replace(config, g=sc.g, seed=dataset_seed(config.seed, sid, rep) % 2**63)
            t0 = time.perf_counter()
            res = run(ds.x, cfg)
            rows.append(dict(scenario=sid, replicate=rep, method="RPEClu",
                             ari=ari(res.final, ds.truth), seconds=time.perf_counter() - t0))
            t0 = time.perf_counter()
            km = kmeans_baseline(ds.x, sc.g, seed=cfg.seed, n_starts=kmeans_starts)
            rows.append(dict(scenario=sid, replicate=rep, method="kmeans",
                             ari=ari(km, ds.truth), seconds=time.perf_counter() - t0))
            logger.info("scenario %d replicate %d: RPEClu %.3f, kmeans %.3f",
                        sid, rep, rows[-2]["ari"], rows[-1]["ari"])
    return rows


def write_bench(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("scenario\treplicate\tmethod\tari\tseconds\n")
        for r in rows:
            fh.write(f"{r['scenario']}\t{r['replicate']}\t{r['method']}\t{_fmt(r['ari'])}\t{r['seconds']:.6f}\n")


def _check_scenario(sid):
    if not 1 <= sid <= N_SCENARIOS:
        raise RpecluError(f"unknown scenario id {sid}; valid ids are 1..{N_SCENARIOS}")


def cmd_cluster(args):
    if (args.input is None) == (args.scenario is None):
        raise RpecluError("give exactly one of --input or --scenario")
    if args.scenario is not None:
        _check_scenario(args.scenario)
        ds = generate(scenario_table(args.scenario, seed=args.data_seed))
        x, truth, source = ds.x, ds.truth.labels, f"scenario:{args.scenario}:seed={args.data_seed}"
        g = args.g or ds.truth.g
    else:
        x, truth, _ = read_csv(args.input, args.truth_col)
        source = str(args.input)
        if args.g is None:
            raise RpecluError("--g is required with --input")
        g = args.g
    if args.d is not None and not 1 <= args.d < x.shape[1]:
        raise RpecluError(f"--d must satisfy 1 <= d < p (p={x.shape[1]}), got {args.d}")
    result = run(x, config_from_args(args, g))
    write_outputs(args.out, result, truth=truth, source=source)
    print(f"wrote {args.out}/partition.csv ({result.diagnostics['n_scored']} projections scored, "
          f"{result.diagnostics['n_skipped']} skipped)")
    return 0


def cmd_bench(args):
    for sid in args.scenarios:
        _check_scenario(sid)
    if args.replicates < 1:
        raise RpecluError("--replicates must be at least 1")
    config = config_from_args(args, g=2)
    rows = run_bench(args.scenarios, args.replicates, config, seed=args.data_seed,
                     kmeans_starts=args.kmeans_starts, n_per_group=args.n_per_group)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_bench(out / "bench.tsv", rows)
    print(f"wrote {out / 'bench.tsv'} ({len(rows)} rows)")
    return 0


def cmd_generate(args):
    _check_scenario(args.scenario)
    ds = generate(scenario_table(args.scenario, seed=args.seed))
    write_labeled_csv(args.output, ds.x, ds.truth.labels)
    print(f"wrote {args.output} ({ds.x.shape[0]} rows, {ds.x.shape[1]} features)")
    return 0


def _add_run_options(p):
    p.add_argument("--g", type=int, default=None, help="number of groups")
    p.add_argument("--d", type=int, default=None, help="projection dimension (default round(10 ln g) + 1)")
    p.add_argument("--b", type=int, default=1000, help="number of random projections")
    p.add_argument("--b-star", dest="b_star", type=int, default=100, help="projections kept for consensus")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cov", choices=COV_STRUCTURES, default="full", help="mixture covariance structure")
    p.add_argument("--reg", choices=("auto", "full", "diagonal"), default="auto",
                   help="residual covariance of the complement regression")
    p.add_argument("--em-starts", dest="em_starts", type=int, default=EmConfig.n_starts)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--data-seed", dest="data_seed", type=int, default=0,
                   help="seed for simulated data (scenario runs)")
    p.add_argument("--out", default="rpeclu_out", help="output directory")


def build_parser():
    parser = argparse.ArgumentParser(prog="rpeclu", description="Random projection ensemble clustering")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cluster", help="cluster a CSV file or a simulated scenario")
    p.add_argument("--input", help="numeric CSV, rows = observations")
    p.add_argument("--scenario", type=int, help="simulate scenario 1..26 instead of reading a file")
    p.add_argument("--truth-col", dest="truth_col", help="column holding known labels (excluded from X)")
    _add_run_options(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("bench", help="RPEClu vs k-means on simulated scenarios")
    p.add_argument("--scenarios", type=int, nargs="+", default=[1])
    p.add_argument("--replicates", type=int, default=10)
    p.add_argument("--kmeans-starts", dest="kmeans_starts", type=int, default=5)
    p.add_argument("--n-per-group", dest="n_per_group", type=int, default=None)
    _add_run_options(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("generate", help="write a simulated scenario to CSV")
    p.add_argument("--scenario", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RpecluError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
