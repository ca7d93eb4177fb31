"""Command-line front end: bound tables, figure data, simulations, corpus
generation, training, and compression.

All randomized subcommands require an explicit --seed; there is no
wall-clock seeding anywhere.  Analysis output is CSV with 12 significant
digits, written whole-file via temp-and-rename so a failure never leaves a
partial file.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import os
import sys

import numpy as np

from . import bounds as bnd
from . import experiments as exp
from .coders import ADAPTIVE_MODES, CodeStream, arith_decode, arith_encode, FrozenModel
from .estimators import (CountStatistic, EstimatorSpec, estimate,
                         load_frozen_model, markov_counts, save_frozen_model)
from .models import (BernoulliModel, MarkovModel, TrainingSet, read_bit_file,
                     sample_iid, sample_markov, write_atomic, write_bit_file)

__all__ = ["main"]


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.12g}"
    return str(x)


def _csv_line(values) -> str:
    return ",".join(_fmt(v) for v in values)


def _write_csv(path: str, header, rows) -> None:
    text = _csv_line(header) + "\n" + "".join(_csv_line(r) + "\n" for r in rows)
    write_atomic(path, text.encode())


def _parse_estimator(text: str) -> EstimatorSpec:
    if text == "mle":
        return EstimatorSpec.mle()
    kind, sep, value = text.partition(":")
    if not sep:
        raise ValueError(f"estimator {text!r} needs a parameter, e.g. add-alpha:0.5")
    if kind == "add-alpha":
        return EstimatorSpec.add_alpha(float(value))
    if kind == "add-beta":
        return EstimatorSpec.add_beta(float(value))
    raise ValueError(f"unknown estimator {text!r}")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_bounds(args) -> int:
    header = ("class", "kind", "a_bits_per_symbol", "pe", "m", "alpha", "b")
    if args.cls == "iid":
        results = [bnd.iid_converse_a(args.m, args.pe), bnd.iid_achievable_a(args.m, args.pe)]
    else:
        results = [bnd.markov_converse_a(args.m, args.pe), bnd.markov_achievable_a(args.m, args.pe)]
    print(_csv_line(header))
    for r in results:
        print(_csv_line((args.cls, r.kind, r.a, r.pe, r.m,
                         math.nan if r.alpha is None else r.alpha,
                         math.nan if r.b is None else r.b)))
    if args.cls == "markov":
        ach, conv = bnd.markov_avg_bounds(args.m)
        print(_csv_line(("markov", "avg-achievable", ach, math.nan, args.m, bnd.ALPHA0, math.nan)))
        print(_csv_line(("markov", "avg-converse", conv, math.nan, args.m, math.nan, math.nan)))
    return 0


def _cmd_figures(args) -> int:
    if args.which == 1:
        header, rows = bnd.figure1_data(args.pe, alpha=args.alpha)
    else:
        grid = np.geomspace(args.pe_min, args.pe_max, args.points)
        header, rows = bnd.figure2_data(grid)
    _write_csv(args.out, header, rows)
    return 0


def _cmd_gen_checked(args) -> int:
    if args.model == "iid" and args.p is None:
        raise ValueError("gen --model iid needs --p")
    if args.model == "markov" and (args.p0 is None or args.p1 is None):
        raise ValueError("gen --model markov needs --p0 and --p1")
    return _cmd_gen(args)


def _cmd_gen(args) -> int:
    if args.model == "iid":
        bits = sample_iid(BernoulliModel(args.p), args.length, args.seed)
    else:
        model = MarkovModel(args.p0, args.p1)
        bits = sample_markov(model, 1, args.length, args.seed).sequences[0]
    write_bit_file(args.out, bits)
    return 0


def _cmd_train(args) -> int:
    spec = _parse_estimator(args.estimator)
    if args.model == "iid":
        k = m = 0
        for path in args.inputs:
            bits = read_bit_file(path)
            k += int(bits.sum())
            m += bits.size
        frozen = FrozenModel("iid", (estimate(CountStatistic(k, m), spec),))
    else:
        k0 = m0 = k1 = m1 = 0
        for path in args.inputs:
            bits = read_bit_file(path)
            c0, c1 = markov_counts(TrainingSet(bits.reshape(1, -1)))
            k0 += c0.k
            m0 += c0.m
            k1 += c1.k
            m1 += c1.m
        frozen = FrozenModel("markov", (estimate(CountStatistic(k0, m0), spec),
                                        estimate(CountStatistic(k1, m1), spec)))
    save_frozen_model(args.out, frozen)
    return 0


def _cmd_compress(args) -> int:
    if (args.model is None) == (args.adaptive is None):
        raise ValueError("compress needs exactly one of --model or --adaptive")
    coder = load_frozen_model(args.model) if args.model else args.adaptive
    bits = read_bit_file(args.infile)
    write_atomic(args.out, arith_encode(coder, bits).to_bytes())
    return 0


def _cmd_decompress(args) -> int:
    with open(args.infile, "rb") as fh:
        cs = CodeStream.from_bytes(fh.read())
    write_bit_file(args.out, arith_decode(cs))
    return 0


def _cmd_beat(args) -> int:
    if args.p is not None:
        source = BernoulliModel(args.p)
    elif args.p0 is not None and args.p1 is not None:
        source = MarkovModel(args.p0, args.p1)
    else:
        raise ValueError("beat needs --p (iid) or both --p0 and --p1 (markov)")
    report = exp.beat_universal_experiment(
        args.l, source, mode=args.mode, trials=args.trials, seed=args.seed, pe=args.pe)
    header = ("class", "l", "m", "mode", "learned_excess", "universal_excess",
              "learned_ci", "universal_ci", "trials", "winner")
    print(_csv_line(header))
    print(_csv_line((report.cls, report.l, report.m, report.mode,
                     report.learned_excess, report.universal_excess,
                     report.learned_ci, report.universal_ci,
                     report.trials, report.winner)))
    return 0


# ---------------------------------------------------------------------------
# simulate: key=value config file -> CSV rows
# ---------------------------------------------------------------------------

def _read_config(path: str) -> dict[str, str]:
    conf: dict[str, str] = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"bad config line {raw!r}: expected key=value")
            conf[key.strip()] = value.strip()
    return conf


def _config_hash(conf: dict[str, str]) -> str:
    canon = "\n".join(f"{k}={conf[k]}" for k in sorted(conf))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def _parse_pairs(text: str) -> tuple[tuple[float, float], ...]:
    pairs = []
    for chunk in text.split(","):
        a, sep, b = chunk.partition(":")
        if not sep:
            raise ValueError(f"bad pair {chunk!r}: expected p0:p1")
        pairs.append((float(a), float(b)))
    return tuple(pairs)


_RESULT_HEADER = ("config", "experiment", "metric", "point", "value", "ci", "trials", "seed")


def _cmd_simulate(args) -> int:
    conf = _read_config(args.config)
    tag = _config_hash(conf)
    kind = conf.get("experiment")
    seed = int(conf.get("seed", "0"))
    trials = int(conf.get("trials", "10000"))
    spec = _parse_estimator(conf.get("estimator", "mle"))
    rows: list[tuple] = []

    def add(metric: str, point: str, value: float, ci: float, n: int) -> None:
        rows.append((tag, kind, metric, point, value, ci, n, seed))

    if kind == "tail_iid":
        m = int(conf["m"])
        a = float(conf["a"])
        grid = tuple(float(p) for p in conf["p"].split(","))
        cfg = exp.SweepConfig(grid, m, spec, a, trials, seed)
        points, sup = exp.mc_tail_iid(cfg)
        for p, est in zip(grid, points):
            add("tail", _fmt(p), est.value, est.ci_halfwidth, est.trials)
        add("sup_tail", "grid", sup.value, sup.ci_halfwidth, sup.trials)
    elif kind == "avg_iid":
        m = int(conf["m"])
        grid = tuple(float(p) for p in conf["p"].split(","))
        points, sup = exp.mc_avg_redundancy_iid(m, grid, spec, trials, seed)
        for p, est in zip(grid, points):
            add("mean_redundancy", _fmt(p), est.value, est.ci_halfwidth, est.trials)
        add("sup_mean_redundancy", "grid", sup.value, sup.ci_halfwidth, sup.trials)
    elif kind == "markov":
        n = int(conf["n"])
        l = int(conf["l"])
        pairs = _parse_pairs(conf["pairs"])
        a = float(conf["a"]) if "a" in conf else None
        genie = conf.get("genie", "0") not in ("0", "false", "no")
        eps = float(conf["eps"]) if "eps" in conf else None
        cfg = exp.SweepConfig(pairs, n * l, spec, a, trials, seed)
        points, sup = exp.mc_markov(cfg, n, l, genie=genie, eps=eps)
        metric = "tail" if a is not None else "mean_redundancy"
        for pt in points:
            label = f"{_fmt(pt.p0)}:{_fmt(pt.p1)}"
            add(metric, label, pt.estimate.value, pt.estimate.ci_halfwidth,
                pt.estimate.trials)
            if pt.e2_rate is not None:
                add("e2_rate", label, pt.e2_rate.value, pt.e2_rate.ci_halfwidth,
                    pt.e2_rate.trials)
        add(f"sup_{metric}", "grid", sup.estimate.value,
            sup.estimate.ci_halfwidth, sup.estimate.trials)
    elif kind == "beat":
        l = int(conf["l"])
        mode = conf.get("mode", "average")
        pe = float(conf["pe"]) if "pe" in conf else None
        if "p" in conf:
            source = BernoulliModel(float(conf["p"]))
        else:
            p0, p1 = _parse_pairs(conf["pairs"])[0]
            source = MarkovModel(p0, p1)
        report = exp.beat_universal_experiment(l, source, mode=mode,
                                               trials=trials, seed=seed, pe=pe)
        add("learned_excess", str(l), report.learned_excess, report.learned_ci, trials)
        add("universal_excess", str(l), report.universal_excess, report.universal_ci, trials)
        add("winner", str(l), 1.0 if report.winner == "learned" else 0.0, 0.0, trials)
    else:
        raise ValueError(f"unknown experiment {kind!r}")

    existing = ""
    if os.path.exists(args.out):
        with open(args.out) as fh:
            existing = fh.read()
    if not existing:
        existing = _csv_line(_RESULT_HEADER) + "\n"
    text = existing + "".join(_csv_line(r) + "\n" for r in rows)
    write_atomic(args.out, text.encode())
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lsc",
        description="Trained and universal lossless coding for binary sources")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="print tail/average redundancy bound table")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--pe", type=float, required=True)
    p.add_argument("--class", dest="cls", choices=("iid", "markov"), required=True)
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("figures", help="emit figure curve data as CSV")
    p.add_argument("--which", type=int, choices=(1, 2), required=True)
    p.add_argument("--pe", type=float, default=1e-6)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--pe-min", type=float, default=1e-12)
    p.add_argument("--pe-max", type=float, default=1e-2)
    p.add_argument("--points", type=int, default=41)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_figures)

    p = sub.add_parser("simulate", help="run an experiment from a key=value config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("gen", help="write a sampled bit corpus")
    p.add_argument("--model", choices=("iid", "markov"), required=True)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--p0", type=float, default=None)
    p.add_argument("--p1", type=float, default=None)
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_checked)

    p = sub.add_parser("train", help="fit a frozen model from corpus files")
    p.add_argument("--model", choices=("iid", "markov"), required=True)
    p.add_argument("--estimator", default="add-alpha:0.50922")
    p.add_argument("--in", dest="inputs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("compress", help="arithmetic-code a bit corpus")
    p.add_argument("--model", default=None, help="frozen model file")
    p.add_argument("--adaptive", choices=ADAPTIVE_MODES, default=None)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_compress)

    p = sub.add_parser("decompress", help="invert compress")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_decompress)

    p = sub.add_parser("beat", help="trained-versus-universal comparison")
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--p0", type=float, default=None)
    p.add_argument("--p1", type=float, default=None)
    p.add_argument("--mode", choices=("average", "tail"), default="average")
    p.add_argument("--pe", type=float, default=None)
    p.add_argument("--trials", type=int, default=32)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=_cmd_beat)

    return parser



def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args) or 0
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
