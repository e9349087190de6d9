"""``dppkit`` command-line tool.

Every subcommand accepts ``--config FILE`` holding ``key = value`` lines
(keys spelled like the long flags, with or without the leading dashes);
flags given on the command line win over the file.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

__all__ = ["main", "build_parser", "EXIT_CODES"]

log = logging.getLogger("dppkit")

EXIT_CODES = {
    "ok": 0,
    "internal": 1,
    "usage": 2,
    "input": 3,
    "numeric": 4,
    "training": 5,
    "no-result": 6,
}


class CliError(Exception):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


def _positive(x: str) -> float:
    v = float(x)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {x}")
    return v


def _nonneg(x: str) -> float:
    v = float(x)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {x}")
    return v


def _unit(x: str) -> float:
    v = float(x)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {x}")
    return v


def _seed(x: str) -> int:
    v = int(x)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _clusters_arg(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--cluster", type=Path, help="a single cluster directory")
    g.add_argument("--corpus", type=Path, help="directory of cluster directories")


def _out_arg(p, what="output"):
    p.add_argument("--out", type=Path, help=f"{what} path (file for one cluster, directory for a corpus); stdout if omitted")
    p.add_argument("--jobs", type=int, default=min(4, os.cpu_count() or 1),
                   help="clusters processed concurrently; output order is unaffected (default min(4, CPUs))")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dppkit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging on stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", help="one of the subcommands below")
    sub.required = True

    def add(name, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        p.add_argument("--config", type=Path, help="key = value file supplying defaults for the flags")
        return p

    p = add("train", "fit bins, build oracle targets, train the conditional DPP and write a model file")
    p.add_argument("--corpus", type=Path, help="training corpus directory")
    p.add_argument("--out", type=Path, help="model file to write")
    p.add_argument("--sigma2", type=_positive, help="Gaussian prior variance on theta ('inf' disables the prior)")
    p.add_argument("--rho", type=_nonneg, default=0.3, help="constant similarity feature (default 0.3)")
    p.add_argument("--tol", type=_nonneg, default=1e-6, help="gradient infinity-norm tolerance (default 1e-6)")
    p.add_argument("--max-iter", type=int, default=500, help="iteration cap (default 500)")
    p.add_argument("--plain-gd", action="store_true", help="plain gradient ascent instead of L-BFGS")
    p.add_argument("--budget", type=_positive, default=665, help="oracle budget in bytes (default 665)")

    p = add("summarize", "summarize clusters with a trained model")
    p.add_argument("--model", type=Path, help="model file from 'train'")
    _clusters_arg(p)
    p.add_argument("--budget", type=_positive, default=665, help="summary budget in bytes (default 665)")
    p.add_argument("--method", choices=("greedy", "sampled"), default="greedy", help="MAP approximation (default greedy)")
    p.add_argument("--mode", choices=("literal", "nonneg"), default="literal", help="greedy stopping rule (default literal)")
    p.add_argument("--seed", type=_seed, default=0, help="sampler seed (default 0)")
    p.add_argument("--samples", type=int, default=100_000, help="draws for sampled MAP (default 100000)")
    p.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"), default=(660.0, 680.0),
                   help="cost window in bytes for sampled MAP (default 660 680)")
    _out_arg(p, "summary")

    p = add("baseline-mmr", "MMR baseline using the model file's logistic quality scores")
    p.add_argument("--model", type=Path, help="model file from 'train'")
    _clusters_arg(p)
    p.add_argument("--lambda", dest="lam", type=_unit, default=0.5, help="relevance/redundancy tradeoff (default 0.5)")
    p.add_argument("--budget", type=_positive, default=665, help="summary budget in bytes (default 665)")
    _out_arg(p, "summary")

    p = add("baseline-begin", "first BUDGET bytes of each cluster's text")
    _clusters_arg(p)
    p.add_argument("--budget", type=_positive, default=665, help="summary budget in bytes (default 665)")
    _out_arg(p, "summary")

    p = add("eval", "score summaries (<summaries>/<cluster id>.txt) against each cluster's references")
    p.add_argument("--summaries", type=Path, help="directory of summary files")
    _clusters_arg(p)

    p = add("score", "score one summary file against a directory of reference files")
    p.add_argument("--summary", type=Path, help="candidate summary file")
    p.add_argument("--refs", type=Path, help="directory of reference summary files")
    p.add_argument("--metric", choices=("rouge1f", "rouge2f"), default="rouge1f", help="metric (default rouge1f)")

    p = add("oracle", "greedy oracle extractive summary of a cluster")
    p.add_argument("--cluster", type=Path, help="cluster directory")
    p.add_argument("--budget", type=_positive, default=665, help="budget in bytes (default 665)")

    p = add("features", "fit bins into a model file, or dump quality features")
    p.add_argument("--corpus", type=Path, help="corpus directory")
    p.add_argument("--model", type=Path, help="model file (written with --fit-bins, read otherwise)")
    p.add_argument("--fit-bins", action="store_true", help="fit idf and global bins on the corpus and write them to --model")
    p.add_argument("--rho", type=_nonneg, default=0.3, help="constant similarity feature for --fit-bins (default 0.3)")

    p = add("sample", "draw exact DPP samples from a kernel file")
    p.add_argument("--kernel", type=Path, help="L-ensemble kernel file")
    p.add_argument("--seed", type=_seed, default=0, help="unsigned 64-bit seed (default 0)")
    p.add_argument("--count", type=int, default=1, help="number of samples (default 1)")

    p = add("map", "budgeted greedy MAP on a kernel file")
    p.add_argument("--kernel", type=Path, help="L-ensemble kernel file")
    p.add_argument("--costs", type=Path, help="cost file, one number per line")
    p.add_argument("--budget", type=_nonneg, help="total cost budget")
    p.add_argument("--mode", choices=("literal", "nonneg"), default="literal", help="stopping rule (default literal)")
    p.add_argument("--oracle", action="store_true", help="also solve exactly by enumeration (n <= 20)")

    p = add("mmr", "maximum marginal relevance selection on explicit scores")
    p.add_argument("--lambda", dest="lam", type=_unit, help="relevance/redundancy tradeoff")
    p.add_argument("--quality", type=Path, help="quality file, one number per line")
    p.add_argument("--kernel", type=Path, help="similarity matrix file (unit diagonal)")
    p.add_argument("--costs", type=Path, help="cost file, one number per line")
    p.add_argument("--budget", type=_nonneg, help="total cost budget")

    p = add("diag", "three-item MRF/DPP diagnostics")
    dsub = p.add_subparsers(dest="diag_command", metavar="WHAT", help="slice or table")
    dsub.required = True
    s = dsub.add_parser("slice", help="realizable (110, 101, 011) factor entries at a fixed 111 entry")
    s.add_argument("--kind", choices=("mrf", "dpp"), required=True, help="pairwise MRF or 3-item DPP")
    s.add_argument("--v111", type=float, required=True, help="value of the 111 entry, in (0, 1]")
    s.add_argument("--res", type=int, default=100, help="grid points per axis (default 100)")
    s.add_argument("--tol", type=_positive, default=1e-3, help="tolerance on the 111 entry (default 1e-3)")
    s.add_argument("--out", type=Path, help="TSV output file; stdout if omitted")
    t = dsub.add_parser("table", help="ternary factor table for given parameters")
    t.add_argument("--kind", choices=("mrf", "dpp"), required=True, help="pairwise MRF or 3-item DPP")
    t.add_argument("--params", required=True,
                   help="six comma-separated numbers: w1,w2,w3,w12,w13,w23 (mrf) or q1,q2,q3,S12,S13,S23 (dpp)")
    return parser


def _read_config(path: Path) -> dict:
    cfg = {}
    for k, line in enumerate(path.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            key, sep, value = line.partition(":")
        if not sep:
            raise CliError("input", f"{path}:{k}: expected 'key = value'")
        cfg[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return cfg


def _apply_config(parser, argv):
    """Re-parse with config-file values injected as flags ahead of the real ones."""
    args = parser.parse_args(argv)
    if getattr(args, "config", None) is None:
        return args
    if not args.config.is_file():
        raise CliError("input", f"config file not found: {args.config}")
    cfg = _read_config(args.config)
    injected = []
    for key, value in cfg.items():
        if key in ("config", "command"):
            continue
        if key == "lambda":
            key = "lambda"
        flag = "--" + key.replace("_", "-")
        if value.lower() in ("true", "yes", "on"):
            injected.append(flag)
        elif value.lower() in ("false", "no", "off"):
            continue
        else:
            injected += [flag, *value.split()]
    cmd_pos = argv.index(args.command)
    return parser.parse_args(argv[: cmd_pos + 1] + injected + argv[cmd_pos + 1:])


def _need(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise CliError("usage", f"{args.command}: --{name.replace('_', '-')} is required")


def _exists(path: Path, what: str):
    if not path.exists():
        raise CliError("input", f"{what} not found: {path}")


def _load_clusters(args):
    from .text.corpus import ingest, ingest_corpus

    if args.cluster is None and args.corpus is None:
        raise CliError("usage", f"{args.command}: give --cluster or --corpus")
    if args.cluster is not None:
        _exists(args.cluster, "cluster directory")
        return [ingest(args.cluster)], False
    _exists(args.corpus, "corpus directory")
    return ingest_corpus(args.corpus), True


def _emit(outputs: dict[str, str], out: Path | None, many: bool):
    if out is None:
        for cid, text in outputs.items():
            if many:
                print(f"# {cid}")
            print(text)
        return
    if many:
        out.mkdir(parents=True, exist_ok=True)
        for cid, text in outputs.items():
            (out / f"{cid}.txt").write_text(text + "\n")
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(next(iter(outputs.values())) + "\n")


def _per_cluster(fn, clusters, jobs):
    """``fn`` over clusters on a thread pool, results in input (cluster-id) order."""
    if jobs <= 1 or len(clusters) <= 1:
        return [fn(c) for c in clusters]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, clusters))


def _load_model(path):
    from .io import load_model

    _exists(path, "model file")
    model, config, logistic = load_model(path)
    if config is None:
        raise CliError("input", f"{path}: model file has no feature settings (run 'train' or 'features --fit-bins')")
    return model, config, logistic


def cmd_train(args):
    from .io import save_model
    from .text.corpus import ingest_corpus
    from .text.pipeline import train_on_clusters

    _need(args, "corpus", "out", "sigma2")
    _exists(args.corpus, "corpus directory")
    clusters = ingest_corpus(args.corpus)
    model, config, logistic = train_on_clusters(
        clusters, sigma2=args.sigma2, rho=args.rho, budget=args.budget,
        tol=args.tol, max_iter=args.max_iter, plain_gd=args.plain_gd,
    )
    save_model(args.out, model, config, logistic)
    st = model.status
    print(f"converged={st['converged']} iterations={st['iterations']} grad_norm={st['grad_norm']:.3e} "
          f"objective={st['objective']:.10g}")


def cmd_summarize(args):
    from .text.pipeline import summarize_cluster

    _need(args, "model")
    model, config, _ = _load_model(args.model)
    clusters, many = _load_clusters(args)

    def run(c):
        return summarize_cluster(
            model, config, c, budget=int(args.budget), method=args.method, mode=args.mode,
            seed=args.seed, samples=args.samples, window=tuple(args.window),
        )

    outputs = {}
    for c, (text, res) in zip(clusters, _per_cluster(run, clusters, args.jobs)):
        if res.status == "no-feasible-sample":
            raise CliError("no-result", f"cluster {c.id}: no sample fell in the cost window {tuple(args.window)}")
        log.info("%s: picked %s (%s)", c.id, list(res.order), res.status)
        outputs[c.id] = text
    _emit(outputs, args.out, many)


def cmd_baseline_mmr(args):
    from .text.pipeline import mmr_summary

    _need(args, "model")
    _, config, logistic = _load_model(args.model)
    if logistic is None:
        raise CliError("input", f"{args.model}: model file has no logistic quality scores")
    clusters, many = _load_clusters(args)
    texts = _per_cluster(lambda c: mmr_summary(logistic, config, c, args.lam, int(args.budget))[0], clusters, args.jobs)
    outputs = {c.id: t for c, t in zip(clusters, texts)}
    _emit(outputs, args.out, many)


def cmd_baseline_begin(args):
    from .text.oracle import begin_summary

    clusters, many = _load_clusters(args)
    _emit({c.id: begin_summary(c, int(args.budget)) for c in clusters}, args.out, many)


def cmd_eval(args):
    from .text.rouge import ngram_score

    _need(args, "summaries")
    _exists(args.summaries, "summaries directory")
    clusters, _ = _load_clusters(args)
    rows = []
    print("cluster\tR1-P\tR1-R\tR1-F\tR2-P\tR2-R\tR2-F")
    for c in clusters:
        f = args.summaries / f"{c.id}.txt"
        if not f.is_file() and len(clusters) == 1 and args.summaries.is_file():
            f = args.summaries
        _exists(f, "summary file")
        text = f.read_text().strip()
        s1 = ngram_score(text, c.references, 1)
        s2 = ngram_score(text, c.references, 2)
        row = [s1.precision, s1.recall, s1.f_measure, s2.precision, s2.recall, s2.f_measure]
        rows.append(row)
        print(c.id + "\t" + "\t".join(f"{x:.5f}" for x in row))
    mean = np.mean(np.array(rows), axis=0)
    print("MEAN\t" + "\t".join(f"{x:.5f}" for x in mean))


def cmd_score(args):
    from .text.rouge import ngram_score

    _need(args, "summary", "refs")
    _exists(args.summary, "summary file")
    _exists(args.refs, "references directory")
    refs = [p.read_text().strip() for p in sorted(args.refs.glob("*.txt"))]
    if not refs:
        raise CliError("input", f"{args.refs}: no reference files (*.txt)")
    n = 1 if args.metric == "rouge1f" else 2
    s = ngram_score(args.summary.read_text().strip(), refs, n)
    print(f"{args.metric}\t{s.f_measure:.6f}\tP={s.precision:.6f}\tR={s.recall:.6f}")


def cmd_oracle(args):
    from .text.corpus import ingest
    from .text.oracle import assemble_summary, oracle_sequence

    _need(args, "cluster")
    _exists(args.cluster, "cluster directory")
    c = ingest(args.cluster)
    seq = oracle_sequence(c, args.budget)
    print(" ".join(map(str, seq)))
    print(assemble_summary(c, seq, int(args.budget)))


def cmd_features(args):
    from .io import save_model
    from .learn import ConditionalModel
    from .text.corpus import ingest_corpus
    from .text.features import FEATURE_NAMES, fit_bins, quality_features

    _need(args, "corpus", "model")
    _exists(args.corpus, "corpus directory")
    clusters = ingest_corpus(args.corpus)
    if args.fit_bins:
        config = fit_bins(clusters, rho=args.rho)
        model = ConditionalModel(
            theta=np.zeros(len(FEATURE_NAMES)), rho=args.rho, feature_names=FEATURE_NAMES,
            bin_edges=config.bin_edges(), status={"converged": False, "iterations": 0, "message": "untrained"},
        )
        save_model(args.model, model, config)
        print(f"fitted bins on {sum(len(c.sentences) for c in clusters)} sentences -> {args.model}")
        return
    _, config, _ = _load_model(args.model)
    print("cluster\tsentence\t" + "\t".join(FEATURE_NAMES))
    for c in clusters:
        F = quality_features(c, config)
        for i, row in enumerate(F):
            print(f"{c.id}\t{i}\t" + "\t".join(f"{x:.10g}" for x in row))


def cmd_sample(args):
    from .io import read_kernel
    from .sampler import SamplerState

    _need(args, "kernel")
    _exists(args.kernel, "kernel file")
    state = SamplerState(read_kernel(args.kernel), args.seed)
    for Y in state.sample_many(args.count):
        print(" ".join(map(str, Y)))


def cmd_map(args):
    from .core import log_normalizer
    from .infer import BudgetSpec, exact_map_bruteforce, greedy_map
    from .io import read_costs, read_kernel

    _need(args, "kernel", "costs", "budget")
    _exists(args.kernel, "kernel file")
    _exists(args.costs, "cost file")
    L = read_kernel(args.kernel)
    budget = BudgetSpec(read_costs(args.costs), args.budget)
    log_z = log_normalizer(L)
    res = greedy_map(L, budget, mode=args.mode)
    print(f"greedy\t{' '.join(map(str, res.order))}\tcost={res.total_cost:.10g}\tlogp={res.log_prob(log_z):.10g}\tstatus={res.status}")
    if args.oracle:
        ex = exact_map_bruteforce(L, budget)
        print(f"exact\t{' '.join(map(str, ex.chosen))}\tcost={ex.total_cost:.10g}\tlogp={ex.log_prob(log_z):.10g}")
        print(f"ratio\t{math.exp(res.unnorm_log_det - ex.unnorm_log_det):.10g}")


def cmd_mmr(args):
    from .infer import BudgetSpec, mmr_select
    from .io import read_costs, read_kernel

    _need(args, "lam", "quality", "kernel", "costs", "budget")
    for f, what in ((args.quality, "quality file"), (args.kernel, "kernel file"), (args.costs, "cost file")):
        _exists(f, what)
    res = mmr_select(read_costs(args.quality), read_kernel(args.kernel), args.lam,
                     BudgetSpec(read_costs(args.costs), args.budget))
    print(f"mmr\t{' '.join(map(str, res.order))}\tcost={res.total_cost:.10g}\tstatus={res.status}")


def cmd_diag(args):
    from .mrf import DppParams3, MrfParams, dpp_factor_table, manifold_slice, mrf_factor_table

    if args.diag_command == "slice":
        pts = manifold_slice(args.kind, args.v111, args.res, args.tol)
        lines = ["\t".join(f"{x:.10g}" for x in row) for row in pts]
        text = "\n".join(lines) + ("\n" if lines else "")
        if args.out is None:
            sys.stdout.write(text)
        else:
            args.out.write_text(text)
        return
    try:
        vals = [float(x) for x in args.params.split(",")]
    except ValueError:
        raise CliError("usage", f"--params must be six comma-separated numbers, got {args.params!r}") from None
    if len(vals) != 6:
        raise CliError("usage", f"--params needs six numbers, got {len(vals)}")
    table = mrf_factor_table(MrfParams(*vals)) if args.kind == "mrf" else dpp_factor_table(DppParams3(*vals))
    for key, v in table.values.items():
        print(f"{key}\t{v:.12g}")


COMMANDS = {
    "train": cmd_train,
    "summarize": cmd_summarize,
    "baseline-mmr": cmd_baseline_mmr,
    "baseline-begin": cmd_baseline_begin,
    "eval": cmd_eval,
    "score": cmd_score,
    "oracle": cmd_oracle,
    "features": cmd_features,
    "sample": cmd_sample,
    "map": cmd_map,
    "mmr": cmd_mmr,
    "diag": cmd_diag,
}


def main(argv=None) -> int:
    from .core import NotPSDError
    from .optim import LineSearchError
    from .text.corpus import ClusterFormatError

    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except CliError as e:
        print(f"dppkit: error: {e}", file=sys.stderr)
        return EXIT_CODES[e.kind]
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except CliError as e:
        kind, msg = e.kind, str(e)
    except (ClusterFormatError, FileNotFoundError, UnicodeDecodeError) as e:
        kind, msg = "input", str(e)
    except LineSearchError as e:
        kind, msg = "training", str(e)
    except (NotPSDError, np.linalg.LinAlgError, OverflowError, ZeroDivisionError) as e:
        kind, msg = "numeric", str(e)
    except ValueError as e:
        kind, msg = "input", str(e)
    except BrokenPipeError:
        return 0
    else:
        return 0
    print(f"dppkit: error: {msg}", file=sys.stderr)
    return EXIT_CODES[kind]


if __name__ == "__main__":
    sys.exit(main())
