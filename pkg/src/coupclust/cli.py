"""Command-line front end.

Subcommands: cluster, counterexample, elbow, embed, synth. Every run writes
a manifest.json (resolved config + library version + seed) sufficient to
reproduce its outputs byte for byte. Reports go to standard output; all
diagnostics go to standard error. Exit codes: 0 success, 2 configuration
error, 3 data error, 4 solver error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import JointPmf, Pmf
from .data_io import (
    CounterexampleParams,
    apply_rating_transform,
    community_objective,
    counterexample_frobenius,
    gen_counterexample,
    gen_planted_blocks,
    ingest,
    intuitive_kernel,
    load_dense_csv,
    load_labels,
    load_pmf,
    one_item_kernel,
    parse_triplets,
    write_kernel_json,
    write_trace_csv,
    write_triplets,
)
from .embedding import dtm_embed, write_embedding_tsv
from .errors import ConfigError, CoupclustError, DataError, SolverError
from .evaluation import (
    build_report,
    elbow_curve,
    format_report_table,
    kernel_norm_value,
)
from .frobenius import FrobeniusConfig, solve_frobenius
from .nuclear import NuclearConfig, solve_nuclear


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _write_manifest(out_dir: Path, command: str, config: dict) -> None:
    payload = {
        "version": __version__,
        "command": command,
        "config": config,
        "coupling_threads": os.environ.get("COUPLING_THREADS"),
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _load_joint(args) -> tuple[JointPmf, object]:
    path = Path(args.input)
    if path.suffix.lower() == ".csv":
        rows, cols, weights = load_dense_csv(path)
    else:
        rows, cols, weights = parse_triplets(path)
    if getattr(args, "rating_transform", False):
        weights = apply_rating_transform(weights)
    joint, report = ingest(rows, cols, weights, normalize=args.normalize)
    if not report.empty:
        _log(
            f"pruned {len(report.pruned_rows)} rows, "
            f"{len(report.pruned_cols)} columns with zero weight"
        )
    return joint, report


def _resolve_pz(args, k: int) -> Pmf:
    if args.pz is None:
        raise ConfigError("--algo frobenius requires --pz (a file or 'uniform')")
    if args.pz == "uniform":
        return Pmf.uniform(tuple(f"z{i}" for i in range(k)))
    pz = load_pmf(args.pz)
    if len(pz) != k:
        raise ConfigError(f"--pz has {len(pz)} entries but --k is {k}")
    return pz


def _cmd_cluster(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    joint, prune = _load_joint(args)
    with open(out_dir / "prune_report.json", "w", encoding="utf-8") as fh:
        json.dump(prune.as_dict(), fh, indent=2)
        fh.write("\n")

    k = args.k
    if args.algo == "frobenius":
        p_z = _resolve_pz(args, k)
    else:
        if args.pz is not None:
            raise ConfigError("--algo nuclear does not take --pz")
        p_z = None

    best = None
    for restart in range(args.restarts):
        seed = args.seed + restart
        if args.algo == "frobenius":
            cfg = FrobeniusConfig(
                lam=args.lam,
                alpha=args.alpha,
                seed=seed,
                obj_tol=args.tol if args.tol is not None else 1e-9,
            )
            kernel, trace = solve_frobenius(joint, p_z, cfg)
        else:
            cfg = NuclearConfig(
                k=k,
                seed=seed,
                kernel_change_tol=args.tol if args.tol is not None else 1e-12,
            )
            kernel, trace = solve_nuclear(joint, cfg)
        final = trace.objectives[-1]
        if best is None or final > best[0]:
            best = (final, seed, kernel, trace)
        _log(f"restart seed={seed}: objective {final!r}, {trace.status}")

    final_obj, best_seed, kernel, trace = best
    if args.algo == "frobenius":
        pz_out = p_z.probs
    else:
        pz_out = kernel.induced_marginal(joint.marginal_y)
    write_kernel_json(
        out_dir / "kernel.json",
        kernel,
        pz_out,
        final_obj,
        args.algo,
        len(trace),
    )
    write_trace_csv(out_dir / "trace.csv", trace)
    _write_manifest(
        out_dir,
        "cluster",
        {
            "input": str(args.input),
            "algo": args.algo,
            "k": k,
            "pz": args.pz,
            "lambda": args.lam,
            "alpha": args.alpha,
            "seed": args.seed,
            "best_seed": best_seed,
            "restarts": args.restarts,
            "tol": args.tol,
            "normalize": args.normalize,
            "rating_transform": bool(args.rating_transform),
        },
    )

    if args.truth is not None:
        truth = load_labels(args.truth)
        report = build_report(joint, kernel, truth, args.algo)
        with open(out_dir / "report.json", "w", encoding="utf-8") as fh:
            json.dump(report.as_dict(), fh, indent=2)
            fh.write("\n")
        print(format_report_table(report))
    else:
        norm_val = kernel_norm_value(joint, kernel, args.algo)
        summary = {
            "k": k,
            "algorithm": args.algo,
            "objective": final_obj,
            "norm_value": norm_val,
            "iters": len(trace),
            "status": trace.status,
        }
        with open(out_dir / "report.json", "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2)
            fh.write("\n")
        print(json.dumps(summary, indent=2))
    return 0


def _parse_grid(text: str) -> list[float]:
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError("grid must be start:stop:step or comma-separated")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ConfigError("grid needs stop >= start and step > 0")
        count = int(round((stop - start) / step))
        return [start + i * step for i in range(count + 1)]
    return [float(p) for p in text.split(",") if p.strip()]


def _cmd_counterexample(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = _parse_grid(args.s_grid)
    if not grid:
        raise ConfigError("empty s grid")
    m, n, lam = args.m, args.n, args.lam
    lines = ["s,frob_intuitive,frob_oneitem,community_obj_Q1,community_obj_Q2"]
    for s in grid:
        base = gen_counterexample(CounterexampleParams(m=m, n=n, s=s, variant="base_P"))
        q1 = gen_counterexample(
            CounterexampleParams(m=m, n=n, s=s, variant="intuitive_Q1")
        )
        q2 = gen_counterexample(
            CounterexampleParams(m=m, n=n, s=s, variant="one_item_Q2")
        )
        fi = counterexample_frobenius(m, n, s, intuitive_kernel(m))
        fo = counterexample_frobenius(m, n, s, one_item_kernel(m))
        c1 = community_objective(q1, base, lam, 2)
        c2 = community_objective(q2, base, lam, 2)
        lines.append(f"{s:.17g},{fi:.17g},{fo:.17g},{c1:.17g},{c2:.17g}")
    text = "\n".join(lines) + "\n"
    (out_dir / "counterexample.csv").write_text(text, encoding="utf-8")
    _write_manifest(
        out_dir,
        "counterexample",
        {"m": m, "n": n, "lambda": lam, "s_grid": args.s_grid},
    )
    print(text, end="")
    return 0


def _cmd_elbow(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    joint, _ = _load_joint(args)
    ks = [int(x) for x in args.ks.split(",") if x.strip()]
    p_z = None
    if args.pz not in (None, "uniform"):
        p_z = load_pmf(args.pz)
    curve = elbow_curve(
        joint,
        ks,
        algorithm=args.algo,
        restarts=args.restarts,
        p_z=p_z,
        frobenius_lam=args.lam,
    )
    lines = ["k,norm_value"] + [f"{k},{v:.17g}" for k, v in curve]
    text = "\n".join(lines) + "\n"
    (out_dir / "elbow.csv").write_text(text, encoding="utf-8")
    _write_manifest(
        out_dir,
        "elbow",
        {
            "input": str(args.input),
            "algo": args.algo,
            "ks": args.ks,
            "restarts": args.restarts,
            "pz": args.pz,
            "lambda": args.lam,
            "normalize": args.normalize,
            "rating_transform": bool(args.rating_transform),
        },
    )
    print(text, end="")
    return 0


def _cmd_embed(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    joint, _ = _load_joint(args)
    if args.d == 1:
        _log(
            "note: dimension 1 is the constant top singular coordinate; "
            "informative dimensions start at 2"
        )
    emb = dtm_embed(joint, args.d, method=args.method)
    write_embedding_tsv(emb, out_dir / "embedding.tsv")
    _write_manifest(
        out_dir,
        "embed",
        {
            "input": str(args.input),
            "d": args.d,
            "method": args.method,
            "normalize": args.normalize,
            "rating_transform": bool(args.rating_transform),
        },
    )
    print(f"wrote {len(emb.labels)} x {emb.d} embedding to {out_dir / 'embedding.tsv'}")
    return 0


def _cmd_synth(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.gen == "counterexample":
        params = CounterexampleParams(
            m=args.m, n=args.n, s=args.s, variant=args.variant
        )
        mat = gen_counterexample(params)
        rows = [f"y{i}" for i in range(mat.shape[0])]
        cols = [f"x{j}" for j in range(mat.shape[1])]
        write_triplets(out_dir / "synth.tsv", rows, cols, mat)
        config = {
            "gen": "counterexample",
            "variant": args.variant,
            "m": args.m,
            "n": args.n,
            "s": args.s,
        }
        print(f"wrote {mat.size} triplets to {out_dir / 'synth.tsv'}")
    else:
        sizes = [int(x) for x in args.sizes.split(",") if x.strip()]
        joint, truth = gen_planted_blocks(
            args.blocks, sizes, args.within, args.cross, noise_seed=args.seed
        )
        write_triplets(
            out_dir / "synth.tsv", joint.row_labels, joint.col_labels, joint.weights
        )
        with open(out_dir / "truth.tsv", "w", encoding="utf-8") as fh:
            for item, label in zip(joint.row_labels, truth):
                fh.write(f"{item}\t{label}\n")
        config = {
            "gen": "planted",
            "blocks": args.blocks,
            "sizes": args.sizes,
            "within": args.within,
            "cross": args.cross,
            "seed": args.seed,
        }
        print(
            f"wrote {joint.weights.size} triplets to {out_dir / 'synth.tsv'} "
            f"and truth labels to {out_dir / 'truth.tsv'}"
        )
    _write_manifest(out_dir, "synth", config)
    return 0


def _add_io_flags(sub, with_input: bool = True) -> None:
    if with_input:
        sub.add_argument("input", help="triplet TSV (or dense .csv) co-occurrence file")
        sub.add_argument(
            "--normalize",
            choices=("joint", "rows"),
            default="joint",
            help="divide by total mass, or row-normalize then average rows",
        )
        sub.add_argument(
            "--rating-transform",
            action="store_true",
            help="map 1..5 ratings through 3^(r-1) - 1 before normalizing",
        )
    sub.add_argument("--out", default=".", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coupclust",
        description="Probabilistic clustering by maximal matrix-norm couplings",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    cluster = subs.add_parser("cluster", help="learn a coupling kernel")
    _add_io_flags(cluster)
    cluster.add_argument("--algo", choices=("frobenius", "nuclear"), required=True)
    cluster.add_argument("--k", type=int, required=True, help="number of clusters")
    cluster.add_argument(
        "--pz",
        default=None,
        help="target cluster marginal: a pmf TSV path or 'uniform' "
        "(required by frobenius, forbidden for nuclear)",
    )
    cluster.add_argument("--lambda", dest="lam", type=float, default=10.0)
    cluster.add_argument("--alpha", type=float, default=None)
    cluster.add_argument("--seed", type=int, default=0)
    cluster.add_argument("--restarts", type=int, default=5)
    cluster.add_argument("--tol", type=float, default=None)
    cluster.add_argument(
        "--truth", default=None, help="item<TAB>label file for accuracy reporting"
    )
    cluster.set_defaults(func=_cmd_cluster)

    ce = subs.add_parser(
        "counterexample", help="two-community objective and norm curves"
    )
    _add_io_flags(ce, with_input=False)
    ce.add_argument("--m", type=int, default=50)
    ce.add_argument("--n", type=int, default=50)
    ce.add_argument("--lambda", dest="lam", type=float, default=3000.0)
    ce.add_argument(
        "--s-grid",
        default="1:10:0.5",
        help="s values: start:stop:step or comma-separated",
    )
    ce.set_defaults(func=_cmd_counterexample)

    elbow = subs.add_parser("elbow", help="norm-versus-k model selection curve")
    _add_io_flags(elbow)
    elbow.add_argument("--ks", required=True, help="comma-separated cluster counts")
    elbow.add_argument("--algo", choices=("frobenius", "nuclear"), default="nuclear")
    elbow.add_argument("--restarts", type=int, default=5)
    elbow.add_argument("--pz", default=None)
    elbow.add_argument("--lambda", dest="lam", type=float, default=10.0)
    elbow.set_defaults(func=_cmd_elbow)

    embed = subs.add_parser("embed", help="DTM singular-vector embedding")
    _add_io_flags(embed)
    embed.add_argument("--d", type=int, required=True)
    embed.add_argument(
        "--method", choices=("exact_svd", "power_iteration"), default="exact_svd"
    )
    embed.set_defaults(func=_cmd_embed)

    synth = subs.add_parser("synth", help="write synthetic benchmark data")
    _add_io_flags(synth, with_input=False)
    synth.add_argument("--gen", choices=("counterexample", "planted"), required=True)
    synth.add_argument("--variant", default="base_P")
    synth.add_argument("--m", type=int, default=2)
    synth.add_argument("--n", type=int, default=2)
    synth.add_argument("--s", type=float, default=3.0)
    synth.add_argument("--blocks", type=int, default=2)
    synth.add_argument("--sizes", default="30,30")
    synth.add_argument("--within", type=float, default=1.0)
    synth.add_argument("--cross", type=float, default=0.05)
    synth.add_argument("--seed", type=int, default=0)
    synth.set_defaults(func=_cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        _log(f"configuration error: {exc}")
        return 2
    except DataError as exc:
        _log(f"data error: {exc}")
        return 3
    except SolverError as exc:
        _log(f"solver error: {exc}")
        return 4
    except CoupclustError as exc:
        _log(f"error: {exc}")
        return 4


if __name__ == "__main__":
    sys.exit(main())
