"""Command-line front end.

Subcommands: gen-sbm, ingest, propagate, solve-tikhonov, stability,
experiment.  Common flags: --seed, --output, --config (a key=value file whose
entries act as defaults; explicit flags override them).  All emitted CSVs use
'.' decimals and newline line endings, and reruns with identical flags and
seed produce byte-identical files.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from . import fileio
from .errors import InputError, WasspropError
from .experiments import (
    AnchorSpec,
    SbmConfig,
    emit_metrics,
    expected_sbm_counts,
    gen_sbm,
    ingest_categorical,
    run_experiment,
)
from .labels import DEFAULT_GRID_SIZE, QuantileGrid, gaussian_quantile_label, tight_envelope
from .propagation import (
    DEFAULT_MAX_ITERS,
    DEFAULT_REL_TOL,
    GaussianBackend,
    LabeledSubset,
    PropagationConfig,
    QuantileBackend,
    classify,
    propagate,
)
from .stability import StabilityInputs, empirical_stability, generalization_bounds
from .tikhonov import TrainingSet, invertibility_margin, solve_field


def _config_flags(path: Path) -> List[str]:
    """Translate key=value lines into flag tokens; booleans toggle flags."""
    flags: List[str] = []
    with open(path) as fh:
        for raw in fh:
            text = raw.strip()
            if not text or text.startswith("#"):
                continue
            if "=" not in text:
                raise InputError(f"config line must be key=value, got {text!r}")
            key, _, value = text.partition("=")
            flag = "--" + key.strip().replace("_", "-")
            value = value.strip()
            if value.lower() in ("true", "false"):
                if value.lower() == "true":
                    flags.append(flag)
            else:
                flags.extend([flag, value])
    return flags


def _apply_config(argv: List[str]) -> List[str]:
    """Expand --config <file> into its flags, placed right after the
    subcommand so explicit command-line flags take precedence."""
    path: Optional[str] = None
    for i, token in enumerate(argv):
        if token == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
            break
        if token.startswith("--config="):
            path = token.split("=", 1)[1]
            break
    if path is None or not argv:
        return argv
    return [argv[0]] + _config_flags(Path(path)) + argv[1:]


def _require_output(args) -> Path:
    if args.output is None:
        raise InputError("--output <path> is required for this subcommand")
    return args.output


def _read_training(args):
    """Shared solve-tikhonov/stability input path: graph + labels file."""
    g = fileio.read_graph(args.graph, args.n)
    grid = QuantileGrid(args.grid_size)
    kind, targets = fileio.read_labels(args.labels, grid)
    samples = []
    for v in sorted(targets):
        label = targets[v]
        if kind == "gauss":
            if label.dim != 1:
                raise InputError(
                    "quantile-field solving needs one-dimensional labels; "
                    f"vertex {v} has dimension {label.dim}"
                )
            label = gaussian_quantile_label(float(label.mean[0]), float(label.std[0]), grid)
        samples.append((v, label))
    return g, TrainingSet(samples), grid


def cmd_gen_sbm(args) -> int:
    blocks = tuple(int(b) for b in args.blocks.split(","))
    cfg = SbmConfig(blocks, args.k, args.p_in, args.p_out, seed=args.seed)
    sample = gen_sbm(cfg)
    counts = expected_sbm_counts(cfg)
    fileio.write_hypergraph(_require_output(args), sample.hypergraph)
    if args.truth is not None:
        fileio.write_truth(args.truth, sample.blocks)
    if args.incidence is not None:
        fileio.write_incidence(args.incidence, sample.hypergraph)
    print(
        f"n={cfg.n} k={cfg.k} within_block={sample.within_block} "
        f"cross_block={sample.cross_block} total={sample.total} "
        f"expected_within={counts.expected_within:.3f} "
        f"expected_total={counts.expected_total:.3f}"
    )
    return 0


def cmd_ingest(args) -> int:
    table = fileio.read_categorical_csv(args.input, args.class_column)
    missing = args.missing if args.missing != "" else None
    result = ingest_categorical(table, missing)
    fileio.write_hypergraph(_require_output(args), result.hypergraph)
    if args.truth is not None:
        fileio.write_truth(args.truth, result.classes)
    if args.incidence is not None:
        fileio.write_incidence(args.incidence, result.hypergraph)
    print(
        f"rows={result.hypergraph.n} hyperedges={len(result.hypergraph.edges)} "
        f"classes={','.join(result.class_names)}"
    )
    return 0


def cmd_propagate(args) -> int:
    h = fileio.read_hypergraph(args.hypergraph, args.n)
    grid = QuantileGrid(args.grid_size)
    kind, targets = fileio.read_labels(args.labels, grid)
    if kind == "hist":
        backend = QuantileBackend(grid)
    else:
        dims = {label.dim for label in targets.values()}
        if len(dims) != 1:
            raise InputError(f"gauss labels mix dimensions {sorted(dims)}")
        backend = GaussianBackend(dims.pop())
    cfg = PropagationConfig(
        alpha=args.alpha,
        gamma=args.gamma,
        max_iters=args.max_iters,
        rel_tol=args.tol,
        seed=args.seed,
    )
    state = propagate(h, LabeledSubset(targets), cfg, backend)
    predicted = classify(state)

    import csv

    with open(_require_output(args), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["vertex", "predicted_class", "label_params"])
        for v in range(h.n):
            writer.writerow([v, int(predicted[v]), fileio.label_params(state.vertex_label(v))])
    if args.trace is not None:
        fileio.write_trace(args.trace, state.loss_history)
    print(f"iterations={state.iterations} final_loss={state.loss_history[-1]!r}")
    return 0


def cmd_solve_tikhonov(args) -> int:
    g, ts, _ = _read_training(args)
    field = solve_field(g, ts, args.gamma)
    fileio.write_field(_require_output(args), field)
    margin = invertibility_margin(ts, g, args.gamma)
    print(f"n={g.n} m={ts.m} margin={margin!r}")
    return 0


def cmd_stability(args) -> int:
    g, ts, _ = _read_training(args)
    envelope = tight_envelope([label for _, label in ts.samples])
    si = StabilityInputs.from_instance(g, ts, args.gamma, envelope)
    lines = [
        f"m={si.m}",
        f"T={si.T}",
        f"lambda1={si.lambda1!r}",
        f"margin={si.margin!r}",
        f"margin_positive={si.hypothesis_holds}",
        f"phi_l2_squared={si.phi_l2_squared!r}",
    ]
    if si.hypothesis_holds:
        report = generalization_bounds(si, args.epsilon)
        lines += [
            f"beta={report.beta!r}",
            f"M={report.M!r}",
            f"epsilon={report.epsilon!r}",
            f"fraction_bound={report.fraction_bound!r}",
            f"fraction_vacuous={report.fraction_vacuous}",
            f"exponential_bound={report.exponential_bound!r}",
            f"exponential_vacuous={report.exponential_vacuous}",
            f"m_ge_4={report.m_ge_4}",
            f"sample_size_ok={report.sample_size_ok}",
        ]
        if args.empirical:
            emp = empirical_stability(g, ts, args.swaps, args.gamma, envelope, seed=args.seed)
            lines += [
                f"swaps={args.swaps}",
                f"worst_slice_ratio={emp.worst_slice_ratio!r}",
                f"worst_cost_ratio={emp.worst_cost_ratio!r}",
                f"empirical_ok={emp.ok}",
            ]
            if args.ratios is not None:
                import csv

                with open(args.ratios, "w", newline="") as fh:
                    writer = csv.writer(fh, lineterminator="\n")
                    writer.writerow(["swap", "sample_index", "slice_ratio", "cost_ratio"])
                    for t in emp.trials:
                        writer.writerow(
                            [
                                t.swap_index,
                                t.sample_index,
                                fileio.format_float(t.slice_shift_ratio),
                                fileio.format_float(t.cost_shift_ratio),
                            ]
                        )
    text = "\n".join(lines) + "\n"
    if args.output is not None:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_experiment(args) -> int:
    if args.hypergraph is not None:
        if args.truth is None:
            raise InputError("--hypergraph requires --truth")
        h = fileio.read_hypergraph(args.hypergraph, args.n)
        truth = fileio.read_truth(args.truth)
    elif args.blocks is not None:
        if args.p_in is None or args.p_out is None:
            raise InputError("--blocks requires --p-in and --p-out")
        blocks = tuple(int(b) for b in args.blocks.split(","))
        sample = gen_sbm(SbmConfig(blocks, args.k, args.p_in, args.p_out, seed=args.seed))
        h, truth = sample.hypergraph, sample.blocks
    else:
        raise InputError("provide either --hypergraph/--truth or --blocks/--p-in/--p-out")
    cfg = PropagationConfig(
        alpha=args.alpha,
        gamma=args.gamma,
        max_iters=args.max_iters,
        rel_tol=args.tol,
        seed=args.seed,
    )
    anchors = AnchorSpec(args.anchor_kind, args.anchor_variance)
    result = run_experiment(h, truth, args.labels_per_class, args.trials, cfg, anchors)
    emit_metrics(result, _require_output(args))
    print(
        f"trials={result.trials} labels_per_class={result.labels_per_class} "
        f"mean={result.mean!r} stderr={result.stderr!r} evaluated={result.evaluated}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wassprop",
        description="Wasserstein soft-label propagation on graphs and hypergraphs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master RNG seed")
    common.add_argument("--output", type=Path, help="primary output file")
    common.add_argument("--config", type=Path, help="key=value file of default flags")

    p = sub.add_parser("gen-sbm", parents=[common], help="draw a block-model hypergraph")
    p.add_argument("--blocks", required=True, help="comma-separated block sizes, e.g. 50,50")
    p.add_argument("--k", type=int, default=3, help="hyperedge arity")
    p.add_argument("--p-in", type=float, required=True, help="within-block probability")
    p.add_argument("--p-out", type=float, required=True, help="cross-block probability")
    p.add_argument("--truth", type=Path, help="write vertex,class CSV here")
    p.add_argument("--incidence", type=Path, help="write 0/1 incidence CSV here")
    p.set_defaults(func=cmd_gen_sbm)

    p = sub.add_parser("ingest", parents=[common], help="hypergraph from a categorical CSV")
    p.add_argument("--input", type=Path, required=True, help="CSV with header row")
    p.add_argument("--class-column", default="class", help="name of the class column")
    p.add_argument("--missing", default="?", help="missing-value marker; empty disables")
    p.add_argument("--truth", type=Path, help="write vertex,class CSV here")
    p.add_argument("--incidence", type=Path, help="write 0/1 incidence CSV here")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("propagate", parents=[common], help="alternating label propagation")
    p.add_argument("--hypergraph", type=Path, required=True)
    p.add_argument("--labels", type=Path, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--max-iters", type=int, default=DEFAULT_MAX_ITERS)
    p.add_argument("--tol", type=float, default=DEFAULT_REL_TOL)
    p.add_argument("--grid-size", type=int, default=DEFAULT_GRID_SIZE)
    p.add_argument("--n", type=int, help="vertex count override")
    p.add_argument("--trace", type=Path, help="write iter,loss CSV here")
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("solve-tikhonov", parents=[common], help="closed-form graph solve")
    p.add_argument("--graph", type=Path, required=True)
    p.add_argument("--labels", type=Path, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--grid-size", type=int, default=DEFAULT_GRID_SIZE)
    p.add_argument("--n", type=int, help="vertex count override")
    p.set_defaults(func=cmd_solve_tikhonov)

    p = sub.add_parser("stability", parents=[common], help="stability constants and bounds")
    p.add_argument("--graph", type=Path, required=True)
    p.add_argument("--labels", type=Path, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--grid-size", type=int, default=DEFAULT_GRID_SIZE)
    p.add_argument("--n", type=int, help="vertex count override")
    p.add_argument("--empirical", action="store_true", help="run replacement swaps")
    p.add_argument("--swaps", type=int, default=20)
    p.add_argument("--ratios", type=Path, help="write per-swap ratio CSV here")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("experiment", parents=[common], help="seeded classification trials")
    p.add_argument("--hypergraph", type=Path)
    p.add_argument("--truth", type=Path)
    p.add_argument("--n", type=int, help="vertex count override")
    p.add_argument("--blocks", help="generate a block model instead of reading files")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--p-in", type=float)
    p.add_argument("--p-out", type=float)
    p.add_argument("--labels-per-class", type=int, required=True)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--max-iters", type=int, default=DEFAULT_MAX_ITERS)
    p.add_argument("--tol", type=float, default=DEFAULT_REL_TOL)
    p.add_argument("--anchor-kind", choices=["onehot", "sign"], default="onehot")
    p.add_argument("--anchor-variance", type=float, default=0.05)
    p.set_defaults(func=cmd_experiment)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        argv = _apply_config(argv)
        args = build_parser().parse_args(argv)
        return args.func(args)
    except WasspropError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
