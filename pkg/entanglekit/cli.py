"""Command-line surface: one cmd_* function per subcommand.

Each cmd_* takes parsed arguments plus a RunConfig and returns a JSON-ready
report; main() wires argparse, config resolution and exit codes.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import load_config
from .data_tensor import (
    canonical_entanglements,
    embed_dataset,
    empirical_data_tensor_dense,
    level_averages,
    minibatches,
    pad_to_power_of_two,
)
from .errors import EntangleKitError, PreconditionError
from .experiments import DEFAULT_SWAP_COUNTS, run_swap_series, write_report
from .io import (
    load_dataset,
    load_permutation,
    load_tensor,
    save_dataset,
    save_network,
    save_permutation,
    save_tensor,
    write_json,
)
from .partitions import build_compatible_map
from .rearrange import apply_permutation, random_swaps, rearrange_pdim
from .surrogate import build_correlation_graph, canonical_surrogates
from .synth import KINDS, LABEL_MODES, generate, shuffle_features
from .tensor_core import norm
from .tree_tn import (
    check_necessary_bounds,
    check_sufficient_condition,
    fit_hierarchical,
    grasedyck_constant,
    tail_bound,
)
from .utils import integer_root, log2_exact

logger = logging.getLogger(__name__)


# ── Helpers ───────────────────────────────────────────────────────────


def parse_levels(text):
    """'A..B' or 'A' -> (A, B)."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            return int(lo), int(hi)
        return int(text), int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"levels must look like A..B, got {text!r}")


def resolve_config(args, data_path=None):
    """Load the config file tier and apply command-line overrides."""
    config = load_config(config_path=args.config, data_path=data_path)
    levels = getattr(args, "levels", None)
    return config.with_overrides(
        seed=args.seed,
        restarts=args.restarts,
        level_min=levels[0] if levels else None,
        level_max=levels[1] if levels else None,
        width=getattr(args, "width", None),
        theta=args.theta,
        embedding=args.embedding,
        mem_budget=args.mem_budget,
        exact_cut=True if args.exact_cut else None,
        one_vs_all=args.one_vs_all,
    )


def _load(path, config):
    """Dataset padded to a power of two: (raw, representation for entanglement)."""
    ds = load_dataset(path, one_vs_all_class=config.one_vs_all, seed=config.seed)
    embedding = config.embedding or ds.metadata.get("embedding", "raw")
    theta = config.theta if config.embedding else ds.metadata.get("theta", config.theta)
    ds = pad_to_power_of_two(ds, raw_scalar=embedding == "sincos")
    embedded = embed_dataset(ds, theta) if embedding == "sincos" else ds
    return ds, embedded


def _emit(report, output):
    if output:
        write_json(report, output)
    else:
        print(json.dumps(report, indent=2, sort_keys=True))


# ── Commands ──────────────────────────────────────────────────────────


def cmd_entangle(args, config):
    """Per-partition entanglement of the empirical data tensor plus level averages."""
    _, ds = _load(args.dataset, config)
    cmap = ds.compatible_map()
    levels = config.levels(log2_exact(ds.side))
    batches = minibatches(ds, config.batch_size, config.batches, config.seed)
    per_batch = [canonical_entanglements(b, levels, cmap, config.worker_count(),
                                         config.eig_tol, config.sv_tol) for b in batches]
    entries = [(part, sum(run[i][1] for run in per_batch) / len(per_batch))
               for i, (part, _) in enumerate(per_batch[0])]
    averages = level_averages(entries)
    report = {
        "M": ds.M,
        "N": ds.N,
        "D": ds.D,
        "P": ds.dim,
        "levels": levels,
        "batches": len(batches),
        "partitions": [{**p.to_json(), "entanglement": v} for p, v in entries],
        "level_averages": {str(k): v for k, v in averages.items()},
        "average": sum(v for _, v in entries) / len(entries),
    }
    _emit(report, args.output)
    if args.output:
        print(f"Average entanglement over levels {levels[0]}..{levels[-1]}: "
              f"{report['average']:.6f}")
    return report


def _correlation_input(raw, embedded, config):
    return embedded if config.correlate_on == "embedded" else raw


def cmd_rearrange(args, config):
    """Write a feature permutation and report surrogate entanglement before and after."""
    raw, embedded = _load(args.dataset, config)
    workers = config.worker_count()
    graph = build_correlation_graph(_correlation_input(raw, embedded, config), workers)
    levels = config.levels(log2_exact(raw.side))
    perm = rearrange_pdim(raw, raw.dim, seed=config.seed, restarts=config.restarts,
                          exact=config.exact_cut, spectral=config.spectral_init,
                          workers=workers, graph=graph)
    before = [v for _, v in canonical_surrogates(graph, raw.side, raw.dim, levels)]
    after = [v for _, v in canonical_surrogates(graph, raw.side, raw.dim, levels, perm)]
    report = {
        "levels": levels,
        "surrogate_before": sum(before) / len(before),
        "surrogate_after": sum(after) / len(after),
        "padded": raw.padded,
    }
    if args.export_graph:
        save_tensor(graph.weights, args.export_graph)
    if raw.padded:
        # the file must apply to the dataset as stored, without padding
        perm = perm.restricted(raw.n_original)
    if args.output:
        save_permutation(perm, args.output)
        report["permutation"] = str(args.output)
    else:
        report["permutation"] = perm.to_json()
    print(json.dumps(report, indent=2, sort_keys=True))
    return report


def cmd_apply(args, config):
    """Reorder a dataset's features by a permutation file."""
    ds = load_dataset(args.dataset)
    perm = load_permutation(args.permutation)
    if args.inverse:
        perm = perm.inverse()
    out = apply_permutation(ds, perm)
    path = save_dataset(out, args.output)
    print(f"Wrote {path}")
    return {"output": str(path), "N": out.N}


def cmd_swapgen(args, config):
    """Apply k seeded random position swaps."""
    ds = load_dataset(args.dataset)
    out = random_swaps(ds, args.k, seed=config.seed)
    path = save_dataset(out, args.output)
    print(f"Wrote {path} ({args.k} swaps, seed {config.seed})")
    return {"output": str(path), "k": args.k}


def _fit_target(args, config):
    path = Path(args.input)
    if path.suffix == ".csv":
        _, ds = _load(path, config)
        cmap = ds.compatible_map()
        return empirical_data_tensor_dense(ds, cmap, config.mem_budget), cmap
    tensor = load_tensor(path)
    side = integer_root(tensor.ndim, config.dim)
    return tensor, build_compatible_map(side, config.dim)


def cmd_tnfit(args, config):
    """Fit a width-R network; report the error and the entanglement bounds."""
    tensor, cmap = _fit_target(args, config)
    width = config.width
    tn, error = fit_hierarchical(tensor, width, cmap, config.mem_budget)
    a_norm = norm(tensor)
    report = {
        "R": width,
        "N": cmap.side,
        "P": cmap.dim,
        "norm": a_norm,
        "achieved_error": error,
        "relative_error": error / a_norm,
        "tail_bound": tail_bound(tensor, width, cmap),
        "grasedyck_constant": grasedyck_constant(tensor.ndim),
        "parameters": tn.n_parameters(),
    }
    if error <= a_norm / 4:
        reports = check_necessary_bounds(tensor, width, error, cmap, config.sv_tol)
        report["necessary"] = [r.to_json() for r in reports]
        report["necessary_violations"] = sum(1 for r in reports if not r.holds)
    else:
        logger.info("Fit error exceeds ||A||/4; necessary-condition check skipped")
    eps = args.eps if args.eps is not None else max(error, 1e-12 * a_norm)
    report["sufficient"] = check_sufficient_condition(
        tensor, width, eps, cmap, config.mem_budget, config.sv_tol).to_json()
    if args.output:
        save_network(tn, args.output)
        report["network"] = str(args.output)
    print(json.dumps(report, indent=2, sort_keys=True))
    return report


def cmd_synth(args, config):
    """Write a synthetic dataset; optionally scramble it and save the scramble."""
    ds = generate(args.kind, args.M, args.N, rho=args.rho, D=args.D,
                  seed=config.seed, labels=args.labels, scale=args.scale)
    report = {"kind": args.kind, "M": ds.M, "N": ds.N, "seed": config.seed}
    if args.shuffle:
        ds, sigma = shuffle_features(ds, seed=config.seed)
        sigma_path = Path(args.output).with_suffix(".perm.json")
        save_permutation(sigma, sigma_path)
        report["shuffle"] = str(sigma_path)
    path = save_dataset(ds, args.output, embedding=args.embedding or "raw",
                        theta=config.theta)
    report["output"] = str(path)
    print(f"Wrote {path}")
    return report


def cmd_swapseries(args, config):
    """Swap-series experiment over several seeds."""
    raw, _ = _load(args.dataset, config)
    if config.embedding is None:
        config = config.with_overrides(embedding=raw.metadata.get("embedding", "raw"))
    swaps = [int(k) for k in args.swaps.split(",")] if args.swaps else DEFAULT_SWAP_COUNTS
    report = run_swap_series(raw, swaps, range(args.seeds), config)
    md_path = write_report(report, args.output)
    print(f"Full report: {md_path}")
    return report


COMMANDS = {
    "entangle": cmd_entangle,
    "rearrange": cmd_rearrange,
    "apply": cmd_apply,
    "swapgen": cmd_swapgen,
    "tnfit": cmd_tnfit,
    "synth": cmd_synth,
    "swapseries": cmd_swapseries,
}


# ── Argument parsing ──────────────────────────────────────────────────


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None,
                        help="Path to a YAML run config")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--restarts", type=int, default=None,
                        help="Kernighan-Lin restarts per cut (default: 8)")
    common.add_argument("--levels", type=parse_levels, default=None,
                        help="Canonical levels to average, A..B (default: 1..min(5, L))")
    common.add_argument("--theta", type=float, default=None,
                        help="Sine-cosine embedding scale (default: 0.085)")
    common.add_argument("--embedding", choices=["raw", "sincos"], default=None)
    common.add_argument("--one-vs-all", type=int, default=None, metavar="CLASS",
                        help="Reduce class labels to CLASS vs the rest, balanced")
    common.add_argument("--mem-budget", type=int, default=None,
                        help="Largest dense tensor allowed, in entries")
    common.add_argument("--exact-cut", action="store_true",
                        help="Exhaustive cuts for small blocks")
    common.add_argument("--verbose", "-v", action="store_true")

    parser = argparse.ArgumentParser(
        prog="entanglekit",
        description="Entanglement of data tensors and locality-aware feature arrangement")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("entangle", parents=[common],
                       help="Entanglement under canonical partitions")
    p.add_argument("dataset", type=Path)
    p.add_argument("--output", "-o", type=Path, default=None)

    p = sub.add_parser("rearrange", parents=[common], help="Compute a feature permutation")
    p.add_argument("dataset", type=Path)
    p.add_argument("--output", "-o", type=Path, default=None,
                   help="Permutation JSON to write")
    p.add_argument("--export-graph", type=Path, default=None,
                   help="Also write the correlation matrix as an LCTN tensor")

    p = sub.add_parser("apply", parents=[common], help="Apply a permutation to a dataset")
    p.add_argument("dataset", type=Path)
    p.add_argument("permutation", type=Path)
    p.add_argument("--inverse", action="store_true")
    p.add_argument("--output", "-o", type=Path, required=True)

    p = sub.add_parser("swapgen", parents=[common], help="Random position swaps")
    p.add_argument("dataset", type=Path)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--output", "-o", type=Path, required=True)

    p = sub.add_parser("tnfit", parents=[common], help="Fit a width-R tensor network")
    p.add_argument("input", type=Path, help="LCTN tensor file or dataset CSV")
    p.add_argument("--width", "-R", type=int, default=None)
    p.add_argument("--eps", type=float, default=None,
                   help="Target error for the sufficient condition (default: achieved)")
    p.add_argument("--output", "-o", type=Path, default=None, help="Network JSON to write")

    p = sub.add_parser("synth", parents=[common], help="Generate a synthetic dataset")
    p.add_argument("kind", choices=KINDS)
    p.add_argument("--M", type=int, default=500)
    p.add_argument("--N", type=int, default=16)
    p.add_argument("--D", type=int, default=1)
    p.add_argument("--rho", type=float, default=0.9)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--labels", choices=LABEL_MODES, default="ones")
    p.add_argument("--shuffle", action="store_true",
                   help="Scramble features; the permutation goes next to the output")
    p.add_argument("--output", "-o", type=Path, required=True)

    p = sub.add_parser("swapseries", parents=[common], help="Swap-series experiment")
    p.add_argument("dataset", type=Path)
    p.add_argument("--swaps", type=str, default=None, help="Comma-separated swap counts")
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--output", "-o", type=Path, required=True, help="Report directory")

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    data_path = getattr(args, "dataset", None) or getattr(args, "input", None)
    try:
        config = resolve_config(args, data_path)
        COMMANDS[args.command](args, config)
    except EntangleKitError as e:
        logger.error("%s", e)
        return e.exit_code
    except FileNotFoundError as e:
        logger.error("%s", e)
        return PreconditionError.exit_code
    return 0


def run():
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s")
    sys.exit(main())
