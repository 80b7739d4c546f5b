"""Command-line sub-commands; each delegates to the optics and qml modules."""

import argparse
import io
import json
import logging

import numpy as np

from cli.bench import GRIDS, run_bench
from cli.io import load_interferometer, parse_state, read_json, read_text, write_output
from config import SEED, THREADS, setup_logging
from optics.errors import InputError, OpticsError, ParseError
from optics.sampler import (
    estimate_overlap_algorithm1,
    estimate_prob_by_frequency,
    sample,
    write_shot_log,
)
from optics.strong_sim import (
    EvalCounter,
    adaptive_distribution,
    final_distribution,
    final_outcomes,
    inner_product_lemma1,
    joint_distribution,
    overlap_normalized,
    prob_final_estimate,
    prob_final_exact,
)
from optics.utils import derive_seed
from qml.dataset import Dataset
from qml.explicit import BINNINGS, TrainerConfig, VariationalModel, explicit_predict, explicit_train
from qml.feature_map import FeatureMapSpec, default_feature_map
from qml.kernel import GramMatrix, gram_estimated, gram_exact, gram_rows
from qml.svm import SvmModel, decision_function, svm_predict, svm_train

logger = logging.getLogger(__name__)


def _line(data) -> str:
    """One JSON record per line, keys in insertion order."""
    return json.dumps(data) + "\n"


def _load_dataset(path) -> Dataset:
    return Dataset.from_csv(read_text(path), name=str(path), source=path)


def _feature_map(args, d) -> FeatureMapSpec:
    if getattr(args, "feature_map", None):
        return FeatureMapSpec.from_json(read_json(args.feature_map), source=args.feature_map)
    return default_feature_map(d, args.modes, args.photons, args.adaptive_modes, scale=args.scale)


# ---------------------------------------------------------------------------
# Strong simulation
# ---------------------------------------------------------------------------

def cmd_simulate(args):
    a = load_interferometer(args.input, args.photons)
    if args.marginal == "joint":
        dist = joint_distribution(a, workers=args.threads)
    elif args.marginal == "final":
        dist = final_distribution(a, workers=args.threads)
    else:
        dist = adaptive_distribution(a)
    write_output(dist.to_json(), args.out)
    return 0


def cmd_prob(args):
    a = load_interferometer(args.input, args.photons)
    states = [parse_state(s) for s in args.state] if args.state else final_outcomes(a)
    lines = []
    for idx, s in enumerate(states):
        if args.estimate:
            est = prob_final_estimate(a, s, args.epsilon, args.delta,
                                      derive_seed(args.seed, f"prob-{idx}"))
            lines.append(_line({
                "state": s.to_json(), "prob": min(1.0, max(0.0, float(est.value))),
                "abs_error_bound": est.abs_error_bound, "samples_used": est.samples_used,
            }))
        else:
            lines.append(_line({"state": s.to_json(), "prob": min(1.0, prob_final_exact(a, s))}))
    write_output("".join(lines), args.out)
    return 0


def cmd_overlap(args):
    a = load_interferometer(args.input, args.photons)
    b = load_interferometer(args.other, args.photons) if args.other else a
    p, q = parse_state(args.p, "p"), parse_state(args.q, "q")
    if args.estimate:
        report = estimate_overlap_algorithm1(
            a, p, q, args.shots, derive_seed(args.seed, "overlap"), delta=args.delta,
            b=b if args.other else None, renormalize=not args.raw, workers=args.threads,
        )
        write_output(report.to_json(), args.out)
        return 0
    counter = EvalCounter()
    cross = inner_product_lemma1(a, p, b, q, counter=counter)
    result = {
        "p": p.to_json(),
        "q": q.to_json(),
        "inner_product": {"re": cross.real, "im": cross.imag},
        "overlap": overlap_normalized(a, p, b, q),
        "permanent_evals": counter.evals,
    }
    write_output(result, args.out)
    return 0


def cmd_sample(args):
    a = load_interferometer(args.input, args.photons)
    if args.target:
        report = estimate_prob_by_frequency(a, parse_state(args.target), args.shots,
                                            derive_seed(args.seed, "sample"), delta=args.delta,
                                            workers=args.threads)
        write_output(report.to_json(), args.out)
        return 0
    records = sample(a, args.shots, derive_seed(args.seed, "sample"), workers=args.threads)
    buf = io.StringIO()
    write_shot_log(records, buf)
    write_output(buf.getvalue(), args.out)
    return 0


# ---------------------------------------------------------------------------
# Kernel pipeline
# ---------------------------------------------------------------------------

def cmd_kernel(args):
    dataset = _load_dataset(args.input)
    fm = _feature_map(args, dataset.dimension)
    if args.estimate:
        gram = gram_estimated(fm, dataset, args.shots, derive_seed(args.seed, "kernel"),
                              delta=args.delta, workers=args.threads)
    else:
        gram = gram_exact(fm, dataset, workers=args.threads)
    write_output(gram.to_json(), args.out)
    return 0


def cmd_svm_train(args):
    gram = GramMatrix.from_json(read_json(args.gram), source=args.gram)
    dataset = _load_dataset(args.labels)
    model = svm_train(gram, dataset.labels, args.lam)
    write_output(model.to_json(), args.out)
    return 0


def cmd_svm_predict(args):
    model = SvmModel.from_json(read_json(args.model), source=args.model)
    if args.rows:
        data = read_json(args.rows)
        rows = data.get("rows") if isinstance(data, dict) else data
        try:
            rows = np.asarray(rows, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ParseError(f"kernel rows must be numeric ({exc})", source=args.rows) from exc
        if rows.ndim != 2:
            raise ParseError("kernel rows must be a list of lists", source=args.rows, field="rows")
    elif args.train and args.input:
        train = _load_dataset(args.train)
        points = _load_dataset(args.input)
        fm = _feature_map(args, train.dimension)
        rows = gram_rows(fm, train, points.points, exact=not args.estimate, shots=args.shots,
                         seed=derive_seed(args.seed, "predict"), delta=args.delta,
                         workers=args.threads)
    else:
        raise InputError("svm-predict needs --rows, or --train together with --input")
    result = {
        "labels": [svm_predict(model, row) for row in rows],
        "decision": [decision_function(model, row) for row in rows],
    }
    write_output(result, args.out)
    return 0


def cmd_explicit_train(args):
    dataset = _load_dataset(args.input)
    fm = _feature_map(args, dataset.dimension)
    config = TrainerConfig(
        mode="shots" if args.estimate else "exact",
        max_iter=args.max_iter,
        shots=args.shots,
        workers=args.threads,
    )
    vm, trace = explicit_train(VariationalModel.initial(fm, args.binning), dataset, config,
                               seed=derive_seed(args.seed, "explicit"))
    predictions = [explicit_predict(vm, x) for x in dataset.points]
    accuracy = float(np.mean(np.asarray(predictions) == dataset.labels))
    write_output({"model": vm.to_json(), "trace": trace.to_json(), "training_accuracy": accuracy},
                 args.out)
    return 0


def cmd_bench(args):
    report = run_bench(args.grid, seed=derive_seed(args.seed, "bench"), epsilon=args.epsilon,
                       delta=args.delta, workers=args.threads, timing=not args.no_timing)
    write_output(report.to_json(), args.out)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_mode_flags(parser):
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--exact", dest="estimate", action="store_false",
                       help="exact evaluation (default)")
    group.add_argument("--estimate", dest="estimate", action="store_true",
                       help="randomized / shot-based estimation")
    parser.set_defaults(estimate=False)


def _add_feature_map_flags(parser):
    parser.add_argument("--feature-map", help="feature-map JSON file (overrides the flags below)")
    parser.add_argument("--modes", type=int, default=3)
    parser.add_argument("--photons", type=int, default=2)
    parser.add_argument("--adaptive-modes", type=int, default=1)
    parser.add_argument("--scale", type=float, default=2.0 * np.pi,
                        help="data scaling before wrapping into [0, 2π)")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=SEED)
    common.add_argument("--threads", type=int, default=THREADS)
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--log-level", default=None)
    common.add_argument("--delta", type=float, default=0.05)

    parser = argparse.ArgumentParser(
        prog="optics", description="Adaptive linear-optics simulator and quantum-kernel toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="exact output distribution")
    p.add_argument("--input", required=True)
    p.add_argument("--photons", type=int)
    p.add_argument("--marginal", choices=("joint", "final", "adaptive"), default="joint")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("prob", parents=[common], help="final-outcome probabilities")
    p.add_argument("--input", required=True)
    p.add_argument("--photons", type=int)
    p.add_argument("--state", action="append", help="final outcome, e.g. [1,1] (repeatable)")
    p.add_argument("--epsilon", type=float, default=0.1)
    _add_mode_flags(p)
    p.set_defaults(func=cmd_prob)

    p = sub.add_parser("overlap", parents=[common], help="output-state overlap")
    p.add_argument("--input", required=True)
    p.add_argument("--other", help="second interferometer (default: same as --input)")
    p.add_argument("--photons", type=int)
    p.add_argument("--p", required=True)
    p.add_argument("--q", required=True)
    p.add_argument("--shots", type=int, default=10000)
    p.add_argument("--raw", action="store_true",
                   help="use the raw projection probability instead of the normalised overlap")
    _add_mode_flags(p)
    p.set_defaults(func=cmd_overlap)

    p = sub.add_parser("sample", parents=[common], help="shot sampling")
    p.add_argument("--input", required=True)
    p.add_argument("--photons", type=int)
    p.add_argument("--shots", type=int, default=1000)
    p.add_argument("--target", help="final outcome to estimate by frequency instead of logging shots")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("kernel", parents=[common], help="Gram matrix of a dataset")
    p.add_argument("--input", required=True)
    p.add_argument("--shots", type=int, default=10000)
    _add_feature_map_flags(p)
    _add_mode_flags(p)
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("svm-train", parents=[common], help="train the dual SVM on a Gram matrix")
    p.add_argument("--gram", required=True)
    p.add_argument("--labels", required=True, help="dataset CSV providing the labels")
    p.add_argument("--lambda", dest="lam", type=float, default=0.01)
    p.set_defaults(func=cmd_svm_train)

    p = sub.add_parser("svm-predict", parents=[common], help="predict labels with a trained SVM")
    p.add_argument("--model", required=True)
    p.add_argument("--rows", help="JSON kernel rows against the training set")
    p.add_argument("--train", help="training dataset CSV (to compute kernel rows)")
    p.add_argument("--input", help="points to classify (CSV)")
    p.add_argument("--shots", type=int, default=10000)
    _add_feature_map_flags(p)
    _add_mode_flags(p)
    p.set_defaults(func=cmd_svm_predict)

    p = sub.add_parser("explicit-train", parents=[common], help="train the variational classifier")
    p.add_argument("--input", required=True)
    p.add_argument("--shots", type=int, default=1000)
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--binning", choices=sorted(BINNINGS), default="parity-first-mode")
    _add_feature_map_flags(p)
    _add_mode_flags(p)
    p.set_defaults(func=cmd_explicit_train)

    p = sub.add_parser("bench", parents=[common], help="scaling benchmark over an (m, n, k, r) grid")
    p.add_argument("--grid", choices=sorted(GRIDS), default="default",
                   help="m in {4,6,8,10}, n in {1..4}, k in {0..3} by default; small is a quick subset")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--no-timing", action="store_true",
                   help="omit wall times so the report is byte-identical across runs")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse already printed usage; map its status onto the input-error code
        return 0 if exc.code == 0 else InputError.exit_code
    setup_logging(args.log_level)
    try:
        return args.func(args)
    except OpticsError as exc:
        logger.error("%s failed: %s", args.command, exc)
        return exc.exit_code
    except Exception:
        logger.exception("%s failed with an unexpected error", args.command)
        return OpticsError.exit_code
