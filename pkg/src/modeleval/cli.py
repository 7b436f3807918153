"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 degenerate statistic.
Every command needs ``--seed``; identical flags give byte-identical JSON.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from . import algo_tests, estimators, model_tests, resampling, selection, simulate
from .core import (
    CorrectnessMatrix,
    DataError,
    DegenerateStatisticError,
    LearnerSpec,
    ModelEvalError,
    as_seed,
    correctness_matrix,
    derive_stream,
)
from .dataio import FORMATS, emit_report, ingest_dataset, ingest_predictions, write_table
from .learners import LEARNERS, load_iris, make_blobs, make_circles

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DEGENERATE = 0, 1, 2, 3
BUILTINS = ("iris", "circles", "blobs")
CI_NAMES = {"none": "none", "normal": "normal_approx", "se-t": "se_t", "percentile": "percentile"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _params(items: Sequence[str] | None) -> dict[str, Any]:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise UsageError(f"expected NAME=VALUE, got {item!r}")
        out[key] = _value(value)
    return out


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


# ---------------------------------------------------------------------------
# argument groups


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, required=True, help="master seed (required)")
    p.add_argument("--format", choices=FORMATS, default="json")
    p.add_argument("--output", default=None, help="write the report here instead of stdout")
    p.add_argument("--threads", type=int, default=1)


def _data_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="CSV with a header row")
    src.add_argument("--builtin", choices=BUILTINS)
    p.add_argument("--label", default="-1", help="label column name or index (default: last)")
    p.add_argument("--n", type=int, default=300, help="size of a synthetic builtin dataset")
    p.add_argument("--noise", type=float, default=0.2, help="noise of a synthetic builtin")


def _learner_args(p: argparse.ArgumentParser, suffix: str = "", default: str = "knn") -> None:
    p.add_argument(f"--learner{suffix}", choices=LEARNERS, default=default)
    p.add_argument(f"--param{suffix}", action="append", metavar="NAME=VALUE")


def _stratify_arg(p: argparse.ArgumentParser, default: bool) -> None:
    p.add_argument("--stratify", action=argparse.BooleanOptionalAction, default=default)


def _grid_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--learner", choices=LEARNERS, default="knn")
    p.add_argument("--axis", action="append", required=True, metavar="NAME=V1,V2,...")
    p.add_argument("--simpler", action="append", metavar="NAME=larger|smaller",
                   help="which direction of an axis gives the simpler model")
    p.add_argument("--param", action="append", metavar="NAME=VALUE", help="fixed hyperparameter")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="modeleval", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("split", help="emit a resampling plan")
    _common(p)
    _data_args(p)
    p.add_argument("--method", choices=("holdout", "kfold", "loocv", "bootstrap", "5x2"),
                   default="holdout")
    p.add_argument("--test-fraction", type=float, default=1 / 3)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--rounds", type=int, default=resampling.DEFAULT_BOOTSTRAP_ROUNDS)
    _stratify_arg(p, True)

    p = sub.add_parser("evaluate", help="estimate generalization accuracy")
    _common(p)
    _data_args(p)
    _learner_args(p)
    p.add_argument("--method", default="holdout",
                   choices=("holdout", "repeated-holdout", "kfold", "loocv", "boot-oob",
                            "boot-632", "boot-632plus"))
    p.add_argument("--ci", choices=tuple(CI_NAMES), default="none")
    p.add_argument("--confidence", type=float, default=0.95)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--rounds", type=int, default=resampling.DEFAULT_BOOTSTRAP_ROUNDS,
                   help="bootstrap rounds or holdout repetitions")
    p.add_argument("--test-fraction", type=float, default=1 / 3)
    p.add_argument("--gamma", choices=("class", "pairs"), default="class",
                   help="no-information rate for .632+")
    p.add_argument("--emit-plot-data", metavar="CSV", help="per-round accuracies as tidy CSV")
    _stratify_arg(p, True)

    p = sub.add_parser("learning-curve", help="train/test accuracy against training size")
    _common(p)
    _data_args(p)
    _learner_args(p)
    p.add_argument("--sizes", required=True, help="comma-separated training sizes")
    p.add_argument("--test-fraction", type=float, default=1 / 3)
    p.add_argument("--emit-plot-data", metavar="CSV")

    p = sub.add_parser("compare-predictions", help="compare models from their predictions")
    _common(p)
    p.add_argument("--predictions", required=True, help="CSV: y_true, then model columns")
    p.add_argument("--test", required=True,
                   choices=("mcnemar", "mcnemar-exact", "cochran-q", "f-test", "z-prop"))
    p.add_argument("--models", help="comma-separated model columns to use (default: all)")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--uncorrected", action="store_true", help="McNemar without continuity correction")

    p = sub.add_parser("compare-algorithms", help="compare two learning algorithms")
    _common(p)
    _data_args(p)
    _learner_args(p, "1")
    _learner_args(p, "2")
    p.add_argument("--test", required=True, choices=("resampled-t", "kfold-t", "5x2t", "5x2f"))
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--repetitions", type=int, default=algo_tests.DEFAULT_REPETITIONS)
    p.add_argument("--test-fraction", type=float, default=1 / 3)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--independent-seeds", action="store_true")
    p.add_argument("--emit-plot-data", metavar="CSV", help="per-round log as CSV")

    p = sub.add_parser("select", help="hyperparameter selection")
    _common(p)
    _data_args(p)
    _grid_args(p)
    p.add_argument("--method", choices=("kfold", "three-way"), default="kfold")
    p.add_argument("--rule", choices=("best-mean", "one-se"), default="best-mean")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--test-fraction", type=float, default=0.3,
                   help="withheld test fraction; 0 selects on all data")
    p.add_argument("--fractions", default="0.6,0.2,0.2", help="train,val,test for three-way")
    p.add_argument("--refit-on-all", action="store_true")
    _stratify_arg(p, True)

    p = sub.add_parser("nested-cv", help="nested cross-validation")
    _common(p)
    _data_args(p)
    _grid_args(p)
    p.add_argument("--outer-k", type=int, default=5)
    p.add_argument("--inner-k", type=int, default=2)
    p.add_argument("--rule", choices=("best-mean", "one-se"), default="best-mean")
    _stratify_arg(p, True)

    p = sub.add_parser("simulate", help="Monte Carlo Type-I error study")
    _common(p)
    p.add_argument("--worlds", type=int, default=500)
    p.add_argument("--null-mode", choices=simulate.NULL_MODES, default=simulate.NULL_MODES[0])
    p.add_argument("--tests", default="resampled_t,5x2cv_t",
                   help="comma-separated: " + ", ".join(simulate.ALGORITHM_TESTS
                                                         + simulate.PREDICTION_TESTS))
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--generator", choices=simulate.GENERATORS, default="circles")
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--noise", type=float, default=0.2)
    p.add_argument("--feature-jitter", type=float, default=0.9)
    p.add_argument("--repetitions", type=int, default=30)
    return parser


# ---------------------------------------------------------------------------
# commands


def _dataset(args):
    if args.data is not None:
        label = int(args.label) if args.label.lstrip("-").isdigit() else args.label
        return ingest_dataset(args.data, label)
    if args.builtin == "iris":
        return load_iris()
    data_seed = derive_stream(args.seed, 1_000_003)
    if args.builtin == "circles":
        return make_circles(args.n, args.noise, data_seed)
    return make_blobs(args.n // 2, 2, 2, spread=max(args.noise * 10.0, 1e-9), seed=data_seed)


def _spec(args, suffix: str = "") -> LearnerSpec:
    return LearnerSpec(getattr(args, f"learner{suffix}"), _params(getattr(args, f"param{suffix}")))


def _grid(args) -> selection.Grid:
    axes = {}
    for item in args.axis:
        key, sep, values = item.partition("=")
        if not sep:
            raise UsageError(f"expected NAME=V1,V2,..., got {item!r}")
        axes[key] = [_value(v) for v in values.split(",") if v.strip()]
    simpler = {k: str(v) for k, v in _params(args.simpler).items()}
    return selection.Grid(args.learner, axes, simpler, _params(args.param))


def _table(columns, rows, **meta) -> dict:
    return {"kind": "table", "columns": list(columns), "rows": [list(r) for r in rows], **meta}


def cmd_split(args):
    data = _dataset(args)
    seed = as_seed(args.seed)
    rows = []
    if args.method == "holdout":
        plan = resampling.holdout_split(data.n, data.labels, args.test_fraction, args.stratify, seed)
        rows = [(0, "train", int(i)) for i in plan.train_indices]
        rows += [(0, "test", int(i)) for i in plan.test_indices]
    elif args.method in ("kfold", "loocv"):
        plan = (resampling.loocv_plan(data.n) if args.method == "loocv" else
                resampling.kfold_plan(data.n, data.labels, args.k, args.stratify, seed))
        rows = [(f, "test", int(i)) for f, fold in enumerate(plan.folds) for i in fold]
    elif args.method == "bootstrap":
        plan = resampling.bootstrap_plan(data.n, args.rounds, seed)
        for r, rnd in enumerate(plan.rounds):
            rows += [(r, "in_bag", int(i)) for i in rnd.in_bag]
            rows += [(r, "out_of_bag", int(i)) for i in rnd.out_of_bag]
    else:
        for r, (first, second) in enumerate(resampling.five_by_two_plan(
                data.n, data.labels, seed, args.stratify)):
            rows += [(r, "half_0", int(i)) for i in first.train_indices]
            rows += [(r, "half_1", int(i)) for i in first.test_indices]
    return _table(("round", "role", "index"), rows, method=args.method, seed=seed.to_dict())


def cmd_evaluate(args):
    data = _dataset(args)
    spec = _spec(args)
    seed = as_seed(args.seed)
    plan_seed, fit_seed = derive_stream(seed, 0), derive_stream(seed, 1)
    ci = CI_NAMES[args.ci]
    m = args.method
    n_test = None
    if m == "holdout":
        plan = resampling.holdout_split(data.n, data.labels, args.test_fraction, args.stratify,
                                        plan_seed)
        report = estimators.evaluate_holdout(spec, data, plan, fit_seed)
        n_test = int(plan.test_indices.size)
    elif m == "repeated-holdout":
        plans = resampling.repeated_holdout_plan(data.n, data.labels, args.test_fraction,
                                                 args.rounds, args.stratify, plan_seed)
        report = estimators.evaluate_repeated_holdout(spec, data, plans, fit_seed)
    elif m in ("kfold", "loocv"):
        folds = (resampling.loocv_plan(data.n) if m == "loocv" else
                 resampling.kfold_plan(data.n, data.labels, args.k, args.stratify, plan_seed))
        report = estimators.evaluate_kfold(spec, data, folds, fit_seed)
    else:
        bplan = resampling.bootstrap_plan(data.n, args.rounds, plan_seed)
        est = estimators.bootstrap_oob(spec, data, bplan, fit_seed)
        if m == "boot-632":
            est = estimators.bootstrap_632(est)
        elif m == "boot-632plus":
            gamma = estimators.full_data_gamma(spec, data, fit_seed, pairs=args.gamma == "pairs")
            est = estimators.bootstrap_632plus(est, gamma)
        report = est.to_report(seed)
    if ci == "normal_approx" and n_test is None:
        raise UsageError("--ci normal applies to --method holdout only")
    if ci in ("se_t", "percentile") and len(report.per_round) < 2:
        raise UsageError(f"--ci {args.ci} needs a method with several rounds")
    report = estimators.attach_ci(report, ci, args.confidence, n_test)
    if args.emit_plot_data:
        write_table(("round", "accuracy"), list(enumerate(report.per_round)), args.emit_plot_data)
    return report


def cmd_learning_curve(args):
    data = _dataset(args)
    seed = as_seed(args.seed)
    plan = resampling.holdout_split(data.n, data.labels, args.test_fraction, True,
                                    derive_stream(seed, 0))
    sizes = [int(s) for s in _floats(args.sizes)]
    points = estimators.learning_curve(_spec(args), data, sizes, plan, derive_stream(seed, 1))
    rows = [(p.train_size, p.train_acc, p.test_acc) for p in points]
    columns = ("train_size", "train_acc", "test_acc")
    if args.emit_plot_data:
        write_table(columns, rows, args.emit_plot_data)
    return _table(columns, rows, seed=seed.to_dict())


def cmd_compare_predictions(args):
    preds = ingest_predictions(args.predictions)
    names, columns = preds.model_names, preds.predictions
    if args.models:
        wanted = [m.strip() for m in args.models.split(",")]
        missing = [m for m in wanted if m not in names]
        if missing:
            raise DataError(f"unknown model column(s): {missing}")
        columns = [columns[names.index(m)] for m in wanted]
        names = wanted
    if len(columns) < 2:
        raise DataError("comparison needs at least two model columns")
    pairwise = args.test in ("mcnemar", "mcnemar-exact", "z-prop")
    if pairwise and len(columns) != 2:
        raise DataError(f"{args.test} compares exactly two models; pick them with --models")
    y = preds.y_true
    if args.test == "mcnemar":
        report = model_tests.mcnemar_test(model_tests.mcnemar_table(y, *columns),
                                          corrected=not args.uncorrected, alpha=args.alpha)
    elif args.test == "mcnemar-exact":
        report = model_tests.mcnemar_exact(model_tests.mcnemar_table(y, *columns), args.alpha)
    elif args.test == "z-prop":
        table = model_tests.mcnemar_table(y, *columns)
        report = model_tests.proportions_z_test(table.accuracy1, table.accuracy2, table.n,
                                                args.alpha)
    else:
        matrix: CorrectnessMatrix = correctness_matrix(y, columns)
        fn = model_tests.cochrans_q if args.test == "cochran-q" else model_tests.looney_f_test
        report = fn(matrix, args.alpha)
    details = dict(report.details)
    details["models"] = names
    return type(report)(**{**report.__dict__, "details": details})


def cmd_compare_algorithms(args):
    data = _dataset(args)
    s1, s2 = _spec(args, "1"), _spec(args, "2")
    kw = {"seed": args.seed, "alpha": args.alpha, "independent_seeds": args.independent_seeds}
    if args.test == "resampled-t":
        report = algo_tests.paired_t_resampled(s1, s2, data, args.repetitions, args.test_fraction,
                                               **kw)
    elif args.test == "kfold-t":
        report = algo_tests.paired_t_kfold(s1, s2, data, args.k, **kw)
    elif args.test == "5x2t":
        report = algo_tests.paired_t_5x2cv(s1, s2, data, **kw)
    else:
        report = algo_tests.combined_f_5x2cv(s1, s2, data, **kw)
    if args.emit_plot_data:
        write_table(("round", "half", "acc1", "acc2", "diff"),
                    [(r.round, r.half, r.acc1, r.acc2, r.diff) for r in report.rounds],
                    args.emit_plot_data)
    return report


def _rule(args) -> str:
    return args.rule.replace("-", "_")


def cmd_select(args):
    data = _dataset(args)
    grid = _grid(args)
    if args.method == "three-way":
        fractions = _floats(args.fractions)
        if len(fractions) != 3:
            raise UsageError("--fractions needs three values")
        return selection.three_way_holdout_select(grid, data, tuple(fractions), args.seed,
                                                  args.stratify, args.refit_on_all)
    test_fraction = args.test_fraction if args.test_fraction > 0 else None
    return selection.select_kfold(grid, data, args.k, args.stratify, test_fraction, _rule(args),
                                  args.seed, args.refit_on_all)


def cmd_nested_cv(args):
    data = _dataset(args)
    return selection.nested_cv(_grid(args), data, args.outer_k, args.inner_k, args.stratify,
                               args.seed, _rule(args))


def cmd_simulate(args):
    tests = tuple(t.strip() for t in args.tests.split(",") if t.strip())
    config = simulate.SimulationConfig(
        world_count=args.worlds, null_mode=args.null_mode, alpha=args.alpha, tests=tests,
        generator=args.generator, n=args.n, noise=args.noise, feature_jitter=args.feature_jitter,
        repetitions=args.repetitions, seed=args.seed)
    return simulate.run_type1_study(config, threads=args.threads)


COMMANDS = {
    "split": cmd_split,
    "evaluate": cmd_evaluate,
    "learning-curve": cmd_learning_curve,
    "compare-predictions": cmd_compare_predictions,
    "compare-algorithms": cmd_compare_algorithms,
    "select": cmd_select,
    "nested-cv": cmd_nested_cv,
    "simulate": cmd_simulate,
}


def _validate_paths(args) -> None:
    for attr in ("data", "predictions"):
        path = getattr(args, attr, None)
        if path is not None and not Path(path).is_file():
            raise DataError(f"no such file: {path}")
    for attr in ("output", "emit_plot_data"):
        path = getattr(args, attr, None)
        if path not in (None, "-") and not Path(path).resolve().parent.is_dir():
            raise DataError(f"directory of {path} does not exist")
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _validate_paths(args)
        report = COMMANDS[args.command](args)
        emit_report(report, args.format, args.output)
    except UsageError as exc:
        print(f"modeleval: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateStatisticError as exc:
        print(f"modeleval: degenerate statistic: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ModelEvalError, ValueError) as exc:
        print(f"modeleval: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    main_entry()
