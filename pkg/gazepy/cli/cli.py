"""
Command-line entry point, `gazepy <command> [options]`
"""

import argparse
import json
import os
import sys

import pandas as pd

import gazepy.analysis as analysis
import gazepy.evaluation as evaluation
import gazepy.learning as learning
import gazepy.plotting as plotting
import gazepy.synthetic as synthetic
from gazepy.gaze import Load_Dataset, Load_Image, Save_Dataset
from gazepy.itti import Check_Subset
from gazepy.utils import Config_Fingerprint, Constants, User


COMMANDS = (
    "analyze",
    "agreement",
    "centerbias",
    "train",
    "predict",
    "evaluate",
    "synth",
)

TABLES = ("subset", "learned", "patch", "comparison")


def Parse_Subset(text: str) -> tuple[int, int | None]:
    """'s' or 's-e' as (s, e), e None when not given"""

    start, _, end = text.partition("-")

    try:
        return int(start), (int(end) if end else None)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"Subset must look like 3 or 3-4, got '{text}'"
        )


def Parse_Grid(text: str) -> tuple[float, ...]:
    try:
        grid = tuple(float(value) for value in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"Grid must be comma-separated floats, got '{text}'"
        )

    if any(not 0 <= value <= 1 for value in grid):
        raise argparse.ArgumentTypeError(
            f"Grid values must lie in [0, 1], got '{text}'"
        )

    return grid


def Write_Fingerprint(args: argparse.Namespace, **extra) -> dict:
    """fingerprint.json in the output directory, returned as a dict"""

    settings = {
        key: value
        for key, value in vars(args).items()
        if key not in ("function", "output", "verbose", "threads")
    }
    fingerprint = Config_Fingerprint(**settings, **extra)

    os.makedirs(args.output, exist_ok=True)
    path = os.path.join(args.output, "fingerprint.json")
    with open(path, "w", encoding="utf-8") as file:
        json.dump(fingerprint, file, indent=2, sort_keys=True)
        file.write("\n")

    return fingerprint


def Output_Path(args: argparse.Namespace, name: str) -> str:
    return os.path.join(args.output, name)


def Run_Analyze(args: argparse.Namespace) -> int:

    dataset = Load_Dataset(args.manifest)
    fingerprint = Write_Fingerprint(args)

    report = analysis.Explorativeness_Report(
        dataset, args.sigma, args.bins, args.threads, args.verbose
    )

    summary = pd.DataFrame({"mean_entropy": report.group_means})
    summary.index.name = "group"
    summary["spearman_rho"] = report.spearman_rho
    summary["pearson_r"] = report.pearson_r

    least = pd.concat(
        [
            analysis.Least_Explored_Images(report, group, args.least)
            for group in report.group_means.index
        ]
    )

    evaluation.Write_Report_Csv(
        report.per_image, Output_Path(args, "entropy.csv"), fingerprint, index=False
    )
    evaluation.Write_Report_Csv(
        summary, Output_Path(args, "entropy_summary.csv"), fingerprint
    )
    evaluation.Write_Report_Csv(
        least, Output_Path(args, "least_explored.csv"), fingerprint, index=False
    )

    if args.verbose:
        print(evaluation.Format_Table(summary))

    return 0


def Run_Agreement(args: argparse.Namespace) -> int:

    dataset = Load_Dataset(args.manifest)
    fingerprint = Write_Fingerprint(args)

    matrix = analysis.Agreement_Matrix(
        dataset, args.sigma, args.thresholds, args.threads, args.verbose
    )
    intra, spearman_rho, pearson_r = analysis.Intra_Group_Trend(matrix)

    trend = pd.DataFrame({"intra": intra})
    trend.index.name = "group"
    trend["spearman_rho"] = spearman_rho
    trend["pearson_r"] = pearson_r

    evaluation.Write_Report_Csv(
        matrix.scores, Output_Path(args, "agreement.csv"), fingerprint
    )
    evaluation.Write_Report_Csv(
        matrix.image_counts, Output_Path(args, "agreement_counts.csv"), fingerprint
    )
    evaluation.Write_Report_Csv(trend, Output_Path(args, "intra_trend.csv"), fingerprint)

    if args.verbose:
        print(evaluation.Format_Table(matrix.scores))

    return 0


def Run_Center_Bias(args: argparse.Namespace) -> int:

    dataset = Load_Dataset(args.manifest)
    fingerprint = Write_Fingerprint(args)

    scores = analysis.Center_Bias_Scores(dataset, args.sigma, args.thresholds)
    table = scores.to_frame()
    table.index.name = "group"

    evaluation.Write_Report_Csv(table, Output_Path(args, "centerbias.csv"), fingerprint)

    for group in scores.index:
        center_map = analysis.Build_Center_Map(dataset, group, args.sigma)
        plotting.Save_Map_Png(center_map.map, Output_Path(args, f"center_{group}.png"))

    if args.verbose:
        print(evaluation.Format_Table(table))

    return 0


def Run_Train(args: argparse.Namespace) -> int:

    dataset = Load_Dataset(args.manifest)

    subset, subset_end = args.subset
    subset_end = subset_end or Constants.NUM_SCALES
    Check_Subset(subset, subset_end, Constants.NUM_SCALES)

    train, _ = evaluation.Split_Dataset(dataset, args.train_count)
    fingerprint = Write_Fingerprint(args)

    model = learning.Train_Group_Model(
        train,
        args.group,
        subset,
        subset_end,
        samples=args.samples,
        regularization=args.regularization,
        grid=args.grid,
        sigma=args.sigma,
        num_thresholds=args.thresholds,
        seed=args.seed,
        processes=args.threads,
        verbose=args.verbose,
    )

    learning.Save_Linear_Model(model, Output_Path(args, f"{args.group}.model"))

    history = pd.DataFrame(
        {"objective": model.objective_trace, "best_objective": model.objective_history}
    )
    history.index.name = "epoch"
    evaluation.Write_Report_Csv(
        history, Output_Path(args, f"{args.group}_objective.csv"), fingerprint
    )

    return 0


def Resolve_Predictor(args: argparse.Namespace, dataset=None, group=None):
    """A model id from evaluation.MODEL_IDS, or a path to a model file"""

    subset, subset_end = args.subset if args.subset else (None, None)

    if args.model in evaluation.MODEL_IDS:
        return evaluation.Build_Predictor(
            args.model,
            dataset,
            group,
            subset=subset,
            subset_end=subset_end,
            center_weight=args.wk,
            sigma=args.sigma,
        )

    return evaluation.SICPredictor(learning.Load_Linear_Model(args.model), args.wk)


def Run_Predict(args: argparse.Namespace) -> int:

    if args.model in ("SIC", "HUMAN"):
        raise ValueError(f"{args.model} cannot predict from an image alone")

    predictor = Resolve_Predictor(args)

    if args.manifest is not None:
        images = Load_Dataset(args.manifest).images
    else:
        images = {
            os.path.splitext(os.path.basename(path))[0]: Load_Image(path)
            for path in args.image
        }

    Write_Fingerprint(args, model_id=predictor.model_id, subset_label=predictor.label)

    for image_id, image in images.items():
        saliency_map = predictor(image_id, image)

        match args.format:
            case "png":
                plotting.Save_Map_Png(saliency_map, Output_Path(args, f"{image_id}.png"))
            case "heatmap":
                plotting.Save_Heatmap_Png(
                    saliency_map, Output_Path(args, f"{image_id}_heatmap.png")
                )
            case "csv":
                plotting.Save_Map_Csv(saliency_map, Output_Path(args, f"{image_id}.csv"))

    return 0


def Run_Table(args: argparse.Namespace, dataset) -> int:

    groups = None if args.group == "all" else (args.group,)
    train, test = evaluation.Split_Dataset(dataset, args.train_count)

    training = dict(
        samples=args.samples,
        regularization=args.regularization,
        grid=args.grid,
        sigma=args.sigma,
        num_thresholds=args.thresholds,
        seed=args.seed,
        processes=args.threads,
        verbose=args.verbose,
    )

    match args.table:
        case "subset":
            table = evaluation.Subset_Table(
                test,
                groups,
                num_thresholds=args.thresholds,
                processes=args.threads,
                verbose=args.verbose,
            )

        case "patch":
            table = evaluation.Patch_Subset_Table(
                test,
                groups,
                num_thresholds=args.thresholds,
                processes=args.threads,
                verbose=args.verbose,
            )

        case "learned":
            table, _ = evaluation.Learned_Subset_Table(train, test, groups, **training)

        case "comparison":
            table, _ = evaluation.Comparison_Table(train, test, groups, **training)

    table.index.name = "group"

    fingerprint = Write_Fingerprint(args)
    evaluation.Write_Report_Csv(
        table, Output_Path(args, f"{args.table}_table.csv"), fingerprint
    )

    if args.verbose:
        print(evaluation.Format_Table(table))

    return 0


def Run_Evaluate(args: argparse.Namespace) -> int:
    """Scores one predictor per group on the test split

    Returns 2 when any image failed.
    """

    dataset = Load_Dataset(args.manifest)

    if args.table is not None:
        return Run_Table(args, dataset)

    if args.model is None:
        raise ValueError("evaluate needs --model or --table")

    _, test = evaluation.Split_Dataset(dataset, args.train_count)
    groups = test.groups_present if args.group == "all" else [args.group]

    split = {"train_count": args.train_count, "images": len(dataset.image_ids)}
    Write_Fingerprint(args)

    reports = []
    for group in groups:
        report = evaluation.Evaluate_Model(
            Resolve_Predictor(args, test, group),
            test,
            group,
            args.sigma,
            args.thresholds,
            args.seed,
            split,
            args.threads,
            args.verbose,
        )
        evaluation.Write_Eval_Report(report, args.output)
        reports.append(report)

    if args.verbose:
        print(evaluation.Format_Table(evaluation.Eval_Summary(reports)))

    return 2 if any(len(report.failed) > 0 for report in reports) else 0


def Run_Synth(args: argparse.Namespace) -> int:

    overrides = {
        key: value
        for key, value in [
            ("width", args.width),
            ("height", args.height),
            ("image_count", args.images),
            ("observers", args.observers),
            ("fixations_per_observer", args.fixations),
        ]
        if value is not None
    }

    config = synthetic.Preset_Config(args.preset, seed=args.seed, **overrides)

    Write_Fingerprint(args)
    Save_Dataset(synthetic.Synth_Cohort(config, args.verbose), args.output)

    return 0


def Build_Parser() -> argparse.ArgumentParser:

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--output",
        default=User.OUTPUT_DIRECTORY,
        help="Output directory (default: %(default)s)",
    )
    common.add_argument(
        "--sigma",
        type=float,
        default=Constants.HUMAN_MAP_SIGMA,
        help="Human map blur in px (default: %(default)s)",
    )
    common.add_argument(
        "--thresholds",
        type=int,
        default=Constants.NUM_THRESHOLDS,
        help="ROC threshold count (default: %(default)s)",
    )
    common.add_argument(
        "--seed",
        type=int,
        default=0,
        help="Seed for every random draw (default: %(default)s)",
    )
    common.add_argument(
        "--threads",
        type=int,
        default=1,
        help="Worker processes (default: %(default)s)",
    )
    common.add_argument(
        "--verbose", action="store_true", help="Show progress bars and summaries"
    )

    training = argparse.ArgumentParser(add_help=False)
    training.add_argument(
        "--train-count",
        type=int,
        default=Constants.TRAIN_COUNT,
        help="Leading manifest images used for training (default: %(default)s)",
    )
    training.add_argument(
        "--samples",
        type=int,
        default=Constants.SAMPLES_PER_IMAGE,
        help="Positive and negative samples per image (default: %(default)s)",
    )
    training.add_argument(
        "--regularization",
        type=float,
        default=Constants.REGULARIZATION,
        help="(default: %(default)s)",
    )
    training.add_argument(
        "--grid",
        type=Parse_Grid,
        default=Constants.CENTER_WEIGHT_GRID,
        help="Comma-separated center weights tried (default: 0,0.05,...,0.5)",
    )

    parser = argparse.ArgumentParser(
        prog="gazepy", description="Age-group gaze analysis and saliency modelling"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    analyze = commands.add_parser(
        "analyze", parents=[common], help="Explorativeness entropy report"
    )
    analyze.add_argument("--manifest", required=True)
    analyze.add_argument(
        "--bins",
        type=int,
        default=Constants.NUM_BINS,
        help="Histogram bins (default: %(default)s)",
    )
    analyze.add_argument(
        "--least",
        type=int,
        default=12,
        help="Least explored images listed per group (default: %(default)s)",
    )
    analyze.set_defaults(function=Run_Analyze)

    agreement = commands.add_parser(
        "agreement", parents=[common], help="Inter-group agreement matrix"
    )
    agreement.add_argument("--manifest", required=True)
    agreement.set_defaults(function=Run_Agreement)

    centerbias = commands.add_parser(
        "centerbias", parents=[common], help="Per-group center-bias scores"
    )
    centerbias.add_argument("--manifest", required=True)
    centerbias.set_defaults(function=Run_Center_Bias)

    train = commands.add_parser(
        "train", parents=[common, training], help="Train a group S+I+C model"
    )
    train.add_argument("--manifest", required=True)
    train.add_argument("--group", required=True, choices=Constants.AGE_GROUPS)
    train.add_argument(
        "--subset",
        type=Parse_Subset,
        default=(1, None),
        help="Scale subset s or s-e (default: 1)",
    )
    train.set_defaults(function=Run_Train)

    predict = commands.add_parser(
        "predict", parents=[common], help="Saliency maps for images"
    )
    predict.add_argument(
        "--model",
        required=True,
        help=f"Model file, or one of {', '.join(evaluation.MODEL_IDS)}",
    )
    inputs = predict.add_mutually_exclusive_group(required=True)
    inputs.add_argument("--image", nargs="+")
    inputs.add_argument("--manifest")
    predict.add_argument(
        "--subset", type=Parse_Subset, help="Scale or patch subset s or s-e"
    )
    predict.add_argument(
        "--wk", type=float, help="Center weight, defaults to the model's"
    )
    predict.add_argument(
        "--format",
        choices=("png", "heatmap", "csv"),
        default="png",
        help="(default: %(default)s)",
    )
    predict.set_defaults(function=Run_Predict)

    evaluate = commands.add_parser(
        "evaluate", parents=[common, training], help="Score a model on the test split"
    )
    evaluate.add_argument("--manifest", required=True)
    evaluate.add_argument(
        "--model", help=f"Model file, or one of {', '.join(evaluation.MODEL_IDS)}"
    )
    evaluate.add_argument("--table", choices=TABLES, help="Emit a model table instead")
    evaluate.add_argument(
        "--group",
        default="all",
        choices=Constants.AGE_GROUPS + ("all",),
        help="(default: %(default)s)",
    )
    evaluate.add_argument(
        "--subset", type=Parse_Subset, help="Scale or patch subset s or s-e"
    )
    evaluate.add_argument(
        "--wk", type=float, help="Center weight, defaults to the model's"
    )
    evaluate.set_defaults(function=Run_Evaluate)

    synth = commands.add_parser(
        "synth", parents=[common], help="Generate a synthetic cohort"
    )
    synth.add_argument(
        "--preset", default="age", help="Cohort preset (default: %(default)s)"
    )
    synth.add_argument("--images", type=int)
    synth.add_argument("--observers", type=int)
    synth.add_argument(
        "--fixations", type=int, help="Fixations per observer per image"
    )
    synth.add_argument("--width", type=int)
    synth.add_argument("--height", type=int)
    synth.set_defaults(function=Run_Synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    """Runs one command

    Exit status is 0 on success, 1 on invalid input and 2 on a runtime
    failure.
    """

    parser = Build_Parser()

    try:
        args = parser.parse_args(argv)
    except SystemExit as error:
        return 0 if error.code == 0 else 1

    try:
        return args.function(args)

    except (ValueError, FileNotFoundError) as error:
        print(f"gazepy {args.command}: error: {error}", file=sys.stderr)
        return 1

    except Exception as error:
        print(f"gazepy {args.command}: {type(error).__name__}: {error}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
