"""
veriprop command-line interface.

Usage:
    veriprop [--config F] [--log-level L] [--workers N] [--kb DIR] <command> ...

Commands:
    extract     DOC -o PROPS                       propositions of one document
    verify      --summary S --ehr E -o REPORT      verdicts for one pair
                --summary-dir D --ehr-dir D -o DIR verdicts for a corpus bundle
    evaluate    --report R --gold G [-o METRICS]   metrics against gold labels
    gen-corpus  --seed N --docs M [--faults F] -o DIR
    lora-demo   --d D --k K --r R --alpha A --steps S [--init zero|gauss] -o TRACE

Exit status is 0 on success, 1 on usage errors and 2 on data errors.
"""
import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, List, NoReturn, Optional, Sequence, Tuple

from pydantic import ValidationError

from app.cli.io import (
    atomic_write,
    check_output_directory,
    json_files,
    load_document,
    read_json,
    staged_directory,
)
from app.kb.loader import default_kb
from app.lora.adapters import init_adapters, param_counts, range_warnings
from app.lora.checkpoint import encode_checkpoint
from app.lora.training import (
    TrainConfig,
    make_base_layer,
    make_toy_dataset,
    train_adapters,
)
from app.middleware.error_handler import EXIT_OK, EXIT_USAGE, ErrorHandlerMiddleware
from app.middleware.logging import CommandLoggingMiddleware, configure_logging
from app.models.codec import dumps, encode_proposition_set
from app.models.proposition import AttributeKind
from app.models.verdict import VerdictReport
from app.services.errors import DataError, UsageError
from app.services.evaluation import evaluate_many, gold_labels_from_json, render_table
from app.services.verification_service import VerificationService
from app.simcorpus.bundle import MANIFEST_NAME, generate_corpus, write_bundle
from app.simcorpus.faults import load_fault_specs
from backend.config import Settings, create_settings

logger = logging.getLogger(__name__)

PROG = "veriprop"


class CommandParser(argparse.ArgumentParser):
    """Argument parser that exits with status 1 on usage errors."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common_options() -> argparse.ArgumentParser:
    # SUPPRESS keeps a subcommand from resetting a value given before it
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config", default=argparse.SUPPRESS, help="dotenv settings file"
    )
    common.add_argument(
        "--log-level",
        default=argparse.SUPPRESS,
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        type=str.upper,
    )
    common.add_argument(
        "--workers",
        type=int,
        default=argparse.SUPPRESS,
        help="parallel document workers",
    )
    common.add_argument(
        "--kb", default=argparse.SUPPRESS, help="knowledge-base directory"
    )
    return common


def build_parser() -> CommandParser:
    common = _common_options()
    parser = CommandParser(
        prog=PROG,
        description="Verify clinical summaries against the health record.",
        parents=[common],
    )
    commands = parser.add_subparsers(
        dest="command", metavar="<command>", parser_class=CommandParser
    )
    commands.required = True

    extract = commands.add_parser(
        "extract", parents=[common], help="extract propositions from a document"
    )
    extract.add_argument("document", help="summary or EHR document (JSON)")
    extract.add_argument(
        "-o", "--output", help="propositions file (stdout when omitted)"
    )

    verify = commands.add_parser(
        "verify", parents=[common], help="verify a summary against its record"
    )
    verify.add_argument("--summary", help="summary document")
    verify.add_argument("--ehr", help="EHR document")
    verify.add_argument("--summary-dir", help="directory of summary documents")
    verify.add_argument(
        "--ehr-dir", help="directory of EHR documents, paired in sorted order"
    )
    verify.add_argument("--tau-match", type=float, help="alignment threshold")
    verify.add_argument("--tau-num", type=float, help="numerical tolerance")
    verify.add_argument("--embeddings", help="precomputed embeddings file (JSON lines)")
    verify.add_argument(
        "-o", "--output", help="report file, or directory with --summary-dir"
    )

    evaluate = commands.add_parser(
        "evaluate", parents=[common], help="score verdicts against gold labels"
    )
    evaluate.add_argument(
        "--report", required=True, help="report file or directory of reports"
    )
    evaluate.add_argument(
        "--gold", required=True, help="gold file or directory of gold files"
    )
    evaluate.add_argument("--format", choices=["json", "table"], default="json")
    evaluate.add_argument("-o", "--output", help="metrics file (stdout when omitted)")

    corpus = commands.add_parser(
        "gen-corpus", parents=[common], help="generate a synthetic corpus bundle"
    )
    corpus.add_argument("--seed", required=True, help="run seed")
    corpus.add_argument("--docs", type=int, required=True, help="number of patients")
    corpus.add_argument("--faults", help="fault plan (JSON)")
    corpus.add_argument(
        "--min-props", type=int, help="fewest EHR propositions per patient"
    )
    corpus.add_argument(
        "--max-props", type=int, help="most EHR propositions per patient"
    )
    corpus.add_argument(
        "--keep-rate", type=float, help="share of non-key facts kept in summaries"
    )
    corpus.add_argument("-o", "--output", required=True, help="bundle directory")

    lora = commands.add_parser(
        "lora-demo", parents=[common], help="train adapters on a toy next-token task"
    )
    lora.add_argument("--d", type=int, default=8, help="output dimension")
    lora.add_argument("--k", type=int, default=8, help="input dimension")
    lora.add_argument("--r", type=int, default=4, help="adapter rank")
    lora.add_argument("--alpha", type=float, default=8.0, help="adapter scale")
    lora.add_argument("--steps", type=int, help="training steps")
    lora.add_argument(
        "--init", choices=["zero", "gauss"], help="adapter initialization"
    )
    lora.add_argument("--seed", type=int, help="initialization and data seed")
    lora.add_argument("--lr", type=float, help="learning rate")
    lora.add_argument("--batch-size", type=int, help="examples per step")
    lora.add_argument("--checkpoint", help="write the trained adapters here")
    lora.add_argument("--checkpoint-format", choices=["json", "binary"], default="json")
    lora.add_argument("-o", "--output", help="trace file (stdout when omitted)")
    return parser


def _option(args: argparse.Namespace, name: str) -> Any:
    return getattr(args, name, None)


def load_settings(args: argparse.Namespace) -> Settings:
    """Settings with flags applied over the config file, environment and defaults."""
    overrides: Dict[str, Any] = {}
    if _option(args, "kb"):
        overrides["kb"] = args.kb
    if _option(args, "workers") is not None:
        overrides["corpus"] = {"workers": args.workers}
    alignment: Dict[str, Any] = {}
    if _option(args, "tau_match") is not None:
        alignment["tau_match"] = args.tau_match
    if _option(args, "embeddings"):
        alignment.update(embedder="precomputed", embeddings_file=args.embeddings)
    if alignment:
        overrides["alignment"] = alignment
    if _option(args, "tau_num") is not None:
        overrides["checks"] = {"tau_num": args.tau_num}

    config = _option(args, "config")
    if config and not Path(config).is_file():
        raise UsageError(f"config file not found: {config}")
    try:
        return create_settings(env_file=config, **overrides)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(part) for part in first["loc"])
        raise UsageError(
            f"invalid setting '{where}': {first['msg']}", original_exception=e
        )


def _emit(text: str, output: Optional[str]) -> None:
    if output:
        atomic_write(output, text)
    else:
        sys.stdout.write(text)


# Commands

def cmd_extract(args: argparse.Namespace, settings: Settings) -> int:
    service = VerificationService(settings)
    propositions = service.extract(load_document(args.document))
    _emit(dumps(encode_proposition_set(propositions)), args.output)
    return EXIT_OK


def _pair_directories(summary_dir: str, ehr_dir: str) -> List[Tuple[Path, Path]]:
    summaries = json_files(summary_dir)
    records = json_files(ehr_dir)
    if len(summaries) != len(records):
        raise DataError(
            f"{len(summaries)} summaries but {len(records)} EHR documents",
            path=summary_dir,
        )
    return list(zip(summaries, records))


def cmd_verify(args: argparse.Namespace, settings: Settings) -> int:
    single = args.summary or args.ehr
    batch = args.summary_dir or args.ehr_dir
    if single and batch:
        raise UsageError("use either --summary/--ehr or --summary-dir/--ehr-dir")
    if single and not (args.summary and args.ehr):
        raise UsageError("--summary and --ehr are required together")
    if batch and not (args.summary_dir and args.ehr_dir and args.output):
        raise UsageError("--summary-dir, --ehr-dir and -o are required together")
    if not (single or batch):
        raise UsageError("nothing to verify: give --summary and --ehr")

    service = VerificationService(settings)
    if single:
        report = service.verify(load_document(args.summary), load_document(args.ehr))
        _emit(dumps(report.to_json_dict()), args.output)
        return EXIT_OK

    check_output_directory(args.output)
    pairs = _pair_directories(args.summary_dir, args.ehr_dir)

    def verify_pair(pair: Tuple[Path, Path]) -> Tuple[str, str]:
        summary_path, ehr_path = pair
        report = service.verify(load_document(summary_path), load_document(ehr_path))
        return summary_path.name, dumps(report.to_json_dict())

    with ThreadPoolExecutor(max_workers=settings.corpus.workers) as pool:
        outputs = list(pool.map(verify_pair, pairs))
    with staged_directory(args.output) as staging:
        for name, text in outputs:
            (staging / name).write_text(text, encoding="utf-8")
    logger.info(
        "Verified bundle", extra={"documents": len(outputs), "output": args.output}
    )
    return EXIT_OK


def _load_report(path: Path) -> VerdictReport:
    try:
        return VerdictReport.from_json_dict(read_json(path))
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"malformed report: {e}", path=str(path), original_exception=e)


def _load_gold(path: Path) -> list:
    data = read_json(path)
    if not isinstance(data, dict):
        raise DataError(
            "gold file must be an object with a 'labels' list", path=str(path)
        )
    try:
        return gold_labels_from_json(data)
    except DataError as e:
        raise DataError(str(e), path=str(path), original_exception=e)


def cmd_evaluate(args: argparse.Namespace, settings: Settings) -> int:
    report_path, gold_path = Path(args.report), Path(args.gold)
    if report_path.is_dir() != gold_path.is_dir():
        raise UsageError(
            "--report and --gold must both be files or both be directories"
        )
    if report_path.is_dir():
        pairs = []
        for path in json_files(report_path):
            gold_file = gold_path / path.name
            if not gold_file.is_file():
                raise DataError("no gold file for report", path=str(path))
            pairs.append((path, gold_file))
    else:
        pairs = [(report_path, gold_path)]

    scored = [(_load_report(r).verdicts, _load_gold(g)) for r, g in pairs]
    metrics = evaluate_many(scored)
    if args.format == "table":
        _emit(render_table(metrics), args.output)
    else:
        _emit(dumps(metrics.to_json_dict()), args.output)
    return EXIT_OK


def cmd_gen_corpus(args: argparse.Namespace, settings: Settings) -> int:
    if args.docs < 0:
        raise UsageError("--docs must not be negative")
    low, high = args.min_props, args.max_props
    if low is None:
        low = settings.corpus.min_propositions
    if high is None:
        high = settings.corpus.max_propositions
    if low < 1 or low > high:
        raise UsageError(f"invalid proposition bounds {low}..{high}")
    keep_rate = args.keep_rate
    if keep_rate is None:
        keep_rate = settings.corpus.summary_keep_rate
    if not 0.0 <= keep_rate <= 1.0:
        raise UsageError("--keep-rate must lie in [0, 1]")
    check_output_directory(args.output, MANIFEST_NAME)
    faults = load_fault_specs(read_json(args.faults)) if args.faults else []

    corpus = generate_corpus(
        args.seed,
        args.docs,
        default_kb(settings.kb_dir),
        faults=faults,
        size_params=(low, high),
        keep_rate=keep_rate,
        workers=settings.corpus.workers,
        tau_match=settings.alignment.tau_match,
        key_attributes=[
            AttributeKind(name) for name in settings.checks.key_attributes
        ],
    )
    with staged_directory(args.output, MANIFEST_NAME) as staging:
        write_bundle(corpus, staging)
    return EXIT_OK


def cmd_lora_demo(args: argparse.Namespace, settings: Settings) -> int:
    lora = settings.lora
    if min(args.d, args.k) < 1:
        raise UsageError("--d and --k must be positive")
    if not 1 <= args.r <= min(args.d, args.k):
        raise UsageError(f"--r must lie in 1..{min(args.d, args.k)}")
    try:
        cfg = TrainConfig.from_settings(
            lora, steps=args.steps, learning_rate=args.lr, batch_size=args.batch_size
        )
    except ValidationError as e:
        raise UsageError(
            f"invalid training option: {e.errors()[0]['msg']}", original_exception=e
        )
    init = args.init or lora.init
    seed = args.seed if args.seed is not None else lora.seed

    warnings = range_warnings(args.r, args.alpha)
    layer = make_base_layer(args.d, args.k, seed)
    data = make_toy_dataset(args.d, args.k, args.r, seed)
    adapter = init_adapters(
        args.d, args.k, args.r, args.alpha, init=init, std=lora.init_std, seed=seed
    )
    base_bytes = layer.W.tobytes()
    trained, losses = train_adapters(layer, data, cfg, adapter)

    trace = {
        "params": {
            "d": args.d,
            "k": args.k,
            "r": args.r,
            "alpha": args.alpha,
            "init": init,
            "seed": seed,
            **cfg.model_dump(),
        },
        "param_counts": param_counts(args.d, args.k, args.r).to_json_dict(),
        "losses": losses,
        "initial_loss": losses[0] if losses else None,
        "final_loss": losses[-1] if losses else None,
        "base_unchanged": layer.W.tobytes() == base_bytes,
        "warnings": warnings,
    }
    if args.checkpoint:
        payload = encode_checkpoint(trained, args.checkpoint_format)
        atomic_write(args.checkpoint, payload)
    _emit(dumps(trace), args.output)
    return EXIT_OK


COMMANDS: Dict[str, Callable[[argparse.Namespace, Settings], int]] = {
    "extract": cmd_extract,
    "verify": cmd_verify,
    "evaluate": cmd_evaluate,
    "gen-corpus": cmd_gen_corpus,
    "lora-demo": cmd_lora_demo,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command and return its exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    command = args.command
    errors = ErrorHandlerMiddleware(PROG, usage=parser.format_usage())

    def run() -> int:
        settings = load_settings(args)
        configure_logging(settings, _option(args, "log_level"))
        return CommandLoggingMiddleware().dispatch(
            command, lambda: COMMANDS[command](args, settings)
        )

    return errors.dispatch(command, run)
