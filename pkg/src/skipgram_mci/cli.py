"""Command-line entry point: ``skipgram-mci {extract,evaluate,curves,grid,synth}``.

Exit codes: 0 success, 2 configuration or input error, 3 validation error
(participant overlap between manifests), 4 every model failed to train.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import yaml

from . import baseline as bl
from .classifiers import ModelSpec
from .config import ConfigError, RunConfig, load_config, models_fragment, with_overrides
from .errors import ParticipantOverlapError, SkipgramMCIError, TrainingError
from .evaluation import (
    PipelineConfig,
    cross_validate,
    default_grid,
    grid_search,
    roc_curve,
    stratified_kfold,
)
from .features import LeakageMode, gram_counts, make_dataset, vocabulary_from_counts, write_dataset
from .reports import (
    CurveSeries,
    TableRow,
    curves_csv,
    curves_svg,
    effective_k_list,
    roc_csv,
    table_csv,
    table_text,
    write_text,
)
from .skipgrams import FEATURE_SETS, feature_set
from .transcripts import Corpus, SplitRole, load_corpus, read_manifest, select_visit

log = logging.getLogger("skipgram_mci")

EXIT_OK, EXIT_INPUT, EXIT_VALIDATION, EXIT_TRAINING = 0, 2, 3, 4

CURVE_FEATURE_SETS = ("1-skip-2-grams", "1-skip-3-grams", "2-skip-2-grams", "2-skip-3-grams", "all-skip-grams")


# -- helpers ----------------------------------------------------------------

def _load(manifest: Path, role: SplitRole, policy, speakers) -> Corpus:
    corpus = load_corpus(read_manifest(manifest, role), speakers=speakers)
    chosen = select_visit(corpus.samples, policy)
    for pid in chosen.skipped:
        log.warning("participant %s has no %s visit; left out", pid, policy.value.lower())
    # keep a stable order independent of dictionary iteration details
    samples = sorted(chosen.samples, key=lambda s: (s.participant_id, s.visit_index))
    return Corpus(samples=samples, split_role=corpus.split_role, skipped=corpus.skipped)


def _train_corpus(cfg: RunConfig) -> Corpus:
    return _load(cfg.train_manifest, SplitRole.TRAIN_EVAL, cfg.train_visit, cfg.speakers)


def _summary(name: str, corpus: Corpus) -> str:
    mci, ctl = corpus.class_counts
    return f"{name}: {len(corpus)} samples (MCI={mci}, CONTROL={ctl}), skipped {len(corpus.skipped)}"


def _pipeline(cfg: RunConfig, **changes) -> PipelineConfig:
    base = dict(feature_set=cfg.feature_set, k_top=cfg.k_top, ranking=cfg.ranking,
                leakage=cfg.leakage, weighting=cfg.weighting)
    base.update(changes)
    return PipelineConfig(**base)


def _evaluate_rows(corpus: Corpus, cfg: RunConfig):
    labels = [s.label for s in corpus.samples]
    folds = stratified_kfold(labels, cfg.folds, cfg.seed)
    pipe = _pipeline(cfg)
    counts = gram_counts(corpus.samples, pipe.feature_set) if cfg.models else None
    rows, curves = [], {}
    jobs = [(spec, pipe, f"top {cfg.k_top} {cfg.feature_set.name}", cfg.k_top) for spec in cfg.models]
    if cfg.baseline is not None:
        jobs.append((cfg.baseline, _pipeline(cfg, features="baseline"), "baseline", None))
    for spec, p, features, k in jobs:
        row = TableRow(spec.name, features, k, p.leakage.value if p.features == "skipgram" else "")
        try:
            res = cross_validate(corpus, spec, folds, p, counts=counts if p.features == "skipgram" else None)
        except (TrainingError, ArithmeticError, ValueError, FloatingPointError) as exc:
            log.error("%s failed: %s", spec.name, exc)
            row.error = str(exc)
        else:
            row.report = res.report
            curves[spec.name] = roc_curve(res.scores, res.labels)
        rows.append(row)
    return rows, curves


# -- commands ---------------------------------------------------------------

def cmd_extract(cfg: RunConfig) -> int:
    cfg.check_files()
    corpus = _train_corpus(cfg)
    counts = gram_counts(corpus.samples, cfg.feature_set)
    vocab = vocabulary_from_counts(counts, corpus.labels, cfg.feature_set)
    dataset = make_dataset(corpus.samples, vocab, cfg.weighting, counts=counts)
    pos_model = bl.reference_model(corpus.samples)
    vectors = [bl.baseline_vector(s, pos_model) for s in corpus.samples]
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_dataset(dataset, out / "dataset.txt", out / "dataset.names")
    bl.write_baseline_csv(corpus.samples, vectors, out / "baseline.csv")
    print(_summary("train/eval", corpus))
    print(f"feature set {cfg.feature_set.name}: vocabulary size {len(vocab)}")
    print(f"wrote {out / 'dataset.txt'}, {out / 'dataset.names'}, {out / 'baseline.csv'}")
    return EXIT_OK


def cmd_evaluate(cfg: RunConfig) -> int:
    cfg.check_files()
    corpus = _train_corpus(cfg)
    print(_summary("train/eval", corpus))
    rows, curves = _evaluate_rows(corpus, cfg)
    out = Path(cfg.out_dir)
    write_text(out / "table1.csv", table_csv(rows))
    write_text(out / "roc.csv", roc_csv(curves))
    print(table_text(rows))
    print(f"wrote {out / 'table1.csv'} and {out / 'roc.csv'}")
    return EXIT_TRAINING if all(r.report is None for r in rows) else EXIT_OK


def cmd_curves(cfg: RunConfig) -> int:
    cfg.check_files()
    corpus = _train_corpus(cfg)
    print(_summary("train/eval", corpus))
    folds = stratified_kfold([s.label for s in corpus.samples], cfg.folds, cfg.seed)
    all_series: list[CurveSeries] = []
    failures = attempts = 0
    for fs_name in CURVE_FEATURE_SETS:
        fss = FEATURE_SETS[fs_name]
        counts = gram_counts(corpus.samples, fss)
        vocab_size = len(vocabulary_from_counts(counts, corpus.labels, fss))
        ks, note = effective_k_list(cfg.k_list, vocab_size)
        if note:
            print(f"note: {fs_name} {note}")
        series_here = []
        for spec in cfg.models:
            points = []
            for k in ks:
                attempts += 1
                try:
                    res = cross_validate(corpus, spec, folds, _pipeline(cfg, feature_set=fss, k_top=k),
                                         counts=counts)
                except (TrainingError, ArithmeticError, ValueError) as exc:
                    failures += 1
                    log.error("%s on %s at K=%d failed: %s", spec.name, fs_name, k, exc)
                    continue
                points.append((k, res.report.accuracy))
            series_here.append(CurveSeries(spec.name, fs_name, points, note))
        all_series.extend(series_here)
        write_text(Path(cfg.out_dir) / f"curve-{fs_name}.svg", curves_svg(series_here, fs_name))
    write_text(Path(cfg.out_dir) / "curves.csv", curves_csv(all_series))
    print(f"wrote {Path(cfg.out_dir) / 'curves.csv'} and {len(CURVE_FEATURE_SETS)} SVG charts")
    return EXIT_TRAINING if attempts and failures == attempts else EXIT_OK


def cmd_grid(cfg: RunConfig) -> int:
    cfg.check_files(need_validation=True)
    train = _train_corpus(cfg)
    val = _load(cfg.validation_manifest, SplitRole.VALIDATION, cfg.validation_visit, cfg.speakers)
    print(_summary("train/eval", train))
    print(_summary("validation", val))
    grids = cfg.grid if cfg.grid is not None else default_grid()
    pipe = _pipeline(cfg, k_top=cfg.grid_k_top)
    chosen, lines = [], ["family,model,params,objective"]
    for family, specs in grids.items():
        try:
            result = grid_search(train, val, list(specs), cfg.grid_objective, pipe,
                                 allow_shared_participants=cfg.allow_shared_participants)
        except (TrainingError, ArithmeticError) as exc:
            log.error("grid for %s failed: %s", family, exc)
            continue
        chosen.append(result.best)
        for spec, value in result.results:
            params = ";".join(f"{k}={v}" for k, v in spec.to_dict().items() if k not in ("name", "variant"))
            lines.append(f"{family},{spec.name},{params},{value:.6f}")
        print(f"{family}: best {result.best.to_dict()}")
    if not chosen:
        return EXIT_TRAINING
    out = Path(cfg.out_dir)
    write_text(out / "grid_results.csv", "\n".join(lines) + "\n")
    write_text(out / "best_models.yaml", models_fragment(chosen))
    print(f"wrote {out / 'best_models.yaml'} (pass it to evaluate with --models)")
    return EXIT_OK


def cmd_synth(args) -> int:
    from .synthetic import write_synthetic_corpus

    out = Path(args.out_dir or "synthetic")
    train, val = write_synthetic_corpus(out, seed=args.seed if args.seed is not None else 2024)
    config = {
        "train_manifest": train.name,
        "validation_manifest": val.name,
        "feature_set": "all-skip-grams",
        "k_top": 200,
        "seed": 0,
        "out_dir": "results",
    }
    write_text(out / "config.yaml", yaml.safe_dump(config, sort_keys=False))
    print(f"wrote synthetic corpus and {out / 'config.yaml'}")
    return EXIT_OK


# -- argument handling --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skipgram-mci",
        description="Skip-gram features and classifiers for MCI detection from picture-description transcripts.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, help="YAML run configuration")
        p.add_argument("--seed", type=int, help="fold seed (overrides the config)")
        p.add_argument("--out-dir", type=Path, help="output directory (overrides the config)")
        p.add_argument("--train-manifest", type=Path, help="train/eval manifest CSV")
        p.add_argument("--validation-manifest", type=Path, help="validation manifest CSV")
        p.add_argument("--feature-set", help="preset name or n.k list joined by '+', e.g. 2.1+3.1")
        p.add_argument("--k-top", type=int, help="number of top-ranked features")
        p.add_argument("--models", type=Path, help="YAML file with a 'models:' list, e.g. grid output")
        mode = p.add_mutually_exclusive_group()
        mode.add_argument("--paper-mode", action="store_true",
                          help="rank features once on the whole corpus (GLOBAL)")
        mode.add_argument("--leakage-safe", action="store_true",
                          help="rank features inside each training fold (PER_FOLD)")

    for name, help_text in (
        ("extract", "write the sparse skip-gram dataset and baseline features"),
        ("evaluate", "cross-validate the configured models and write table1.csv"),
        ("curves", "accuracy against top-K for each feature set, CSV plus SVG"),
        ("grid", "choose hyperparameters on the validation manifest"),
    ):
        common(sub.add_parser(name, help=help_text))
    p = sub.add_parser("synth", help="write a seeded synthetic corpus with a ready-to-run config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir", type=Path)
    return parser


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    leakage = LeakageMode.GLOBAL if args.paper_mode else LeakageMode.PER_FOLD if args.leakage_safe else None
    models = None
    if args.models:
        try:
            data = yaml.safe_load(Path(args.models).read_text(encoding="utf-8")) or {}
            models = tuple(ModelSpec.from_dict(m) for m in data["models"])
        except (OSError, yaml.YAMLError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"cannot read models from {args.models}: {exc}") from exc
    try:
        fss = feature_set(args.feature_set) if args.feature_set else None
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return with_overrides(
        cfg,
        seed=args.seed,
        out_dir=args.out_dir,
        train_manifest=args.train_manifest,
        validation_manifest=args.validation_manifest,
        feature_set=fss,
        k_top=args.k_top,
        leakage=leakage,
        models=models,
    )


COMMANDS = {"extract": cmd_extract, "evaluate": cmd_evaluate, "curves": cmd_curves, "grid": cmd_grid}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "synth":
            return cmd_synth(args)
        return COMMANDS[args.command](resolve_config(args))
    except ParticipantOverlapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (SkipgramMCIError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
