"""Command-line entry point: ``plate-discipline <command> ...``.

Exit codes: 0 success, 1 usage or configuration error, 2 data or schema
error, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from . import aggregate, estimator, evaluation, ingest, scoring, synth
from .config import PipelineConfig
from .errors import ConfigError, DataError, InvariantError, PlateDisciplineError, SchemaError
from .kdtree import set_threads

log = logging.getLogger("plate_discipline")

SCORE_COLUMNS = ("p_s", "ds", "cq", "ads")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _write_csv(frame: pd.DataFrame, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n")


def _write_json(obj, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")


def _parse_seasons(text: str) -> list[int]:
    try:
        if "-" in text:
            lo, hi = text.split("-", 1)
            return [int(lo), int(hi)]
        return [int(text), int(text)]
    except ValueError:
        raise ConfigError(f"--seasons must look like 2024 or 2021-2023, got {text!r}") from None


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of integers, got {text!r}") from None


def load_config(args) -> PipelineConfig:
    """Config file (if any) with flags layered on top, fully validated."""
    cfg = PipelineConfig.load(args.config) if getattr(args, "config", None) else PipelineConfig()
    explicit = set(json.loads(Path(args.config).read_text())) if getattr(args, "config", None) else set()
    errs = []
    overrides = {}
    if getattr(args, "k", None) is not None:
        try:
            ks = _parse_int_list(args.k)
        except ConfigError as e:
            errs.append(str(e))
        else:
            if args.command == "evaluate":
                overrides["k_values"] = ks
            elif len(ks) == 1:
                overrides["k"] = ks[0]
            else:
                errs.append("--k takes a single value for this command")
    if getattr(args, "seasons", None) is not None:
        try:
            overrides["seasons"] = _parse_seasons(args.seasons)
        except ConfigError as e:
            errs.append(str(e))
    for flag, key in (("scaling", "scaling"), ("min_pa", "min_pa"), ("min_balls", "min_balls"), ("top", "top_n"),
                      ("seed", "seed"), ("bins", "n_bins"), ("threads", "threads")):
        v = getattr(args, flag, None)
        if v is not None:
            overrides[key] = v
    for key, v in overrides.items():
        setattr(cfg, key, v)
    args.explicit = explicit | set(overrides)
    errs.extend(cfg.errors())
    if errs:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(errs))
    set_threads(cfg.threads)
    return cfg


def _filter_seasons(frame: pd.DataFrame, cfg: PipelineConfig) -> pd.DataFrame:
    if cfg.seasons is None:
        return frame
    lo, hi = cfg.seasons
    return frame[(frame["season"] >= lo) & (frame["season"] <= hi)].reset_index(drop=True)


def companion_paths(dataset: Path) -> tuple[Path, Path]:
    stem = dataset.with_suffix("")
    return Path(f"{stem}.pa.csv"), Path(f"{stem}.report.json")


def cmd_ingest(args, cfg: PipelineConfig) -> dict:
    parsed = ingest.parse_statcast_files(args.inputs, cfg.season_range())
    balls, report = ingest.build_ball_dataset(parsed, cfg.geometry, cfg.categories)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    ingest.write_ball_dataset(ingest.concat_balls(balls), out)
    pa_path, report_path = companion_paths(out)
    _write_csv(ingest.plate_appearance_counts(parsed.pa_keys), pa_path)
    summary = report.to_dict()
    _write_json(summary, report_path)
    return summary


def _load_indexes(directory) -> dict:
    directory = Path(directory)
    out = {}
    for cat in ingest.CATEGORIES:
        path = directory / estimator.index_filename(cat)
        if path.is_file():
            out[cat] = estimator.load_index(path)
    if not out:
        raise DataError(f"no index files found in {directory}")
    return out


def cmd_build_index(args, cfg: PipelineConfig) -> dict:
    balls = _filter_seasons(ingest.read_ball_dataset(args.dataset), cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    built = {}
    for cat, part in ingest.split_categories(balls).items():
        idx = estimator.build_index(part, cat, k_default=cfg.k, scaling=cfg.scaling)
        estimator.save_index(idx, out / estimator.index_filename(cat))
        built[cat.value] = len(idx)
    _write_json({"config": cfg.to_dict(), "points": built}, out / "manifest.json")
    return built


def _score(args, cfg) -> pd.DataFrame:
    indexes = _load_indexes(args.index)
    queries = _filter_seasons(ingest.read_ball_dataset(args.dataset), cfg)
    # without an explicit k each index scores with the k it was built for
    k = cfg.k if "k" in getattr(args, "explicit", ()) else None
    scored = estimator.score_dataset(indexes, queries, k)
    check = scored["ads"].to_numpy() - (scored["ds"].to_numpy() + scored["cq"].to_numpy())
    if len(scored) and np.any(check != 0):
        raise InvariantError("ads != ds + cq")
    return scored


def cmd_score(args, cfg: PipelineConfig) -> dict:
    scored = _score(args, cfg)
    extra = [c for c in scored.columns if c not in ingest.BALL_COLUMNS and c not in SCORE_COLUMNS]
    _write_csv(scored[[*ingest.BALL_COLUMNS, *extra, *SCORE_COLUMNS]], args.out)
    return {"scored": len(scored), "k": cfg.k}


def cmd_evaluate(args, cfg: PipelineConfig) -> dict:
    indexes = _load_indexes(args.index)
    evals = _filter_seasons(ingest.read_ball_dataset(args.dataset), cfg)
    reports = evaluation.k_selection_study(indexes, evals, cfg.k_values, cfg.n_bins)
    out = Path(args.out)
    _write_csv(evaluation.calibration_frame(reports), out / "calibration.csv")
    summary = evaluation.brier_summary(reports)
    _write_json(summary, out / "brier.json")
    return summary


def _read_scored(path) -> pd.DataFrame:
    df = ingest.read_ball_dataset(path)
    missing = [c for c in SCORE_COLUMNS if c not in df.columns]
    if missing:
        raise SchemaError(f"{path} is missing score column(s): {', '.join(missing)}")
    return df


def _read_pa(path):
    if path is None:
        return None
    df = pd.read_csv(path)
    missing = [c for c in ("role", "player_id", "season", "plate_appearances") if c not in df.columns]
    if missing:
        raise SchemaError(f"{path} is missing column(s): {', '.join(missing)}")
    return df


def _summaries(args, cfg):
    scored = _filter_seasons(_read_scored(args.scored), cfg)
    return aggregate.summarize_players(scored, args.role, _read_pa(args.pa))


def cmd_summarize(args, cfg: PipelineConfig) -> dict:
    summaries = _summaries(args, cfg)
    out = Path(args.out)
    written = []
    for season, part in summaries.groupby("season", sort=True):
        path = out / f"summary_{season}_{args.role}.csv"
        _write_csv(part, path)
        written.append(str(path))
    if not written:
        out.mkdir(parents=True, exist_ok=True)
    return {"players": len(summaries), "files": written}


def cmd_leaderboard(args, cfg: PipelineConfig) -> dict:
    summaries = aggregate.qualify(_summaries(args, cfg), cfg.min_pa, cfg.min_balls, args.category)
    board = aggregate.leaderboard(summaries, args.metric, args.category, cfg.top_n, args.direction)
    _write_csv(board, args.out)
    shown = [
        {"rank": int(r.rank), "player_id": int(r.player_id), "season": int(r.season),
         args.metric: scoring.display_round(r.value)}
        for r in board.itertuples()
    ]
    return {"rows": len(board), "leaders": shown}


def cmd_join_stats(args, cfg: PipelineConfig) -> dict:
    summaries = aggregate.qualify(_summaries(args, cfg), cfg.min_pa, cfg.min_balls)
    external = aggregate.read_external_stats(args.stats)
    names = None
    if args.names:
        nm = pd.read_csv(args.names)
        if not {"player_id", "player_name"} <= set(nm.columns):
            raise SchemaError(f"{args.names} needs player_id and player_name columns")
        names = dict(zip(nm["player_id"].astype(np.int64), nm["player_name"].astype(str)))
    result = aggregate.metric_join(summaries, external, names, metric=args.metric)
    out = Path(args.out)
    _write_csv(result.joined, out / "joined.csv")
    _write_csv(result.unmatched_external, out / "unmatched_external.csv")
    summary = {
        "joined": len(result.joined),
        "unmatched_external": len(result.unmatched_external),
        "unmatched_players": result.unmatched_players,
        "correlations": {k: (None if np.isnan(v) else v) for k, v in result.correlations.items()},
    }
    _write_json(summary, out / "correlations.json")
    return summary


def cmd_synth(args, cfg: PipelineConfig) -> dict:
    train, query = synth.generate(cfg.seed, args.n_train, args.n_query)
    out = Path(args.out)
    cols = [*ingest.BALL_COLUMNS, "p_true"]
    _write_csv(train[cols], out / "train_balls.csv")
    _write_csv(query[cols], out / "query_balls.csv")
    return {"seed": cfg.seed, "train": len(train), "query": len(query)}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="plate-discipline", description="League swing probability and discipline scores on balls.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="JSON pipeline config; flags override it")
        p.add_argument("--threads", type=int, help="worker threads for neighbor search")
        p.add_argument("--seasons", help="season or inclusive range, e.g. 2024 or 2021-2023")
        return p

    p = common(sub.add_parser("ingest", help="Statcast CSV(s) -> ball dataset"))
    p.add_argument("inputs", nargs="+")
    p.add_argument("--out", required=True, help="ball dataset CSV to write")

    p = common(sub.add_parser("build-index", help="ball dataset -> one index file per category"))
    p.add_argument("dataset")
    p.add_argument("--k", help="default neighbor count stored in the index")
    p.add_argument("--scaling", choices=("zscore", "raw"))
    p.add_argument("--out", required=True, help="directory for index files")

    p = common(sub.add_parser("score", help="attach P_S, DS, CQ, ADS to a ball dataset"))
    p.add_argument("dataset")
    p.add_argument("--index", required=True, help="directory of index files")
    p.add_argument("--k")
    p.add_argument("--out", required=True)

    p = common(sub.add_parser("evaluate", help="Brier score and calibration curves per k"))
    p.add_argument("dataset")
    p.add_argument("--index", required=True)
    p.add_argument("--k", help="comma-separated k values")
    p.add_argument("--bins", type=int)
    p.add_argument("--out", required=True, help="output directory")

    def players(p):
        p.add_argument("scored")
        p.add_argument("--role", choices=aggregate.ROLES, default="batter")
        p.add_argument("--pa", help="plate-appearance table written by ingest")
        return p

    p = players(common(sub.add_parser("summarize", help="per-player season means, one CSV per season and role")))
    p.add_argument("--out", required=True, help="output directory")

    p = players(common(sub.add_parser("leaderboard", help="top players by a season-mean metric")))
    p.add_argument("--metric", choices=aggregate.METRICS, default="ds")
    p.add_argument("--category", choices=[c.value for c in ingest.CATEGORIES])
    p.add_argument("--direction", choices=("desc", "asc"), default="desc")
    p.add_argument("--min-pa", dest="min_pa", type=int)
    p.add_argument("--min-balls", dest="min_balls", type=int)
    p.add_argument("--top", type=int)
    p.add_argument("--out", required=True)

    p = players(common(sub.add_parser("join-stats", help="join season means with external BB%%/K%%/O-Swing%% stats")))
    p.add_argument("--stats", required=True)
    p.add_argument("--names", help="CSV of player_id,player_name for name-only rows")
    p.add_argument("--metric", choices=aggregate.METRICS, default="ds")
    p.add_argument("--min-pa", dest="min_pa", type=int)
    p.add_argument("--out", required=True, help="output directory")

    p = common(sub.add_parser("synth", help="synthetic balls with known swing probability"))
    p.add_argument("--seed", type=int)
    p.add_argument("--n-train", dest="n_train", type=int, default=200_000)
    p.add_argument("--n-query", dest="n_query", type=int, default=10_000)
    p.add_argument("--out", required=True, help="output directory")
    return parser


COMMANDS = {
    "ingest": cmd_ingest,
    "build-index": cmd_build_index,
    "score": cmd_score,
    "evaluate": cmd_evaluate,
    "summarize": cmd_summarize,
    "leaderboard": cmd_leaderboard,
    "join-stats": cmd_join_stats,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        result = COMMANDS[args.command](args, cfg)
    except PlateDisciplineError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(json.dumps(result, indent=2, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
