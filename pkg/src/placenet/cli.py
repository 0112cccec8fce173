"""Command-line pipeline: generate, snapshots, stats, dynamics, evaluate, pipeline.

Every report is a JSON document with sorted keys that embeds the full
effective run configuration and the tool version; wall-clock timestamps are
never written, so identical seeded invocations emit byte-identical artifacts.
Partial outputs are removed when a command fails.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import (
    edge_longevity,
    growth_curve,
    new_edge_probability,
    new_venue_fraction,
    node_turnover,
    weight_persistence,
)
from .evaluate import (
    EvalConfig,
    _candidate_seed,
    export_scores_csv,
    generate_candidates,
    score_candidates,
    temporal_cross_validation,
)
from .ingest import load_checkins, load_registry, write_checkins, write_registry
from .netstats import (
    NetstatsError,
    category_weight_profile,
    compute_topology_report,
    degree_and_weight_distributions,
    fit_power_law,
    peak_hour_interaction_matrix,
)
from .snapshot import activity_profiles, window_stream, write_snapshot
from .synthgen import CityConfig, generate_checkins, generate_city

WEIGHT_PERSISTENCE_GRID = (1, 2, 3, 5, 10)
MAX_LONGEVITY_HORIZON = 8
MAX_WEEK_INDEX = 30


@dataclass
class RunConfig:
    """Effective configuration echoed into every report."""

    command: str
    checkins: str | None = None
    venues: str | None = None
    out: str = "out"
    window_days: float = 90.0
    gap_hours: float = 3.0
    T: int = 168
    beta: float = 1.0
    utc_offset: int = 0
    seed: int = 42
    negative_ratio: int = 10
    candidates: str = "sampled"
    new_edges_only: bool = False
    null_model: bool = False
    null_seeds: int = 5
    dump_scores: bool = False
    threads: int = 1
    snapshot_index: int = 0
    n_venues: int = 2000
    n_users: int = 500
    days: int = 180

    @property
    def window_seconds(self) -> int:
        return int(round(self.window_days * 86400))

    @property
    def gap_seconds(self) -> int:
        return int(round(self.gap_hours * 3600))


class CliError(Exception):
    pass


class ArtifactWriter:
    """Tracks written artifacts so a failing command can clean up after itself."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.written: list[Path] = []
        out_dir.mkdir(parents=True, exist_ok=True)

    def path(self, *parts: str) -> Path:
        p = self.out_dir.joinpath(*parts)
        p.parent.mkdir(parents=True, exist_ok=True)
        self.written.append(p)
        return p

    def write_json(self, name: str, payload: dict) -> Path:
        p = self.path(name)
        p.write_text(json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n", encoding="utf-8")
        return p

    def cleanup(self) -> None:
        for p in self.written:
            try:
                p.unlink(missing_ok=True)
            except OSError:
                pass


def _provenance(cfg: RunConfig) -> dict:
    return {
        "config": asdict(cfg),
        "tool": {"name": "placenet", "version": __version__},
    }


def _require_input(path_str: str | None, what: str) -> Path:
    if path_str is None:
        raise CliError(f"missing required --{what} path")
    path = Path(path_str)
    if not path.exists():
        raise CliError(f"input path does not exist: {path}")
    return path


def _load(cfg: RunConfig):
    registry = load_registry(_require_input(cfg.venues, "venues"))
    stream = load_checkins(_require_input(cfg.checkins, "checkins"), registry)
    return registry, stream


def _histogram_pairs(hist: dict[int, int]) -> list[list[int]]:
    return [[int(v), int(c)] for v, c in sorted(hist.items())]


def _city_config(cfg: RunConfig) -> CityConfig:
    return CityConfig(n_venues=cfg.n_venues, n_users=cfg.n_users, span_days=cfg.days, seed=cfg.seed)


def cmd_generate(cfg: RunConfig, writer: ArtifactWriter) -> None:
    city = _city_config(cfg)
    registry = generate_city(city)
    stream = generate_checkins(registry, city)
    venues_path = writer.path("venues.csv")
    checkins_path = writer.path("checkins.jsonl")
    write_registry(registry, venues_path)
    write_checkins(stream, checkins_path)
    writer.write_json("generate.json", {
        **_provenance(cfg),
        "artifacts": {"venues": venues_path.name, "checkins": checkins_path.name},
        "counts": {"n_venues": len(registry), "n_events": len(stream)},
    })
    cfg.venues = str(venues_path)
    cfg.checkins = str(checkins_path)


def cmd_snapshots(cfg: RunConfig, writer: ArtifactWriter) -> None:
    _, stream = _load(cfg)
    graphs = window_stream(stream, cfg.window_seconds, gap_threshold=cfg.gap_seconds)
    summaries = []
    for k, graph in enumerate(graphs):
        edges = writer.path("snapshots", f"snapshot_{k:03d}.tsv")
        sidecar = writer.path("snapshots", f"snapshot_{k:03d}.json")
        write_snapshot(graph, edges, sidecar)
        summaries.append({
            "index": k, "window": list(graph.window),
            "n_nodes": graph.n_nodes, "n_edges": graph.n_edges,
        })
    writer.write_json("snapshots.json", {**_provenance(cfg), "snapshots": summaries})


def _power_law_entry(samples) -> dict | None:
    try:
        fit = fit_power_law(samples)
    except NetstatsError as exc:
        return {"error": str(exc)}
    return {
        "exponent": fit.exponent,
        "x_min": fit.x_min,
        "n_tail": fit.n_tail,
        "ks_statistic": fit.ks_statistic,
    }


def cmd_stats(cfg: RunConfig, writer: ArtifactWriter) -> None:
    registry, stream = _load(cfg)
    graphs = window_stream(stream, cfg.window_seconds, gap_threshold=cfg.gap_seconds)
    if not 0 <= cfg.snapshot_index < len(graphs):
        raise CliError(f"snapshot index {cfg.snapshot_index} out of range (have {len(graphs)})")
    graph = graphs[cfg.snapshot_index]
    if graph.n_nodes == 0:
        raise CliError(f"snapshot {cfg.snapshot_index} is empty")
    report = compute_topology_report(
        graph, rng_seed=cfg.seed,
        null_seeds=cfg.null_seeds if cfg.null_model else 0,
    )
    dists = degree_and_weight_distributions(graph)
    profiles = activity_profiles(stream, graph, T=24, utc_offset=cfg.utc_offset,
                                 gap_threshold=cfg.gap_seconds)
    degree_samples = [len(graph.neighbors(v)) for v in graph.nodes]
    weight_samples = list(graph.edges.values())
    payload = {
        **_provenance(cfg),
        "snapshot": {"index": cfg.snapshot_index, "window": list(graph.window)},
        "topology": asdict(report),
        "distributions": {name: _histogram_pairs(h) for name, h in dists.items()},
        "power_law": {
            "degree": _power_law_entry(degree_samples),
            "edge_weight": _power_law_entry(weight_samples),
        },
        "category_weight_profile": {
            cat: _histogram_pairs(h)
            for cat, h in category_weight_profile(graph, registry).items()
        },
        "peak_hour_matrix": [
            [round(x, 12) for x in row]
            for row in peak_hour_interaction_matrix(graph, profiles).tolist()
        ],
    }
    writer.write_json("stats.json", payload)


def cmd_dynamics(cfg: RunConfig, writer: ArtifactWriter) -> None:
    _, stream = _load(cfg)
    graphs = window_stream(stream, cfg.window_seconds, gap_threshold=cfg.gap_seconds)

    try:
        growth = growth_curve(stream, gap_threshold=cfg.gap_seconds)
        points_path = writer.path("growth_points.csv")
        with points_path.open("w", encoding="utf-8") as fh:
            fh.write("n_nodes,n_edges\n")
            for n, e in growth.points:
                fh.write(f"{n},{e}\n")
        growth_entry = {
            "exponent": growth.exponent,
            "exponent_stderr": growth.exponent_stderr,
            "n_points": len(growth.points),
            "points_csv": points_path.name,
        }
    except ValueError as exc:
        growth_entry = {"error": str(exc)}

    n_weeks = 0
    if stream.events:
        span = stream.time_span[1] - stream.time_span[0]
        n_weeks = min(span // (7 * 86400) + 1, MAX_WEEK_INDEX)
    venue_fractions = {
        str(w): new_venue_fraction(stream, w) for w in range(2, n_weeks + 1)
    }

    pairs = []
    for k in range(len(graphs) - 1):
        prev, curr = graphs[k], graphs[k + 1]
        p_new_node, _ = node_turnover(graphs, k, 1)
        pairs.append({
            "base_index": k,
            "new_edge_probability": new_edge_probability(prev, curr),
            "new_node_probability": p_new_node,
            "weight_persistence": {
                str(w): weight_persistence(prev, curr, w) for w in WEIGHT_PERSISTENCE_GRID
            },
        })

    edge_series = {}
    node_series = {}
    for base in range(len(graphs) - 1):
        horizon = min(len(graphs) - base - 1, MAX_LONGEVITY_HORIZON)
        series = edge_longevity(graphs, base, horizon)
        edge_series[str(base)] = series.probabilities if series else None
        _, nodes = node_turnover(graphs, base, horizon)
        node_series[str(base)] = nodes.probabilities if nodes else None

    writer.write_json("dynamics.json", {
        **_provenance(cfg),
        "growth": growth_entry,
        "new_venue_fraction": venue_fractions,
        "adjacent_pairs": pairs,
        "edge_longevity": edge_series,
        "node_longevity": node_series,
    })


def cmd_evaluate(cfg: RunConfig, writer: ArtifactWriter) -> None:
    registry, stream = _load(cfg)
    graphs = window_stream(stream, cfg.window_seconds, gap_threshold=cfg.gap_seconds)
    if len(graphs) < 2:
        raise CliError(f"need at least 2 snapshots for evaluation, have {len(graphs)}")
    profiles = [
        activity_profiles(stream, g, T=168, utc_offset=cfg.utc_offset, gap_threshold=cfg.gap_seconds)
        for g in graphs
    ]
    eval_cfg = EvalConfig(
        mode=cfg.candidates,
        negative_ratio=cfg.negative_ratio,
        seed=cfg.seed,
        new_edges_only=cfg.new_edges_only,
        beta=cfg.beta,
        strength_T=cfg.T if cfg.T in (24, 168) else 168,
    )
    reports = temporal_cross_validation(graphs, profiles, registry, eval_cfg)
    payload = {
        **_provenance(cfg),
        "evaluations": [
            {
                "train_index": r.train_index,
                "train_window": list(r.train_window),
                "test_window": list(r.test_window),
                "candidates": {
                    "mode": r.candidate_mode,
                    "negative_ratio": r.negative_ratio,
                    "seed": r.seed,
                    "new_edges_only": r.new_edges_only,
                    "n_positives": r.n_positives,
                    "n_negatives": r.n_negatives,
                },
                "auc": r.auc_scores or None,
                "supervised_trained": r.supervised_trained,
                "skipped_reason": r.skipped_reason,
            }
            for r in reports
        ],
    }
    writer.write_json("eval.json", payload)
    if cfg.dump_scores:
        from .netstats import pagerank
        from .predict import PairScorer

        for r in reports:
            if r.skipped_reason:
                continue
            k = r.train_index
            cands = generate_candidates(
                graphs[k], graphs[k + 1], mode=eval_cfg.mode,
                negative_ratio=eval_cfg.negative_ratio,
                seed=_candidate_seed(eval_cfg.seed, k, training=False),
                new_edges_only=eval_cfg.new_edges_only,
            )
            scorer = PairScorer(
                graphs[k], profiles[k], registry,
                pagerank(graphs[k], max_iter=eval_cfg.pagerank_max_iter),
                beta=eval_cfg.beta, strength_T=eval_cfg.strength_T,
            )
            score_map = score_candidates(
                scorer, cands, tuple(n for n in eval_cfg.predictors if n not in ("LogisticReg",)),
                random_rng=np.random.default_rng([eval_cfg.seed, k]),
            )
            export_scores_csv(writer.path(f"scores_{k:03d}.csv"), cands, score_map)


def cmd_pipeline(cfg: RunConfig, writer: ArtifactWriter) -> None:
    cmd_generate(cfg, writer)
    cmd_snapshots(cfg, writer)
    cmd_stats(cfg, writer)
    cmd_dynamics(cfg, writer)
    cmd_evaluate(cfg, writer)


COMMANDS = {
    "generate": cmd_generate,
    "snapshots": cmd_snapshots,
    "stats": cmd_stats,
    "dynamics": cmd_dynamics,
    "evaluate": cmd_evaluate,
    "pipeline": cmd_pipeline,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="placenet",
        description="Build place networks from check-in streams, analyze them, and benchmark link predictors.",
    )
    parser.add_argument("--version", action="version", version=f"placenet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, inputs=True):
        if inputs:
            p.add_argument("--checkins", help="check-in JSONL file")
            p.add_argument("--venues", help="venue registry CSV")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--window-days", type=float, default=90.0, dest="window_days")
        p.add_argument("--gap-hours", type=float, default=3.0, dest="gap_hours")
        p.add_argument("--T", type=int, default=168, choices=(24, 168))
        p.add_argument("--beta", type=float, default=1.0)
        p.add_argument("--utc-offset", type=int, default=0, dest="utc_offset")
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--threads", type=int, default=1,
                       help="max worker threads; 1 (the default) guarantees bit-reproducible output")

    p_gen = sub.add_parser("generate", help="emit a seeded synthetic city and check-in stream")
    add_common(p_gen, inputs=False)
    p_gen.add_argument("--n-venues", type=int, default=2000, dest="n_venues")
    p_gen.add_argument("--n-users", type=int, default=500, dest="n_users")
    p_gen.add_argument("--days", type=int, default=180)

    p_snap = sub.add_parser("snapshots", help="export windowed edge lists")
    add_common(p_snap)

    p_stats = sub.add_parser("stats", help="topology report for one snapshot")
    add_common(p_stats)
    p_stats.add_argument("--snapshot-index", type=int, default=0, dest="snapshot_index")
    p_stats.add_argument("--null-model", action="store_true", dest="null_model")
    p_stats.add_argument("--seeds", type=int, default=5, dest="null_seeds",
                         help="number of null-model rewirings to average")

    p_dyn = sub.add_parser("dynamics", help="growth and persistence report")
    add_common(p_dyn)

    p_eval = sub.add_parser("evaluate", help="link-prediction benchmark under temporal cross-validation")
    add_common(p_eval)
    p_eval.add_argument("--negative-ratio", type=int, default=10, dest="negative_ratio")
    p_eval.add_argument("--candidates", choices=("full", "sampled"), default="sampled")
    p_eval.add_argument("--new-edges-only", action="store_true", dest="new_edges_only")
    p_eval.add_argument("--dump-scores", action="store_true", dest="dump_scores")

    p_pipe = sub.add_parser("pipeline", help="generate + snapshots + stats + dynamics + evaluate")
    add_common(p_pipe, inputs=False)
    p_pipe.add_argument("--n-venues", type=int, default=2000, dest="n_venues")
    p_pipe.add_argument("--n-users", type=int, default=500, dest="n_users")
    p_pipe.add_argument("--days", type=int, default=180)
    p_pipe.add_argument("--negative-ratio", type=int, default=10, dest="negative_ratio")
    p_pipe.add_argument("--candidates", choices=("full", "sampled"), default="sampled")
    p_pipe.add_argument("--new-edges-only", action="store_true", dest="new_edges_only")
    p_pipe.add_argument("--null-model", action="store_true", dest="null_model")
    p_pipe.add_argument("--seeds", type=int, default=5, dest="null_seeds")
    p_pipe.add_argument("--dump-scores", action="store_true", dest="dump_scores")
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command)
    for name in vars(cfg):
        if hasattr(args, name) and getattr(args, name) is not None:
            setattr(cfg, name, getattr(args, name))
    if cfg.threads < 1:
        raise CliError("--threads must be >= 1")
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        writer = ArtifactWriter(Path(cfg.out))
    except CliError as exc:
        print(f"placenet: error: {exc}", file=sys.stderr)
        return 2
    try:
        COMMANDS[cfg.command](cfg, writer)
    except (CliError, OSError, ValueError, KeyError) as exc:
        writer.cleanup()
        print(f"placenet: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
