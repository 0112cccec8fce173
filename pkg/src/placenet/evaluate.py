"""Candidate-pair generation, AUC scoring, and temporal cross-validation.

For each adjacent (train, test) snapshot pair the candidates are ordered
pairs over the training nodes, labeled by edge membership in the test
snapshot. AUC uses the rank-sum estimator with midrank tie handling, so it
equals the probability that a random positive outscores a random negative
with ties counted one half.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ingest import VenueRegistry
from .netstats import pagerank
from .predict import (
    PAIR_FEATURE_NAMES,
    PairScorer,
    score_logistic_matrix,
    train_logistic,
)
from .snapshot import ActivityProfile, PlaceGraph

FULL_ENUMERATION_LIMIT = 2000

PREDICTOR_FEATURES = {
    "CommonNeighbors": "common_neighbors",
    "NeighborOverlap": "neighbor_overlap",
    "AdamicAdar": "adamic_adar",
    "DegreeProduct": "degree_product",
    "InOutDegreeProduct": "in_out_degree_product",
    "PlaceRank": "place_rank",
    "GeoDistance": "geo_distance_km",  # negated when ranking: closer is better
    "Popularity": "popularity_product",
    "DiurnalSim": "diurnal_sim",
    "WeeklySim": "weekly_sim",
    "EdgeWeight": "edge_weight_prev",
    "Gravity": "gravity",
    "DynamicGravity": "dynamic_gravity",
}

ALL_PREDICTORS = tuple(PREDICTOR_FEATURES) + ("LogisticReg", "Random")


@dataclass
class CandidateSet:
    pairs: list[tuple[str, str]]
    labels: np.ndarray
    mode: str
    negative_ratio: int | None
    seed: int | None
    new_edges_only: bool

    @property
    def n_positives(self) -> int:
        return int(self.labels.sum())

    @property
    def n_negatives(self) -> int:
        return len(self.labels) - self.n_positives


@dataclass
class EvalConfig:
    mode: str = "sampled"  # "full" | "sampled"
    negative_ratio: int = 10
    seed: int = 0
    new_edges_only: bool = False
    beta: float = 1.0
    strength_T: int = 168
    l2_lambda: float = 1.0
    predictors: tuple[str, ...] = ALL_PREDICTORS
    pagerank_max_iter: int = 1000


@dataclass
class EvalReport:
    train_index: int
    train_window: tuple[int, int]
    test_window: tuple[int, int]
    auc_scores: dict[str, float] = field(default_factory=dict)
    n_positives: int = 0
    n_negatives: int = 0
    candidate_mode: str = "sampled"
    negative_ratio: int | None = None
    seed: int | None = None
    new_edges_only: bool = False
    supervised_trained: bool = False
    skipped_reason: str | None = None


def generate_candidates(
    train: PlaceGraph,
    test: PlaceGraph,
    mode: str = "full",
    negative_ratio: int = 10,
    seed: int = 0,
    new_edges_only: bool = False,
) -> CandidateSet:
    """Build labeled ordered pairs over the training nodes.

    Positives are test-snapshot edges with both endpoints among the training
    nodes; with ``new_edges_only`` the universe additionally excludes every
    pair already linked in the training snapshot. Full mode enumerates every
    remaining ordered pair (refused above FULL_ENUMERATION_LIMIT nodes);
    sampled mode draws ``negative_ratio`` negatives per positive uniformly
    without replacement, deterministically for a given seed.
    """
    if mode not in ("full", "sampled"):
        raise ValueError(f"mode must be 'full' or 'sampled', got {mode!r}")
    nodes = sorted(train.nodes)
    node_set = train.nodes
    excluded = set(train.edges) if new_edges_only else set()
    positives = sorted(
        e for e in test.edges
        if e[0] in node_set and e[1] in node_set and e not in excluded
    )
    if not positives:
        raise ValueError("no positive pairs: no test edges fall inside the training node set")
    positive_set = set(positives)
    n = len(nodes)

    if mode == "full":
        if n > FULL_ENUMERATION_LIMIT:
            raise ValueError(
                f"full enumeration refused for {n} > {FULL_ENUMERATION_LIMIT} nodes; use sampled mode"
            )
        negatives = [
            (i, j)
            for i in nodes
            for j in nodes
            if i != j and (i, j) not in positive_set and (i, j) not in excluded
        ]
        pairs = positives + negatives
        labels = np.array([1] * len(positives) + [0] * len(negatives), dtype=np.int8)
        return CandidateSet(pairs, labels, "full", None, None, new_edges_only)

    target = negative_ratio * len(positives)
    available = n * (n - 1) - len(positive_set) - len(excluded - positive_set)
    rng = random.Random(seed)
    if target >= available or n <= FULL_ENUMERATION_LIMIT and target > available // 2:
        pool = [
            (i, j)
            for i in nodes
            for j in nodes
            if i != j and (i, j) not in positive_set and (i, j) not in excluded
        ]
        negatives = pool if target >= len(pool) else rng.sample(pool, target)
    else:
        chosen: set[tuple[str, str]] = set()
        negatives = []
        while len(negatives) < target:
            i = nodes[rng.randrange(n)]
            j = nodes[rng.randrange(n)]
            pair = (i, j)
            if i == j or pair in positive_set or pair in excluded or pair in chosen:
                continue
            chosen.add(pair)
            negatives.append(pair)
    pairs = positives + negatives
    labels = np.array([1] * len(positives) + [0] * len(negatives), dtype=np.int8)
    return CandidateSet(pairs, labels, "sampled", negative_ratio, seed, new_edges_only)


def auc(scores, labels) -> float:
    """Area under the ROC curve via the rank-sum statistic with midranks."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise ValueError("scores and labels must be 1-D and aligned")
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("need at least one positive and one negative")
    order = np.argsort(s, kind="mergesort")
    ss = s[order]
    new_group = np.r_[True, ss[1:] != ss[:-1]]
    group = np.cumsum(new_group) - 1
    counts = np.bincount(group)
    ends = np.cumsum(counts)
    starts = ends - counts
    midranks_sorted = (starts + 1 + ends) / 2.0
    ranks = np.empty(len(s))
    ranks[order] = midranks_sorted[group]
    rank_sum = float(ranks[y == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def _candidate_seed(base_seed: int, pair_index: int, training: bool) -> int:
    return base_seed * 100003 + pair_index * 2 + (1 if training else 0)


def score_candidates(
    scorer: PairScorer,
    candidates: CandidateSet,
    predictors: tuple[str, ...],
    feature_matrix: np.ndarray | None = None,
    logistic_model=None,
    random_rng: np.random.Generator | None = None,
) -> dict[str, np.ndarray]:
    """Per-predictor score vectors over the candidate pairs.

    GeoDistance scores are negated distances so that, as everywhere else,
    a larger score means a more likely link.
    """
    X = scorer.feature_matrix(candidates.pairs) if feature_matrix is None else feature_matrix
    column = {name: k for k, name in enumerate(PAIR_FEATURE_NAMES)}
    out: dict[str, np.ndarray] = {}
    for name in predictors:
        if name == "LogisticReg":
            if logistic_model is not None:
                out[name] = score_logistic_matrix(logistic_model, X)
        elif name == "Random":
            rng = random_rng if random_rng is not None else np.random.default_rng(0)
            out[name] = rng.random(len(candidates.pairs))
        else:
            col = X[:, column[PREDICTOR_FEATURES[name]]]
            out[name] = -col if name == "GeoDistance" else col
    return out


def temporal_cross_validation(
    snapshots: list[PlaceGraph],
    profiles_by_snapshot: list[dict[str, ActivityProfile]],
    registry: VenueRegistry,
    config: EvalConfig | None = None,
) -> list[EvalReport]:
    """Evaluate every predictor on each adjacent (train, test) snapshot pair.

    Features come from the training snapshot; the supervised model is fitted
    on the preceding pair's candidates when one exists. Pairs that cannot form
    a candidate set (empty snapshot, no positives, or a single class for
    training) are reported as skipped rather than raised, so long sequences
    with sparse tails still evaluate.
    """
    if len(snapshots) < 2:
        raise ValueError("need at least 2 snapshots")
    if len(profiles_by_snapshot) != len(snapshots):
        raise ValueError("profiles_by_snapshot must align with snapshots")
    cfg = config or EvalConfig()
    reports: list[EvalReport] = []
    scorers: dict[int, PairScorer] = {}

    def scorer_for(k: int) -> PairScorer:
        if k not in scorers:
            pr = pagerank(snapshots[k], max_iter=cfg.pagerank_max_iter)
            scorers[k] = PairScorer(
                snapshots[k], profiles_by_snapshot[k], registry, pr,
                beta=cfg.beta, strength_T=cfg.strength_T,
            )
        return scorers[k]

    for k in range(len(snapshots) - 1):
        train_g, test_g = snapshots[k], snapshots[k + 1]
        report = EvalReport(
            train_index=k,
            train_window=train_g.window,
            test_window=test_g.window,
            candidate_mode=cfg.mode,
            negative_ratio=cfg.negative_ratio if cfg.mode == "sampled" else None,
            seed=cfg.seed,
            new_edges_only=cfg.new_edges_only,
        )
        if train_g.n_nodes == 0 or test_g.n_edges == 0:
            report.skipped_reason = "empty train or test snapshot"
            reports.append(report)
            continue
        try:
            cands = generate_candidates(
                train_g, test_g, mode=cfg.mode, negative_ratio=cfg.negative_ratio,
                seed=_candidate_seed(cfg.seed, k, training=False),
                new_edges_only=cfg.new_edges_only,
            )
        except ValueError as exc:
            report.skipped_reason = str(exc)
            reports.append(report)
            continue

        model = None
        if "LogisticReg" in cfg.predictors and k >= 1 and snapshots[k - 1].n_nodes > 0:
            try:
                train_cands = generate_candidates(
                    snapshots[k - 1], train_g, mode=cfg.mode,
                    negative_ratio=cfg.negative_ratio,
                    seed=_candidate_seed(cfg.seed, k, training=True),
                    new_edges_only=cfg.new_edges_only,
                )
                X_train = scorer_for(k - 1).feature_matrix(train_cands.pairs)
                model = train_logistic(X_train, train_cands.labels, l2_lambda=cfg.l2_lambda)
            except ValueError:
                model = None

        scorer = scorer_for(k)
        X = scorer.feature_matrix(cands.pairs)
        score_map = score_candidates(
            scorer, cands, cfg.predictors, feature_matrix=X,
            logistic_model=model,
            random_rng=np.random.default_rng([cfg.seed, k]),
        )
        report.n_positives = cands.n_positives
        report.n_negatives = cands.n_negatives
        report.supervised_trained = model is not None
        report.auc_scores = {name: auc(scores, cands.labels) for name, scores in score_map.items()}
        reports.append(report)
    return reports


def export_scores_csv(path: str | Path, candidates: CandidateSet, score_map: dict[str, np.ndarray]) -> None:
    """Per-pair predictor scores with labels, for external ROC plotting."""
    path = Path(path)
    names = sorted(score_map)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["origin", "dest", "label"] + names)
        for k, (i, j) in enumerate(candidates.pairs):
            writer.writerow([i, j, int(candidates.labels[k])] + [repr(float(score_map[n][k])) for n in names])
