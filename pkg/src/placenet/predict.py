"""Pair scoring for link prediction: triadic, centrality, geo-mobility,
gravity, and time-resolved gravity predictors, plus an L2 logistic baseline.

Neighborhoods for triadic features live on the undirected projection; the
common-neighbor log-degree sum carries a +1.0 floor standing for a universal
virtual neighbor, so it is at least 1 for every pair.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .ingest import VenueRegistry
from .snapshot import ActivityProfile, PlaceGraph

EARTH_RADIUS_KM = 6371.0088
MIN_DISTANCE_KM = 0.05  # floor for co-located venues, below GPS resolution


@dataclass(frozen=True)
class PairFeatures:
    common_neighbors: float
    neighbor_overlap: float
    adamic_adar: float
    degree_product: float
    in_out_degree_product: float
    place_rank: float
    geo_distance_km: float
    popularity_product: float
    diurnal_sim: float
    weekly_sim: float
    edge_weight_prev: float
    gravity: float
    dynamic_gravity: float

    def as_vector(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in PAIR_FEATURE_NAMES])


PAIR_FEATURE_NAMES = tuple(f.name for f in fields(PairFeatures))


def haversine_km(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in kilometers."""
    p1 = math.radians(lat1)
    p2 = math.radians(lat2)
    dp = math.radians(lat2 - lat1)
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2.0 * EARTH_RADIUS_KM * math.asin(math.sqrt(a))


def pair_distance_km(registry: VenueRegistry, i: str, j: str) -> float:
    """Haversine distance between two registered venues, floored at MIN_DISTANCE_KM."""
    a, b = registry[i], registry[j]
    return max(haversine_km(a.lat, a.lon, b.lat, b.lon), MIN_DISTANCE_KM)


def triadic_scores(graph: PlaceGraph, i: str, j: str) -> tuple[int, float, float]:
    """(common neighbor count, Jaccard overlap, extended common-neighbor score)
    on the undirected projection.

    The third score sums 1/ln(degree) over common neighbors and adds 1.0 for
    the universal virtual neighbor; a common neighbor always has degree >= 2,
    so each term is finite and positive.
    """
    if i == j:
        raise ValueError("pair endpoints must differ")
    gi = graph.neighbors(i)
    gj = graph.neighbors(j)
    common = gi & gj
    union = gi | gj
    jaccard = len(common) / len(union) if union else 0.0
    aa = 1.0 + sum(1.0 / math.log(len(graph.neighbors(z))) for z in common)
    return len(common), jaccard, aa


def centrality_scores(
    graph: PlaceGraph, pagerank_scores: dict[str, float], i: str, j: str
) -> tuple[int, int, float]:
    """(undirected degree product, out-degree(i) x in-degree(j), PageRank product)."""
    if i not in pagerank_scores or j not in pagerank_scores:
        missing = i if i not in pagerank_scores else j
        raise KeyError(f"no PageRank score for {missing!r}")
    degree_product = len(graph.neighbors(i)) * len(graph.neighbors(j))
    in_out = len(graph.out_neighbors(i)) * len(graph.in_neighbors(j))
    return degree_product, in_out, pagerank_scores[i] * pagerank_scores[j]


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip(float(a @ b) / (na * nb), 0.0, 1.0))


def mobility_scores(
    profiles: dict[str, ActivityProfile], registry: VenueRegistry, i: str, j: str
) -> tuple[float, float, float, float]:
    """(distance km, popularity product, daily cosine, weekly cosine).

    Cosines compare check-in frequency vectors at T=24 and T=168; an all-zero
    vector yields similarity 0. Profiles must be weekly (T=168); the daily
    vector is their fold.
    """
    pi, pj = profiles[i], profiles[j]
    if pi.T != 168 or pj.T != 168:
        raise ValueError("mobility_scores expects weekly (T=168) profiles")
    distance = pair_distance_km(registry, i, j)
    popularity = float(pi.popularity) * float(pj.popularity)
    diurnal = _cosine(pi.to_daily().checkins.astype(float), pj.to_daily().checkins.astype(float))
    weekly = _cosine(pi.checkins.astype(float), pj.checkins.astype(float))
    return distance, popularity, diurnal, weekly


def gravity_score(popularity_i: float, popularity_j: float, distance_km: float, beta: float = 1.0) -> float:
    """Popularity-mass attraction with power-law distance deterrence."""
    return popularity_i * popularity_j / distance_km**beta


def dynamic_gravity_score(
    out_strength_i: np.ndarray,
    in_strength_j: np.ndarray,
    adamic_adar_ij: float,
    distance_km: float,
    beta: float = 1.0,
) -> float:
    """Time-resolved gravity: hour-matched out/in strength product, scaled by
    the extended common-neighbor score and distance deterrence.

    With length-1 strength vectors and adamic_adar_ij = 1 this equals
    gravity_score on total popularities.
    """
    a = np.asarray(out_strength_i, dtype=float)
    b = np.asarray(in_strength_j, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"strength vectors disagree: {a.shape} vs {b.shape}")
    return adamic_adar_ij * float(a @ b) / distance_km**beta


def edge_weight_baseline(prev_graph: PlaceGraph, i: str, j: str) -> int:
    """Weight of the directed edge (i, j) in the earlier snapshot; 0 if absent."""
    return prev_graph.weight(i, j)


class PairScorer:
    """Feature computation for ordered venue pairs of one training snapshot.

    Precomputes neighborhoods, degrees, PageRank products, popularity, profile
    vectors, and strength vectors so that per-pair scoring is cheap. The
    ``strength_T`` knob selects the resolution of the dynamic-gravity strength
    sum (168 keeps the weekly vectors, 24 folds them).
    """

    def __init__(
        self,
        graph: PlaceGraph,
        profiles: dict[str, ActivityProfile],
        registry: VenueRegistry,
        pagerank_scores: dict[str, float],
        beta: float = 1.0,
        strength_T: int = 168,
    ):
        if strength_T not in (24, 168):
            raise ValueError(f"strength_T must be 24 or 168, got {strength_T}")
        self.graph = graph
        self.registry = registry
        self.beta = beta
        self.strength_T = strength_T
        self.pagerank_scores = pagerank_scores

        self._nbrs = {v: graph.neighbors(v) for v in graph.nodes}
        self._out_deg = {v: len(graph.out_neighbors(v)) for v in graph.nodes}
        self._in_deg = {v: len(graph.in_neighbors(v)) for v in graph.nodes}
        self._inv_log_deg = {
            v: (1.0 / math.log(len(nbrs)) if len(nbrs) >= 2 else 0.0)
            for v, nbrs in self._nbrs.items()
        }
        self._lat = {v: registry[v].lat for v in graph.nodes}
        self._lon = {v: registry[v].lon for v in graph.nodes}
        self._popularity = {}
        self._daily = {}
        self._weekly = {}
        self._out_strength = {}
        self._in_strength = {}
        for v in graph.nodes:
            p = profiles[v]
            if p.T != 168:
                raise ValueError("PairScorer expects weekly (T=168) profiles")
            daily = p.to_daily()
            self._popularity[v] = float(p.popularity)
            self._daily[v] = _unit(daily.checkins)
            self._weekly[v] = _unit(p.checkins)
            if strength_T == 168:
                self._out_strength[v] = p.out_strength.astype(float)
                self._in_strength[v] = p.in_strength.astype(float)
            else:
                self._out_strength[v] = daily.out_strength.astype(float)
                self._in_strength[v] = daily.in_strength.astype(float)

    def features(self, i: str, j: str) -> PairFeatures:
        if i == j:
            raise ValueError("pair endpoints must differ")
        gi = self._nbrs[i]
        gj = self._nbrs[j]
        common = gi & gj
        union_size = len(gi) + len(gj) - len(common)
        jaccard = len(common) / union_size if union_size else 0.0
        aa = 1.0
        for z in common:
            aa += self._inv_log_deg[z]
        distance = max(
            haversine_km(self._lat[i], self._lon[i], self._lat[j], self._lon[j]),
            MIN_DISTANCE_KM,
        )
        deterrence = distance**self.beta
        popularity = self._popularity[i] * self._popularity[j]
        strength_sum = float(self._out_strength[i] @ self._in_strength[j])
        return PairFeatures(
            common_neighbors=float(len(common)),
            neighbor_overlap=jaccard,
            adamic_adar=aa,
            degree_product=float(len(gi) * len(gj)),
            in_out_degree_product=float(self._out_deg[i] * self._in_deg[j]),
            place_rank=self.pagerank_scores[i] * self.pagerank_scores[j],
            geo_distance_km=distance,
            popularity_product=popularity,
            diurnal_sim=_cosine(self._daily[i], self._daily[j]),
            weekly_sim=_cosine(self._weekly[i], self._weekly[j]),
            edge_weight_prev=float(self.graph.weight(i, j)),
            gravity=popularity / deterrence,
            dynamic_gravity=aa * strength_sum / deterrence,
        )

    def feature_matrix(self, pairs: list[tuple[str, str]]) -> np.ndarray:
        X = np.empty((len(pairs), len(PAIR_FEATURE_NAMES)))
        for k, (i, j) in enumerate(pairs):
            X[k] = self.features(i, j).as_vector()
        return X


def _unit(v: np.ndarray) -> np.ndarray:
    v = v.astype(float)
    n = float(np.linalg.norm(v))
    return v / n if n > 0 else v


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    means: np.ndarray
    scales: np.ndarray
    l2_lambda: float
    loss_history: list[float]
    feature_names: tuple[str, ...] = PAIR_FEATURE_NAMES


def _logistic_loss_grad(w, b, X, y, l2_lambda):
    n = len(y)
    z = X @ w + b
    # log(1 + exp(-m)) with m = z for y=1, -z for y=0, computed stably
    m = np.where(y == 1, z, -z)
    loss = float(np.logaddexp(0.0, -m).sum() + 0.5 * l2_lambda * float(w @ w)) / n
    p = 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))
    err = p - y
    grad_w = (X.T @ err + l2_lambda * w) / n
    grad_b = float(err.sum()) / n
    return loss, grad_w, grad_b


def train_logistic(
    X,
    y,
    l2_lambda: float = 1.0,
    max_epochs: int = 500,
    grad_tol: float = 1e-6,
) -> LogisticModel:
    """Fit L2-regularized logistic regression by full-batch gradient descent.

    Features are standardized from the training set (constant columns get unit
    scale); descent starts at zero and uses backtracking line search, so the
    recorded loss history is nonincreasing. Training preserves whatever class
    imbalance the input carries.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be 2-D with one row per label")
    if len(np.unique(y)) < 2:
        raise ValueError("need both positive and negative labels")

    means = X.mean(axis=0)
    scales = X.std(axis=0)
    scales[scales == 0.0] = 1.0
    Xs = (X - means) / scales

    w = np.zeros(X.shape[1])
    b = 0.0
    step = 1.0
    loss, grad_w, grad_b = _logistic_loss_grad(w, b, Xs, y, l2_lambda)
    history = [loss]
    for _ in range(max_epochs):
        grad_norm_sq = float(grad_w @ grad_w) + grad_b**2
        if math.sqrt(grad_norm_sq) < grad_tol:
            break
        step = min(step * 2.0, 1e6)
        while True:
            w_new = w - step * grad_w
            b_new = b - step * grad_b
            loss_new, gw_new, gb_new = _logistic_loss_grad(w_new, b_new, Xs, y, l2_lambda)
            if loss_new <= loss - 1e-4 * step * grad_norm_sq or step < 1e-16:
                break
            step *= 0.5
        w, b, loss, grad_w, grad_b = w_new, b_new, loss_new, gw_new, gb_new
        history.append(loss)
    return LogisticModel(w, b, means, scales, l2_lambda, history)


def score_logistic(model: LogisticModel, features) -> float:
    """Probability of a link for one feature vector."""
    x = np.asarray(features, dtype=float)
    if x.shape != model.weights.shape:
        raise ValueError(f"expected {model.weights.shape[0]} features, got {x.shape}")
    z = float((x - model.means) / model.scales @ model.weights) + model.bias
    return 1.0 / (1.0 + math.exp(-max(min(z, 500.0), -500.0)))


def score_logistic_matrix(model: LogisticModel, X) -> np.ndarray:
    """Probabilities for a feature matrix (one row per pair)."""
    X = np.asarray(X, dtype=float)
    z = (X - model.means) / model.scales @ model.weights + model.bias
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))


def export_features_csv(
    path: str | Path, features: list[PairFeatures], labels=None
) -> None:
    """One row per scored pair, columns exactly the feature names plus
    ``label`` when labels are given."""
    path = Path(path)
    header = list(PAIR_FEATURE_NAMES) + (["label"] if labels is not None else [])
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for k, f in enumerate(features):
            row = [repr(getattr(f, name)) for name in PAIR_FEATURE_NAMES]
            if labels is not None:
                row.append(int(labels[k]))
            writer.writerow(row)
