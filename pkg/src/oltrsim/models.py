"""Ranking model families and reference-set selection.

Two families: a direct linear scorer over document features, and a
similarity scorer that weights dot products against a fixed set of
unit-normalized reference documents. The similarity family always has an
exactly score-equivalent linear form, which the cascading optimizer uses
when it changes model space.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .data import Dataset, Document, QueryGroup

UNIT_NORM_TOL = 1e-9


class DimensionalityMismatch(ValueError):
    pass


class ReferenceSelectionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LinearModel:
    weights: np.ndarray

    kind = "linear"

    def dimensionality(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True, eq=False)
class ReferenceSet:
    """M unit-norm reference document vectors plus how they were chosen."""

    vectors: np.ndarray
    norms: np.ndarray
    selection_method: str

    def __post_init__(self):
        if self.vectors.ndim != 2 or self.vectors.shape[0] < 1:
            raise ReferenceSelectionError("need at least one reference vector")
        if np.any(np.abs(self.norms - 1.0) > UNIT_NORM_TOL):
            raise ReferenceSelectionError(
                "reference vectors must be unit L2 norm within 1e-9"
            )

    @classmethod
    def from_vectors(cls, vectors, selection_method: str = "manual") -> "ReferenceSet":
        """Normalize raw row vectors into a reference set; rejects zero rows."""
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2:
            raise ReferenceSelectionError("expected a (M, D) array of vectors")
        norms = np.linalg.norm(vectors, axis=1)
        if np.any(norms == 0.0):
            raise ReferenceSelectionError("zero vectors cannot be references")
        unit = vectors / norms[:, None]
        return cls(unit, np.linalg.norm(unit, axis=1), selection_method)

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True, eq=False)
class SimilarityModel:
    weights: np.ndarray
    refs: ReferenceSet

    kind = "similarity"

    def __post_init__(self):
        if self.weights.shape[0] != self.refs.size:
            raise DimensionalityMismatch(
                f"{self.weights.shape[0]} weights for {self.refs.size} references"
            )

    def dimensionality(self) -> int:
        return self.weights.shape[0]

    def reference_weights(self) -> np.ndarray:
        """Per-reference coefficients w_m / |d_m|, zero-guarded."""
        return np.divide(
            self.weights,
            self.refs.norms,
            out=np.zeros_like(self.weights),
            where=self.refs.norms != 0,
        )


RankerModel = Union[LinearModel, SimilarityModel]


def zero_model_like(model: RankerModel) -> RankerModel:
    if isinstance(model, LinearModel):
        return LinearModel(np.zeros_like(model.weights))
    return SimilarityModel(np.zeros_like(model.weights), model.refs)


def with_weights(model: RankerModel, weights: np.ndarray) -> RankerModel:
    if isinstance(model, LinearModel):
        return LinearModel(weights)
    return SimilarityModel(weights, model.refs)


def score_matrix(model: RankerModel, features: np.ndarray) -> np.ndarray:
    """Score a (n_docs, D) feature matrix, returning one score per row."""
    features = np.asarray(features, dtype=np.float64)
    if isinstance(model, LinearModel):
        if features.shape[1] != model.dimensionality():
            raise DimensionalityMismatch(
                f"documents have {features.shape[1]} features, model expects "
                f"{model.dimensionality()}"
            )
        return features @ model.weights
    if features.shape[1] != model.refs.feature_dim:
        raise DimensionalityMismatch(
            f"documents have {features.shape[1]} features, references have "
            f"{model.refs.feature_dim}"
        )
    return (features @ model.refs.vectors.T) @ model.reference_weights()


def score(model: RankerModel, doc: Document | np.ndarray) -> float:
    """Score one document: the weighted feature sum (linear) or weighted
    similarity to the reference documents."""
    features = doc.features if isinstance(doc, Document) else np.asarray(doc)
    return float(score_matrix(model, features[None, :])[0])


def rank_by_scores(scores: np.ndarray) -> np.ndarray:
    """Indices by descending score; ties broken by ascending original index."""
    return np.argsort(-scores, kind="stable")


def rank(model: RankerModel, qg: QueryGroup | np.ndarray) -> np.ndarray:
    features = qg.features if isinstance(qg, QueryGroup) else np.asarray(qg)
    return rank_by_scores(score_matrix(model, features))


def convert_sim_to_linear(sm: SimilarityModel) -> LinearModel:
    """Rewrite a similarity model as the linear model with identical scores.

    The weight vector is the reference-weighted sum of reference vectors,
    so every document's score agrees up to float associativity.
    """
    return LinearModel(sm.refs.vectors.T @ sm.reference_weights())


def _training_documents(ds: Dataset, fold: int | None) -> np.ndarray:
    if fold is None:
        groups = list(ds.queries.values())
    else:
        groups = ds.groups(ds.fold(fold).train)
    if not groups:
        raise ReferenceSelectionError("no training documents available")
    return np.concatenate([qg.features for qg in groups], axis=0)


def select_references_uniform(
    ds: Dataset, m: int, rng: np.random.Generator, fold: int | None = None
) -> ReferenceSet:
    """Draw m distinct documents uniformly without replacement from all
    training query-document pairs, then unit-normalize them.

    Zero feature vectors are ineligible (their similarity contribution is
    undefined), which matches redrawing on zero draws.
    """
    docs = _training_documents(ds, fold)
    nonzero = np.flatnonzero(np.linalg.norm(docs, axis=1) > 0)
    if nonzero.size < m:
        raise ReferenceSelectionError(
            f"need {m} nonzero documents, corpus has {nonzero.size}"
        )
    chosen = rng.choice(nonzero, size=m, replace=False)
    return ReferenceSet.from_vectors(docs[chosen], "uniform")


def _kmeans_plus_plus_init(
    points: np.ndarray, k: int, rng: np.random.Generator
) -> np.ndarray:
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]), dtype=np.float64)
    centroids[0] = points[rng.integers(n)]
    closest_sq = np.sum((points - centroids[0]) ** 2, axis=1)
    for i in range(1, k):
        total = closest_sq.sum()
        if total == 0.0:
            raise ReferenceSelectionError(
                f"fewer than {k} distinct documents for clustering"
            )
        idx = rng.choice(n, p=closest_sq / total)
        centroids[i] = points[idx]
        closest_sq = np.minimum(
            closest_sq, np.sum((points - centroids[i]) ** 2, axis=1)
        )
    return centroids


def select_references_kmeans(
    ds: Dataset,
    m: int,
    rng: np.random.Generator,
    fold: int | None = None,
    max_iter: int = 300,
) -> ReferenceSet:
    """Cluster the unit-normalized training documents with Lloyd's algorithm
    (k = m, k-means++ seeding, Euclidean distance) and return the unit-
    normalized centroids.

    Iteration stops when no assignment changes or after max_iter rounds.
    An empty cluster is re-seeded with the point farthest from its assigned
    centroid.
    """
    docs = _training_documents(ds, fold)
    norms = np.linalg.norm(docs, axis=1)
    points = docs[norms > 0] / norms[norms > 0, None]
    if np.unique(points, axis=0).shape[0] < m:
        raise ReferenceSelectionError(
            f"fewer than {m} distinct documents for clustering"
        )
    centroids = _kmeans_plus_plus_init(points, m, rng)
    assignment = np.full(points.shape[0], -1, dtype=np.int64)
    for _ in range(max_iter):
        dist_sq = (
            np.sum(points**2, axis=1)[:, None]
            - 2.0 * points @ centroids.T
            + np.sum(centroids**2, axis=1)[None, :]
        )
        new_assignment = np.argmin(dist_sq, axis=1)
        point_dist = dist_sq[np.arange(points.shape[0]), new_assignment]
        for cluster in range(m):
            if not np.any(new_assignment == cluster):
                farthest = int(np.argmax(point_dist))
                new_assignment[farthest] = cluster
                point_dist[farthest] = 0.0
        if np.array_equal(new_assignment, assignment):
            break
        assignment = new_assignment
        for cluster in range(m):
            centroids[cluster] = points[assignment == cluster].mean(axis=0)
    centroid_norms = np.linalg.norm(centroids, axis=1)
    if np.any(centroid_norms == 0.0):
        raise ReferenceSelectionError("degenerate zero centroid")
    return ReferenceSet.from_vectors(centroids, "kmeans")


def model_to_json(model: RankerModel) -> dict:
    """JSON-serializable form: {kind, weights, refs?}."""
    payload: dict = {"kind": model.kind, "weights": model.weights.tolist()}
    if isinstance(model, SimilarityModel):
        payload["refs"] = {
            "vectors": model.refs.vectors.tolist(),
            "selection_method": model.refs.selection_method,
        }
    return payload


def model_from_json(payload: dict) -> RankerModel:
    kind = payload.get("kind")
    weights = np.asarray(payload["weights"], dtype=np.float64)
    if kind == "linear":
        return LinearModel(weights)
    if kind == "similarity":
        refs_payload = payload["refs"]
        vectors = np.asarray(refs_payload["vectors"], dtype=np.float64)
        # stored vectors are already unit norm; re-normalizing would
        # perturb them, so rebuild the set as-is
        refs = ReferenceSet(
            vectors,
            np.linalg.norm(vectors, axis=1),
            refs_payload.get("selection_method", "manual"),
        )
        return SimilarityModel(weights, refs)
    raise ValueError(f"unknown model kind {kind!r}")
