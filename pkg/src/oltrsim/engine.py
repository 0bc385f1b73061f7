"""Online learning loops: multileave gradient descent and its variants.

Each impression serves a uniformly sampled training query: the incumbent
model and n unit-sphere perturbations of it each produce a ranking, the
rankings are multileaved into one displayed list, simulated clicks are
observed, and the incumbent steps toward the mean of the winning
perturbations (no winners, no movement).

Three entry points share that loop. ``run_mgd`` optimizes a direct linear
model, ``run_sim_mgd`` optimizes weights over a fixed reference-document
set, and ``run_cmgd`` starts in the reference space, watches for weight-
direction convergence, then converts the learned model into the linear
space (rescaling its norm for the dimensionality change) and continues
there without further convergence checks.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import metrics
from .clicks import ClickModelParams, simulate_clicks
from .data import Dataset, QueryGroup
from .models import (
    LinearModel,
    RankerModel,
    ReferenceSet,
    SimilarityModel,
    convert_sim_to_linear,
    select_references_kmeans,
    select_references_uniform,
    with_weights,
)
from .multileaving import (
    RankingSlate,
    probabilistic_infer,
    probabilistic_multileave,
    team_draft_infer,
    team_draft_multileave,
)

COMPARISON_METHODS = ("team_draft", "probabilistic")
SELECTION_METHODS = ("uniform", "kmeans")

DEFAULT_GAMMA = 0.9995
DEFAULT_RECORD_EVERY = 10


class PhaseError(RuntimeError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    """Loop hyperparameters.

    ``epsilon`` may be 0.0, which makes the convergence check unreachable
    (1 - cos is never negative) and so disables cascading.
    """

    n_candidates: int = 19
    delta: float = 1.0
    eta: float = 0.01
    kappa: int = 10
    history_window: int = 200
    epsilon: float = 0.01
    inference_samples: int = 10_000
    comparison: str = "probabilistic"

    def __post_init__(self):
        if self.n_candidates < 1:
            raise ValueError("n_candidates must be >= 1")
        if self.delta <= 0:
            raise ValueError("delta must be > 0")
        if self.eta <= 0:
            raise ValueError("eta must be > 0")
        if self.kappa < 1:
            raise ValueError("kappa must be >= 1")
        if self.history_window < 1:
            raise ValueError("history_window must be >= 1")
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must be in [0, 1)")
        if self.inference_samples < 1:
            raise ValueError("inference_samples must be >= 1")
        if self.comparison not in COMPARISON_METHODS:
            raise ValueError(f"comparison must be one of {COMPARISON_METHODS}")


@dataclass
class EngineState:
    """Mutable per-run state: the incumbent model, the impression counter,
    the recent-weights ring used by convergence detection, and the phase."""

    model: RankerModel
    t: int
    history: deque
    phase: str


@dataclass(frozen=True)
class StepRecord:
    t: int
    displayed_ndcg: float
    winners_count: int
    phase: str


@dataclass(eq=False)
class RunTrace:
    """Per-impression series plus the run summary."""

    displayed_ndcg: np.ndarray
    winners_count: np.ndarray
    phase: np.ndarray  # 0 = simple, 1 = complex
    offline_impressions: np.ndarray
    offline_ndcg: np.ndarray
    online_performance: float
    final_offline_ndcg: float
    switch_impression: int | None
    final_model: RankerModel
    gamma: float

    @property
    def impressions(self) -> int:
        return self.displayed_ndcg.shape[0]

    def phase_names(self) -> list[str]:
        return ["complex" if p else "simple" for p in self.phase]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, RunTrace)
            and np.array_equal(self.displayed_ndcg, other.displayed_ndcg)
            and np.array_equal(self.winners_count, other.winners_count)
            and np.array_equal(self.phase, other.phase)
            and np.array_equal(self.offline_impressions, other.offline_impressions)
            and np.array_equal(self.offline_ndcg, other.offline_ndcg)
            and self.online_performance == other.online_performance
            and self.final_offline_ndcg == other.final_offline_ndcg
            and self.switch_impression == other.switch_impression
            and np.array_equal(self.final_model.weights, other.final_model.weights)
        )


def sample_unit_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Isotropic unit vector: normalized standard normal draws."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    while True:
        v = rng.standard_normal(dim)
        norm = np.linalg.norm(v)
        if norm > 0.0:
            return v / norm


def _sample_unit_rows(n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    rows = rng.standard_normal((n, dim))
    norms = np.linalg.norm(rows, axis=1)
    while np.any(norms == 0.0):
        redraw = norms == 0.0
        rows[redraw] = rng.standard_normal((int(redraw.sum()), dim))
        norms = np.linalg.norm(rows, axis=1)
    return rows / norms[:, None]


def _guarded_reference_weights(W: np.ndarray, norms: np.ndarray) -> np.ndarray:
    return np.divide(
        W, norms[None, :], out=np.zeros_like(W), where=norms[None, :] != 0
    )


def _candidate_scores(
    model: RankerModel, qg: QueryGroup, W: np.ndarray, sims: np.ndarray | None
) -> np.ndarray:
    if isinstance(model, LinearModel):
        return qg.features @ W.T
    if sims is None:
        sims = qg.features @ model.refs.vectors.T
    return sims @ _guarded_reference_weights(W, model.refs.norms).T


def mean_winning_direction(
    directions: np.ndarray, winners: set[int]
) -> np.ndarray:
    """Mean of the winning candidates' unit vectors, in candidate-id order."""
    idx = np.array(sorted(winners), dtype=np.int64) - 1
    return directions[idx].mean(axis=0)


def mgd_step(
    state: EngineState,
    qg: QueryGroup,
    cfg: EngineConfig,
    click_model: ClickModelParams,
    rng: np.random.Generator,
    sims: np.ndarray | None = None,
) -> tuple[EngineState, StepRecord]:
    """One impression: candidates, multileave, clicks, inferred winners,
    update. ``sims`` optionally carries the query's precomputed reference
    similarities when the incumbent is a similarity model.
    """
    w0 = state.model.weights
    directions = _sample_unit_rows(cfg.n_candidates, w0.shape[0], rng)
    W = np.concatenate([w0[None, :], w0[None, :] + cfg.delta * directions], axis=0)
    scores = _candidate_scores(state.model, qg, W, sims)
    rankings = np.ascontiguousarray(np.argsort(-scores, axis=0, kind="stable").T)
    slate = RankingSlate(rankings)
    if cfg.comparison == "team_draft":
        outcome = team_draft_multileave(slate, cfg.kappa, rng)
    else:
        outcome = probabilistic_multileave(slate, cfg.kappa, rng)
    displayed_grades = qg.relevances[outcome.displayed]
    clicks = simulate_clicks(click_model, displayed_grades, rng)
    if cfg.comparison == "team_draft":
        winners = team_draft_infer(outcome, clicks)
    else:
        winners = probabilistic_infer(outcome, clicks, cfg.inference_samples, rng)
    if winners:
        new_weights = w0 + cfg.eta * mean_winning_direction(directions, winners)
        state.model = with_weights(state.model, new_weights)
    state.t += 1
    state.history.append(state.model.weights.copy())
    displayed_ndcg = metrics.ndcg_at_k(displayed_grades, qg.relevances, cfg.kappa)
    record = StepRecord(state.t, displayed_ndcg, len(winners), state.phase)
    return state, record


def detect_convergence(
    history: Sequence[np.ndarray], h: int, epsilon: float, phase: str = "simple"
) -> bool:
    """True when the weight direction moved less than epsilon (in 1 - cosine)
    over the last h impressions.

    Not converged when fewer than h+1 weights exist yet, when either
    endpoint is the zero vector (the cosine is undefined; runs start at
    zero), or when the cascade already switched.
    """
    if phase != "simple":
        return False
    if len(history) < h + 1:
        return False
    current = history[-1]
    past = history[-1 - h]
    norm_current = np.linalg.norm(current)
    norm_past = np.linalg.norm(past)
    if norm_current == 0.0 or norm_past == 0.0:
        return False
    cosine = float(np.dot(current, past) / (norm_current * norm_past))
    return (1.0 - cosine) < epsilon


def cascade_switch(
    state: EngineState, d_simple: int, d_complex: int
) -> EngineState:
    """Convert the incumbent similarity model to its linear equivalent and
    rescale its norm by sqrt(d_simple / d_complex), preserving rankings
    while shrinking (or growing) confidence for the new space's size.

    A zero converted vector skips rescaling and carries over as zero.
    Clears the convergence history; the complex phase never consults it.
    """
    if state.phase != "simple":
        raise PhaseError("cascade already switched to the complex model")
    if not isinstance(state.model, SimilarityModel):
        raise PhaseError("cascade switch requires a similarity incumbent")
    simple_norm = float(np.linalg.norm(state.model.weights))
    converted = convert_sim_to_linear(state.model).weights
    converted_norm = float(np.linalg.norm(converted))
    if converted_norm > 0.0:
        converted = converted * (
            (simple_norm / converted_norm)
            * (np.sqrt(d_simple) / np.sqrt(d_complex))
        )
    state.model = LinearModel(converted)
    state.phase = "complex"
    state.history.clear()
    return state


def _offline_ndcg(
    model: RankerModel,
    test_groups: list[QueryGroup],
    test_sims: list[np.ndarray] | None,
    kappa: int,
) -> float:
    if not test_groups:
        return 0.0
    if isinstance(model, LinearModel):
        per_query = (qg.features @ model.weights for qg in test_groups)
    else:
        u = model.reference_weights()
        if test_sims is None:
            test_sims = [qg.features @ model.refs.vectors.T for qg in test_groups]
        per_query = (sims @ u for sims in test_sims)
    total = 0.0
    for qg, scores in zip(test_groups, per_query):
        order = np.argsort(-scores, kind="stable")[:kappa]
        total += metrics.ndcg_at_k(qg.relevances[order], qg.relevances, kappa)
    return total / len(test_groups)


def _run_loop(
    ds: Dataset,
    cfg: EngineConfig,
    click_model: ClickModelParams,
    impressions: int,
    rng: np.random.Generator,
    initial_model: RankerModel,
    cascade: bool,
    fold: int,
    gamma: float,
    record_every: int,
) -> RunTrace:
    if impressions < 1:
        raise ValueError("impressions must be >= 1")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    split = ds.fold(fold)
    train_groups = ds.groups(split.train)
    test_groups = ds.groups(split.test)
    if not train_groups:
        raise ValueError(f"fold {fold} has no training queries")

    simple = isinstance(initial_model, SimilarityModel)
    train_sims = None
    test_sims = None
    if simple:
        ref_vectors = initial_model.refs.vectors
        train_sims = [qg.features @ ref_vectors.T for qg in train_groups]
        test_sims = [qg.features @ ref_vectors.T for qg in test_groups]

    state = EngineState(
        model=initial_model,
        t=0,
        history=deque(maxlen=cfg.history_window + 1),
        phase="simple" if simple else "complex",
    )
    state.history.append(initial_model.weights.copy())

    displayed = np.empty(impressions, dtype=np.float64)
    winners = np.empty(impressions, dtype=np.int32)
    phase_codes = np.empty(impressions, dtype=np.int8)
    offline_ts: list[int] = []
    offline_vals: list[float] = []
    switch_impression: int | None = None
    d_simple = initial_model.dimensionality()

    for t in range(1, impressions + 1):
        qi = int(rng.integers(len(train_groups)))
        sims = train_sims[qi] if state.phase == "simple" else None
        _, record = mgd_step(state, train_groups[qi], cfg, click_model, rng, sims)
        displayed[t - 1] = record.displayed_ndcg
        winners[t - 1] = record.winners_count
        phase_codes[t - 1] = 0 if record.phase == "simple" else 1
        if (
            cascade
            and state.phase == "simple"
            and detect_convergence(state.history, cfg.history_window, cfg.epsilon)
        ):
            cascade_switch(state, d_simple, ds.dimensionality)
            switch_impression = state.t
        if t % record_every == 0 or t == impressions:
            offline_ts.append(t)
            offline_vals.append(
                _offline_ndcg(
                    state.model,
                    test_groups,
                    test_sims if state.phase == "simple" else None,
                    cfg.kappa,
                )
            )

    return RunTrace(
        displayed_ndcg=displayed,
        winners_count=winners,
        phase=phase_codes,
        offline_impressions=np.array(offline_ts, dtype=np.int64),
        offline_ndcg=np.array(offline_vals, dtype=np.float64),
        online_performance=metrics.online_performance(displayed, gamma),
        final_offline_ndcg=offline_vals[-1],
        switch_impression=switch_impression,
        final_model=state.model,
        gamma=gamma,
    )


def run_mgd(
    ds: Dataset,
    cfg: EngineConfig,
    click_model: ClickModelParams,
    impressions: int,
    rng: np.random.Generator,
    fold: int = 1,
    gamma: float = DEFAULT_GAMMA,
    record_every: int = DEFAULT_RECORD_EVERY,
) -> RunTrace:
    """Optimize a zero-initialized linear model for ``impressions`` queries."""
    model = LinearModel(np.zeros(ds.dimensionality))
    return _run_loop(
        ds, cfg, click_model, impressions, rng, model,
        cascade=False, fold=fold, gamma=gamma, record_every=record_every,
    )


def _select_references(
    ds: Dataset,
    m: int,
    selection: str,
    rng: np.random.Generator,
    fold: int,
    refs: ReferenceSet | None,
) -> ReferenceSet:
    if refs is not None:
        return refs
    if selection == "uniform":
        return select_references_uniform(ds, m, rng, fold)
    if selection == "kmeans":
        return select_references_kmeans(ds, m, rng, fold)
    raise ValueError(f"selection must be one of {SELECTION_METHODS}")


def run_sim_mgd(
    ds: Dataset,
    cfg: EngineConfig,
    m: int,
    selection: str,
    click_model: ClickModelParams,
    impressions: int,
    rng: np.random.Generator,
    refs: ReferenceSet | None = None,
    fold: int = 1,
    gamma: float = DEFAULT_GAMMA,
    record_every: int = DEFAULT_RECORD_EVERY,
) -> RunTrace:
    """Optimize a zero-initialized similarity model over a reference set
    sampled once at run start (or supplied explicitly via ``refs``)."""
    refs = _select_references(ds, m, selection, rng, fold, refs)
    model = SimilarityModel(np.zeros(refs.size), refs)
    return _run_loop(
        ds, cfg, click_model, impressions, rng, model,
        cascade=False, fold=fold, gamma=gamma, record_every=record_every,
    )


def run_cmgd(
    ds: Dataset,
    cfg: EngineConfig,
    m: int,
    selection: str,
    click_model: ClickModelParams,
    impressions: int,
    rng: np.random.Generator,
    refs: ReferenceSet | None = None,
    fold: int = 1,
    gamma: float = DEFAULT_GAMMA,
    record_every: int = DEFAULT_RECORD_EVERY,
) -> RunTrace:
    """Similarity-model loop that switches to the linear space on the first
    convergence trigger and then runs plain linear optimization."""
    refs = _select_references(ds, m, selection, rng, fold, refs)
    model = SimilarityModel(np.zeros(refs.size), refs)
    return _run_loop(
        ds, cfg, click_model, impressions, rng, model,
        cascade=True, fold=fold, gamma=gamma, record_every=record_every,
    )
