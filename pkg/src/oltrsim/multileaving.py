"""Multileaved comparison of an incumbent ranking against candidate rankings.

Two mechanisms are provided. Team-draft multileaving assembles the shown
list in rounds of randomly ordered team picks and credits clicks to the
team owning each slot; it is fully deterministic given the generator and
is the default for tests. Probabilistic multileaving draws each slot from
a rank-decaying document distribution of a uniformly chosen ranker and
infers winners by sampling team assignments of the clicked documents; it
mirrors the comparison method used in large-scale experiments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backends
from .clicks import ClickVector

DEFAULT_TAU = 3.0
DEFAULT_INFERENCE_SAMPLES = 10_000


@dataclass(frozen=True)
class RankingSlate:
    """Rankings to be multileaved; row 0 is the incumbent ranker."""

    lists: np.ndarray

    def __post_init__(self):
        if self.lists.ndim != 2 or self.lists.shape[0] < 1:
            raise ValueError("expected a (n_rankers, n_docs) index array")

    @property
    def n_rankers(self) -> int:
        return self.lists.shape[0]

    @property
    def n_docs(self) -> int:
        return self.lists.shape[1]


@dataclass(frozen=True)
class MultileaveOutcome:
    """Displayed list plus the attribution needed to infer click credit.

    Team-draft outcomes carry ``slot_teams`` (owning team per slot);
    probabilistic outcomes carry ``placement_probs`` (per slot, each
    ranker's probability of placing the chosen document at that step).
    """

    displayed: np.ndarray
    n_rankers: int
    slot_teams: np.ndarray | None = None
    placement_probs: np.ndarray | None = None


def team_draft_multileave(
    slate: RankingSlate, kappa: int, rng: np.random.Generator
) -> MultileaveOutcome:
    """Round-based multileave: each round visits the teams in a fresh random
    order and every team appends its best not-yet-displayed document."""
    if kappa < 1:
        raise ValueError("kappa must be >= 1")
    limit = min(kappa, slate.n_docs)
    n_rounds = -(-limit // slate.n_rankers)
    perms = np.stack([rng.permutation(slate.n_rankers) for _ in range(n_rounds)])
    displayed, slot_teams = backends.team_draft_fill(slate.lists, perms, kappa)
    return MultileaveOutcome(
        displayed=displayed, n_rankers=slate.n_rankers, slot_teams=slot_teams
    )


def team_draft_infer(outcome: MultileaveOutcome, clicks: ClickVector) -> set[int]:
    """Winners: candidates whose owned slots drew more clicks than the
    incumbent's. Empty when nothing was clicked."""
    if outcome.slot_teams is None:
        raise ValueError("outcome does not carry team-draft attribution")
    clicks = np.asarray(clicks, dtype=bool)
    credit = np.bincount(
        outcome.slot_teams[clicks], minlength=outcome.n_rankers
    )
    return set(int(j) for j in np.flatnonzero(credit > credit[0]) if j > 0)


def probabilistic_multileave(
    slate: RankingSlate,
    kappa: int,
    rng: np.random.Generator,
    tau: float = DEFAULT_TAU,
) -> MultileaveOutcome:
    """Sample each slot from a uniformly chosen ranker's rank-decaying
    distribution over the not-yet-placed documents.

    A ranker puts mass proportional to 1/rank^tau on its rank-th remaining
    document (ranks recomputed among the remaining documents), so all
    rankers share one normalizer per slot. The attribution records every
    ranker's placement probability for each chosen document.
    """
    if kappa < 1:
        raise ValueError("kappa must be >= 1")
    limit = min(kappa, slate.n_docs)
    rank_scores = 1.0 / np.arange(1, slate.n_docs + 1, dtype=np.float64) ** tau
    score_prefix = np.concatenate(([0.0], np.cumsum(rank_scores)))
    draws = rng.random((limit, 2))
    displayed, probs = backends.prob_multileave_fill(
        slate.lists, score_prefix, kappa, draws[:, 0].copy(), draws[:, 1].copy()
    )
    return MultileaveOutcome(
        displayed=displayed, n_rankers=slate.n_rankers, placement_probs=probs
    )


def probabilistic_infer(
    outcome: MultileaveOutcome,
    clicks: ClickVector,
    num_samples: int = DEFAULT_INFERENCE_SAMPLES,
    rng: np.random.Generator | None = None,
) -> set[int]:
    """Winners by sampled team assignment: draw ``num_samples`` assignments
    of the clicked documents (each document goes to one ranker with
    probability proportional to its recorded placement probability), credit
    each team its assigned clicks, and keep candidates that out-credit the
    incumbent in strictly more than half the samples.

    Unclicked documents never contribute credit, so their assignments are
    not sampled.
    """
    if outcome.placement_probs is None:
        raise ValueError("outcome does not carry probabilistic attribution")
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    clicks = np.asarray(clicks, dtype=bool)
    clicked = np.flatnonzero(clicks)
    if clicked.size == 0:
        return set()
    if rng is None:
        raise ValueError("probabilistic inference needs a random generator")
    clicked_cum = np.cumsum(outcome.placement_probs[clicked], axis=1)
    draws = rng.random((num_samples, clicked.size))
    wins = backends.prob_infer_wins(clicked_cum, draws)
    return set(int(j) for j in np.flatnonzero(2 * wins > num_samples))
