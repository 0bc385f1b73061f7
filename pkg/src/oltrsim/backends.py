"""Hot-loop kernels with a numba backend and a pure-numpy fallback.

Every kernel is a deterministic function of pre-drawn uniforms: callers own
the random generator and pass uniform samples in, so both backends produce
bit-identical results and compiled kernels can be disk-cached.

Backend selection: set ``OLTRSIM_BACKEND=numpy`` or ``OLTRSIM_BACKEND=numba``
in the environment before import. Default is numba when it imports cleanly,
numpy otherwise. ``benchmarks/bench_backends.py`` compares the two.
"""

from __future__ import annotations

import os
import warnings

import numpy as np

_ENV_FLAG = "OLTRSIM_BACKEND"


def _resolve_backend() -> str:
    requested = os.environ.get(_ENV_FLAG, "").strip().lower()
    if requested not in ("", "numpy", "numba"):
        raise ValueError(
            f"{_ENV_FLAG} must be 'numpy' or 'numba', got {requested!r}"
        )
    if requested == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if requested == "numba":
            warnings.warn(
                f"{_ENV_FLAG}=numba requested but numba is not importable; "
                "falling back to numpy kernels",
                RuntimeWarning,
            )
        return "numpy"
    return "numba"


BACKEND = _resolve_backend()


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def _team_draft_fill_np(lists, perms, kappa):
    """Fill a team-draft result list.

    lists: (n_teams, n_docs) document ids, each row in preference order.
    perms: (n_rounds, n_teams) team pick order per round.
    Returns (displayed, slot_teams), both of length min(kappa, n_docs).
    """
    n_teams, n_docs = lists.shape
    limit = min(kappa, n_docs)
    displayed = np.empty(limit, dtype=np.int64)
    slot_teams = np.empty(limit, dtype=np.int64)
    placed = np.zeros(n_docs, dtype=np.bool_)
    ptr = np.zeros(n_teams, dtype=np.int64)
    filled = 0
    rnd = 0
    while filled < limit:
        order = perms[rnd]
        for k in range(n_teams):
            team = order[k]
            p = ptr[team]
            while placed[lists[team, p]]:
                p += 1
            ptr[team] = p
            doc = lists[team, p]
            displayed[filled] = doc
            slot_teams[filled] = team
            placed[doc] = True
            filled += 1
            if filled == limit:
                break
        rnd += 1
    return displayed, slot_teams


def _prob_multileave_fill_np(lists, score_prefix, kappa, u_ranker, u_doc):
    """Fill a probabilistic-multileave result list.

    Each ranker distributes mass over its not-yet-placed documents with
    weight rank_scores[j-1] on its j-th remaining document, where
    rank_scores[i] = score_prefix[i+1] - score_prefix[i]. All rankers share
    the same denominator score_prefix[m] for m remaining documents.

    Returns (displayed, probs) where probs[s, r] is ranker r's placement
    probability for the document chosen at slot s.
    """
    n_teams, n_docs = lists.shape
    limit = min(kappa, n_docs)
    displayed = np.empty(limit, dtype=np.int64)
    probs = np.empty((limit, n_teams), dtype=np.float64)
    rank_scores = np.diff(score_prefix)
    # position of each doc in each ranker's list
    inv_pos = np.argsort(lists, axis=1)
    placed = np.zeros(n_docs, dtype=np.bool_)
    for s in range(limit):
        m = n_docs - s
        denom = score_prefix[m]
        ranker = min(int(u_ranker[s] * n_teams), n_teams - 1)
        target = u_doc[s] * denom
        remaining = lists[ranker][~placed[lists[ranker]]]
        j = int(np.searchsorted(score_prefix[1 : m + 1], target, side="right"))
        j = min(j, m - 1)
        doc = remaining[j]
        # each ranker's remaining-rank of the chosen doc
        unplaced_in_order = ~placed[lists]
        csum = np.cumsum(unplaced_in_order, axis=1)
        ranks = csum[np.arange(n_teams), inv_pos[:, doc]]
        probs[s] = rank_scores[ranks - 1] / denom
        displayed[s] = doc
        placed[doc] = True
    return displayed, probs


def _prob_infer_wins_np(clicked_cum, u):
    """Count assignment samples each candidate wins against the incumbent.

    clicked_cum: (n_clicked, n_teams) cumulative placement probabilities of
    the clicked documents, one row per doc. u: (n_samples, n_clicked)
    uniforms. Returns wins: (n_teams,) with wins[j] = #samples where
    credit(j) > credit(0); wins[0] is 0 by construction.
    """
    n_clicked, n_teams = clicked_cum.shape
    n_samples = u.shape[0]
    assignments = np.empty((n_samples, n_clicked), dtype=np.int64)
    for c in range(n_clicked):
        cum = clicked_cum[c]
        targets = u[:, c] * cum[-1]
        assignments[:, c] = np.minimum(
            np.searchsorted(cum, targets, side="right"), n_teams - 1
        )
    credits = np.zeros((n_samples, n_teams), dtype=np.int64)
    np.add.at(credits, (np.arange(n_samples)[:, None], assignments), 1)
    wins = (credits > credits[:, :1]).sum(axis=0).astype(np.int64)
    wins[0] = 0
    return wins


def _cascade_clicks_np(grades, p_click, p_stop, u):
    """Walk a result list top-down, clicking and possibly stopping.

    grades must already be clamped into range(len(p_click)). u holds one
    (click, stop) uniform pair per slot; unexamined pairs are unused.
    """
    n = grades.shape[0]
    clicks = np.zeros(n, dtype=np.bool_)
    for i in range(n):
        g = grades[i]
        if u[i, 0] < p_click[g]:
            clicks[i] = True
            if u[i, 1] < p_stop[g]:
                break
    return clicks


_NUMPY_KERNELS = {
    "team_draft_fill": _team_draft_fill_np,
    "prob_multileave_fill": _prob_multileave_fill_np,
    "prob_infer_wins": _prob_infer_wins_np,
    "cascade_clicks": _cascade_clicks_np,
}


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

def _build_numba_kernels():
    from numba import njit

    @njit(cache=True)
    def team_draft_fill(lists, perms, kappa):
        n_teams, n_docs = lists.shape
        limit = min(kappa, n_docs)
        displayed = np.empty(limit, dtype=np.int64)
        slot_teams = np.empty(limit, dtype=np.int64)
        placed = np.zeros(n_docs, dtype=np.bool_)
        ptr = np.zeros(n_teams, dtype=np.int64)
        filled = 0
        rnd = 0
        while filled < limit:
            for k in range(n_teams):
                team = perms[rnd, k]
                p = ptr[team]
                while placed[lists[team, p]]:
                    p += 1
                ptr[team] = p
                doc = lists[team, p]
                displayed[filled] = doc
                slot_teams[filled] = team
                placed[doc] = True
                filled += 1
                if filled == limit:
                    break
            rnd += 1
        return displayed, slot_teams

    @njit(cache=True)
    def prob_multileave_fill(lists, score_prefix, kappa, u_ranker, u_doc):
        n_teams, n_docs = lists.shape
        limit = min(kappa, n_docs)
        displayed = np.empty(limit, dtype=np.int64)
        probs = np.empty((limit, n_teams), dtype=np.float64)
        placed = np.zeros(n_docs, dtype=np.bool_)
        for s in range(limit):
            m = n_docs - s
            denom = score_prefix[m]
            ranker = min(int(u_ranker[s] * n_teams), n_teams - 1)
            target = u_doc[s] * denom
            # inverse-CDF over the chosen ranker's remaining docs
            doc = -1
            j = 0
            for p in range(n_docs):
                d = lists[ranker, p]
                if placed[d]:
                    continue
                j += 1
                if target < score_prefix[j] or j == m:
                    doc = d
                    break
            for t in range(n_teams):
                rank = 0
                for p in range(n_docs):
                    d = lists[t, p]
                    if placed[d]:
                        continue
                    rank += 1
                    if d == doc:
                        break
                probs[s, t] = (score_prefix[rank] - score_prefix[rank - 1]) / denom
            displayed[s] = doc
            placed[doc] = True
        return displayed, probs

    @njit(cache=True)
    def prob_infer_wins(clicked_cum, u):
        n_clicked, n_teams = clicked_cum.shape
        n_samples = u.shape[0]
        wins = np.zeros(n_teams, dtype=np.int64)
        credits = np.empty(n_teams, dtype=np.int64)
        for s in range(n_samples):
            credits[:] = 0
            for c in range(n_clicked):
                target = u[s, c] * clicked_cum[c, n_teams - 1]
                t = 0
                while t < n_teams - 1 and target >= clicked_cum[c, t]:
                    t += 1
                credits[t] += 1
            for j in range(1, n_teams):
                if credits[j] > credits[0]:
                    wins[j] += 1
        return wins

    @njit(cache=True)
    def cascade_clicks(grades, p_click, p_stop, u):
        n = grades.shape[0]
        clicks = np.zeros(n, dtype=np.bool_)
        for i in range(n):
            g = grades[i]
            if u[i, 0] < p_click[g]:
                clicks[i] = True
                if u[i, 1] < p_stop[g]:
                    break
        return clicks

    return {
        "team_draft_fill": team_draft_fill,
        "prob_multileave_fill": prob_multileave_fill,
        "prob_infer_wins": prob_infer_wins,
        "cascade_clicks": cascade_clicks,
    }


if BACKEND == "numba":
    _KERNELS = _build_numba_kernels()
else:
    _KERNELS = _NUMPY_KERNELS

team_draft_fill = _KERNELS["team_draft_fill"]
prob_multileave_fill = _KERNELS["prob_multileave_fill"]
prob_infer_wins = _KERNELS["prob_infer_wins"]
cascade_clicks = _KERNELS["cascade_clicks"]
