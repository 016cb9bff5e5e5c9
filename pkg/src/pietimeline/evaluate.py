"""Scoring predicted personal-event documents against gold labels.

Gold files are flat TSV rows (user_id, event_name, doc_id); an event is
recalled when at least one of its documents is predicted.  Topic matching
for synthetic recovery solves the assignment problem on the contingency
table and reports the adjusted Rand index of the raw partitions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .corpus import Corpus
from .dpm import PosteriorSummary
from .errors import DataError
from .timeline import (SMOOTH, celebrity_topic_filter, merge_topics,
                       singleton_clusters)

# Published scores on the original (private) collections, shipped for
# orientation only; nothing in this package reproduces them.
REFERENCE_SCORES = {
    "event_recall": {"value": 0.927, "dataset": "twit-c"},
    "tweet_f1": {"value": 0.742, "dataset": "twit-o"},
}


@dataclass
class GoldTimeline:
    """Per-user map from event name to the documents describing it."""

    events: dict[str, dict[str, set[str]]] = field(default_factory=dict)

    def add(self, user_id: str, event_name: str, doc_id: str) -> None:
        if not event_name:
            raise DataError("empty event name in gold timeline")
        self.events.setdefault(user_id, {}).setdefault(event_name, set()).add(doc_id)

    def event_sets(self) -> list[set[str]]:
        return [docs for per_user in self.events.values()
                for docs in per_user.values()]

    def gold_docs(self) -> set[str]:
        return set().union(*self.event_sets()) if self.events else set()

    def n_events(self) -> int:
        return sum(len(per_user) for per_user in self.events.values())

    def validate(self, corpus: Corpus | None = None) -> None:
        for user_id, per_user in self.events.items():
            for name, docs in per_user.items():
                if not name:
                    raise DataError("empty event name in gold timeline")
                if not docs:
                    raise DataError(f"event {name!r} of {user_id!r} has no documents")
                if corpus is not None:
                    for doc_id in docs:
                        try:
                            corpus.doc_by_id(doc_id)
                        except KeyError:
                            raise DataError(
                                f"gold doc {doc_id!r} not in corpus") from None


def read_gold_timeline(path: str) -> GoldTimeline:
    gold = GoldTimeline()
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise DataError(f"gold line {n}: expected user, event, doc")
            gold.add(*parts)
    return gold


def gold_from_events(events: dict[str, list[dict]]) -> GoldTimeline:
    """Gold timeline from generator event lists (name + doc_ids per event)."""
    gold = GoldTimeline()
    for user_id, evs in events.items():
        for ev in evs:
            for doc_id in ev["doc_ids"]:
                gold.add(user_id, ev["name"], doc_id)
    return gold


def event_recall(predicted: set[str], gold: GoldTimeline) -> float:
    """Fraction of gold events with at least one predicted document."""
    sets = gold.event_sets()
    if not sets:
        raise DataError("gold timeline has no events")
    return sum(1 for docs in sets if docs & predicted) / len(sets)


def tweet_prf(predicted: set[str], gold_docs: set[str]) -> tuple[float, float, float]:
    tp = len(predicted & gold_docs)
    p = tp / len(predicted) if predicted else 0.0
    r = tp / len(gold_docs) if gold_docs else 0.0
    f1 = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    return p, r, f1


def _pairs(counts: np.ndarray) -> float:
    c = counts.astype(float)
    return float((c * (c - 1) / 2).sum())


def adjusted_rand_index(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DataError("label vectors differ in length")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    n = a.size
    total = n * (n - 1) / 2
    agree = _pairs(table)
    pa, pb = _pairs(table.sum(axis=1)), _pairs(table.sum(axis=0))
    expected = pa * pb / total if total else 0.0
    denom = (pa + pb) / 2 - expected
    if denom == 0:
        return 1.0
    return (agree - expected) / denom


def match_topics(predicted: np.ndarray, truth: np.ndarray) -> tuple[dict[int, int], float]:
    """Label-switching correction: best one-to-one topic correspondence.

    Returns the overlap-maximizing map from predicted to true topic ids
    (pairs with zero overlap are dropped) and the adjusted Rand index of
    the raw partitions.
    """
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape:
        raise DataError("label vectors differ in length")
    pred_ids, pi = np.unique(predicted, return_inverse=True)
    true_ids, ti = np.unique(truth, return_inverse=True)
    table = np.zeros((pred_ids.size, true_ids.size), dtype=np.int64)
    np.add.at(table, (pi, ti), 1)
    rows, cols = linear_sum_assignment(table, maximize=True)
    mapping = {int(pred_ids[r]): int(true_ids[c])
               for r, c in zip(rows, cols) if table[r, c] > 0}
    return mapping, adjusted_rand_index(predicted, truth)


def pie_predicted_docs(summary: PosteriorSummary, corpus: Corpus,
                       mode: str = "ordinary",
                       names_by_user: dict[str, list[str]] | None = None,
                       lam: float = SMOOTH) -> set[str]:
    """Documents the model calls personal important events.

    Ordinary mode: every document whose modal label is personal and
    time-specific.  Celebrity mode adds the documents of accepted public
    time-specific clusters for each user with a name list.
    """
    if mode not in ("ordinary", "celebrity"):
        raise ValueError(f"unknown evaluation mode {mode!r}")
    if not summary.y_labeled:
        raise DataError("summary does not label y; no time-specific split")
    person_mask = (summary.modal_x == 1) & (summary.modal_y == 1)
    predicted = {summary.doc_ids[d] for d in np.flatnonzero(person_mask)}
    if mode == "celebrity" and names_by_user:
        pub = np.flatnonzero((summary.modal_x == 0) & (summary.modal_y == 1))
        pub_singles = singleton_clusters(summary, corpus, list(pub))
        candidates = merge_topics(pub_singles, corpus, lam).clusters if pub_singles else []
        for user_id, names in sorted(names_by_user.items()):
            user_ix = corpus.user_index[user_id]
            mine = np.flatnonzero(person_mask & (corpus.doc_user == user_ix))
            singles = singleton_clusters(summary, corpus, list(mine))
            person = merge_topics(singles, corpus, lam).clusters if singles else []
            for cluster in celebrity_topic_filter(user_ix, candidates, person,
                                                  corpus, names, lam):
                predicted |= {corpus.documents[d].doc_id for d in cluster.doc_ixs}
    return predicted


def evaluate_run(summary: PosteriorSummary, corpus: Corpus, gold: GoldTimeline,
                 mode: str = "ordinary",
                 names_by_user: dict[str, list[str]] | None = None,
                 lam: float = SMOOTH) -> dict:
    """Corpus-level and per-user metrics for one fitted model."""
    gold.validate(corpus)
    predicted = pie_predicted_docs(summary, corpus, mode, names_by_user, lam)
    gold_docs = gold.gold_docs()
    p, r, f1 = tweet_prf(predicted, gold_docs)
    per_user = {}
    for user_id in sorted(gold.events):
        user_gold = GoldTimeline({user_id: gold.events[user_id]})
        user_ix = corpus.user_index[user_id]
        user_docs = {d.doc_id for d in corpus.documents if d.user_ix == user_ix}
        mine = predicted & user_docs
        up, ur, uf = tweet_prf(mine, user_gold.gold_docs())
        per_user[user_id] = {
            "event_recall": event_recall(mine, user_gold),
            "n_events": user_gold.n_events(),
            "precision": up, "recall": ur, "f1": uf,
        }
    return {
        "model": summary.model,
        "seed": summary.seed,
        "config": summary.config,
        "mode": mode,
        "n_predicted": len(predicted),
        "n_gold_docs": len(gold_docs),
        "n_events": gold.n_events(),
        "event_recall": event_recall(predicted, gold),
        "precision": p,
        "recall": r,
        "f1": f1,
        "per_user": per_user,
        "reference": REFERENCE_SCORES,
    }


def render_report(metrics: dict) -> str:
    lines = [
        "personal-event evaluation",
        f"model={metrics['model']} seed={metrics['seed']} mode={metrics['mode']}",
        f"config={json.dumps(metrics['config'], sort_keys=True)}",
        f"documents: predicted={metrics['n_predicted']} gold={metrics['n_gold_docs']}",
        f"event recall: {metrics['event_recall']:.3f} over {metrics['n_events']} events",
        (f"tweet precision: {metrics['precision']:.3f}"
         f"  recall: {metrics['recall']:.3f}  f1: {metrics['f1']:.3f}"),
    ]
    if metrics["per_user"]:
        lines.append("per user:")
        for user_id, m in metrics["per_user"].items():
            lines.append(f"  {user_id}  events={m['n_events']}"
                         f" recall={m['event_recall']:.3f} p={m['precision']:.3f}"
                         f" r={m['recall']:.3f} f1={m['f1']:.3f}")
    ref = metrics["reference"]
    lines.append("reference (published results on the original private"
                 " datasets; not reproducible here):")
    lines.append(f"  event recall {ref['event_recall']['value']:.3f}"
                 f" on {ref['event_recall']['dataset']},"
                 f" tweet f1 {ref['tweet_f1']['value']:.3f}"
                 f" on {ref['tweet_f1']['dataset']}")
    return "\n".join(lines) + "\n"


def write_report(metrics: dict, text_path: str, json_path: str) -> None:
    with open(text_path, "w", encoding="utf-8") as fh:
        fh.write(render_report(metrics))
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(metrics, fh, sort_keys=True, indent=1)
        fh.write("\n")
