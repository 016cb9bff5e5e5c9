"""Per-user event timelines from posterior summaries.

Topics are merged by agglomerative clustering under an entropy-plus-KL
balance objective; each merged cluster is dated by its representative
document.  Celebrity-related public time-specific clusters can be pulled
into a user's timeline through the three-rule filter.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np
from scipy.stats import chi2

from .corpus import Corpus
from .dpm import PosteriorSummary
from .errors import DataError

SMOOTH = 0.1  # additive smoothing on normalized centers


@dataclass
class TopicCluster:
    """A set of merged topics with their documents.

    word_counts aggregates the member topics' (averaged) word counts;
    the center is its normalization.  The temporal profile counts member
    documents per epoch.
    """

    topics: list[int]
    word_counts: np.ndarray
    doc_ixs: list[int]
    profile: np.ndarray

    def center(self) -> np.ndarray:
        s = self.word_counts.sum()
        if s <= 0:
            raise DataError("cluster has no word mass")
        return self.word_counts / s

    def merged_with(self, other: "TopicCluster") -> "TopicCluster":
        return TopicCluster(
            topics=sorted(self.topics + other.topics),
            word_counts=self.word_counts + other.word_counts,
            doc_ixs=self.doc_ixs + other.doc_ixs,
            profile=self.profile + other.profile,
        )


@dataclass
class Partition:
    clusters: list[TopicCluster]
    epsilon: float


@dataclass
class TimelineEntry:
    epoch: int
    date_range: str
    cluster_id: int
    top_words: list[str]
    doc_id: str
    text: str


@dataclass
class Timeline:
    user_id: str
    mode: str
    entries: list[TimelineEntry] = field(default_factory=list)


def _smoothed(dist: np.ndarray, lam: float = SMOOTH) -> np.ndarray:
    return (dist + lam) / (1.0 + lam * dist.size)


def doc_geometric_likelihood(doc, center: np.ndarray, lam: float = SMOOTH) -> float:
    """Per-token geometric-mean likelihood of a document under a center."""
    sm = _smoothed(center, lam)
    return float(np.exp((doc.word_cts * np.log(sm[doc.word_ids])).sum() / doc.length))


def clustering_balance(clusters: list[TopicCluster], corpus: Corpus,
                       lam: float = SMOOTH) -> float:
    """Balance of a partition: intra-cluster document error plus the KL
    spread of cluster centers around the grand center."""
    if not clusters:
        raise DataError("partition has no clusters")
    for c in clusters:
        if not c.topics:
            raise DataError("empty cluster in partition")
    grand = sum(c.word_counts for c in clusters)
    grand = grand / grand.sum()
    lam_term = 0.0
    omega = 0.0
    for c in clusters:
        center = c.center()
        for d in c.doc_ixs:
            p = doc_geometric_likelihood(corpus.documents[d], center, lam)
            lam_term += -p * np.log(p)
        nz = center > 0
        omega += float((center[nz] * np.log(center[nz] / grand[nz])).sum())
    return lam_term + omega


def symmetrized_kl(p: np.ndarray, q: np.ndarray, lam: float = SMOOTH) -> float:
    ps, qs = _smoothed(p, lam), _smoothed(q, lam)
    return float(0.5 * ((ps * np.log(ps / qs)).sum() + (qs * np.log(qs / ps)).sum()))


EXACT_MERGE_LIMIT = 8  # exact subset search up to this many input clusters


def _block_cost(cluster: TopicCluster, grand: np.ndarray, corpus: Corpus,
                lam: float) -> float:
    center = cluster.center()
    cost = 0.0
    for d in cluster.doc_ixs:
        p = doc_geometric_likelihood(corpus.documents[d], center, lam)
        cost += -p * np.log(p)
    nz = center > 0
    return cost + float((center[nz] * np.log(center[nz] / grand[nz])).sum())


def _exact_min_partition(clusters: list[TopicCluster], corpus: Corpus,
                         lam: float) -> list[TopicCluster]:
    # The balance decomposes additively over clusters because the grand
    # center depends only on the full topic set, so the minimum-cost
    # partition is a subset dynamic program.
    n = len(clusters)
    grand = sum(c.word_counts for c in clusters)
    grand = grand / grand.sum()
    merged_cache: dict[int, TopicCluster] = {}

    def block(mask: int) -> TopicCluster:
        if mask not in merged_cache:
            ixs = [j for j in range(n) if mask >> j & 1]
            c = clusters[ixs[0]]
            for j in ixs[1:]:
                c = c.merged_with(clusters[j])
            merged_cache[mask] = c
        return merged_cache[mask]

    cost_cache: dict[int, float] = {}

    def cost(mask: int) -> float:
        if mask not in cost_cache:
            cost_cache[mask] = _block_cost(block(mask), grand, corpus, lam)
        return cost_cache[mask]

    full = (1 << n) - 1
    dp: list[tuple[float, int] | None] = [None] * (full + 1)
    dp[0] = (0.0, 0)
    for s in range(1, full + 1):
        low = s & -s
        rest = s ^ low
        best, best_block = np.inf, low
        sub = rest
        while True:
            b = sub | low
            c = cost(b) + dp[s ^ b][0]
            if c < best:
                best, best_block = c, b
            if sub == 0:
                break
            sub = (sub - 1) & rest
        dp[s] = (best, best_block)

    blocks = []
    s = full
    while s:
        _, b = dp[s]
        blocks.append(b)
        s ^= b
    return [block(b) for b in blocks]


def merge_topics(clusters: list[TopicCluster], corpus: Corpus,
                 lam: float = SMOOTH) -> Partition:
    """Merge clusters to minimize the clustering balance.

    Small inputs are solved exactly by dynamic programming over subsets.
    Larger ones are agglomerated greedily, repeatedly merging the pair of
    centers closest in symmetrized KL, and the best partition observed
    along the merge path is returned.
    """
    if not clusters:
        raise DataError("nothing to merge")
    if len(clusters) <= EXACT_MERGE_LIMIT:
        best = _exact_min_partition(clusters, corpus, lam)
    else:
        current = list(clusters)
        best = current
        best_eps = clustering_balance(current, corpus, lam)
        while len(current) > 1:
            n = len(current)
            pair, pair_d = (0, 1), np.inf
            centers = [c.center() for c in current]
            for a in range(n):
                for b in range(a + 1, n):
                    d = symmetrized_kl(centers[a], centers[b], lam)
                    if d < pair_d:
                        pair, pair_d = (a, b), d
            a, b = pair
            merged = current[a].merged_with(current[b])
            current = [c for j, c in enumerate(current) if j not in (a, b)] + [merged]
            eps = clustering_balance(current, corpus, lam)
            if eps < best_eps:
                best, best_eps = list(current), eps
    ordered = sorted(best, key=lambda c: min(c.topics))
    return Partition(ordered, clustering_balance(ordered, corpus, lam))


def chi2_shape_pvalue(profile_a: np.ndarray, profile_b: np.ndarray) -> float:
    """Upper-tail p of Pearson's statistic for b's counts against
    expectations proportional to a's shape.

    Bins where the expectation is zero are merged into the following bin
    (trailing ones into the last live bin) before computing the statistic
    with df = live bins - 1.
    """
    a = np.asarray(profile_a, dtype=float)
    b = np.asarray(profile_b, dtype=float)
    if a.shape != b.shape:
        raise DataError("profiles differ in length")
    if a.sum() <= 0 or b.sum() <= 0:
        raise DataError("profile with no mass")
    expected = a / a.sum() * b.sum()
    obs_bins, exp_bins = [], []
    carry = 0.0
    for o, e in zip(b, expected):
        if e == 0:
            carry += o
            continue
        obs_bins.append(o + carry)
        exp_bins.append(e)
        carry = 0.0
    if carry:
        obs_bins[-1] += carry
    obs = np.array(obs_bins)
    exp = np.array(exp_bins)
    if obs.size <= 1:
        return 1.0
    stat = ((obs - exp) ** 2 / exp).sum()
    return float(chi2.sf(stat, df=obs.size - 1))


def select_tweet(cluster: TopicCluster, corpus: Corpus, lam: float = SMOOTH) -> str:
    """Representative document: highest per-token geometric-mean
    likelihood under the cluster center, ties to the smallest doc_id."""
    if not cluster.doc_ixs:
        raise DataError("cluster has no documents")
    center = cluster.center()
    best_id, best_p = None, -1.0
    for d in cluster.doc_ixs:
        doc = corpus.documents[d]
        p = doc_geometric_likelihood(doc, center, lam)
        if p > best_p or (p == best_p and doc.doc_id < best_id):
            best_id, best_p = doc.doc_id, p
    return best_id


# ----- wiring from posterior summaries --------------------------------------

def singleton_clusters(summary: PosteriorSummary, corpus: Corpus,
                       doc_ixs: list[int]) -> list[TopicCluster]:
    """One cluster per modal topic over the given documents."""
    by_topic: dict[int, list[int]] = {}
    for d in doc_ixs:
        by_topic.setdefault(int(summary.modal_z[d]), []).append(d)
    out = []
    for tid in sorted(by_topic):
        docs = by_topic[tid]
        profile = np.zeros(corpus.T)
        for d in docs:
            profile[corpus.documents[d].epoch] += 1
        out.append(TopicCluster([tid], summary.topic_row_counts(tid).copy(),
                                docs, profile))
    return out


def _docs_of_type(summary: PosteriorSummary, x: int, yv: int,
                  user_ix: int | None = None) -> list[int]:
    mask = (summary.modal_x == x) & (summary.modal_y == yv)
    if user_ix is not None:
        mask &= np.array([u == summary.users[user_ix] for u in summary.doc_users])
    return [int(d) for d in np.flatnonzero(mask)]


def user_activity_profile(corpus: Corpus, user_ix: int) -> np.ndarray:
    profile = np.zeros(corpus.T)
    for d in corpus.docs_of_user(user_ix):
        profile[corpus.documents[d].epoch] += 1
    return profile


def _name_mention_rate(cluster: TopicCluster, corpus: Corpus,
                       names: list[str]) -> float:
    lowered = [n.lower() for n in names if n]
    if not lowered:
        return 0.0
    hits = 0
    for d in cluster.doc_ixs:
        text = " ".join(corpus.documents[d].tokens).lower()
        if any(n in text for n in lowered):
            hits += 1
    return hits / len(cluster.doc_ixs)


def celebrity_topic_filter(user_ix: int, candidates: list[TopicCluster],
                           person_clusters: list[TopicCluster],
                           corpus: Corpus, names: list[str],
                           lam: float = SMOOTH) -> list[TopicCluster]:
    """Accept public time-specific clusters that look like the user's own
    events: mentioned by name in at least 10% of the cluster's documents,
    temporally shaped like the user's activity, and absorbable into the
    user's personal cluster set without worsening the balance."""
    if not candidates:
        return []
    activity = user_activity_profile(corpus, user_ix)
    accepted = []
    agg = None
    for c in person_clusters:
        agg = c if agg is None else agg.merged_with(c)
    for j, cand in enumerate(candidates):
        if _name_mention_rate(cand, corpus, names) < 0.10:
            continue
        if cand.profile.sum() == 0 or activity.sum() == 0:
            continue
        if chi2_shape_pvalue(activity, cand.profile) <= 0.5:
            continue
        if agg is not None:
            rest = [c for k, c in enumerate(candidates) if k != j]
            with_j = clustering_balance([agg.merged_with(cand)] + rest, corpus, lam)
            without = clustering_balance([agg] + list(candidates), corpus, lam)
            if with_j > without:
                continue
        accepted.append(cand)
    return accepted


def build_timeline(user_id: str, mode: str, summary: PosteriorSummary,
                   corpus: Corpus, names: list[str] | None = None,
                   lam: float = SMOOTH, top_n: int = 10) -> Timeline:
    """Chronological event entries for one user.

    Ordinary mode keeps the user's merged person time-specific clusters;
    celebrity mode adds accepted public time-specific clusters.
    """
    if mode not in ("ordinary", "celebrity"):
        raise ValueError(f"unknown timeline mode {mode!r}")
    if user_id not in corpus.user_index:
        raise KeyError(f"unknown user {user_id!r}")
    if not summary.y_labeled:
        raise DataError("summary does not label y; no time-specific split")
    user_ix = corpus.user_index[user_id]

    singles = singleton_clusters(summary, corpus,
                                 _docs_of_type(summary, 1, 1, user_ix))
    person = merge_topics(singles, corpus, lam).clusters if singles else []
    chosen = list(person)
    if mode == "celebrity":
        pub_singles = singleton_clusters(summary, corpus,
                                         _docs_of_type(summary, 0, 1))
        candidates = merge_topics(pub_singles, corpus, lam).clusters if pub_singles else []
        chosen += celebrity_topic_filter(user_ix, candidates, person, corpus,
                                         names or [], lam)

    timeline = Timeline(user_id=user_id, mode=mode)
    for cid, cluster in enumerate(chosen):
        doc_id = select_tweet(cluster, corpus, lam)
        doc = corpus.doc_by_id(doc_id)
        sm = _smoothed(cluster.center(), lam)
        order = np.lexsort((np.arange(sm.size), -sm))[:top_n]
        words = [corpus.vocab.id2word[int(w)] for w in order]
        timeline.entries.append(TimelineEntry(
            epoch=doc.epoch,
            date_range=epoch_date_range(corpus, doc.epoch),
            cluster_id=cid,
            top_words=words,
            doc_id=doc_id,
            text=" ".join(doc.tokens),
        ))
    timeline.entries.sort(key=lambda e: (e.epoch, e.cluster_id))
    return timeline


def epoch_date_range(corpus: Corpus, epoch: int) -> str:
    start, end = corpus.epoch_bounds(epoch)
    first = datetime.fromtimestamp(start, tz=timezone.utc).date()
    last = datetime.fromtimestamp(end - 1, tz=timezone.utc).date()
    return f"{first.isoformat()}/{last.isoformat()}"


def write_timeline(timeline: Timeline, path: str, fmt: str = "text",
                   header: str | None = None) -> None:
    """One entry per line: epoch, ISO date range, cluster id, top words,
    representative doc id, text.  The jsonl variant mirrors the fields."""
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for e in timeline.entries:
            if fmt == "jsonl":
                fh.write(json.dumps({
                    "epoch": e.epoch, "date_range": e.date_range,
                    "cluster_id": e.cluster_id, "top_words": e.top_words,
                    "doc_id": e.doc_id, "text": e.text,
                }, sort_keys=True) + "\n")
            else:
                words = " ".join(e.top_words)
                fh.write(f"{e.epoch}\t{e.date_range}\t{e.cluster_id}\t"
                         f"{words}\t{e.doc_id}\t{e.text}\n")
