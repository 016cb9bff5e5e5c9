"""Comparison systems emitting the same summary interface as the full model.

Three reduced models: a fixed-dimension multilevel LDA with one topic
block per stratum, a single-user model with only the time split latent,
and a multi-user model with only the personal/public split latent.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .corpus import Corpus
from .dpm import (Hyperparams, PosteriorSummary, Schedule, label_posterior,
                  run_chain)
from .errors import DataError

_NEG_INF = -np.inf


@dataclass
class LdaConfig:
    """Fixed topic budget per stratum plus priors and sweep schedule."""

    n_background: int = 20
    n_per_epoch: int = 5
    n_per_user: int = 5
    n_per_cell: int = 2
    lam: float = 0.1          # topic-word Dirichlet
    alpha_theta: float = 1.0  # within-stratum topic proportions
    eta_x: float = 20.0
    eta_y: float = 20.0
    warmup: int = 20          # sweeps with the background block held out
    schedule: Schedule = field(default_factory=Schedule)

    def validate(self) -> None:
        for name in ("n_background", "n_per_epoch", "n_per_user", "n_per_cell"):
            v = getattr(self, name)
            if not isinstance(v, int) or v <= 0:
                raise DataError(f"{name} must be a positive count")
        if not isinstance(self.warmup, int) or self.warmup < 0:
            raise DataError("warmup must be a non-negative count")
        for name in ("lam", "alpha_theta", "eta_x", "eta_y"):
            if not getattr(self, name) > 0:
                raise DataError(f"{name} must be positive")
        self.schedule.validate()

    def to_dict(self) -> dict:
        d = asdict(self)
        return d


class _LdaState:
    """Collapsed counts for the blocked LDA sampler."""

    def __init__(self, corpus: Corpus, config: LdaConfig, seed: int):
        config.validate()
        self.corpus, self.config, self.seed = corpus, config, seed
        self.rng = np.random.default_rng(seed)
        I, T = corpus.I, corpus.T
        c = config
        self.off_epoch = c.n_background
        self.off_user = self.off_epoch + T * c.n_per_epoch
        self.off_cell = self.off_user + I * c.n_per_user
        self.K = self.off_cell + I * T * c.n_per_cell
        self.ew = np.zeros((self.K, corpus.V), dtype=np.int64)
        self.etot = np.zeros(self.K, dtype=np.int64)
        self.ndoc = np.zeros(self.K, dtype=np.int64)
        self.exy = np.zeros((I, 2, 2), dtype=np.int64)
        self.x = np.zeros(corpus.D, dtype=np.int64)
        self.y = np.zeros(corpus.D, dtype=np.int64)
        self.z = np.zeros(corpus.D, dtype=np.int64)
        self._init_assignments()

    def block(self, x: int, yv: int, i: int, t: int) -> np.ndarray:
        c = self.config
        if x == 0 and yv == 0:
            lo, width = 0, c.n_background
        elif x == 0:
            lo, width = self.off_epoch + t * c.n_per_epoch, c.n_per_epoch
        elif yv == 0:
            lo, width = self.off_user + i * c.n_per_user, c.n_per_user
        else:
            lo, width = self.off_cell + (i * self.corpus.T + t) * c.n_per_cell, c.n_per_cell
        return np.arange(lo, lo + width)

    def _init_assignments(self) -> None:
        # Uniform over strata, not over topics: the background block has
        # far more slots than a cell block, and seeding it proportionally
        # lets it sharpen first and absorb everything.
        for d, doc in enumerate(self.corpus.documents):
            i, t = doc.user_ix, doc.epoch
            x, yv = ((0, 0), (0, 1), (1, 0), (1, 1))[self.rng.integers(4)]
            blk = self.block(x, yv, i, t)
            k = int(blk[self.rng.integers(len(blk))])
            self._attach(d, x, yv, k)

    def _attach(self, d: int, x: int, yv: int, k: int) -> None:
        doc = self.corpus.documents[d]
        self.x[d], self.y[d], self.z[d] = x, yv, k
        self.exy[doc.user_ix, x, yv] += 1
        self.ew[k, doc.word_ids] += doc.word_cts
        self.etot[k] += doc.length
        self.ndoc[k] += 1

    def _detach(self, d: int) -> None:
        doc = self.corpus.documents[d]
        k = self.z[d]
        self.exy[doc.user_ix, self.x[d], self.y[d]] -= 1
        self.ew[k, doc.word_ids] -= doc.word_cts
        self.etot[k] -= doc.length
        self.ndoc[k] -= 1

    def _lik_rows(self, ixs: np.ndarray, d: int) -> np.ndarray:
        doc = self.corpus.documents[d]
        lam, V = self.config.lam, self.corpus.V
        ws, cs, N = doc.word_ids, doc.word_cts, doc.length
        ew_d = self.ew[np.ix_(ixs, ws)] + lam
        out = np.log(ew_d).sum(axis=1)
        for j in range(1, int(cs.max())):
            out += np.log(ew_d[:, cs > j] + j).sum(axis=1)
        steps = V * lam + np.arange(N)
        out -= np.log(self.etot[ixs, None] + steps[None, :]).sum(axis=1)
        return out

    def _block_scores(self, x: int, yv: int, d: int) -> tuple[np.ndarray, np.ndarray]:
        """Per-topic log score and the block's topic indexes."""
        doc = self.corpus.documents[d]
        blk = self.block(x, yv, doc.user_ix, doc.epoch)
        a = self.config.alpha_theta
        nd = self.ndoc[blk]
        prior = np.log(nd + a) - np.log(nd.sum() + a * len(blk))
        return prior + self._lik_rows(blk, d), blk

    def sweep(self, hold_background: bool = False) -> None:
        eta_x, eta_y = self.config.eta_x, self.config.eta_y
        for d, doc in enumerate(self.corpus.documents):
            self._detach(d)
            i = doc.user_ix
            e = self.exy[i]
            scores: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}

            def marg(x: int, yv: int) -> float:
                if (x, yv) not in scores:
                    scores[(x, yv)] = self._block_scores(x, yv, d)
                s = scores[(x, yv)][0]
                m = s.max()
                return float(m + np.log(np.exp(s - m).sum()))

            if hold_background:
                # Warmup kernel: the background block nests every other
                # stratum once its topics sharpen, so give the specific
                # blocks first claim by sampling (x,y) jointly over the
                # other three strata.
                cells = ((0, 1), (1, 0), (1, 1))
                logp = np.empty(3)
                for j, (x, yv) in enumerate(cells):
                    urn = (np.log(e[x].sum() + eta_x)
                           - np.log(e.sum() + 2 * eta_x)
                           + np.log(e[x, yv] + eta_y)
                           - np.log(e[x].sum() + 2 * eta_y))
                    logp[j] = urn + marg(x, yv)
                w = np.exp(logp - logp.max())
                x, yv = cells[self.rng.choice(3, p=w / w.sum())]
            else:
                yv = int(self.y[d])
                lm = np.array([marg(0, yv), marg(1, yv)])
                p = label_posterior(np.array([e[0, yv], e[1, yv]]), eta_x, lm)
                x = int(self.rng.random() < p[1])
                lm = np.array([marg(x, 0), marg(x, 1)])
                p = label_posterior(np.array([e[x, 0], e[x, 1]]), eta_y, lm)
                yv = int(self.rng.random() < p[1])

            s, blk = scores[(x, yv)]
            w = np.exp(s - s.max())
            k = int(blk[self.rng.choice(len(blk), p=w / w.sum())])
            self._attach(d, x, yv, k)


def fit_multilevel_lda(corpus: Corpus, config: LdaConfig | None = None,
                       seed: int = 0) -> PosteriorSummary:
    """Collapsed Gibbs over the fixed-dimension stratified topic blocks."""
    config = config or LdaConfig()
    state = _LdaState(corpus, config, seed)
    sched = config.schedule
    held = min(config.warmup, sched.burn_in)
    for s in range(sched.burn_in):
        state.sweep(hold_background=s < held)

    D = corpus.D
    xy_counts = np.zeros((D, 2, 2), dtype=np.int64)
    z_samples = np.empty((sched.samples, D), dtype=np.int64)
    word_acc = np.zeros((state.K, corpus.V))
    for s in range(sched.samples):
        for _ in range(sched.thin):
            state.sweep()
        xy_counts[np.arange(D), state.x, state.y] += 1
        z_samples[s] = state.z
        word_acc += state.ew

    flat = xy_counts.reshape(D, 4)
    modal_cell = flat.argmax(axis=1)
    modal_x = modal_cell // 2
    modal_y = modal_cell % 2
    modal_z = np.empty(D, dtype=np.int64)
    for d in range(D):
        vals, counts = np.unique(z_samples[:, d], return_counts=True)
        modal_z[d] = vals[counts.argmax()]

    topic_word = word_acc / sched.samples
    smoothed = topic_word + config.lam
    topic_word_dist = smoothed / smoothed.sum(axis=1, keepdims=True)
    cell_topic: dict[tuple[int, int], dict[int, int]] = {}
    for d in range(D):
        key = (int(corpus.doc_user[d]), int(corpus.doc_epoch[d]))
        sub = cell_topic.setdefault(key, {})
        tid = int(modal_z[d])
        sub[tid] = sub.get(tid, 0) + 1

    return PosteriorSummary(
        model="mlda", seed=seed,
        config={"lda": config.to_dict(), "schedule": asdict(sched)},
        doc_ids=[doc.doc_id for doc in corpus.documents],
        doc_users=[doc.user_id for doc in corpus.documents],
        modal_x=modal_x, modal_y=modal_y, modal_z=modal_z,
        y_labeled=True, topic_ids=list(range(state.K)),
        topic_word=topic_word, topic_word_dist=topic_word_dist,
        cell_topic=cell_topic, log_joint_trace=[], n_samples=sched.samples,
        users=list(corpus.users), I=corpus.I, T=corpus.T, V=corpus.V)


def fit_person_dp(corpus: Corpus, hyper: Hyperparams | None = None,
                  schedule: Schedule | None = None, seed: int = 0) -> PosteriorSummary:
    """Single-user model: user background vs per-epoch bursts, x fixed.

    Public material in the stream has nowhere else to go, so cross-user
    bursts come out as personal time-specific topics.
    """
    if corpus.I != 1:
        raise DataError(
            f"person model expects a single-user corpus, got {corpus.I} users")
    return run_chain(corpus, hyper, schedule, seed, clamp_x=1, model="person_dp")


def fit_public_dp(corpus: Corpus, hyper: Hyperparams | None = None,
                  schedule: Schedule | None = None, seed: int = 0) -> PosteriorSummary:
    """Personal/public split only; no time-specific measures, y unlabeled."""
    return run_chain(corpus, hyper, schedule, seed, clamp_y=0, model="public_dp")


def timeline_view(summary: PosteriorSummary) -> PosteriorSummary:
    """Adapt a summary for timeline building.

    The public/personal-only model leaves y unlabeled; for timelines all
    its personal topics count as time-specific (recurring ones included,
    which is its documented weakness).  Other models pass through.
    """
    if summary.model != "public_dp":
        return summary
    return replace(summary, modal_y=summary.modal_x.copy(), y_labeled=True)
