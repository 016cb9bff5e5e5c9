"""Four-level Dirichlet process mixture over user document streams.

Every document carries two binary labels: x (0 public, 1 personal) and
y (0 time-general, 1 time-specific).  The label pair selects the measure
its topic is drawn from:

    (0,0) -> r        global weights, drawn from DP(alpha, H)
    (0,1) -> psi_t    per-epoch weights, DP(gamma, r)
    (1,0) -> beta_i   per-user weights, DP(mu, r)
    (1,1) -> pi_it    per-(user,epoch) weights, DP(kappa, beta_i)

Topic atoms (word distributions under a symmetric Dirichlet(lam) prior)
are shared across all four strata and integrated out; the collapsed
document likelihood is a ratio of gamma functions over word counts.

Inference is collapsed Gibbs in the augmented direct-assignment
representation: each weight vector keeps an explicit remainder mass for
the unrepresented atoms, table counts are resampled by sequential CRP
simulation and propagate upward (tables at one level are customers of
the parent level), and weight vectors are redrawn from their Dirichlet
conditionals given those counts.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, asdict, replace

import numpy as np
from scipy.special import gammaln

from .corpus import Corpus
from .errors import DataError, NumericalError

log = logging.getLogger(__name__)

NEW_TOPIC = -1  # sentinel accepted by doc_loglik for an unseen topic

_TINY = 1e-300
_BIRTH_CAP = 100000


@dataclass
class Hyperparams:
    """Concentrations, label priors and the topic-word Dirichlet prior."""

    alpha: float = 1.0   # global DP
    gamma: float = 1.0   # per-epoch DPs
    mu: float = 1.0      # per-user DPs
    kappa: float = 1.0   # per-(user,epoch) DPs
    eta_x: float = 20.0  # per-user Beta prior on the public/personal choice
    eta_y: float = 20.0  # per-user Beta prior on the general/specific choice
    lam: float = 0.1     # symmetric Dirichlet prior on topic-word distributions
    conc_shape: float = 1.0  # Gamma prior (shape, rate) on all four concentrations
    conc_rate: float = 1.0

    def validate(self) -> None:
        for name in ("alpha", "gamma", "mu", "kappa", "eta_x", "eta_y", "lam",
                     "conc_shape", "conc_rate"):
            if getattr(self, name) <= 0:
                raise ValueError(f"hyperparameter {name} must be positive")


@dataclass
class Schedule:
    """Gibbs chain schedule."""

    burn_in: int = 200
    samples: int = 100
    thin: int = 1
    resample_concentrations: bool = True

    def validate(self) -> None:
        if self.burn_in < 0 or self.samples < 1 or self.thin < 1:
            raise ValueError("schedule requires burn_in >= 0, samples >= 1, thin >= 1")


def _logsumexp(v: np.ndarray) -> float:
    m = v.max()
    if not np.isfinite(m):
        return float(m)
    return float(m + np.log(np.exp(v - m).sum()))


def _sample_from_logits(rng: np.random.Generator, logp: np.ndarray) -> int:
    m = logp.max()
    if not np.isfinite(m):
        raise NumericalError("all candidate log probabilities are -inf")
    p = np.exp(logp - m)
    c = np.cumsum(p)
    u = rng.random() * c[-1]
    return int(min(np.searchsorted(c, u, side="right"), len(logp) - 1))


def _crp_table_count(rng: np.random.Generator, n: int, bias: float) -> int:
    """Number of tables formed by n sequential customers with new-table bias."""
    if n <= 0:
        return 0
    if n == 1:
        return 1
    j = np.arange(1, n, dtype=np.float64)
    return 1 + int((rng.random(n - 1) < bias / (bias + j)).sum())


def crp_expected_tables(n: int, bias: float) -> float:
    """Analytic mean table count: sum_j bias / (bias + j) for j < n."""
    j = np.arange(n, dtype=np.float64)
    return float((bias / (bias + j)).sum())


class SamplerState:
    """Mutable Gibbs state: assignments, caches, tables, weights, rng.

    Document d of user i in epoch t carries labels x[d], y[d] and a topic
    slot z[d] (an index into the currently active topics).  Stable topic
    ids live in ``topic_ids``; slots are compacted when topics die, ids
    are never reused.
    """

    def __init__(self, corpus: Corpus, hyper: Hyperparams, seed: int,
                 clamp_x: int | None = None, clamp_y: int | None = None):
        hyper.validate()
        if corpus.D == 0:
            raise DataError("cannot initialise sampler on an empty corpus")
        self.corpus = corpus
        self.hyper = replace(hyper)  # concentrations are resampled in place
        self.seed = int(seed)
        self.clamp_x = clamp_x
        self.clamp_y = clamp_y
        self.rng = np.random.default_rng(seed)
        self.I, self.T, self.V, self.D = corpus.I, corpus.T, corpus.V, corpus.D
        self.n_sweeps = 0

        docs = corpus.documents
        self.doc_user = corpus.doc_user
        self.doc_epoch = corpus.doc_epoch
        lam, V = hyper.lam, self.V
        # collapsed likelihood of each document under a fresh (count-free) topic
        newlik = np.empty(self.D)
        for ix, doc in enumerate(docs):
            s = 0.0
            for c in doc.word_cts:
                s += np.log(lam + np.arange(int(c))).sum()
            s -= np.log(V * lam + np.arange(doc.length)).sum()
            newlik[ix] = s
        self.doc_newlik = newlik

        self.x = np.zeros(self.D, dtype=np.int64)
        self.y = np.zeros(self.D, dtype=np.int64)
        self.z = np.zeros(self.D, dtype=np.int64)
        self.exy = np.zeros((self.I, 2, 2), dtype=np.int64)

        self.topic_ids: list[int] = []
        self.next_topic_id = 0
        self.ew = np.zeros((0, self.V), dtype=np.int64)
        self.etot = np.zeros(0, dtype=np.int64)
        self.n00 = np.zeros(0, dtype=np.int64)
        self.n01 = np.zeros((self.T, 0), dtype=np.int64)
        self.n10 = np.zeros((self.I, 0), dtype=np.int64)
        self.n11 = np.zeros((self.I, self.T, 0), dtype=np.int64)
        self.t_psi = np.zeros((self.T, 0), dtype=np.int64)
        self.t_beta = np.zeros((self.I, 0), dtype=np.int64)
        self.t_pi = np.zeros((self.I, self.T, 0), dtype=np.int64)
        self.r = np.array([1.0])
        self.psi = np.ones((self.T, 1))
        self.beta = np.ones((self.I, 1))
        self.pi = np.ones((self.I, self.T, 1))

        self._init_labels()
        self._init_topics()
        self._rebuild_cell_counts()
        # bootstrap tables as one table per customer, then draw weights and
        # redo the tables properly from CRP simulation under those weights
        self.t_pi = self.n11.copy()
        self.t_beta = self.n10 + self.t_pi.sum(axis=1)
        self.t_psi = self.n01.copy()
        resample_weights(self)
        resample_tables(self)
        resample_weights(self)

    # ----- initialisation ------------------------------------------------

    def _init_labels(self) -> None:
        hx, hy = self.hyper.eta_x, self.hyper.eta_y
        for d in range(self.D):
            i = self.doc_user[d]
            e = self.exy[i]
            if self.clamp_x is not None:
                x = self.clamp_x
            else:
                p1 = (e[1].sum() + hx) / (e.sum() + 2 * hx)
                x = int(self.rng.random() < p1)
            if self.clamp_y is not None:
                yv = self.clamp_y
            else:
                p1 = (e[x, 1] + hy) / (e[x].sum() + 2 * hy)
                yv = int(self.rng.random() < p1)
            self.x[d], self.y[d] = x, yv
            self.exy[i, x, yv] += 1

    def _init_topics(self) -> None:
        """Sequential CRP seeding of topic assignments with word likelihoods."""
        alpha = self.hyper.alpha
        m = np.zeros(0, dtype=np.int64)  # documents per seeded topic
        for d in range(self.D):
            lik = self._loglik_vector(d)
            with np.errstate(divide="ignore"):
                logp = lik + np.log(np.append(m, alpha))
            slot = _sample_from_logits(self.rng, logp)
            if slot == len(self.topic_ids):
                self._append_topic_columns()
                m = np.append(m, 0)
            doc = self.corpus.documents[d]
            self.z[d] = slot
            m[slot] += 1
            self.ew[slot, doc.word_ids] += doc.word_cts
            self.etot[slot] += doc.length

    def _rebuild_cell_counts(self) -> None:
        K = len(self.topic_ids)
        self.n00 = np.zeros(K, dtype=np.int64)
        self.n01 = np.zeros((self.T, K), dtype=np.int64)
        self.n10 = np.zeros((self.I, K), dtype=np.int64)
        self.n11 = np.zeros((self.I, self.T, K), dtype=np.int64)
        for d in range(self.D):
            self._bump_cell(d, +1)

    def _bump_cell(self, d: int, delta: int) -> None:
        x, yv, k = self.x[d], self.y[d], self.z[d]
        if x == 0 and yv == 0:
            self.n00[k] += delta
        elif x == 0:
            self.n01[self.doc_epoch[d], k] += delta
        elif yv == 0:
            self.n10[self.doc_user[d], k] += delta
        else:
            self.n11[self.doc_user[d], self.doc_epoch[d], k] += delta

    def _append_topic_columns(self) -> None:
        self.topic_ids.append(self.next_topic_id)
        self.next_topic_id += 1
        self.ew = np.vstack([self.ew, np.zeros((1, self.V), dtype=np.int64)])
        self.etot = np.append(self.etot, 0)
        self.n00 = np.append(self.n00, 0)
        self.n01 = np.concatenate([self.n01, np.zeros((self.T, 1), dtype=np.int64)], axis=1)
        self.n10 = np.concatenate([self.n10, np.zeros((self.I, 1), dtype=np.int64)], axis=1)
        self.n11 = np.concatenate([self.n11, np.zeros((self.I, self.T, 1), dtype=np.int64)], axis=2)
        self.t_psi = np.concatenate([self.t_psi, np.zeros((self.T, 1), dtype=np.int64)], axis=1)
        self.t_beta = np.concatenate([self.t_beta, np.zeros((self.I, 1), dtype=np.int64)], axis=1)
        self.t_pi = np.concatenate([self.t_pi, np.zeros((self.I, self.T, 1), dtype=np.int64)], axis=2)

    # ----- core quantities ------------------------------------------------

    @property
    def K(self) -> int:
        return len(self.topic_ids)

    def global_dish_counts(self) -> np.ndarray:
        """Customers of the global restaurant: direct docs plus child tables."""
        return self.n00 + self.t_psi.sum(axis=0) + self.t_beta.sum(axis=0)

    def beta_customers(self) -> np.ndarray:
        """Customers of each user restaurant: direct docs plus pi-level tables."""
        return self.n10 + self.t_pi.sum(axis=1)

    def weights_for(self, x: int, yv: int, i: int, t: int) -> np.ndarray:
        if x == 0 and yv == 0:
            return self.r
        if x == 0:
            return self.psi[t]
        if yv == 0:
            return self.beta[i]
        return self.pi[i, t]

    def slot_of(self, topic_id: int) -> int:
        try:
            return self.topic_ids.index(topic_id)
        except ValueError:
            raise ValueError(f"inactive topic id {topic_id}") from None

    def _loglik_vector(self, d: int) -> np.ndarray:
        """Collapsed log likelihood of document d under each active topic + NEW."""
        doc = self.corpus.documents[d]
        lam, V = self.hyper.lam, self.V
        K = len(self.topic_ids)
        if K == 0:
            return np.array([self.doc_newlik[d]])
        ws, cs, N = doc.word_ids, doc.word_cts, doc.length
        ew_d = self.ew[:, ws] + lam
        out = np.log(ew_d).sum(axis=1)
        cmax = int(cs.max())
        for j in range(1, cmax):
            out += np.log(ew_d[:, cs > j] + j).sum(axis=1)
        steps = V * lam + np.arange(N)
        out -= np.log(self.etot[:, None] + steps[None, :]).sum(axis=1)
        return np.append(out, self.doc_newlik[d])

    def _detach(self, d: int) -> None:
        doc = self.corpus.documents[d]
        self._bump_cell(d, -1)
        self.exy[self.doc_user[d], self.x[d], self.y[d]] -= 1
        k = self.z[d]
        self.ew[k, doc.word_ids] -= doc.word_cts
        self.etot[k] -= doc.length

    def _attach(self, d: int, x: int, yv: int, slot: int) -> None:
        doc = self.corpus.documents[d]
        self.x[d], self.y[d], self.z[d] = x, yv, slot
        self._bump_cell(d, +1)
        self.exy[self.doc_user[d], x, yv] += 1
        self.ew[slot, doc.word_ids] += doc.word_cts
        self.etot[slot] += doc.length

    # ----- atom birth -----------------------------------------------------

    def _extend_one_atom(self, x: int, yv: int, i: int, t: int) -> float:
        """Stick-break one more atom off every remainder; return the split
        fraction at the (x,y,i,t) level that triggered the birth."""
        rng, h = self.rng, self.hyper
        b = max(rng.beta(1.0, h.alpha), _TINY)
        r_u = self.r[-1]
        self.r = np.concatenate([self.r[:-1], [b * r_u, (1.0 - b) * r_u]])
        a_new = max(h.gamma * self.r[-2], _TINY)
        a_rem = max(h.gamma * self.r[-1], _TINY)
        s_psi = rng.beta(a_new, a_rem, size=self.T)
        psi_u = self.psi[:, -1]
        self.psi = np.concatenate(
            [self.psi[:, :-1], (s_psi * psi_u)[:, None], ((1 - s_psi) * psi_u)[:, None]], axis=1)
        a_new = np.maximum(h.mu * self.r[-2], _TINY)
        a_rem = np.maximum(h.mu * self.r[-1], _TINY)
        s_beta = rng.beta(a_new, a_rem, size=self.I)
        beta_u = self.beta[:, -1]
        self.beta = np.concatenate(
            [self.beta[:, :-1], (s_beta * beta_u)[:, None], ((1 - s_beta) * beta_u)[:, None]], axis=1)
        a_new = np.maximum(h.kappa * self.beta[:, -2], _TINY)
        a_rem = np.maximum(h.kappa * self.beta[:, -1], _TINY)
        s_pi = rng.beta(a_new[:, None], a_rem[:, None], size=(self.I, self.T))
        pi_u = self.pi[:, :, -1]
        self.pi = np.concatenate(
            [self.pi[:, :, :-1], (s_pi * pi_u)[:, :, None], ((1 - s_pi) * pi_u)[:, :, None]], axis=2)
        self._append_topic_columns()
        if x == 0 and yv == 0:
            return float(b)
        if x == 0:
            return float(s_psi[t])
        if yv == 0:
            return float(s_beta[i])
        return float(s_pi[i, t])

    def _birth(self, x: int, yv: int, i: int, t: int) -> int:
        """Instantiate atoms until the remainder draw attaches to one.

        A draw that lands in the remainder picks an unrepresented atom in
        proportion to its weight.  Each extension splits off the next
        size-biased atom; the draw attaches to it with probability equal
        to the split fraction at the drawing level, otherwise the atom
        stays (empty, pruned at sweep end) and the next one is split off.
        """
        for _ in range(_BIRTH_CAP):
            frac = self._extend_one_atom(x, yv, i, t)
            if self.rng.random() < frac:
                return len(self.topic_ids) - 1
        raise NumericalError("atom birth failed to attach; remainder mass degenerate")

    # ----- pruning ---------------------------------------------------------

    def _prune_dead_topics(self) -> None:
        cust = (self.n00 + self.n01.sum(axis=0) + self.n10.sum(axis=0)
                + self.n11.sum(axis=(0, 1)))
        tables = self.t_psi.sum(axis=0) + self.t_beta.sum(axis=0) + self.t_pi.sum(axis=(0, 1))
        keep = (cust > 0) | (tables > 0)
        if keep.all():
            return
        kept_idx = np.flatnonzero(keep)
        remap = -np.ones(len(self.topic_ids), dtype=np.int64)
        remap[kept_idx] = np.arange(kept_idx.size)
        self.topic_ids = [tid for tid, k in zip(self.topic_ids, keep) if k]
        self.z = remap[self.z]
        if (self.z < 0).any():
            raise NumericalError("pruned a topic that still has documents")
        self.ew = self.ew[keep]
        self.etot = self.etot[keep]
        self.n00 = self.n00[keep]
        self.n01 = self.n01[:, keep]
        self.n10 = self.n10[:, keep]
        self.n11 = self.n11[:, :, keep]
        self.t_psi = self.t_psi[:, keep]
        self.t_beta = self.t_beta[:, keep]
        self.t_pi = self.t_pi[:, :, keep]
        # fold removed atom weights back into the remainder (their Dirichlet
        # pseudo-counts are zero, so aggregation is exact)
        drop = ~keep
        self.r = np.append(self.r[:-1][keep], self.r[-1] + self.r[:-1][drop].sum())
        self.psi = np.concatenate(
            [self.psi[:, :-1][:, keep],
             (self.psi[:, -1] + self.psi[:, :-1][:, drop].sum(axis=1))[:, None]], axis=1)
        self.beta = np.concatenate(
            [self.beta[:, :-1][:, keep],
             (self.beta[:, -1] + self.beta[:, :-1][:, drop].sum(axis=1))[:, None]], axis=1)
        self.pi = np.concatenate(
            [self.pi[:, :, :-1][:, :, keep],
             (self.pi[:, :, -1] + self.pi[:, :, :-1][:, :, drop].sum(axis=2))[:, :, None]], axis=2)


# ----- public operations ----------------------------------------------------


def init_state(corpus: Corpus, hyper: Hyperparams | None = None, seed: int = 0,
               clamp_x: int | None = None, clamp_y: int | None = None) -> SamplerState:
    """Initialise assignments (labels from the collapsed prior, topics by
    sequential CRP seeding), caches, tables and weights."""
    return SamplerState(corpus, hyper or Hyperparams(), seed, clamp_x, clamp_y)


def doc_loglik(state: SamplerState, d: int, topic_id: int = NEW_TOPIC) -> float:
    """Collapsed log likelihood of document d under one topic.

    ``topic_id`` is a stable topic id, or NEW_TOPIC for an unseen atom.
    The document's own counts must already be detached if it is assigned
    to that topic; doc_loglik itself never mutates the state.
    """
    lik = state._loglik_vector(d)
    if topic_id == NEW_TOPIC:
        return float(lik[-1])
    return float(lik[state.slot_of(topic_id)])


def label_posterior(prior_counts: np.ndarray, eta: float, logmargs: np.ndarray) -> np.ndarray:
    """Normalised probability over a binary label given the collapsed
    per-user urn counts and the two topic-marginalised log likelihoods."""
    logp = np.log(prior_counts + eta) + logmargs
    p = np.exp(logp - logp.max())
    return p / p.sum()


def sample_labels(state: SamplerState, d: int) -> tuple[int, int]:
    """Draw (x, y) for a detached document: x given y, then y given x.

    Each step multiplies the collapsed per-user label urn by the topic
    marginal likelihood under the candidate stratum, including the NEW
    topic term weighted by the remainder mass.
    """
    lik = state._loglik_vector(d)
    return _sample_labels_given_lik(state, d, lik)


def _sample_labels_given_lik(state: SamplerState, d: int, lik: np.ndarray) -> tuple[int, int]:
    i, t = state.doc_user[d], state.doc_epoch[d]
    e = state.exy[i]
    h = state.hyper

    def logmarg(x: int, yv: int) -> float:
        with np.errstate(divide="ignore"):
            return _logsumexp(lik + np.log(state.weights_for(x, yv, i, t)))

    yv = int(state.y[d])
    if state.clamp_x is not None:
        x = state.clamp_x
    else:
        lm = np.array([logmarg(0, yv), logmarg(1, yv)])
        p = label_posterior(np.array([e[0, yv], e[1, yv]]), h.eta_x, lm)
        x = int(state.rng.random() < p[1])
    if state.clamp_y is not None:
        yv = state.clamp_y
    else:
        lm = np.array([logmarg(x, 0), logmarg(x, 1)])
        p = label_posterior(np.array([e[x, 0], e[x, 1]]), h.eta_y, lm)
        yv = int(state.rng.random() < p[1])
    return x, yv


def sample_topic(state: SamplerState, d: int) -> int:
    """Draw a topic slot for a detached document given its (x, y).

    Probability of an active topic is weight times collapsed likelihood;
    the remainder mass times the fresh-topic likelihood opens a new atom
    (the document is not attached here).
    """
    lik = state._loglik_vector(d)
    return _sample_topic_given_lik(state, d, lik, int(state.x[d]), int(state.y[d]))


def _sample_topic_given_lik(state: SamplerState, d: int, lik: np.ndarray,
                            x: int, yv: int) -> int:
    i, t = state.doc_user[d], state.doc_epoch[d]
    w = state.weights_for(x, yv, i, t)
    with np.errstate(divide="ignore"):
        logp = lik + np.log(w)
    slot = _sample_from_logits(state.rng, logp)
    if slot == len(state.topic_ids):
        slot = state._birth(x, yv, i, t)
    return slot


def resample_tables(state: SamplerState) -> None:
    """Redraw table counts by sequential CRP simulation, bottom up.

    The new-table bias for dish k in a restaurant with concentration c
    and parent weights p is c * p[k].  Tables at the pi level join the
    user restaurants as customers; tables at the user and epoch levels
    join the global restaurant.
    """
    h, rng = state.hyper, state.rng
    state.t_pi = np.zeros_like(state.n11)
    for i, t, k in np.argwhere(state.n11 > 0):
        state.t_pi[i, t, k] = _crp_table_count(
            rng, int(state.n11[i, t, k]), h.kappa * state.beta[i, k])
    cb = state.beta_customers()
    state.t_beta = np.zeros_like(state.n10)
    for i, k in np.argwhere(cb > 0):
        state.t_beta[i, k] = _crp_table_count(rng, int(cb[i, k]), h.mu * state.r[k])
    state.t_psi = np.zeros_like(state.n01)
    for t, k in np.argwhere(state.n01 > 0):
        state.t_psi[t, k] = _crp_table_count(rng, int(state.n01[t, k]), h.gamma * state.r[k])


def resample_weights(state: SamplerState) -> None:
    """Redraw every weight vector from its Dirichlet conditional.

    r ~ Dir(M_1..M_K, alpha) over the global dish counts; each child
    vector gets its restaurant's customer counts plus concentration
    times the parent weights, with the remainder taking concentration
    times the parent remainder.
    """
    h, rng = state.hyper, state.rng
    M = state.global_dish_counts()
    state.r = rng.dirichlet(np.maximum(np.append(M, h.alpha), _TINY))
    cb = state.beta_customers()
    psi = np.empty((state.T, state.K + 1))
    for t in range(state.T):
        psi[t] = rng.dirichlet(np.maximum(
            np.append(state.n01[t], 0.0) + h.gamma * state.r, _TINY))
    state.psi = psi
    beta = np.empty((state.I, state.K + 1))
    for i in range(state.I):
        beta[i] = rng.dirichlet(np.maximum(
            np.append(cb[i], 0.0) + h.mu * state.r, _TINY))
    state.beta = beta
    pi = np.empty((state.I, state.T, state.K + 1))
    for i in range(state.I):
        for t in range(state.T):
            pi[i, t] = rng.dirichlet(np.maximum(
                np.append(state.n11[i, t], 0.0) + h.kappa * state.beta[i], _TINY))
    state.pi = pi


def _resample_one_concentration(rng: np.random.Generator, old: float,
                                customers: np.ndarray, tables: np.ndarray,
                                shape: float, rate: float) -> float:
    """Auxiliary-variable update for a DP concentration shared by several
    restaurants, under a Gamma(shape, rate) prior."""
    n = np.asarray(customers, dtype=np.float64)
    m = np.asarray(tables, dtype=np.float64)
    live = n >= 1
    if not live.any():
        return float(rng.gamma(shape, 1.0 / rate))
    n, m = n[live], m[live]
    w = rng.beta(old + 1.0, n)
    s = rng.random(n.size) < n / (n + old)
    a = shape + m.sum() - s.sum()
    b = rate - np.log(np.maximum(w, _TINY)).sum()
    return float(rng.gamma(max(a, _TINY), 1.0 / b))


def resample_concentrations(state: SamplerState) -> None:
    """Update alpha, gamma, mu, kappa from their restaurant statistics."""
    h, rng = state.hyper, state.rng
    M = state.global_dish_counts()
    h.alpha = _resample_one_concentration(
        rng, h.alpha, np.array([M.sum()]), np.array([state.K]),
        h.conc_shape, h.conc_rate)
    h.gamma = _resample_one_concentration(
        rng, h.gamma, state.n01.sum(axis=1), state.t_psi.sum(axis=1),
        h.conc_shape, h.conc_rate)
    cb = state.beta_customers()
    h.mu = _resample_one_concentration(
        rng, h.mu, cb.sum(axis=1), state.t_beta.sum(axis=1),
        h.conc_shape, h.conc_rate)
    h.kappa = _resample_one_concentration(
        rng, h.kappa, state.n11.sum(axis=2).ravel(), state.t_pi.sum(axis=2).ravel(),
        h.conc_shape, h.conc_rate)


def gibbs_sweep(state: SamplerState, resample_conc: bool = True) -> None:
    """One full sweep: per-document label and topic updates, then tables,
    pruning, weights and (optionally) concentrations."""
    for d in range(state.D):
        state._detach(d)
        lik = state._loglik_vector(d)
        x, yv = _sample_labels_given_lik(state, d, lik)
        slot = _sample_topic_given_lik(state, d, lik, x, yv)
        state._attach(d, x, yv, slot)
    resample_tables(state)
    state._prune_dead_topics()
    resample_weights(state)
    if resample_conc:
        resample_concentrations(state)
    state.n_sweeps += 1


def log_joint(state: SamplerState) -> float:
    """Collapsed joint score: topic-word Polya terms, per-user label urns
    and the log weight of every assignment.  Finite for any valid state."""
    h = state.hyper
    lam, V = h.lam, state.V
    score = float(state.K * gammaln(V * lam)
                  - gammaln(state.etot + V * lam).sum()
                  + gammaln(state.ew + lam).sum()
                  - state.K * V * gammaln(lam))
    for i in range(state.I):
        e = state.exy[i]
        n_i = e.sum()
        if state.clamp_x is None:
            ex1 = e[1].sum()
            score += float(gammaln(2 * h.eta_x) - 2 * gammaln(h.eta_x)
                           + gammaln(ex1 + h.eta_x) + gammaln(n_i - ex1 + h.eta_x)
                           - gammaln(n_i + 2 * h.eta_x))
        if state.clamp_y is None:
            ey1 = e[:, 1].sum()
            score += float(gammaln(2 * h.eta_y) - 2 * gammaln(h.eta_y)
                           + gammaln(ey1 + h.eta_y) + gammaln(n_i - ey1 + h.eta_y)
                           - gammaln(n_i + 2 * h.eta_y))
    i_arr, t_arr = state.doc_user, state.doc_epoch
    w = np.empty(state.D)
    m00 = (state.x == 0) & (state.y == 0)
    m01 = (state.x == 0) & (state.y == 1)
    m10 = (state.x == 1) & (state.y == 0)
    m11 = (state.x == 1) & (state.y == 1)
    w[m00] = state.r[state.z[m00]]
    w[m01] = state.psi[t_arr[m01], state.z[m01]]
    w[m10] = state.beta[i_arr[m10], state.z[m10]]
    w[m11] = state.pi[i_arr[m11], t_arr[m11], state.z[m11]]
    score += float(np.log(np.maximum(w, _TINY)).sum())
    if not np.isfinite(score):
        raise NumericalError("log joint is not finite")
    return score


def check_consistency(state: SamplerState) -> None:
    """Audit cached statistics against a recount; raises AssertionError."""
    corpus = state.corpus
    K = state.K
    assert len(set(state.topic_ids)) == K, "duplicate topic ids"
    assert state.z.min() >= 0 and state.z.max() < K, "topic slot out of range"
    ew = np.zeros_like(state.ew)
    etot = np.zeros_like(state.etot)
    exy = np.zeros_like(state.exy)
    n00 = np.zeros_like(state.n00)
    n01 = np.zeros_like(state.n01)
    n10 = np.zeros_like(state.n10)
    n11 = np.zeros_like(state.n11)
    for d, doc in enumerate(corpus.documents):
        k, x, yv = state.z[d], state.x[d], state.y[d]
        i, t = state.doc_user[d], state.doc_epoch[d]
        ew[k, doc.word_ids] += doc.word_cts
        etot[k] += doc.length
        exy[i, x, yv] += 1
        if x == 0 and yv == 0:
            n00[k] += 1
        elif x == 0:
            n01[t, k] += 1
        elif yv == 0:
            n10[i, k] += 1
        else:
            n11[i, t, k] += 1
    assert np.array_equal(ew, state.ew), "topic-word cache out of sync"
    assert np.array_equal(etot, state.etot), "topic total cache out of sync"
    assert np.array_equal(exy, state.exy), "label count cache out of sync"
    assert np.array_equal(n00, state.n00), "global customer counts out of sync"
    assert np.array_equal(n01, state.n01), "epoch customer counts out of sync"
    assert np.array_equal(n10, state.n10), "user customer counts out of sync"
    assert np.array_equal(n11, state.n11), "cell customer counts out of sync"
    assert (state.exy.sum(axis=(1, 2)) == np.bincount(state.doc_user, minlength=state.I)).all()
    # every live topic is referenced somewhere
    cust = n00 + n01.sum(axis=0) + n10.sum(axis=0) + n11.sum(axis=(0, 1))
    tables = state.t_psi.sum(axis=0) + state.t_beta.sum(axis=0) + state.t_pi.sum(axis=(0, 1))
    assert ((cust > 0) | (tables > 0)).all(), "dead topic not pruned"
    # tables are a valid seating of their customers
    assert (state.t_pi <= state.n11).all() and ((state.n11 > 0) <= (state.t_pi > 0)).all()
    cb = state.beta_customers()
    assert (state.t_beta <= cb).all() and ((cb > 0) <= (state.t_beta > 0)).all()
    assert (state.t_psi <= state.n01).all() and ((state.n01 > 0) <= (state.t_psi > 0)).all()
    for vec in (state.r, *state.psi, *state.beta, *state.pi.reshape(-1, state.K + 1)):
        assert vec.shape == (K + 1,)
        assert abs(vec.sum() - 1.0) < 1e-8, "weight vector not normalised"
        assert (vec >= 0).all()


# ----- chain driver ---------------------------------------------------------


@dataclass
class PosteriorSummary:
    """Aggregated posterior over collected sweeps.

    Topics are tracked by stable id and never relabeled mid-chain; the
    topic-word matrix holds counts averaged over the collected samples.
    """

    model: str
    seed: int
    config: dict
    doc_ids: list[str]
    doc_users: list[str]
    modal_x: np.ndarray
    modal_y: np.ndarray  # -1 when the model leaves y unlabeled
    modal_z: np.ndarray  # stable topic ids
    y_labeled: bool
    topic_ids: list[int]
    topic_word: np.ndarray       # averaged counts, rows follow topic_ids
    topic_word_dist: np.ndarray  # smoothed, rows sum to 1
    cell_topic: dict[tuple[int, int], dict[int, int]]
    log_joint_trace: list[float]
    n_samples: int
    users: list[str]
    I: int
    T: int
    V: int

    def topic_row(self, topic_id: int) -> np.ndarray:
        return self.topic_word_dist[self.topic_ids.index(topic_id)]

    def topic_row_counts(self, topic_id: int) -> np.ndarray:
        return self.topic_word[self.topic_ids.index(topic_id)]


def type_proportions(summary: PosteriorSummary) -> dict[str, float]:
    """Fraction of documents per modal (x, y) type."""
    if not summary.y_labeled:
        raise ValueError("summary does not label y; type proportions undefined")
    n = len(summary.doc_ids)
    out = {}
    for name, (x, yv) in (("public_tg", (0, 0)), ("public_ts", (0, 1)),
                          ("person_tg", (1, 0)), ("person_ts", (1, 1))):
        out[name] = float(((summary.modal_x == x) & (summary.modal_y == yv)).sum() / n)
    return out


def run_chain(corpus: Corpus, hyper: Hyperparams | None = None,
              schedule: Schedule | None = None, seed: int = 0,
              clamp_x: int | None = None, clamp_y: int | None = None,
              model: str = "dpm") -> PosteriorSummary:
    """Run one Gibbs chain and aggregate collected sweeps into a summary."""
    hyper = hyper or Hyperparams()
    schedule = schedule or Schedule()
    schedule.validate()
    state = init_state(corpus, hyper, seed, clamp_x, clamp_y)
    trace: list[float] = []
    for _ in range(schedule.burn_in):
        gibbs_sweep(state, schedule.resample_concentrations)
        trace.append(log_joint(state))

    D = corpus.D
    xy_counts = np.zeros((D, 2, 2), dtype=np.int64)
    z_samples = np.empty((schedule.samples, D), dtype=np.int64)
    word_acc: dict[int, np.ndarray] = {}
    for s in range(schedule.samples):
        for _ in range(schedule.thin):
            gibbs_sweep(state, schedule.resample_concentrations)
            trace.append(log_joint(state))
        xy_counts[np.arange(D), state.x, state.y] += 1
        ids = np.asarray(state.topic_ids)
        z_samples[s] = ids[state.z]
        for slot, tid in enumerate(state.topic_ids):
            if tid not in word_acc:
                word_acc[tid] = np.zeros(corpus.V)
            word_acc[tid] += state.ew[slot]

    flat = xy_counts.reshape(D, 4)
    modal_cell = flat.argmax(axis=1)  # first max wins: deterministic tie-break
    modal_x = modal_cell // 2
    modal_y = modal_cell % 2
    modal_z = np.empty(D, dtype=np.int64)
    for d in range(D):
        vals, counts = np.unique(z_samples[:, d], return_counts=True)
        modal_z[d] = vals[counts.argmax()]  # np.unique sorts: ties pick smaller id

    topic_ids = sorted(word_acc)
    topic_word = np.vstack([word_acc[tid] / schedule.samples for tid in topic_ids]) \
        if topic_ids else np.zeros((0, corpus.V))
    smoothed = topic_word + hyper.lam
    topic_word_dist = smoothed / smoothed.sum(axis=1, keepdims=True)

    cell_topic: dict[tuple[int, int], dict[int, int]] = {}
    for d in range(D):
        key = (int(corpus.doc_user[d]), int(corpus.doc_epoch[d]))
        sub = cell_topic.setdefault(key, {})
        tid = int(modal_z[d])
        sub[tid] = sub.get(tid, 0) + 1

    y_labeled = model != "public_dp"
    if not y_labeled:
        modal_y = np.full(D, -1, dtype=np.int64)

    config = {"hyper": asdict(hyper), "schedule": asdict(schedule),
              "clamp_x": clamp_x, "clamp_y": clamp_y}
    return PosteriorSummary(
        model=model, seed=seed, config=config,
        doc_ids=[doc.doc_id for doc in corpus.documents],
        doc_users=[doc.user_id for doc in corpus.documents],
        modal_x=modal_x, modal_y=modal_y, modal_z=modal_z,
        y_labeled=y_labeled, topic_ids=[int(t) for t in topic_ids],
        topic_word=topic_word, topic_word_dist=topic_word_dist,
        cell_topic=cell_topic, log_joint_trace=trace,
        n_samples=schedule.samples, users=list(corpus.users),
        I=corpus.I, T=corpus.T, V=corpus.V)


# ----- checkpointing ---------------------------------------------------------

CHECKPOINT_VERSION = 1


def save_checkpoint(state: SamplerState, path: str, model: str = "dpm") -> None:
    """Dump the full sampler state (including rng) as versioned JSON."""
    blob = {
        "version": CHECKPOINT_VERSION,
        "model": model,
        "seed": state.seed,
        "clamp_x": state.clamp_x,
        "clamp_y": state.clamp_y,
        "hyper": asdict(state.hyper),
        "fingerprint": {"D": state.D, "V": state.V, "I": state.I, "T": state.T},
        "n_sweeps": state.n_sweeps,
        "topic_ids": state.topic_ids,
        "next_topic_id": state.next_topic_id,
        "x": state.x.tolist(), "y": state.y.tolist(), "z": state.z.tolist(),
        "ew": state.ew.tolist(), "etot": state.etot.tolist(),
        "n00": state.n00.tolist(), "n01": state.n01.tolist(),
        "n10": state.n10.tolist(), "n11": state.n11.tolist(),
        "t_psi": state.t_psi.tolist(), "t_beta": state.t_beta.tolist(),
        "t_pi": state.t_pi.tolist(),
        "r": state.r.tolist(), "psi": state.psi.tolist(),
        "beta": state.beta.tolist(), "pi": state.pi.tolist(),
        "exy": state.exy.tolist(),
        "rng_state": state.rng.bit_generator.state,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(blob, fh, sort_keys=True, separators=(",", ":"))


def load_checkpoint(corpus: Corpus, path: str) -> SamplerState:
    """Rebuild a SamplerState for exact chain resumption."""
    with open(path, "r", encoding="utf-8") as fh:
        blob = json.load(fh)
    if blob.get("version") != CHECKPOINT_VERSION:
        raise DataError(f"unsupported checkpoint version {blob.get('version')!r}")
    fp = blob["fingerprint"]
    if (fp["D"], fp["V"], fp["I"], fp["T"]) != (corpus.D, corpus.V, corpus.I, corpus.T):
        raise DataError("checkpoint does not match this corpus")
    state = SamplerState.__new__(SamplerState)
    state.corpus = corpus
    state.hyper = Hyperparams(**blob["hyper"])
    state.seed = blob["seed"]
    state.clamp_x = blob["clamp_x"]
    state.clamp_y = blob["clamp_y"]
    state.I, state.T, state.V, state.D = corpus.I, corpus.T, corpus.V, corpus.D
    state.n_sweeps = blob["n_sweeps"]
    state.doc_user = corpus.doc_user
    state.doc_epoch = corpus.doc_epoch
    lam, V = state.hyper.lam, state.V
    newlik = np.empty(state.D)
    for ix, doc in enumerate(corpus.documents):
        s = 0.0
        for c in doc.word_cts:
            s += np.log(lam + np.arange(int(c))).sum()
        s -= np.log(V * lam + np.arange(doc.length)).sum()
        newlik[ix] = s
    state.doc_newlik = newlik
    state.topic_ids = list(blob["topic_ids"])
    state.next_topic_id = blob["next_topic_id"]
    for name in ("x", "y", "z", "etot", "n00", "exy", "ew", "n01", "n10", "n11",
                 "t_psi", "t_beta", "t_pi"):
        setattr(state, name, np.asarray(blob[name], dtype=np.int64))
    K = len(state.topic_ids)
    state.ew = state.ew.reshape(K, state.V)
    state.n01 = state.n01.reshape(state.T, K)
    state.n10 = state.n10.reshape(state.I, K)
    state.n11 = state.n11.reshape(state.I, state.T, K)
    state.t_psi = state.t_psi.reshape(state.T, K)
    state.t_beta = state.t_beta.reshape(state.I, K)
    state.t_pi = state.t_pi.reshape(state.I, state.T, K)
    state.r = np.asarray(blob["r"], dtype=np.float64)
    state.psi = np.asarray(blob["psi"], dtype=np.float64).reshape(state.T, K + 1)
    state.beta = np.asarray(blob["beta"], dtype=np.float64).reshape(state.I, K + 1)
    state.pi = np.asarray(blob["pi"], dtype=np.float64).reshape(state.I, state.T, K + 1)
    state.rng = np.random.default_rng()
    state.rng.bit_generator.state = blob["rng_state"]
    return state

def save_summary(summary: PosteriorSummary, path: str) -> None:
    """Dump an aggregated posterior as JSON for the downstream stages."""
    blob = {
        "version": CHECKPOINT_VERSION,
        "kind": "summary",
        "model": summary.model,
        "seed": summary.seed,
        "config": summary.config,
        "doc_ids": summary.doc_ids,
        "doc_users": summary.doc_users,
        "modal_x": summary.modal_x.tolist(),
        "modal_y": summary.modal_y.tolist(),
        "modal_z": summary.modal_z.tolist(),
        "y_labeled": summary.y_labeled,
        "topic_ids": summary.topic_ids,
        "topic_word": summary.topic_word.tolist(),
        "topic_word_dist": summary.topic_word_dist.tolist(),
        "cell_topic": {f"{i},{t}": sub for (i, t), sub in summary.cell_topic.items()},
        "log_joint_trace": summary.log_joint_trace,
        "n_samples": summary.n_samples,
        "users": summary.users,
        "I": summary.I, "T": summary.T, "V": summary.V,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(blob, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_summary(path: str) -> PosteriorSummary:
    with open(path, "r", encoding="utf-8") as fh:
        blob = json.load(fh)
    if blob.get("kind") != "summary" or blob.get("version") != CHECKPOINT_VERSION:
        raise DataError(f"{path} is not a posterior summary file")
    cell_topic = {}
    for key, sub in blob["cell_topic"].items():
        i, t = key.split(",")
        cell_topic[(int(i), int(t))] = {int(k): v for k, v in sub.items()}
    return PosteriorSummary(
        model=blob["model"], seed=blob["seed"], config=blob["config"],
        doc_ids=list(blob["doc_ids"]), doc_users=list(blob["doc_users"]),
        modal_x=np.asarray(blob["modal_x"], dtype=np.int64),
        modal_y=np.asarray(blob["modal_y"], dtype=np.int64),
        modal_z=np.asarray(blob["modal_z"], dtype=np.int64),
        y_labeled=bool(blob["y_labeled"]),
        topic_ids=[int(t) for t in blob["topic_ids"]],
        topic_word=np.asarray(blob["topic_word"], dtype=np.float64),
        topic_word_dist=np.asarray(blob["topic_word_dist"], dtype=np.float64),
        cell_topic=cell_topic,
        log_joint_trace=[float(v) for v in blob["log_joint_trace"]],
        n_samples=int(blob["n_samples"]),
        users=list(blob["users"]),
        I=int(blob["I"]), T=int(blob["T"]), V=int(blob["V"]))
