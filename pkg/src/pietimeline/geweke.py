"""Prior-reproduction validation of the Gibbs sampler.

Alternates Gibbs updates of the latent state given data with exact
re-simulation of the data (document words) given the state.  The
stationary law of that alternation is the model prior, so marginal
statistics from the chain must match plain forward simulation.  Two
statistics are tracked: the remainder mass of the global weight vector
over unused atoms, and the per-user personal-label fraction.

Concentrations stay fixed on both sides.  The label kernel conditions
x on y and y on x through same-label counts, which is the collapsed
form of a per-user four-cell Dirichlet preference; the forward sampler
draws labels from exactly that prior, so eta_x must equal eta_y here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, Document, Vocabulary
from .dpm import Hyperparams, SamplerState, gibbs_sweep, init_state

_STICK_EPS = 1e-14
_MAX_STICKS = 10000


@dataclass
class GewekeDesign:
    """Shape of the tiny model the harness runs on."""

    I: int = 2
    T: int = 2
    docs_per_cell: int = 5
    doc_len: int = 5
    V: int = 5


def _design_corpus(design: GewekeDesign, rng: np.random.Generator,
                   hyper: Hyperparams) -> Corpus:
    """Corpus with the design's fixed layout and forward-simulated words.

    Built directly (not through ingest) so the vocabulary keeps all V
    words even when a draw does not use some of them.
    """
    words = [f"w{v}" for v in range(design.V)]
    vocab = Vocabulary(words, {w: 1 for w in words})
    users = [f"u{i}" for i in range(design.I)]
    docs = []
    n = 0
    for i in range(design.I):
        for t in range(design.T):
            for _ in range(design.docs_per_cell):
                ids = rng.integers(0, design.V, size=design.doc_len)
                wid, wct = np.unique(ids, return_counts=True)
                docs.append(Document(
                    doc_id=f"d{n:04d}", user_id=users[i], user_ix=i,
                    ts=t * 100, epoch=t, tokens=[words[v] for v in ids],
                    token_ids=ids.astype(np.int64), word_ids=wid.astype(np.int64),
                    word_cts=wct.astype(np.int64), length=design.doc_len))
                n += 1
    return Corpus(docs, vocab, users, epoch_length=100, origin=0)


def _stick_weights(rng: np.random.Generator, conc: float) -> np.ndarray:
    """GEM(conc) sticks drawn until the remainder is negligible; the last
    entry is the (tiny) remainder."""
    sticks = []
    rem = 1.0
    for _ in range(_MAX_STICKS):
        b = rng.beta(1.0, conc)
        sticks.append(b * rem)
        rem *= 1.0 - b
        if rem < _STICK_EPS:
            break
    return np.append(sticks, rem)


def forward_draw(design: GewekeDesign, hyper: Hyperparams,
                 rng: np.random.Generator) -> dict[str, float]:
    """One draw from the model prior; returns the tracked statistics."""
    if hyper.eta_x != hyper.eta_y:
        raise ValueError("forward label prior requires eta_x == eta_y")
    r = _stick_weights(rng, hyper.alpha)
    L = r.size - 1  # represented atoms; r[-1] is negligible remainder mass
    psi = rng.dirichlet(np.maximum(hyper.gamma * r, 1e-300), size=design.T)
    beta = rng.dirichlet(np.maximum(hyper.mu * r, 1e-300), size=design.I)
    theta = rng.dirichlet([hyper.eta_x] * 4, size=design.I)
    used = np.zeros(L + 1, dtype=bool)
    n_personal = np.zeros(design.I)
    for i in range(design.I):
        pi_i = rng.dirichlet(np.maximum(hyper.kappa * beta[i], 1e-300), size=design.T)
        for t in range(design.T):
            cells = rng.choice(4, size=design.docs_per_cell, p=theta[i])
            for cell in cells:
                x, yv = cell // 2, cell % 2
                if x == 0 and yv == 0:
                    w = r
                elif x == 0:
                    w = psi[t]
                elif yv == 0:
                    w = beta[i]
                else:
                    w = pi_i[t]
                k = rng.choice(L + 1, p=w / w.sum())
                assert k < L, "draw hit the truncated remainder"
                used[k] = True
                n_personal[i] += x
    n_docs = design.T * design.docs_per_cell
    return {
        "r_unused": float(1.0 - r[used].sum()),
        "personal_frac": float((n_personal / n_docs).mean()),
        "k_used": float(used.sum()),
    }


def run_forward(design: GewekeDesign, hyper: Hyperparams, n: int,
                seed: int = 0) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(seed)
    rows = [forward_draw(design, hyper, rng) for _ in range(n)]
    return {k: np.array([row[k] for row in rows]) for k in rows[0]}


def _resimulate_words(state: SamplerState, rng: np.random.Generator) -> None:
    """Redraw every document's words from the collapsed Polya urn given z."""
    lam, V = state.hyper.lam, state.V
    K = state.K
    ew = np.zeros((K, V))
    etot = np.zeros(K)
    vocab_words = state.corpus.vocab.id2word
    for d, doc in enumerate(state.corpus.documents):
        k = state.z[d]
        ids = np.empty(doc.length, dtype=np.int64)
        for j in range(doc.length):
            p = (ew[k] + lam) / (etot[k] + V * lam)
            ids[j] = rng.choice(V, p=p)
            ew[k, ids[j]] += 1
            etot[k] += 1
        wid, wct = np.unique(ids, return_counts=True)
        doc.token_ids = ids
        doc.tokens = [vocab_words[v] for v in ids]
        doc.word_ids = wid
        doc.word_cts = wct.astype(np.int64)
    state.ew = ew.astype(np.int64)
    state.etot = etot.astype(np.int64)
    # fresh-topic likelihoods depend on the word multiplicities
    newlik = np.empty(state.D)
    for ix, doc in enumerate(state.corpus.documents):
        s = 0.0
        for c in doc.word_cts:
            s += np.log(lam + np.arange(int(c))).sum()
        s -= np.log(V * lam + np.arange(doc.length)).sum()
        newlik[ix] = s
    state.doc_newlik = newlik


def run_gibbs_side(design: GewekeDesign, hyper: Hyperparams, n: int,
                   seed: int = 0, discard_frac: float = 0.1) -> dict[str, np.ndarray]:
    """Successive-conditional chain; returns post-discard statistic paths."""
    if hyper.eta_x != hyper.eta_y:
        raise ValueError("harness requires eta_x == eta_y")
    rng = np.random.default_rng(seed + 777)
    corpus = _design_corpus(design, rng, hyper)
    state = init_state(corpus, hyper, seed)
    stats: dict[str, list[float]] = {"r_unused": [], "personal_frac": [], "k_used": []}
    n_docs_per_user = design.T * design.docs_per_cell
    for _ in range(n):
        gibbs_sweep(state, resample_conc=False)
        _resimulate_words(state, state.rng)
        stats["r_unused"].append(float(state.r[-1]))
        frac = state.exy[:, 1, :].sum(axis=1) / n_docs_per_user
        stats["personal_frac"].append(float(frac.mean()))
        stats["k_used"].append(float(state.K))
    discard = int(n * discard_frac)
    return {k: np.array(v[discard:]) for k, v in stats.items()}


def batch_mean_se(x: np.ndarray, n_batches: int = 30) -> float:
    """Monte Carlo standard error of the mean by batch means (handles
    autocorrelated chains)."""
    n = x.size // n_batches
    if n < 1:
        raise ValueError("series too short for the requested batch count")
    means = x[: n * n_batches].reshape(n_batches, n).mean(axis=1)
    return float(means.std(ddof=1) / np.sqrt(n_batches))


def compare(design: GewekeDesign, hyper: Hyperparams, n_iter: int,
            seed: int = 0) -> dict[str, dict[str, float]]:
    """Run both sides and report |mean difference| in pooled SE units."""
    fwd = run_forward(design, hyper, n_iter, seed)
    gbs = run_gibbs_side(design, hyper, n_iter, seed)
    report = {}
    for key in ("r_unused", "personal_frac", "k_used"):
        f, g = fwd[key], gbs[key]
        se = np.hypot(f.std(ddof=1) / np.sqrt(f.size), batch_mean_se(g))
        report[key] = {
            "forward_mean": float(f.mean()),
            "gibbs_mean": float(g.mean()),
            "pooled_se": float(se),
            "z": float(abs(f.mean() - g.mean()) / se),
        }
    return report
