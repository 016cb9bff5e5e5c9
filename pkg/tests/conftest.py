import numpy as np
import pytest

from pietimeline import DocumentRecord, IngestConfig, corpus_from_records

WEEK = 7 * 86400


def rec(doc_id, user_id, ts, tokens, gold_pie=None):
    return DocumentRecord(doc_id, user_id, ts, list(tokens), gold_pie)


def random_records(rng, n_users=4, n_epochs=3, docs_per_cell=2, vocab_size=12,
                   doc_len=6):
    """Uniform-random records over a closed vocabulary, one batch per cell."""
    words = [f"w{j:03d}" for j in range(vocab_size)]
    out = []
    n = 0
    for i in range(n_users):
        for t in range(n_epochs):
            for _ in range(docs_per_cell):
                toks = [words[j] for j in rng.integers(0, vocab_size, doc_len)]
                out.append(rec(f"d{n:04d}", f"u{i}", t * WEEK + int(rng.integers(0, WEEK)), toks))
                n += 1
    return out


def random_corpus(seed=0, **kw):
    rng = np.random.default_rng(seed)
    return corpus_from_records(random_records(rng, **kw), IngestConfig())


@pytest.fixture
def tiny_corpus():
    records = [
        rec("a1", "alice", 0, ["ham", "eggs", "ham"]),
        rec("b1", "bob", WEEK + 5, ["eggs", "toast"]),
        rec("a2", "alice", 2 * WEEK, ["toast", "ham"]),
    ]
    return corpus_from_records(records, IngestConfig())


@pytest.fixture
def small_corpus():
    return random_corpus(seed=7, n_users=5, n_epochs=4, docs_per_cell=5,
                         vocab_size=20, doc_len=8)
