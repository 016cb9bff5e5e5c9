"""Corpus ingestion: record parsing, vocabulary construction, epoch segmentation.

The on-disk record format is one JSON object per line with keys
``doc_id``, ``user_id``, ``ts`` (integer seconds), ``tokens`` (list of
strings) and optional ``gold_pie``.  Lines starting with ``#`` and blank
lines are ignored, so artifact files can carry comment headers.
"""

from __future__ import annotations

import hashlib
import json
import logging
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import DataError

log = logging.getLogger(__name__)

WEEK_SECONDS = 7 * 86400


@dataclass(frozen=True)
class IngestConfig:
    """Knobs for turning raw records into a Corpus."""

    min_count: int = 1
    epoch_length: int = WEEK_SECONDS
    origin: int | None = None  # None: smallest timestamp in the input
    stop_list: str | None = None  # optional path, one token per line


@dataclass
class DocumentRecord:
    """One raw input line, before vocabulary filtering."""

    doc_id: str
    user_id: str
    ts: int
    tokens: list[str]
    gold_pie: str | None = None


def parse_record_line(line: str, lineno: int) -> DocumentRecord:
    """Parse a single record line, raising DataError with the line number."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DataError(f"line {lineno}: malformed record ({exc.msg})") from exc
    if not isinstance(obj, dict):
        raise DataError(f"line {lineno}: record is not a key-value object")
    for key in ("doc_id", "user_id", "ts", "tokens"):
        if key not in obj:
            raise DataError(f"line {lineno}: missing field {key}")
    doc_id, user_id, ts, tokens = obj["doc_id"], obj["user_id"], obj["ts"], obj["tokens"]
    if not isinstance(doc_id, str) or not isinstance(user_id, str):
        raise DataError(f"line {lineno}: doc_id and user_id must be strings")
    if isinstance(ts, bool) or not isinstance(ts, int):
        raise DataError(f"line {lineno}: ts must be integer seconds")
    if not isinstance(tokens, list) or any(not isinstance(w, str) for w in tokens):
        raise DataError(f"line {lineno}: tokens must be a list of strings")
    gold = obj.get("gold_pie")
    if gold is not None and not isinstance(gold, str):
        raise DataError(f"line {lineno}: gold_pie must be a string")
    return DocumentRecord(doc_id, user_id, ts, list(tokens), gold)


def read_records(path: str) -> list[DocumentRecord]:
    """Read a record file; ``#`` comment lines and blank lines are skipped."""
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            records.append(parse_record_line(stripped, lineno))
    return records


def write_records(records: list[DocumentRecord], path: str, header: str | None = None) -> None:
    """Write records as JSON lines; ``header`` becomes a leading # comment."""
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            for hline in header.splitlines():
                fh.write(f"# {hline}\n")
        for rec in records:
            obj = {
                "doc_id": rec.doc_id,
                "user_id": rec.user_id,
                "ts": rec.ts,
                "tokens": rec.tokens,
            }
            if rec.gold_pie is not None:
                obj["gold_pie"] = rec.gold_pie
            fh.write(json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n")


class Vocabulary:
    """Token-to-id map; ids ordered by descending frequency, ties lexicographic."""

    def __init__(self, words: list[str], counts: dict[str, int]):
        self.id2word = list(words)
        self.word2id = {w: i for i, w in enumerate(words)}
        self.counts = dict(counts)

    @property
    def size(self) -> int:
        return len(self.id2word)

    def __len__(self) -> int:
        return len(self.id2word)

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.id2word == other.id2word

    def get(self, word: str) -> int | None:
        return self.word2id.get(word)


def build_vocabulary(records: list[DocumentRecord], min_count: int = 1) -> Vocabulary:
    """Count tokens across records and keep those with count >= min_count."""
    freq = Counter()
    for rec in records:
        freq.update(rec.tokens)
    kept = {w: c for w, c in freq.items() if c >= min_count}
    if not kept:
        raise DataError("vocabulary is empty after frequency filtering")
    words = sorted(kept, key=lambda w: (-kept[w], w))
    return Vocabulary(words, kept)


def assign_epochs(timestamps: np.ndarray, epoch_length: int, origin: int) -> np.ndarray:
    """Map integer timestamps onto contiguous epoch ids from a fixed origin."""
    ts = np.asarray(timestamps, dtype=np.int64)
    if epoch_length <= 0:
        raise ValueError("epoch_length must be positive")
    if ts.size and ts.min() < origin:
        raise DataError(f"timestamp {int(ts.min())} precedes origin {origin}")
    return (ts - origin) // epoch_length


@dataclass(eq=False)
class Document:
    """A vocabulary-filtered document ready for sampling."""

    doc_id: str
    user_id: str
    user_ix: int
    ts: int
    epoch: int
    tokens: list[str]  # raw tokens as read, before any filtering
    token_ids: np.ndarray
    word_ids: np.ndarray  # distinct vocabulary ids in this document
    word_cts: np.ndarray  # multiplicity per distinct id
    length: int
    gold_pie: str | None = None

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Document)
            and self.doc_id == other.doc_id
            and self.user_id == other.user_id
            and self.user_ix == other.user_ix
            and self.ts == other.ts
            and self.epoch == other.epoch
            and self.tokens == other.tokens
            and np.array_equal(self.token_ids, other.token_ids)
            and self.gold_pie == other.gold_pie
        )


class Corpus:
    """Processed documents plus vocabulary, user index and epoch grid."""

    def __init__(self, documents: list[Document], vocab: Vocabulary, users: list[str],
                 epoch_length: int, origin: int, n_dropped: int = 0):
        self.documents = documents
        self.vocab = vocab
        self.users = users
        self.user_index = {u: i for i, u in enumerate(users)}
        self.epoch_length = epoch_length
        self.origin = origin
        self.n_dropped = n_dropped
        self.I = len(users)
        self.T = int(max((d.epoch for d in documents), default=-1)) + 1
        self.V = vocab.size
        self.D = len(documents)
        self.doc_user = np.array([d.user_ix for d in documents], dtype=np.int64)
        self.doc_epoch = np.array([d.epoch for d in documents], dtype=np.int64)
        # cell index: documents grouped per (user, epoch)
        self.cells: dict[tuple[int, int], list[int]] = {}
        for ix, d in enumerate(documents):
            self.cells.setdefault((d.user_ix, d.epoch), []).append(ix)
        self._id_index = {d.doc_id: ix for ix, d in enumerate(documents)}

    def __len__(self) -> int:
        return self.D

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Corpus)
            and self.vocab == other.vocab
            and self.users == other.users
            and self.epoch_length == other.epoch_length
            and self.origin == other.origin
            and self.documents == other.documents
        )

    def doc_by_id(self, doc_id: str) -> Document:
        try:
            return self.documents[self._id_index[doc_id]]
        except KeyError:
            raise KeyError(f"unknown doc_id {doc_id!r}") from None

    def docs_of_user(self, user_ix: int) -> list[int]:
        return [ix for ix in range(self.D) if self.doc_user[ix] == user_ix]

    def epoch_bounds(self, epoch: int) -> tuple[int, int]:
        """Inclusive start / exclusive end timestamps of an epoch."""
        start = self.origin + epoch * self.epoch_length
        return start, start + self.epoch_length


def _load_stop_list(path: str | None) -> set[str]:
    if path is None:
        return set()
    with open(path, "r", encoding="utf-8") as fh:
        return {line.strip() for line in fh if line.strip() and not line.startswith("#")}


def corpus_from_records(records: list[DocumentRecord], config: IngestConfig | None = None) -> Corpus:
    """Build a Corpus from in-memory records.

    Tokens on the stop list are removed, the vocabulary is built from the
    survivors with the min_count threshold, and documents that end up with
    no in-vocabulary tokens are dropped (counted, with a warning).
    """
    config = config or IngestConfig()
    if not records:
        raise DataError("no records in input")
    seen: set[str] = set()
    for rec in records:
        if rec.doc_id in seen:
            raise DataError(f"duplicate doc_id {rec.doc_id!r}")
        seen.add(rec.doc_id)
    stops = _load_stop_list(config.stop_list)
    if stops:
        filtered = [
            DocumentRecord(r.doc_id, r.user_id, r.ts, [w for w in r.tokens if w not in stops], r.gold_pie)
            for r in records
        ]
    else:
        filtered = records
    vocab = build_vocabulary(filtered, config.min_count)

    kept_rows: list[tuple[DocumentRecord, DocumentRecord, np.ndarray]] = []
    n_dropped = 0
    for raw, rec in zip(records, filtered):
        ids = np.array([vocab.word2id[w] for w in rec.tokens if w in vocab.word2id], dtype=np.int64)
        if ids.size == 0:
            n_dropped += 1
            continue
        kept_rows.append((raw, rec, ids))
    if n_dropped:
        log.warning("dropped %d document(s) with no in-vocabulary tokens", n_dropped)
    if not kept_rows:
        raise DataError("every document was dropped by vocabulary filtering")

    ts = np.array([raw.ts for raw, _, _ in kept_rows], dtype=np.int64)
    origin = int(ts.min()) if config.origin is None else int(config.origin)
    epochs = assign_epochs(ts, config.epoch_length, origin)

    users = sorted({raw.user_id for raw, _, _ in kept_rows})
    user_index = {u: i for i, u in enumerate(users)}

    documents = []
    for (raw, rec, ids), epoch in zip(kept_rows, epochs):
        word_ids, word_cts = np.unique(ids, return_counts=True)
        documents.append(Document(
            doc_id=raw.doc_id,
            user_id=raw.user_id,
            user_ix=user_index[raw.user_id],
            ts=raw.ts,
            epoch=int(epoch),
            tokens=list(raw.tokens),
            token_ids=ids,
            word_ids=word_ids.astype(np.int64),
            word_cts=word_cts.astype(np.int64),
            length=int(ids.size),
            gold_pie=raw.gold_pie,
        ))
    return Corpus(documents, vocab, users, config.epoch_length, origin, n_dropped)


def ingest(path: str, config: IngestConfig | None = None) -> Corpus:
    """Read a record file and build a Corpus."""
    return corpus_from_records(read_records(path), config)


def to_records(corpus: Corpus) -> list[DocumentRecord]:
    """Export a Corpus back to raw records (original tokens are preserved)."""
    return [
        DocumentRecord(d.doc_id, d.user_id, d.ts, list(d.tokens), d.gold_pie)
        for d in corpus.documents
    ]


def fingerprint(corpus: Corpus) -> str:
    """Stable content hash, used to pair model outputs with their corpus."""
    h = hashlib.sha256()
    for d in corpus.documents:
        h.update(json.dumps([d.doc_id, d.user_id, d.ts, d.tokens],
                            separators=(",", ":")).encode())
        h.update(b"\n")
    return h.hexdigest()[:16]


def restrict_to_user(corpus: Corpus, user_id: str) -> Corpus:
    """One user's stream as its own corpus.

    The vocabulary, epoch grid and origin are kept so topic and epoch ids
    stay comparable with the full corpus.
    """
    if user_id not in corpus.user_index:
        raise KeyError(f"unknown user {user_id!r}")
    docs = []
    for d in corpus.documents:
        if d.user_id != user_id:
            continue
        docs.append(Document(
            doc_id=d.doc_id, user_id=d.user_id, user_ix=0, ts=d.ts,
            epoch=d.epoch, tokens=list(d.tokens), token_ids=d.token_ids,
            word_ids=d.word_ids, word_cts=d.word_cts, length=d.length,
            gold_pie=d.gold_pie))
    return Corpus(docs, corpus.vocab, [user_id], corpus.epoch_length,
                  corpus.origin, n_dropped=0)
