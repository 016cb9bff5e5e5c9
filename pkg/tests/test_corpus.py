import json

import numpy as np
import pytest

from pietimeline import (
    DataError,
    DocumentRecord,
    IngestConfig,
    assign_epochs,
    build_vocabulary,
    corpus_from_records,
    ingest,
    read_records,
    to_records,
    write_records,
)
from pietimeline.corpus import WEEK_SECONDS, parse_record_line

from conftest import WEEK, rec


def test_parse_roundtrip_line():
    line = json.dumps({"doc_id": "d1", "user_id": "u1", "ts": 42, "tokens": ["a", "b"]})
    r = parse_record_line(line, 1)
    assert (r.doc_id, r.user_id, r.ts, r.tokens) == ("d1", "u1", 42, ["a", "b"])
    assert r.gold_pie is None


def test_parse_missing_field_names_line():
    line = json.dumps({"doc_id": "d1", "ts": 0, "tokens": ["a"]})
    with pytest.raises(DataError, match="line 2: missing field user_id"):
        parse_record_line(line, 2)


def test_parse_malformed_json():
    with pytest.raises(DataError, match="line 3: malformed record"):
        parse_record_line("{not json", 3)


def test_parse_rejects_bool_timestamp():
    line = json.dumps({"doc_id": "d", "user_id": "u", "ts": True, "tokens": ["a"]})
    with pytest.raises(DataError, match="ts must be integer seconds"):
        parse_record_line(line, 1)


def test_parse_rejects_nonstring_tokens():
    line = json.dumps({"doc_id": "d", "user_id": "u", "ts": 0, "tokens": ["a", 3]})
    with pytest.raises(DataError, match="tokens must be a list of strings"):
        parse_record_line(line, 1)


def test_read_write_records(tmp_path):
    records = [
        rec("d1", "u1", 0, ["a", "b"]),
        rec("d2", "u2", 5, ["c"], gold_pie="wedding"),
    ]
    path = tmp_path / "corpus.jsonl"
    write_records(records, str(path), header="demo corpus")
    text = path.read_text()
    assert text.startswith("#")
    assert read_records(str(path)) == records


def test_read_skips_blank_and_comment_lines(tmp_path):
    path = tmp_path / "c.jsonl"
    body = json.dumps({"doc_id": "d1", "user_id": "u", "ts": 0, "tokens": ["a"]})
    path.write_text(f"# header\n\n{body}\n\n")
    assert len(read_records(str(path))) == 1


def test_ingest_three_lines(tmp_path):
    records = [rec(f"d{i}", "u", i, ["a", "b"]) for i in range(3)]
    path = tmp_path / "c.jsonl"
    write_records(records, str(path))
    corpus = ingest(str(path), IngestConfig(min_count=1))
    assert corpus.D == 3


def test_below_min_count_doc_dropped():
    records = [
        rec("d1", "u", 0, ["common", "common", "rare"]),
        rec("d2", "u", 1, ["common"]),
        rec("d3", "u", 2, ["solo"]),
    ]
    corpus = corpus_from_records(records, IngestConfig(min_count=2))
    assert corpus.n_dropped == 1
    assert corpus.D == 2
    assert corpus.V == 1


def test_duplicate_doc_id_rejected():
    records = [rec("d1", "u", 0, ["a"]), rec("d1", "u", 1, ["b"])]
    with pytest.raises(DataError, match="duplicate doc_id"):
        corpus_from_records(records)


def test_empty_input_rejected():
    with pytest.raises(DataError, match="no records"):
        corpus_from_records([])


def test_all_docs_filtered_rejected():
    records = [rec("d1", "u", 0, ["a"]), rec("d2", "u", 1, ["b"])]
    with pytest.raises(DataError, match="vocabulary is empty"):
        corpus_from_records(records, IngestConfig(min_count=3))


def test_stop_list(tmp_path):
    stops = tmp_path / "stops.txt"
    stops.write_text("the\nof\n")
    records = [rec("d1", "u", 0, ["the", "cat"]), rec("d2", "u", 1, ["of", "the"])]
    corpus = corpus_from_records(records, IngestConfig(stop_list=str(stops)))
    assert corpus.V == 1
    assert corpus.n_dropped == 1


# ----- vocabulary -----------------------------------------------------------

def test_vocab_threshold():
    records = [rec("d1", "u", 0, ["a", "a", "a", "b"])]
    v = build_vocabulary(records, min_count=2)
    assert v.size == 1 and v.get("a") == 0 and v.get("b") is None


def test_vocab_identity_min_count_one():
    records = [rec("d1", "u", 0, ["a", "b", "c", "a"])]
    assert build_vocabulary(records, 1).size == 3


def test_vocab_tie_break_lexicographic():
    records = [rec("d1", "u", 0, ["y", "x", "y", "x"])]
    v = build_vocabulary(records, 1)
    assert v.get("x") == 0 and v.get("y") == 1


def test_vocab_ids_dense_by_frequency():
    records = [rec("d1", "u", 0, ["b", "b", "b", "a", "a", "c"])]
    v = build_vocabulary(records, 1)
    assert [v.id2word[j] for j in range(3)] == ["b", "a", "c"]


# ----- epochs ---------------------------------------------------------------

def test_epoch_floor_arithmetic():
    out = assign_epochs(np.array([13 * 86400]), WEEK_SECONDS, origin=0)
    assert out.tolist() == [1]


def test_epoch_637_days_spans_91_weeks():
    ts = np.array([0, 637 * 86400 - 1])
    out = assign_epochs(ts, WEEK_SECONDS, origin=0)
    assert out.max() + 1 == 91


def test_epoch_boundary_is_zero():
    assert assign_epochs(np.array([1000]), WEEK_SECONDS, origin=1000).tolist() == [0]


def test_epoch_before_origin_rejected():
    with pytest.raises(DataError, match="precedes origin"):
        assign_epochs(np.array([5]), WEEK_SECONDS, origin=10)


def test_epoch_length_positive():
    with pytest.raises(ValueError):
        assign_epochs(np.array([0]), 0, origin=0)


# ----- corpus structure -----------------------------------------------------

def test_cells_partition_documents(small_corpus):
    total = sum(len(ds) for ds in small_corpus.cells.values())
    assert total == small_corpus.D
    for d, doc in enumerate(small_corpus.documents):
        assert d in small_corpus.cells[(doc.user_ix, doc.epoch)]
        assert doc.word_ids.max() < small_corpus.V
        assert doc.word_cts.sum() == doc.length


def test_ingest_deterministic(tmp_path):
    records = [rec(f"d{i}", f"u{i % 2}", i * WEEK, ["a", "b", "c"]) for i in range(6)]
    path = tmp_path / "c.jsonl"
    write_records(records, str(path))
    assert ingest(str(path)) == ingest(str(path))


def test_round_trip(tiny_corpus):
    again = corpus_from_records(to_records(tiny_corpus), IngestConfig())
    assert again == tiny_corpus


def test_doc_by_id(tiny_corpus):
    assert tiny_corpus.doc_by_id("a1").user_id == "alice"
    with pytest.raises(KeyError):
        tiny_corpus.doc_by_id("nope")


def test_gold_pie_survives_round_trip():
    records = [rec("d1", "u", 0, ["a", "b"], gold_pie="wedding"),
               rec("d2", "u", 1, ["b"])]
    corpus = corpus_from_records(records)
    assert corpus.doc_by_id("d1").gold_pie == "wedding"
    assert to_records(corpus)[0].gold_pie == "wedding"
