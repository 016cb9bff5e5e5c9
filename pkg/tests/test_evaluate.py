"""Event recall, tweet precision/recall, topic matching, and the report."""

import json

import numpy as np
import pytest
from sklearn.metrics import adjusted_rand_score

from pietimeline.errors import DataError
from pietimeline.evaluate import (GoldTimeline, adjusted_rand_index,
                                  event_recall, evaluate_run,
                                  gold_from_events, match_topics,
                                  pie_predicted_docs, read_gold_timeline,
                                  render_report, tweet_prf, write_report)

from test_timeline import (CELEB_EPOCHS, build_corpus, delta_row,
                           make_summary, three_event_fixture)


def gold_of(*rows):
    gold = GoldTimeline()
    for user_id, name, doc_id in rows:
        gold.add(user_id, name, doc_id)
    return gold


# ----- gold files -------------------------------------------------------------


class TestGoldTimeline:
    def test_read_skips_comments_and_accumulates(self, tmp_path):
        path = tmp_path / "gold.tsv"
        path.write_text("# header\n"
                        "u0\tmarathon\td001\n"
                        "\n"
                        "u0\tmarathon\td002\n"
                        "u1\twedding\td009\n")
        gold = read_gold_timeline(str(path))
        assert gold.events == {"u0": {"marathon": {"d001", "d002"}},
                               "u1": {"wedding": {"d009"}}}
        assert gold.n_events() == 2
        assert gold.gold_docs() == {"d001", "d002", "d009"}

    def test_read_rejects_malformed_line(self, tmp_path):
        path = tmp_path / "gold.tsv"
        path.write_text("u0\ta\td1\nu0 a d2\n")
        with pytest.raises(DataError, match="gold line 2"):
            read_gold_timeline(str(path))

    def test_read_rejects_empty_event_name(self, tmp_path):
        path = tmp_path / "gold.tsv"
        path.write_text("u0\t\td1\n")
        with pytest.raises(DataError, match="empty event name"):
            read_gold_timeline(str(path))

    def test_validate_rejects_unknown_doc(self):
        corpus, _ = three_event_fixture()
        with pytest.raises(DataError, match="not in corpus"):
            gold_of(("star", "e0", "d999")).validate(corpus)

    def test_validate_rejects_empty_event(self):
        gold = GoldTimeline({"u0": {"e0": set()}})
        with pytest.raises(DataError, match="has no documents"):
            gold.validate()

    def test_gold_from_generator_events(self):
        events = {"u0": [{"name": "e0", "topic": 3, "epoch": 1,
                          "doc_ids": ["d1", "d2"]}],
                  "u1": [{"name": "e1", "topic": 4, "epoch": 2,
                          "doc_ids": ["d7"]}]}
        gold = gold_from_events(events)
        assert gold.events == {"u0": {"e0": {"d1", "d2"}},
                               "u1": {"e1": {"d7"}}}


# ----- event recall -----------------------------------------------------------


class TestEventRecall:
    def test_half_of_events_hit(self):
        gold = gold_of(("u", "A", "t1"), ("u", "A", "t2"), ("u", "B", "t3"))
        assert event_recall({"t2"}, gold) == 0.5

    def test_empty_prediction_scores_zero(self):
        gold = gold_of(("u", "A", "t1"))
        assert event_recall(set(), gold) == 0.0

    def test_superset_prediction_scores_one(self):
        gold = gold_of(("u", "A", "t1"), ("v", "B", "t3"))
        assert event_recall({"t1", "t2", "t3"}, gold) == 1.0

    def test_empty_gold_rejected(self):
        with pytest.raises(DataError, match="no events"):
            event_recall({"t1"}, GoldTimeline())

    def test_monotone_in_predicted_set(self):
        rng = np.random.default_rng(0)
        docs = [f"d{j}" for j in range(30)]
        gold = GoldTimeline()
        for e in range(6):
            for doc in rng.choice(docs, size=3, replace=False):
                gold.add("u", f"e{e}", str(doc))
        predicted = set()
        last = 0.0
        for doc in docs:
            predicted.add(doc)
            cur = event_recall(predicted, gold)
            assert cur >= last
            last = cur
        assert last == 1.0


# ----- tweet precision / recall -----------------------------------------------


class TestTweetPrf:
    def test_half_overlap(self):
        assert tweet_prf({"t1", "t2"}, {"t2", "t3"}) == (0.5, 0.5, 0.5)

    def test_exact_match(self):
        assert tweet_prf({"t1", "t2"}, {"t1", "t2"}) == (1.0, 1.0, 1.0)

    def test_empty_prediction_convention(self):
        assert tweet_prf(set(), {"t1"}) == (0.0, 0.0, 0.0)

    def test_empty_gold_convention(self):
        assert tweet_prf({"t1"}, set()) == (0.0, 0.0, 0.0)

    def test_adding_true_positives_keeps_precision(self):
        gold = {f"d{j}" for j in range(10)}
        predicted = {"d0", "x0"}
        p0 = tweet_prf(predicted, gold)[0]
        assert p0 == 0.5
        r_last = tweet_prf(predicted, gold)[1]
        for j in range(1, 10):
            predicted.add(f"d{j}")
            p, r, _ = tweet_prf(predicted, gold)
            assert p >= p0 and r >= r_last
            r_last = r
        assert r_last == 1.0


# ----- topic matching ---------------------------------------------------------


class TestMatchTopics:
    def test_identical_partitions(self):
        labels = np.array([3, 3, 7, 7, 7, 2])
        mapping, ari = match_topics(labels, labels)
        assert mapping == {2: 2, 3: 3, 7: 7}
        assert ari == pytest.approx(1.0)

    def test_hand_contingency_mapping(self):
        mapping, _ = match_topics([0, 0, 1, 1, 2], [5, 5, 7, 7, 7])
        assert mapping == {0: 5, 1: 7}

    def test_permutation_leaves_ari_unchanged(self):
        rng = np.random.default_rng(1)
        truth = rng.integers(0, 6, size=200)
        pred = rng.integers(0, 6, size=200)
        perm = rng.permutation(6)
        _, a0 = match_topics(pred, truth)
        _, a1 = match_topics(perm[pred], truth)
        assert a0 == pytest.approx(a1, abs=1e-12)

    def test_length_mismatch_rejected(self):
        with pytest.raises(DataError, match="differ in length"):
            match_topics([0, 1], [0, 1, 2])

    def test_ari_matches_external_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = int(rng.integers(5, 200))
            ka = int(rng.integers(1, 8))
            kb = int(rng.integers(1, 8))
            a = rng.integers(0, ka, size=n)
            b = rng.integers(0, kb, size=n)
            assert adjusted_rand_index(a, b) == pytest.approx(
                adjusted_rand_score(a, b), abs=1e-12)

    def test_ari_trivial_partitions(self):
        assert adjusted_rand_index(np.zeros(5), np.zeros(5)) == 1.0
        assert adjusted_rand_index(np.arange(5), np.arange(5)) == 1.0

    def test_random_labels_score_near_zero(self):
        rng = np.random.default_rng(11)
        scores = []
        for _ in range(100):
            truth = rng.integers(0, 10, size=1000)
            pred = rng.integers(0, 10, size=1000)
            scores.append(adjusted_rand_index(pred, truth))
        scores = np.array(scores)
        se = scores.std(ddof=1) / np.sqrt(scores.size)
        assert abs(scores.mean()) < 3 * se


# ----- predicted event documents ----------------------------------------------


class TestPiePredictedDocs:
    def test_ordinary_mode_is_modal_person_ts(self):
        corpus, summary = three_event_fixture()
        predicted = pie_predicted_docs(summary, corpus)
        assert predicted == {f"d{n:03d}" for n in range(30)}

    def test_unlabeled_summary_rejected(self):
        corpus, summary = three_event_fixture()
        summary.y_labeled = False
        with pytest.raises(DataError, match="does not label y"):
            pie_predicted_docs(summary, corpus)

    def test_unknown_mode_rejected(self):
        corpus, summary = three_event_fixture()
        with pytest.raises(ValueError, match="unknown evaluation mode"):
            pie_predicted_docs(summary, corpus, mode="both")

    def test_celebrity_mode_without_names_matches_ordinary(self):
        corpus, summary = three_event_fixture()
        assert (pie_predicted_docs(summary, corpus, mode="celebrity")
                == pie_predicted_docs(summary, corpus))

    def test_celebrity_mode_adds_accepted_cluster_docs(self):
        specs = [("star", 0, e, ["w0"] * 6) for e in CELEB_EPOCHS]
        good_lo = len(specs)
        specs += [("fan", 1, e, ["w0"] * 5 + ["star"]) for e in CELEB_EPOCHS]
        far_lo = len(specs)
        specs += [("fan", 1, e, ["w3"] * 5 + ["star"]) for e in CELEB_EPOCHS * 3]
        corpus = build_corpus(specs, 4, ["star", "fan"])
        D = len(specs)
        modal_x = [1] * 10 + [0] * (D - 10)
        modal_y = [1] * D
        modal_z = ([5] * 10 + [20] * (far_lo - good_lo) + [23] * (D - far_lo))
        rows = {5: delta_row(4, 0), 20: delta_row(4, 0, 40.0),
                23: delta_row(4, 3, 40.0)}
        summary = make_summary(corpus, modal_x, modal_y, modal_z, rows)

        star_docs = {f"d{n:03d}" for n in range(10)}
        good_docs = {f"d{n:03d}" for n in range(good_lo, far_lo)}
        assert pie_predicted_docs(summary, corpus) == star_docs
        celeb = pie_predicted_docs(summary, corpus, mode="celebrity",
                                   names_by_user={"star": ["star"]})
        assert celeb == star_docs | good_docs


# ----- full evaluation and report ----------------------------------------------


class TestEvaluateRun:
    def run(self):
        corpus, summary = three_event_fixture()
        gold = gold_of(("star", "e0", "d000"), ("star", "e0", "d001"),
                       ("star", "e1", "d010"), ("fan", "f0", "d030"))
        return evaluate_run(summary, corpus, gold)

    def test_exact_corpus_level_metrics(self):
        m = self.run()
        assert m["n_predicted"] == 30 and m["n_gold_docs"] == 4
        assert m["event_recall"] == pytest.approx(2 / 3)
        assert m["precision"] == pytest.approx(3 / 30)
        assert m["recall"] == pytest.approx(3 / 4)
        assert m["f1"] == pytest.approx(2 * 0.1 * 0.75 / 0.85)

    def test_per_user_breakdown(self):
        m = self.run()
        star = m["per_user"]["star"]
        assert star["event_recall"] == 1.0 and star["n_events"] == 2
        assert star["recall"] == 1.0 and star["precision"] == pytest.approx(0.1)
        fan = m["per_user"]["fan"]
        assert fan == {"event_recall": 0.0, "n_events": 1,
                       "precision": 0.0, "recall": 0.0, "f1": 0.0}

    def test_gold_must_match_corpus(self):
        corpus, summary = three_event_fixture()
        with pytest.raises(DataError, match="not in corpus"):
            evaluate_run(summary, corpus, gold_of(("star", "e0", "zzz")))

    def test_report_mentions_reference_scores(self):
        text = render_report(self.run())
        assert "0.927" in text and "0.742" in text
        assert "not reproducible" in text
        assert "event recall: 0.667" in text

    def test_report_files_round_trip(self, tmp_path):
        m = self.run()
        txt, js = tmp_path / "report.txt", tmp_path / "report.json"
        write_report(m, str(txt), str(js))
        assert txt.read_text() == render_report(m)
        assert json.loads(js.read_text()) == m
