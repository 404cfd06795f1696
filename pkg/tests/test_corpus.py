import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import build_corpus, write_official_shaped_files, write_source_csv
from sarcens.corpus import (
    Corpus,
    Example,
    load_corpus,
    load_isarcasm,
    merge_and_balance,
    origin_counts,
    save_corpus,
    stratified_split,
)


class TestExample:
    def test_label_must_be_binary(self):
        with pytest.raises(ValueError, match="label"):
            Example(id="x", text_source="t", label=2, origin_split="orig_train")

    def test_text_must_be_non_empty(self):
        with pytest.raises(ValueError, match="text_source"):
            Example(id="x", text_source="", label=0, origin_split="orig_train")

    def test_duplicate_ids_rejected(self):
        ex = Example(id="x", text_source="t", label=0, origin_split="orig_train")
        with pytest.raises(ValueError, match="duplicate"):
            Corpus((ex, ex))

    def test_metadata_count_mismatch_rejected(self):
        ex = Example(id="x", text_source="t", label=0, origin_split="orig_train")
        with pytest.raises(ValueError, match="does not match"):
            Corpus((ex,), {"n_sarcastic": 3})


class TestLoadIsarcasm:
    def test_official_split_counts(self, tmp_path):
        train_path, test_path = write_official_shaped_files(tmp_path)
        corpus = load_isarcasm(train_path, test_path)
        counts = origin_counts(corpus)
        assert counts["orig_train"] == {1: 867, 0: 2601}
        assert counts["orig_test"] == {1: 200, 0: 1200}
        assert len(corpus) == 4868

    def test_empty_files(self, tmp_path):
        train = tmp_path / "train.csv"
        test = tmp_path / "test.csv"
        train.write_text("")
        test.write_text("")
        corpus = load_isarcasm(train, test)
        assert len(corpus) == 0
        assert corpus.n_sarcastic == 0 and corpus.n_not_sarcastic == 0

    def test_single_sarcastic_row(self, tmp_path):
        train = write_source_csv(tmp_path / "train.csv", [("so fun", 1)])
        test = tmp_path / "test.csv"
        test.write_text("")
        corpus = load_isarcasm(train, test)
        assert corpus.n_sarcastic == 1 and corpus.n_not_sarcastic == 0
        assert corpus.examples[0].id == "orig_train:0"

    def test_malformed_label_names_line(self, tmp_path):
        train = write_source_csv(tmp_path / "train.csv", [("ok", 1), ("bad", 7)])
        test = tmp_path / "test.csv"
        test.write_text("")
        with pytest.raises(ValueError, match=r"train\.csv:3"):
            load_isarcasm(train, test)

    def test_missing_text_names_line(self, tmp_path):
        train = write_source_csv(tmp_path / "train.csv", [("", 1)])
        test = tmp_path / "test.csv"
        test.write_text("")
        with pytest.raises(ValueError, match=r"train\.csv:2"):
            load_isarcasm(train, test)

    def test_missing_columns_rejected(self, tmp_path):
        train = tmp_path / "train.csv"
        train.write_text("tweet,label\nhi,1\n")
        test = tmp_path / "test.csv"
        test.write_text("")
        with pytest.raises(ValueError, match="expected columns"):
            load_isarcasm(train, test)

    def test_jsonl_input(self, tmp_path):
        train = tmp_path / "train.jsonl"
        train.write_text(
            json.dumps({"text": "line one", "sarcastic": 1}) + "\n"
            + json.dumps({"text": "line two", "sarcastic": 0}) + "\n"
        )
        test = tmp_path / "test.jsonl"
        test.write_text("")
        corpus = load_isarcasm(train, test)
        assert corpus.n_sarcastic == 1 and corpus.n_not_sarcastic == 1

    def test_text_preserved_byte_for_byte(self, tmp_path):
        tricky = "CHECK this out!! 🙃🙃\nsecond line  https://example.com"
        train = write_source_csv(tmp_path / "train.csv", [(tricky, 1)])
        test = tmp_path / "test.csv"
        test.write_text("")
        corpus = load_isarcasm(train, test)
        assert corpus.examples[0].text_source == tricky


class TestMergeAndBalance:
    def test_official_counts_balance_to_2134(self, tmp_path):
        train_path, test_path = write_official_shaped_files(tmp_path)
        corpus = load_isarcasm(train_path, test_path)
        for seed in (0, 7, 123456):
            balanced = merge_and_balance(corpus, seed)
            assert len(balanced) == 2134
            assert balanced.n_sarcastic == 1067
            assert balanced.n_not_sarcastic == 1067

    def test_keeps_every_sarcastic_id(self):
        corpus = build_corpus(5, 20)
        balanced = merge_and_balance(corpus, seed=3)
        sarcastic_ids = {ex.id for ex in corpus if ex.label == 1}
        assert sarcastic_ids <= {ex.id for ex in balanced}

    def test_already_balanced_is_identity(self):
        corpus = build_corpus(4, 4)
        balanced = merge_and_balance(corpus, seed=11)
        assert [ex.id for ex in balanced] == [ex.id for ex in corpus]

    def test_same_seed_same_ids(self):
        corpus = build_corpus(6, 30)
        first = merge_and_balance(corpus, seed=42)
        second = merge_and_balance(corpus, seed=42)
        assert [ex.id for ex in first] == [ex.id for ex in second]

    def test_seed_recorded_in_metadata(self):
        balanced = merge_and_balance(build_corpus(2, 5), seed=9)
        assert balanced.metadata["seed"] == 9

    def test_no_sarcastic_rejected(self):
        with pytest.raises(ValueError, match="no sarcastic"):
            merge_and_balance(build_corpus(0, 5), seed=0)

    def test_too_few_non_sarcastic_rejected(self):
        with pytest.raises(ValueError, match="cannot balance"):
            merge_and_balance(build_corpus(5, 3), seed=0)

    @given(n_sarcastic=st.integers(1, 30), extra=st.integers(0, 40), seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=200, deadline=None)
    def test_property_balanced_and_complete(self, n_sarcastic, extra, seed):
        corpus = build_corpus(n_sarcastic, n_sarcastic + extra)
        balanced = merge_and_balance(corpus, seed)
        assert balanced.n_sarcastic == balanced.n_not_sarcastic == n_sarcastic
        assert {ex.id for ex in corpus if ex.label == 1} <= {ex.id for ex in balanced}


class TestStratifiedSplit:
    def test_apportionment_2134(self):
        corpus = build_corpus(1067, 1067)
        assigned = stratified_split(corpus, (0.8, 0.1, 0.1), seed=0)
        sizes = {s: len(assigned.subset(s)) for s in ("train", "val", "test")}
        assert sizes == {"train": 1708, "val": 213, "test": 213}

    def test_each_split_nearly_balanced(self):
        corpus = build_corpus(1067, 1067)
        assigned = stratified_split(corpus, (0.8, 0.1, 0.1), seed=5)
        for split in ("train", "val", "test"):
            members = assigned.subset(split)
            ones = sum(ex.label for ex in members)
            assert abs(ones - (len(members) - ones)) <= 1

    def test_zero_ratio_rejected(self):
        corpus = build_corpus(10, 10)
        with pytest.raises(ValueError, match="positive"):
            stratified_split(corpus, (1.0, 0.0, 0.0), seed=0)

    def test_ratios_must_sum_to_one(self):
        corpus = build_corpus(10, 10)
        with pytest.raises(ValueError, match="sum to 1"):
            stratified_split(corpus, (0.5, 0.2, 0.2), seed=0)

    def test_empty_split_rejected(self):
        corpus = build_corpus(2, 2)
        with pytest.raises(ValueError, match="0 examples"):
            stratified_split(corpus, (0.8, 0.1, 0.1), seed=0)

    def test_unbalanced_corpus_rejected(self):
        corpus = build_corpus(8, 4)
        with pytest.raises(ValueError, match="balanced"):
            stratified_split(corpus, (0.6, 0.2, 0.2), seed=0)

    def test_deterministic_for_fixed_seed(self):
        corpus = build_corpus(50, 50)
        first = stratified_split(corpus, (0.6, 0.2, 0.2), seed=21)
        second = stratified_split(corpus, (0.6, 0.2, 0.2), seed=21)
        assert [(ex.id, ex.split) for ex in first] == [(ex.id, ex.split) for ex in second]

    @given(n_per_class=st.integers(3, 60), seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=200, deadline=None)
    def test_property_disjoint_and_exhaustive(self, n_per_class, seed):
        corpus = build_corpus(n_per_class, n_per_class)
        assigned = stratified_split(corpus, (0.6, 0.2, 0.2), seed=seed)
        buckets = {"train": set(), "val": set(), "test": set()}
        for ex in assigned:
            buckets[ex.split].add(ex.id)
        union = buckets["train"] | buckets["val"] | buckets["test"]
        assert union == {ex.id for ex in corpus}
        assert sum(len(b) for b in buckets.values()) == len(corpus)


class TestSerialization:
    def test_round_trip_bytes_identical(self, tmp_path):
        corpus = stratified_split(build_corpus(6, 6), (0.5, 0.25, 0.25), seed=4)
        path = tmp_path / "corpus.jsonl"
        save_corpus(corpus, path)
        first = path.read_bytes()
        meta_first = (tmp_path / "corpus.jsonl.meta.json").read_bytes()
        reloaded = load_corpus(path)
        save_corpus(reloaded, path)
        assert path.read_bytes() == first
        assert (tmp_path / "corpus.jsonl.meta.json").read_bytes() == meta_first

    def test_record_keys_exact(self, tmp_path):
        corpus = build_corpus(1, 1)
        path = save_corpus(corpus, tmp_path / "c.jsonl")
        record = json.loads(path.read_text().splitlines()[0])
        assert list(record) == ["id", "text_source", "text_target", "label", "origin_split", "split"]

    def test_reload_preserves_order_and_text(self, tmp_path):
        texts = ["first 🙃", "second\nwith newline", "THIRD!!", "još čšž"]
        examples = tuple(
            Example(id=f"e{i}", text_source=t, label=i % 2, origin_split="orig_test")
            for i, t in enumerate(texts)
        )
        corpus = Corpus(examples, {"source": "synthetic", "seed": 1})
        path = save_corpus(corpus, tmp_path / "c.jsonl")
        reloaded = load_corpus(path)
        assert [ex.text_source for ex in reloaded] == texts
        assert [ex.id for ex in reloaded] == [ex.id for ex in corpus]
        assert reloaded.metadata["seed"] == 1

    def test_extra_keys_rejected(self, tmp_path):
        path = tmp_path / "c.jsonl"
        record = {
            "id": "a", "text_source": "t", "text_target": None,
            "label": 1, "origin_split": "orig_train", "split": None, "oops": 1,
        }
        path.write_text(json.dumps(record) + "\n")
        with pytest.raises(ValueError, match="unexpected keys"):
            load_corpus(path)

    @given(
        texts=st.lists(
            st.text(min_size=1).filter(lambda t: t.strip()), min_size=1, max_size=8, unique=True
        )
    )
    @settings(max_examples=100, deadline=None)
    def test_property_round_trip(self, tmp_path_factory, texts):
        tmp = tmp_path_factory.mktemp("rt")
        examples = tuple(
            Example(id=f"e{i}", text_source=t, label=i % 2, origin_split="orig_train")
            for i, t in enumerate(texts)
        )
        corpus = Corpus(examples)
        path = save_corpus(corpus, tmp / "c.jsonl")
        data = path.read_bytes()
        save_corpus(load_corpus(path), path)
        assert path.read_bytes() == data
