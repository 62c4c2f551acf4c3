"""Tokenizer, counting, merging, and file readers."""

import gzip
import random

import pytest

import perturbmine as pm
from perturbmine import TokenCounts, TokenRecord, WordView, ingest, merge, read_corpus, tokenize
from perturbmine.errors import FormatError, IoFailure


def test_tokenize_goldens():
    assert tokenize("the demokRATs are dirrrty") == ["the", "demokRATs", "are", "dirrrty"]
    assert tokenize("de-pres-sion.") == ["de-pres-sion"]
    assert tokenize("12 34") == []
    assert tokenize("") == []


def test_tokenize_strips_edge_punctuation_only():
    assert tokenize('"hello," she said.') == ["hello", "she", "said"]
    assert tokenize("(parens) [brackets] {braces}") == ["parens", "brackets", "braces"]
    # internal symbols survive
    assert tokenize("user@example you+me sh•t") == ["user@example", "you+me", "sh•t"]


def test_tokenize_keeps_case_and_digits_with_letters():
    assert tokenize("DemoKRats p0rn stup!d") == ["DemoKRats", "p0rn", "stup!d"]


def test_ingest_two_caption_sentences():
    counts = ingest([
        "the democrats arre not dirty",
        "the demokRATs are dirrrty",
    ])
    records = counts.records()
    # eight distinct surface forms, nine occurrences, "the" counted twice
    assert len(records) == 8
    assert counts.total_frequency() == 9
    by_token = {r.token: r for r in records}
    assert by_token["the"].frequency == 2
    assert by_token["the"].sources == 2
    assert by_token["democrats"].frequency == 1
    assert by_token["demokRATs"].sources == 1


def test_ingest_empty_stream():
    assert ingest([]).records() == []


def test_ingest_thousand_copies():
    counts = ingest(["spam and eggs"] * 1000)
    by_token = {r.token: r for r in counts.records()}
    for token in ("spam", "and", "eggs"):
        assert by_token[token].frequency == 1000
        # plain lines count each stream position as its own source
        assert by_token[token].sources == 1000


def test_ingest_with_explicit_source_ids():
    counts = ingest([("good stuff", "alice"), ("good grief", "alice"), ("good day", "bob")])
    by_token = {r.token: r for r in counts.records()}
    assert by_token["good"].frequency == 3
    assert by_token["good"].sources == 2


def test_record_invariants_fuzz():
    rng = random.Random(0xC0)
    vocab = ["alpha", "beta", "Gamma", "delta-x", "e9g"]
    lines = []
    for i in range(200):
        text = " ".join(rng.choices(vocab, k=rng.randint(1, 6)))
        lines.append((text, f"src{rng.randint(0, 20)}"))
    counts = ingest(lines)
    total = sum(len(tokenize(text)) for text, _ in lines)
    assert counts.total_frequency() == total
    for record in counts.records():
        assert record.frequency >= record.sources >= 1
        assert any(c.isalpha() for c in record.token)


def test_merge_matches_single_ingest():
    rng = random.Random(0x5EED)
    vocab = ["one", "two", "three", "FOUR", "f!ve"]
    lines = [
        (" ".join(rng.choices(vocab, k=4)), f"s{rng.randint(0, 9)}")
        for _ in range(120)
    ]
    whole = ingest(lines)
    for cut in (0, 1, 40, 119, 120):
        left, right = ingest(lines[:cut]), ingest(lines[cut:])
        assert merge([left, right]) == whole


def test_token_counts_update_accumulates():
    a = ingest([("x y", "s1")])
    b = ingest([("y z", "s2")])
    a.update(b)
    by_token = {r.token: r for r in a.records()}
    assert by_token["y"].frequency == 2
    assert by_token["y"].sources == 2
    assert set(by_token) == {"x", "y", "z"}


def test_records_sorted_by_token():
    counts = ingest(["zebra apple Mango"])
    assert [r.token for r in counts.records()] == sorted(["zebra", "apple", "Mango"])


def test_read_corpus_plain_and_gzip(tmp_path):
    plain = tmp_path / "corpus.txt"
    plain.write_text("first line\nsecond line\n", encoding="utf-8")
    assert ingest(read_corpus(plain)).total_frequency() == 4

    zipped = tmp_path / "corpus.txt.gz"
    with gzip.open(zipped, "wt", encoding="utf-8") as fh:
        fh.write("first line\nsecond line\n")
    assert ingest(read_corpus(zipped)) == ingest(read_corpus(plain))


def test_read_corpus_tsv(tmp_path):
    path = tmp_path / "corpus.tsv"
    path.write_text("nice try\tu1\nnice one\tu1\nnice job\tu2\n", encoding="utf-8")
    counts = ingest(read_corpus(path, tsv=True))
    by_token = {r.token: r for r in counts.records()}
    assert by_token["nice"].frequency == 3
    assert by_token["nice"].sources == 2


def test_read_corpus_tsv_bad_row(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("no tab here\n", encoding="utf-8")
    with pytest.raises(FormatError):
        ingest(read_corpus(path, tsv=True))


def test_read_corpus_missing_file(tmp_path):
    with pytest.raises(IoFailure):
        list(read_corpus(tmp_path / "nope.txt"))


class TestWordView:
    def test_round_trips_whitespace(self):
        text = "  keep\tthese   gaps \n"
        view = WordView(text)
        assert view.text() == text

    def test_core_and_replace(self):
        view = WordView('she said "hello," loudly')
        cores = [view.core(i) for i in range(len(view))]
        assert cores == ["she", "said", "hello", "loudly"]
        view.replace_core(2, "goodbye")
        assert view.text() == 'she said "goodbye," loudly'

    def test_preview_does_not_mutate(self):
        view = WordView("a b c")
        assert view.preview(1, "X") == "a X c"
        assert view.text() == "a b c"

    def test_without_removes_word(self):
        view = WordView("one two three")
        assert view.without(1).split() == ["one", "three"]
        assert view.text() == "one two three"

    def test_every_nonspace_chunk_is_a_position(self):
        # letterless chunks stay addressable; callers filter with contains_letter
        view = WordView("go 123 stop")
        assert [view.core(i) for i in range(len(view))] == ["go", "123", "stop"]
        assert [pm.contains_letter(view.core(i)) for i in range(len(view))] == [True, False, True]
