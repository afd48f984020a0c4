import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from catseg.embeddings import (
    PAD_TOKEN,
    TranslationDictionary,
    alignment_residual,
    build_table,
    load_dictionary,
    load_embeddings_text,
    lookup,
    procrustes_align,
    project_table,
    write_embeddings_text,
)
from catseg.errors import AlignmentError, ParseError


@pytest.fixture
def two_word_file(tmp_path):
    p = tmp_path / "e.vec"
    p.write_text("2 3\na 1 0 0\nb 0 1 0\n", encoding="utf-8")
    return p


def test_load_small_file(two_word_file):
    table = load_embeddings_text(two_word_file)
    assert table.dim == 3
    assert len(table.word_rows()) == 2
    assert table.ss_id != table.pad_id


def test_oov_vector_is_mean_of_rows(two_word_file):
    table = load_embeddings_text(two_word_file)
    np.testing.assert_allclose(table.oov_vector, [0.5, 0.5, 0.0])


def test_duplicates_first_wins(tmp_path):
    p = tmp_path / "d.vec"
    p.write_text("3 2\na 1 2\na 9 9\nb 3 4\n", encoding="utf-8")
    table = load_embeddings_text(p)
    assert table.duplicates == 1
    assert table.words.count("a") == 1
    np.testing.assert_array_equal(lookup(table, "a")[1], [1, 2])


def test_count_limits_entries(tmp_path):
    p = tmp_path / "c.vec"
    p.write_text("1 2\na 1 2\nb 3 4\n", encoding="utf-8")
    assert len(load_embeddings_text(p).word_rows()) == 1


@pytest.mark.parametrize(
    "text, line",
    [("2\na 1 0\n", 1), ("x y\n", 1), ("2 3\na 1 0 0\nb 0 1\n", 3), ("1 2\na 1 q\n", 2)],
)
def test_malformed_files_report_line(tmp_path, text, line):
    p = tmp_path / "bad.vec"
    p.write_text(text, encoding="utf-8")
    with pytest.raises(ParseError) as err:
        load_embeddings_text(p)
    assert err.value.line == line


def test_lookup_rules(two_word_file):
    table = load_embeddings_text(two_word_file)
    i, vec = lookup(table, "a")
    np.testing.assert_array_equal(vec, [1, 0, 0])
    i, vec = lookup(table, "never-seen")
    assert i == table.oov_id
    np.testing.assert_array_equal(vec, table.oov_vector)
    i, vec = lookup(table, PAD_TOKEN)
    assert i == table.pad_id
    np.testing.assert_array_equal(vec, 0.0)


@settings(max_examples=50, deadline=None)
@given(st.text(min_size=0, max_size=12))
def test_lookup_is_total(word):
    table = build_table(["a", "b"], np.array([[1.0, 0.0], [0.0, 1.0]]))
    _, vec = lookup(table, word)
    assert vec.shape == (2,) and np.all(np.isfinite(vec))


def test_write_then_load_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    table = build_table([f"w{i}" for i in range(5)], rng.normal(size=(5, 4)))
    write_embeddings_text(table, tmp_path / "out.vec")
    back = load_embeddings_text(tmp_path / "out.vec")
    assert back.words == table.words
    np.testing.assert_array_equal(back.vectors, table.vectors)


def test_dictionary_parsing(tmp_path):
    p = tmp_path / "d.tsv"
    p.write_text("dog\tkoira\n", encoding="utf-8")
    assert load_dictionary(p).pairs == [("dog", "koira")]
    p.write_text("", encoding="utf-8")
    assert load_dictionary(p).pairs == []
    p.write_text("a\tb\n\n\nc\td\n", encoding="utf-8")
    assert load_dictionary(p).pairs == [("a", "b"), ("c", "d")]
    p.write_text("a\tb\nno-tab-here\n", encoding="utf-8")
    with pytest.raises(ParseError) as err:
        load_dictionary(p)
    assert err.value.line == 2


def _random_table(n, d, seed, prefix="w"):
    rng = np.random.default_rng(seed)
    return build_table([f"{prefix}{i}" for i in range(n)], rng.normal(size=(n, d)))


def test_self_alignment_is_identity():
    table = _random_table(30, 5, 0)
    words = [w for w in table.words[:30]]
    proj = procrustes_align(table, table, TranslationDictionary([(w, w) for w in words]))
    assert np.linalg.norm(proj.w - np.eye(5)) < 1e-5


def test_planted_2d_rotation_recovered():
    source = _random_table(10, 2, 1)
    theta = 0.7
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    rows = source.word_rows()
    target = build_table([f"t{i}" for i in range(10)], source.vectors[rows] @ rot)
    d = TranslationDictionary([(f"w{i}", f"t{i}") for i in range(10)])
    proj = procrustes_align(source, target, d)
    np.testing.assert_allclose(proj.w, rot.T, atol=1e-10)
    assert alignment_residual(source, target, d, proj.w) < 1e-10


def test_oov_pairs_are_dropped_and_too_few_fails():
    table = _random_table(10, 3, 2)
    with pytest.raises(AlignmentError) as err:
        procrustes_align(table, table, TranslationDictionary([("zz", "yy"), ("w1", "nope")]))
    assert err.value.usable_pairs == 0
    with pytest.raises(AlignmentError):
        procrustes_align(table, table, TranslationDictionary([("w1", "w1"), ("w2", "w2")]))


def test_dimension_mismatch_fails():
    with pytest.raises(AlignmentError):
        procrustes_align(_random_table(5, 2, 0), _random_table(5, 3, 0), TranslationDictionary([("w1", "w1")]))


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**31 - 1), st.floats(0.0, 1.0))
def test_alignment_is_orthogonal_and_beats_identity(d, seed, noise):
    rng = np.random.default_rng(seed)
    n = 3 * d
    source = _random_table(n, d, seed)
    q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    rows = source.word_rows()
    target = build_table([f"t{i}" for i in range(n)], source.vectors[rows] @ q + noise * rng.normal(size=(n, d)))
    dic = TranslationDictionary([(f"w{i}", f"t{i}") for i in range(n)])
    proj = procrustes_align(source, target, dic)
    assert proj.orthogonality_error() < 1e-5
    assert alignment_residual(source, target, dic, proj.w) <= alignment_residual(source, target, dic, np.eye(d)) + 1e-9


def test_project_table_maps_target_into_source():
    source = _random_table(8, 3, 4)
    q, _ = np.linalg.qr(np.random.default_rng(9).normal(size=(3, 3)))
    target = build_table([f"t{i}" for i in range(8)], source.vectors[source.word_rows()] @ q)
    dic = TranslationDictionary([(f"w{i}", f"t{i}") for i in range(8)])
    projected = project_table(target, procrustes_align(source, target, dic))
    np.testing.assert_allclose(lookup(projected, "t3")[1], lookup(source, "w3")[1], atol=1e-10)
