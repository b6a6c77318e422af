import collections

import numpy as np
import pytest

from depctx.extraction import (
    BagMappingTable,
    DISCARD,
    Direction,
    ExtractionConfig,
    Manifest,
    collapse_prepositions,
    compose_configuration,
    extract_bow_pairs,
    extract_conj_pairs,
    extract_deps_pairs,
    extract_posit_pairs,
    map_label,
    write_bag_files,
)
from conftest import make_sentence

TABLE = BagMappingTable.default()

BAG13 = {
    "subj", "obj", "comp", "nummod", "appos", "nmod", "acl",
    "amod", "prep", "adv", "compound", "conjlr", "conjll",
}


def contexts_of(word, pairs):
    return {p.context for p in pairs if p.word == word}


def pair_set(pairs):
    return {(p.word, p.context) for p in pairs}


# -- bag mapping table --


def test_default_table_image_is_the_13_bags():
    assert TABLE.bag_labels == frozenset(BAG13)


@pytest.mark.parametrize(
    "deprel,expected",
    [
        ("dobj", "obj"),
        ("iobj", "obj"),
        ("nsubj", "subj"),
        ("nsubjpass", "subj"),
        ("ccomp", "comp"),
        ("xcomp", "comp"),
        ("advmod", "adv"),
        ("advcl", "adv"),
        ("acl", "acl"),
        ("acl:relcl", "acl"),
        ("nmod", "nmod"),
        ("nmod:poss", "nmod"),
        ("prep:with", "prep"),
        ("prep:of", "prep"),
        ("punct", DISCARD),
        ("goeswith", DISCARD),
        ("cc", DISCARD),
        ("case", DISCARD),
        ("frobnicate", DISCARD),  # catch-all
    ],
)
def test_map_label(deprel, expected):
    assert map_label(deprel, TABLE) == expected


def test_table_requires_catch_all():
    with pytest.raises(ValueError):
        BagMappingTable([("amod", "amod")])


def test_table_from_file_rejects_bad_rows(tmp_path):
    path = tmp_path / "table.tsv"
    path.write_text("amod amod\n*\tDISCARD\n", encoding="utf-8")
    with pytest.raises(ValueError):
        BagMappingTable.from_file(path)


# -- prepositional arc collapsing --


def test_collapse_fig1(fig1_sentence):
    collapsed = collapse_prepositions(fig1_sentence)
    assert collapsed.token(6).deprel == "prep:with"
    assert collapsed.token(6).head == 3
    # the case arc is gone: its token no longer carries an extractable arc
    assert collapsed.token(5).deprel == "_collapsed"
    # everything else untouched
    for idx in (1, 2, 3, 4):
        assert collapsed.token(idx) == fig1_sentence.token(idx)


def test_collapse_identity_without_pattern(boys_and_girls):
    assert collapse_prepositions(boys_and_girls) is boys_and_girls


def test_collapse_two_case_dependents():
    # contrived: one nmod token with two case dependents; the linearly first
    # supplies the preposition and both case arcs are removed
    sent = make_sentence(
        [
            (1, "walked", "VERB", 0, "root"),
            (2, "out", "ADP", 4, "case"),
            (3, "of", "ADP", 4, "case"),
            (4, "town", "NOUN", 1, "nmod"),
        ]
    )
    collapsed = collapse_prepositions(sent)
    assert collapsed.token(4).deprel == "prep:out"
    assert collapsed.token(2).deprel == "_collapsed"
    assert collapsed.token(3).deprel == "_collapsed"


def test_collapse_only_configured_targets():
    # a case dependent of a dobj token is not a collapsing pattern
    sent = make_sentence(
        [
            (1, "saw", "VERB", 0, "root"),
            (2, "with", "ADP", 3, "case"),
            (3, "stars", "NOUN", 1, "dobj"),
        ]
    )
    assert collapse_prepositions(sent) is sent
    # but obl is collapsed once listed (UD v2 switch)
    sent2 = make_sentence(
        [
            (1, "saw", "VERB", 0, "root"),
            (2, "with", "ADP", 3, "case"),
            (3, "stars", "NOUN", 1, "obl"),
        ]
    )
    collapsed = collapse_prepositions(sent2, targets=("nmod", "obl"))
    assert collapsed.token(3).deprel == "prep:with"


def test_collapse_preserves_other_arc_count(fig1_sentence):
    def other_arcs(sent):
        return [
            (t.index, t.head, t.deprel)
            for t in sent
            if t.deprel.split(":")[0] not in ("case", "nmod")
            and not t.deprel.startswith("prep:")
            and t.deprel != "_collapsed"
        ]

    collapsed = collapse_prepositions(fig1_sentence)
    assert other_arcs(collapsed) == other_arcs(fig1_sentence)


# -- DEPS pair extraction --


def test_fig1_deps_contexts_before_collapsing(fig1_sentence):
    pairs = list(extract_deps_pairs(fig1_sentence, TABLE))
    assert contexts_of("discovers", pairs) == {
        "scientist_nsubj",
        "stars_dobj",
        "telescope_nmod",
    }


def test_fig1_deps_contexts_after_collapsing(fig1_sentence):
    collapsed = collapse_prepositions(fig1_sentence)
    pairs = list(extract_deps_pairs(collapsed, TABLE))
    assert contexts_of("discovers", pairs) == {
        "scientist_nsubj",
        "stars_dobj",
        "telescope_prep",
    }
    # inverse pairs point back at the head with the -1 marker
    assert contexts_of("scientist", pairs) == {"discovers_nsubj-1", "australian_amod"}
    assert contexts_of("telescope", pairs) == {"discovers_prep-1"}


def test_amod_pair_symmetry_lands_in_amod_bag(fig1_sentence):
    pairs = [p for p in extract_deps_pairs(fig1_sentence, TABLE) if p.bag == "amod"]
    assert pair_set(pairs) == {
        ("scientist", "australian_amod"),
        ("australian", "scientist_amod-1"),
    }


def test_single_token_sentence_is_empty():
    sent = make_sentence([(1, "hi", "INTJ", 0, "root")])
    assert list(extract_deps_pairs(sent, TABLE)) == []


def test_pair_symmetry_property():
    """Every NORMAL pair from an arc has the matching INVERSE pair."""
    rng = np.random.default_rng(11)
    labels = ["amod", "nsubj", "dobj", "nmod", "advmod", "compound", "appos", "punct"]
    for _ in range(50):
        n = int(rng.integers(2, 10))
        root = int(rng.integers(1, n + 1))
        rows = []
        for i in range(1, n + 1):
            if i == root:
                rows.append((i, f"w{i}", "X", 0, "root"))
            else:
                head = int(rng.choice([h for h in range(1, n + 1) if h != i]))
                rows.append((i, f"w{i}", "X", head, str(rng.choice(labels))))
        sent = make_sentence(rows)
        pairs = list(extract_deps_pairs(sent, TABLE))
        normals = {(p.word, p.context_token, p.relation) for p in pairs if p.direction is Direction.NORMAL}
        inverses = {(p.context_token, p.word, p.relation) for p in pairs if p.direction is Direction.INVERSE}
        assert normals == inverses


# -- coordination variants --


def test_conjlr_pairs(boys_and_girls):
    pairs = list(extract_conj_pairs(boys_and_girls, "conjlr"))
    assert pair_set(pairs) == {("boys", "girls_conj"), ("girls", "boys_conj-1")}
    assert all(p.bag == "conjlr" for p in pairs)


def test_conjll_pairs(boys_and_girls):
    pairs = list(extract_conj_pairs(boys_and_girls, "conjll"))
    assert pair_set(pairs) == {("boys", "girls_conj"), ("girls", "boys_conj")}
    assert all(p.bag == "conjll" for p in pairs)


def test_conj_both_is_the_union(boys_and_girls):
    pairs = list(extract_conj_pairs(boys_and_girls, "both"))
    assert len(pairs) == 4
    by_bag = collections.Counter(p.bag for p in pairs)
    assert by_bag == {"conjlr": 2, "conjll": 2}


def test_no_conj_arcs_empty(fig1_sentence):
    assert list(extract_conj_pairs(fig1_sentence, "both")) == []


def test_deps_extraction_routes_conj(boys_and_girls):
    pairs = list(extract_deps_pairs(boys_and_girls, TABLE, conj_variant="conjlr"))
    assert pair_set(pairs) == {("boys", "girls_conj"), ("girls", "boys_conj-1")}


# -- BOW and POSIT windows --


def test_bow_window2_fig1(fig1_sentence):
    pairs = list(extract_bow_pairs(fig1_sentence, window=2))
    neighbors = {c for w, c in pairs if w == "discovers"}
    assert neighbors == {"australian", "scientist", "stars", "with"}


def test_posit_window2_fig1_literal_offsets(fig1_sentence):
    pairs = list(extract_posit_pairs(fig1_sentence, window=2))
    contexts = {c for w, c in pairs if w == "discovers"}
    # literal signed offsets recomputed from token positions
    assert contexts == {"australian_-2", "scientist_-1", "stars_+1", "with_+2"}


def test_window1_single_token():
    sent = make_sentence([(1, "hi", "INTJ", 0, "root")])
    assert list(extract_bow_pairs(sent, window=1)) == []
    assert list(extract_posit_pairs(sent, window=1)) == []


def test_windows_do_not_cross_sentences(fig1_sentence):
    pairs = list(extract_bow_pairs(fig1_sentence, window=3))
    # leftmost token sees at most 3 right neighbors, nothing from elsewhere
    assert {c for w, c in pairs if w == "australian"} == {"scientist", "discovers", "stars"}


def test_bow_is_posit_with_suffix_stripped(fig1_sentence):
    bow = sorted(extract_bow_pairs(fig1_sentence, window=2))
    posit = sorted((w, c.rsplit("_", 1)[0]) for w, c in extract_posit_pairs(fig1_sentence, window=2))
    assert bow == posit


# -- bag files, manifest, composition --


def run_write(corpus, tmp_path, config=None):
    config = config or ExtractionConfig()
    return write_bag_files(corpus, TABLE, config, tmp_path / "bags", config_hash="h")


def test_write_bag_files_fig1_counts(fig1_sentence, tmp_path):
    manifest = run_write([fig1_sentence], tmp_path)
    assert manifest.counts["amod"] == 2
    assert manifest.counts["subj"] == 2
    assert manifest.counts["obj"] == 2
    assert manifest.counts["prep"] == 2
    assert manifest.counts["nmod"] == 0
    assert sum(manifest.counts.values()) == 8
    on_disk = Manifest.load(tmp_path / "bags")
    assert on_disk.counts == manifest.counts
    assert on_disk.meta["config_hash"] == "h"


def test_write_bag_files_empty_corpus(tmp_path):
    manifest = run_write([], tmp_path)
    assert set(manifest.counts) == BAG13
    assert all(n == 0 for n in manifest.counts.values())


def test_write_bag_files_linearity(fig1_sentence, tmp_path):
    once = write_bag_files([fig1_sentence], TABLE, ExtractionConfig(), tmp_path / "one")
    tenfold = write_bag_files([fig1_sentence] * 10, TABLE, ExtractionConfig(), tmp_path / "ten")
    for bag in once.counts:
        assert tenfold.counts[bag] == 10 * once.counts[bag]


def test_write_bag_files_deterministic_bytes(fig1_sentence, boys_and_girls, tmp_path):
    corpus = [fig1_sentence, boys_and_girls] * 3
    m1 = write_bag_files(corpus, TABLE, ExtractionConfig(), tmp_path / "a")
    m2 = write_bag_files(corpus, TABLE, ExtractionConfig(), tmp_path / "b")
    assert m1.counts == m2.counts
    for bag in m1.counts:
        a = (tmp_path / "a" / f"{bag}.pairs").read_bytes()
        b = (tmp_path / "b" / f"{bag}.pairs").read_bytes()
        assert a == b


def test_deps_all_equals_union_of_13_bags(fig1_sentence, boys_and_girls, tmp_path):
    corpus = [fig1_sentence, boys_and_girls] * 2
    manifest = write_bag_files(corpus, TABLE, ExtractionConfig(), tmp_path / "bags")
    stream = compose_configuration(sorted(BAG13), manifest, tmp_path / "bags")
    composed = collections.Counter(stream)
    direct = collections.Counter()
    for sent in corpus:
        collapsed = collapse_prepositions(sent)
        for p in extract_deps_pairs(collapsed, TABLE, "both"):
            direct[p.as_tuple()] += 1
    assert composed == direct
    assert len(stream) == sum(manifest.counts.values())


def test_compose_additivity_and_identity(fig1_sentence, tmp_path):
    manifest = run_write([fig1_sentence] * 4, tmp_path)
    union = compose_configuration(["amod", "subj", "obj"], manifest, tmp_path / "bags")
    assert len(union) == manifest.counts["amod"] + manifest.counts["subj"] + manifest.counts["obj"]
    assert len(list(union)) == len(union)
    single = compose_configuration(["amod"], manifest, tmp_path / "bags")
    assert sorted(single) == sorted(
        tuple(line.split("\t"))
        for line in (tmp_path / "bags" / "amod.pairs").read_text().splitlines()
    )


def test_compose_rejects_unknown_and_empty(fig1_sentence, tmp_path):
    manifest = run_write([fig1_sentence], tmp_path)
    with pytest.raises(KeyError, match="nosuchbag"):
        compose_configuration(["amod", "nosuchbag"], manifest, tmp_path / "bags")
    with pytest.raises(ValueError):
        compose_configuration([], manifest, tmp_path / "bags")


def test_incomplete_marker_detected(fig1_sentence, tmp_path):
    run_write([fig1_sentence], tmp_path)
    (tmp_path / "bags" / "_INCOMPLETE").write_text("aborted")
    with pytest.raises(RuntimeError, match="partial"):
        Manifest.load(tmp_path / "bags")


def test_conj_variant_limits_bag_files(fig1_sentence, boys_and_girls, tmp_path):
    config = ExtractionConfig(conj_variant="conjlr")
    manifest = write_bag_files([boys_and_girls], TABLE, config, tmp_path / "bags")
    assert "conjll" not in manifest.counts
    assert manifest.counts["conjlr"] == 2


def test_extraction_config_validation():
    with pytest.raises(ValueError):
        ExtractionConfig(window=0)
    with pytest.raises(ValueError):
        ExtractionConfig(conj_variant="sideways")
