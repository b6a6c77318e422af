#!/usr/bin/env python3
"""Regenerate the bundled fixture treebank and toy evaluation sets.

The treebank is synthetic but structurally honest UD v1: every sentence is a
valid tree and the templates exercise all 13 context bags plus the discarded
labels. Word clusters share context distributions so the toy similarity set
is (weakly) learnable from the fixture at smoke-test scale.

Run from the repository root:  python tools/make_fixtures.py
"""

import collections
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "depctx" / "data"

ADJ_CLUSTERS = {
    "size": ["big", "large", "huge", "small", "tiny"],
    "speed": ["quick", "fast", "rapid", "slow"],
    "mood": ["happy", "glad", "cheerful", "sad", "gloomy"],
    "color": ["red", "blue", "green"],
    "age": ["old", "young"],
}

NOUN_CLUSTERS = {
    "animal": ["dog", "cat", "fox", "bird"],
    "vehicle": ["car", "truck", "bus"],
    "building": ["house", "cabin", "cottage"],
    "person": ["scientist", "doctor", "teacher"],
    "instrument": ["telescope", "camera"],
    "place": ["garden", "park", "forest"],
}

VERB_CLUSTERS = {
    "chase": ["chased", "followed", "pursued"],
    "see": ["saw", "watched", "observed"],
    "like": ["liked", "loved", "adored"],
    "build": ["built", "made", "constructed"],
    "trade": ["bought", "sold"],
}

SPEECH_VERBS = ["said", "thought", "believed"]
WANT_VERBS = ["wanted", "tried", "decided"]
ADVERBS = ["quickly", "slowly", "carefully", "often"]
NUMBERS = ["two", "three", "four", "five"]

# which adjective clusters plausibly modify which noun clusters
# listed twice = double rotation share, to even out cluster sizes
ADJ_FOR_NOUN = {
    "animal": ["size", "speed", "mood", "speed"],
    "vehicle": ["size", "speed", "color", "speed"],
    "building": ["size", "color", "age"],
    "person": ["mood", "age", "speed"],
    "instrument": ["size", "color"],
    "place": ["size", "color"],
}

# verb cluster -> (subject noun clusters, object noun clusters)
VERB_FRAME = {
    "chase": (["animal"], ["animal"]),
    "see": (["person"], ["animal", "instrument", "place"]),
    "like": (["person"], ["animal", "place"]),
    "build": (["person"], ["building"]),
    "trade": (["person"], ["vehicle", "instrument"]),
}


class Picker:
    """Rotates through each candidate list so every member gets even coverage;
    the rotation offsets are seeded so output is deterministic but mixed."""

    def __init__(self, seed):
        self.rng = np.random.default_rng(seed)
        self.cursors = {}

    def choice(self, items):
        key = tuple(items)
        if key not in self.cursors:
            self.cursors[key] = int(self.rng.integers(0, len(items)))
        pick = items[self.cursors[key] % len(items)]
        self.cursors[key] += 1
        return pick

    def adj_for(self, noun_cluster):
        return self.choice(ADJ_CLUSTERS[self.choice(ADJ_FOR_NOUN[noun_cluster])])

    def frame(self):
        verb_cluster = self.choice(list(VERB_FRAME))
        subj_c, obj_c = VERB_FRAME[verb_cluster]
        return (
            self.choice(VERB_CLUSTERS[verb_cluster]),
            self.choice(subj_c),
            self.choice(obj_c),
        )


def t_transitive_amod(p):
    verb, sc, oc = p.frame()
    subj, obj = p.choice(NOUN_CLUSTERS[sc]), p.choice(NOUN_CLUSTERS[oc])
    return [
        ("the", "DET", 3, "det"),
        (p.adj_for(sc), "ADJ", 3, "amod"),
        (subj, "NOUN", 4, "nsubj"),
        (verb, "VERB", 0, "root"),
        ("the", "DET", 7, "det"),
        (p.adj_for(oc), "ADJ", 7, "amod"),
        (obj, "NOUN", 4, "dobj"),
    ]


def t_noun_conj_place(p):
    verb, sc, _ = p.frame()
    n1 = p.choice(NOUN_CLUSTERS[sc])
    n2 = p.choice(NOUN_CLUSTERS[sc])
    place = p.choice(NOUN_CLUSTERS["place"])
    return [
        ("a", "DET", 2, "det"),
        (n1, "NOUN", 6, "nsubj"),
        ("and", "CONJ", 2, "cc"),
        ("a", "DET", 5, "det"),
        (n2, "NOUN", 2, "conj"),
        (verb, "VERB", 0, "root"),
        ("in", "ADP", 9, "case"),
        ("the", "DET", 9, "det"),
        (place, "NOUN", 6, "nmod"),
    ]


def t_adverb(p):
    verb, sc, _ = p.frame()
    return [
        ("the", "DET", 3, "det"),
        (p.adj_for(sc), "ADJ", 3, "amod"),
        (p.choice(NOUN_CLUSTERS[sc]), "NOUN", 4, "nsubj"),
        (verb, "VERB", 0, "root"),
        (p.choice(ADVERBS), "ADV", 4, "advmod"),
    ]


def t_instrument(p):
    verb, sc, oc = p.frame()
    return [
        ("the", "DET", 2, "det"),
        (p.choice(NOUN_CLUSTERS[sc]), "NOUN", 3, "nsubj"),
        (verb, "VERB", 0, "root"),
        ("the", "DET", 5, "det"),
        (p.choice(NOUN_CLUSTERS[oc]), "NOUN", 3, "dobj"),
        ("with", "ADP", 8, "case"),
        ("the", "DET", 8, "det"),
        (p.choice(NOUN_CLUSTERS["instrument"]), "NOUN", 3, "nmod"),
    ]


def t_compound(p):
    verb, sc, oc = p.frame()
    mod = p.choice(NOUN_CLUSTERS[p.choice(["place", "building"])])
    return [
        ("the", "DET", 3, "det"),
        (mod, "NOUN", 3, "compound"),
        (p.choice(NOUN_CLUSTERS[sc]), "NOUN", 4, "nsubj"),
        (verb, "VERB", 0, "root"),
        ("the", "DET", 6, "det"),
        (p.choice(NOUN_CLUSTERS[oc]), "NOUN", 4, "dobj"),
    ]


def t_nummod(p):
    verb, sc, _ = p.frame()
    return [
        (p.choice(NUMBERS), "NUM", 2, "nummod"),
        (p.choice(NOUN_CLUSTERS[sc]) + "s", "NOUN", 3, "nsubj"),
        (verb, "VERB", 0, "root"),
        (p.choice(ADVERBS), "ADV", 3, "advmod"),
    ]


def t_appos(p):
    nc = p.choice(["animal", "person"])
    n1 = p.choice(NOUN_CLUSTERS[nc])
    n2 = p.choice(NOUN_CLUSTERS[nc])
    verb, _, _ = p.frame()
    return [
        ("the", "DET", 2, "det"),
        (n1, "NOUN", 8, "nsubj"),
        (",", "PUNCT", 2, "punct"),
        ("a", "DET", 6, "det"),
        (p.adj_for(nc), "ADJ", 6, "amod"),
        (n2, "NOUN", 2, "appos"),
        (",", "PUNCT", 2, "punct"),
        (verb, "VERB", 0, "root"),
    ]


def t_relative_clause(p):
    verb1, sc, oc = p.frame()
    verb2, sc2, _ = p.frame()
    return [
        ("the", "DET", 2, "det"),
        (p.choice(NOUN_CLUSTERS[sc]), "NOUN", 7, "nsubj"),
        ("that", "PRON", 4, "nsubj"),
        (verb1, "VERB", 2, "acl:relcl"),
        ("the", "DET", 6, "det"),
        (p.choice(NOUN_CLUSTERS[oc]), "NOUN", 4, "dobj"),
        (verb2, "VERB", 0, "root"),
        (p.choice(ADVERBS), "ADV", 7, "advmod"),
    ]


def t_ccomp(p):
    verb2, sc2, oc2 = p.frame()
    return [
        ("the", "DET", 2, "det"),
        (p.choice(NOUN_CLUSTERS["person"]), "NOUN", 3, "nsubj"),
        (p.choice(SPEECH_VERBS), "VERB", 0, "root"),
        ("that", "SCONJ", 7, "mark"),
        ("the", "DET", 6, "det"),
        (p.choice(NOUN_CLUSTERS[sc2]), "NOUN", 7, "nsubj"),
        (verb2, "VERB", 3, "ccomp"),
        ("the", "DET", 9, "det"),
        (p.choice(NOUN_CLUSTERS[oc2]), "NOUN", 7, "dobj"),
    ]


def t_xcomp(p):
    verb2, _, oc2 = p.frame()
    return [
        ("the", "DET", 2, "det"),
        (p.choice(NOUN_CLUSTERS["person"]), "NOUN", 3, "nsubj"),
        (p.choice(WANT_VERBS), "VERB", 0, "root"),
        ("to", "PART", 5, "mark"),
        (verb2, "VERB", 3, "xcomp"),
        ("the", "DET", 7, "det"),
        (p.choice(NOUN_CLUSTERS[oc2]), "NOUN", 5, "dobj"),
    ]


def t_adj_conj(p):
    nc = p.choice(list(NOUN_CLUSTERS))
    cluster = p.choice(ADJ_FOR_NOUN[nc])
    a1 = p.choice(ADJ_CLUSTERS[cluster])
    a2 = p.choice(ADJ_CLUSTERS[cluster])
    verb, _, _ = p.frame()
    return [
        ("the", "DET", 5, "det"),
        (a1, "ADJ", 5, "amod"),
        ("and", "CONJ", 2, "cc"),
        (a2, "ADJ", 2, "conj"),
        (p.choice(NOUN_CLUSTERS[nc]), "NOUN", 6, "nsubj"),
        (verb, "VERB", 0, "root"),
        (p.choice(ADVERBS), "ADV", 6, "advmod"),
    ]


def t_verb_conj(p):
    verb1, sc, oc = p.frame()
    verb2, _, oc2 = p.frame()
    return [
        ("the", "DET", 2, "det"),
        (p.choice(NOUN_CLUSTERS[sc]), "NOUN", 3, "nsubj"),
        (verb1, "VERB", 0, "root"),
        ("and", "CONJ", 3, "cc"),
        (verb2, "VERB", 3, "conj"),
        ("the", "DET", 7, "det"),
        (p.choice(NOUN_CLUSTERS[oc2]), "NOUN", 5, "dobj"),
    ]


def t_ditransitive(p):
    return [
        ("the", "DET", 2, "det"),
        (p.choice(NOUN_CLUSTERS["person"]), "NOUN", 3, "nsubj"),
        (p.choice(["sold", "bought", "offered"]), "VERB", 0, "root"),
        ("the", "DET", 5, "det"),
        (p.choice(NOUN_CLUSTERS["person"]), "NOUN", 3, "iobj"),
        ("a", "DET", 7, "det"),
        (p.choice(NOUN_CLUSTERS["vehicle"] + NOUN_CLUSTERS["instrument"]), "NOUN", 3, "dobj"),
    ]


def t_passive(p):
    verb, sc, oc = p.frame()
    return [
        ("the", "DET", 2, "det"),
        (p.choice(NOUN_CLUSTERS[oc]), "NOUN", 4, "nsubjpass"),
        ("was", "AUX", 4, "auxpass"),
        (verb, "VERB", 0, "root"),
        ("by", "ADP", 7, "case"),
        ("the", "DET", 7, "det"),
        (p.choice(NOUN_CLUSTERS[sc]), "NOUN", 4, "nmod"),
    ]


def t_possessive(p):
    verb, sc, oc = p.frame()
    return [
        ("the", "DET", 2, "det"),
        (p.choice(NOUN_CLUSTERS[sc]), "NOUN", 3, "nsubj"),
        (verb, "VERB", 0, "root"),
        ("his", "PRON", 5, "nmod:poss"),
        (p.choice(NOUN_CLUSTERS[oc]), "NOUN", 3, "dobj"),
    ]


def t_bare_nmod(p):
    verb, sc, oc = p.frame()
    return [
        ("the", "DET", 2, "det"),
        (p.choice(NOUN_CLUSTERS[sc]), "NOUN", 3, "nsubj"),
        (verb, "VERB", 0, "root"),
        ("the", "DET", 5, "det"),
        (p.choice(NOUN_CLUSTERS[oc]), "NOUN", 3, "dobj"),
        ("last", "ADJ", 7, "amod"),
        ("night", "NOUN", 3, "nmod"),
    ]


TEMPLATES = [
    (t_transitive_amod, 24),
    (t_noun_conj_place, 12),
    (t_adverb, 12),
    (t_instrument, 10),
    (t_compound, 8),
    (t_nummod, 6),
    (t_appos, 6),
    (t_relative_clause, 8),
    (t_ccomp, 7),
    (t_xcomp, 7),
    (t_adj_conj, 18),
    (t_verb_conj, 8),
    (t_ditransitive, 6),
    (t_passive, 6),
    (t_possessive, 5),
    (t_bare_nmod, 4),
]


def render(rows, sent_id):
    text = " ".join(form for form, _, _, _ in rows)
    lines = [f"# sent_id = fixture-{sent_id:04d}", f"# text = {text}"]
    for i, (form, upos, head, deprel) in enumerate(rows, start=1):
        lines.append(f"{i}\t{form}\t{form}\t{upos}\t_\t_\t{head}\t{deprel}\t_\t_")
    return "\n".join(lines)


SIMILARITY_ROWS = [
    ("big", "large", 9.2, "A"), ("big", "huge", 8.6, "A"), ("small", "tiny", 9.0, "A"),
    ("quick", "fast", 9.1, "A"), ("quick", "rapid", 8.4, "A"), ("happy", "glad", 9.0, "A"),
    ("sad", "gloomy", 8.2, "A"), ("big", "small", 1.2, "A"), ("quick", "slow", 1.0, "A"),
    ("happy", "sad", 0.8, "A"),
    ("chased", "followed", 8.0, "V"), ("chased", "pursued", 8.4, "V"),
    ("saw", "watched", 8.6, "V"), ("saw", "observed", 8.2, "V"), ("liked", "loved", 8.8, "V"),
    ("built", "made", 8.3, "V"), ("built", "constructed", 8.5, "V"), ("chased", "saw", 2.0, "V"),
    ("liked", "built", 1.2, "V"), ("saw", "bought", 1.5, "V"),
    ("dog", "cat", 7.6, "N"), ("dog", "fox", 6.8, "N"), ("car", "truck", 8.1, "N"),
    ("car", "bus", 7.2, "N"), ("house", "cabin", 7.8, "N"), ("house", "cottage", 7.9, "N"),
    ("garden", "park", 7.4, "N"), ("telescope", "camera", 6.9, "N"), ("dog", "car", 1.0, "N"),
    ("house", "bird", 1.3, "N"),
]

TOEFL_ROWS = [
    "big large dog slowly three 0 A",
    "quick fast sad house often 0 A",
    "chased followed garden happy two 0 V",
    "saw watched forest tiny five 0 V",
    "dog cat truck glad quickly 0 N",
    "car truck bird cheerful often 0 N",
]


def main():
    p = Picker(seed=20260810)
    blocks = []
    sent_id = 0
    for template, n in TEMPLATES:
        for _ in range(n):
            sent_id += 1
            blocks.append(render(template(p), sent_id))
    treebank = "\n\n".join(blocks) + "\n"
    (OUT / "fixture_treebank.conllu").write_text(treebank, encoding="utf-8")

    sim_lines = ["word1\tword2\tscore\tclass"]
    sim_lines += [f"{a}\t{b}\t{s}\t{c}" for a, b, s, c in SIMILARITY_ROWS]
    (OUT / "toy_similarity.tsv").write_text("\n".join(sim_lines) + "\n", encoding="utf-8")

    (OUT / "toy_toefl.txt").write_text("\n".join(TOEFL_ROWS) + "\n", encoding="utf-8")

    counts = collections.Counter()
    for block in blocks:
        for line in block.splitlines():
            if line.startswith("#"):
                continue
            counts[line.split("\t")[1]] += 1
    print(f"{sent_id} sentences, {sum(counts.values())} tokens")
    dataset_words = {w for row in SIMILARITY_ROWS for w in row[:2]}
    rare = {w: counts[w] for w in sorted(dataset_words) if counts[w] < 5}
    print("dataset words with < 5 occurrences:", rare or "none")


if __name__ == "__main__":
    main()
