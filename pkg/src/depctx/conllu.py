"""Reading dependency-parsed corpora in CoNLL-U format.

Sentences are parsed lazily, one blank-line-delimited block at a time, so
memory stays bounded by the largest sentence rather than the corpus. Surface
forms are lowercased at parse time; lemma and POS columns are kept as-is.
"""

from __future__ import annotations

import gzip
import logging
from dataclasses import dataclass
from typing import IO, Iterable, Iterator

logger = logging.getLogger(__name__)

# CoNLL-U column offsets.
ID, FORM, LEMMA, UPOS, XPOS, FEATS, HEAD, DEPREL, DEPS, MISC = range(10)

GZIP_MAGIC = b"\x1f\x8b"


class ConlluError(Exception):
    """Malformed CoNLL-U input, carrying the 1-based line number."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


@dataclass(frozen=True)
class Token:
    """One syntactic word: 1-based index, lowercased form, head and deprel.

    ``head`` is 0 for the sentence root.
    """

    index: int
    form: str
    lemma: str
    upos: str
    head: int
    deprel: str


@dataclass(frozen=True)
class Sentence:
    """An ordered sequence of tokens with consecutive indices 1..n."""

    tokens: tuple[Token, ...]

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[Token]:
        return iter(self.tokens)

    def token(self, index: int) -> Token:
        """Look up a token by its 1-based index."""
        return self.tokens[index - 1]


def _decode_lines(stream: Iterable) -> Iterator[str]:
    for line in stream:
        if isinstance(line, bytes):
            yield line.decode("utf-8")
        else:
            yield line


def _parse_token(line: str, line_number: int) -> Token | None:
    """Parse one token line; returns None for multiword ranges / empty nodes."""
    cols = line.split("\t")
    if len(cols) != 10:
        raise ConlluError(f"expected 10 columns, got {len(cols)}", line_number)
    tok_id = cols[ID]
    if "-" in tok_id or "." in tok_id:
        # Multiword token ranges and empty nodes carry no basic arc.
        return None
    try:
        index = int(tok_id)
    except ValueError:
        raise ConlluError(f"non-numeric token ID {tok_id!r}", line_number) from None
    try:
        head = int(cols[HEAD])
    except ValueError:
        raise ConlluError(f"non-numeric HEAD {cols[HEAD]!r}", line_number) from None
    if not cols[DEPREL]:
        raise ConlluError("empty DEPREL", line_number)
    return Token(
        index=index,
        form=cols[FORM].lower(),
        lemma=cols[LEMMA],
        upos=cols[UPOS],
        head=head,
        deprel=cols[DEPREL],
    )


def _build_sentence(tokens: list[Token], line_number: int) -> Sentence:
    """Validate structural invariants of a finished token block."""
    n = len(tokens)
    roots = 0
    for pos, tok in enumerate(tokens, start=1):
        if tok.index != pos:
            raise ConlluError(
                f"token indices not consecutive: expected {pos}, got {tok.index}",
                line_number,
            )
        if tok.head > n:
            raise ConlluError(f"HEAD {tok.head} out of range (n={n})", line_number)
        if tok.head == tok.index:
            raise ConlluError(f"token {tok.index} is its own head", line_number)
        if tok.head == 0:
            roots += 1
    if roots != 1:
        raise ConlluError(f"expected exactly one root, got {roots}", line_number)
    return Sentence(tuple(tokens))


def parse_conllu(
    stream: Iterable,
    errors: str = "skip",
    stats: dict | None = None,
) -> Iterator[Sentence]:
    """Yield one Sentence per CoNLL-U block read from ``stream``.

    ``stream`` is any iterable of lines (bytes or text). Comment lines,
    multiword ranges and empty nodes are dropped. On a malformed line the
    enclosing sentence is either skipped with a warning (``errors="skip"``,
    counted under ``stats["skipped_sentences"]``) or a :class:`ConlluError`
    is raised (``errors="raise"``).
    """
    if errors not in ("skip", "raise"):
        raise ValueError(f"errors must be 'skip' or 'raise', got {errors!r}")
    tokens: list[Token] = []
    block_bad = False
    line_number = 0

    def finish(at_line: int) -> Sentence | None:
        nonlocal block_bad
        if block_bad:
            block_bad = False
            tokens.clear()
            return None
        if not tokens:
            return None
        try:
            sentence = _build_sentence(tokens, at_line)
        except ConlluError as exc:
            if errors == "raise":
                raise
            _count_skip(stats, exc)
            return None
        finally:
            tokens.clear()
        return sentence

    for raw in _decode_lines(stream):
        line_number += 1
        line = raw.rstrip("\r\n")
        if not line:
            sentence = finish(line_number)
            if sentence is not None:
                yield sentence
            continue
        if line.startswith("#"):
            continue
        if block_bad:
            continue
        try:
            token = _parse_token(line, line_number)
        except ConlluError as exc:
            if errors == "raise":
                raise
            _count_skip(stats, exc)
            block_bad = True
            continue
        if token is not None:
            tokens.append(token)
    sentence = finish(line_number + 1)
    if sentence is not None:
        yield sentence


def _count_skip(stats: dict | None, exc: ConlluError) -> None:
    logger.warning("skipping sentence: %s", exc)
    if stats is not None:
        stats["skipped_sentences"] = stats.get("skipped_sentences", 0) + 1


def sentence_to_conllu(sentence: Sentence) -> str:
    """Serialize a Sentence back to a 10-column block (no trailing blank line)."""
    lines = []
    for tok in sentence:
        lines.append(
            "\t".join(
                [
                    str(tok.index),
                    tok.form,
                    tok.lemma,
                    tok.upos,
                    "_",
                    "_",
                    str(tok.head),
                    tok.deprel,
                    "_",
                    "_",
                ]
            )
        )
    return "\n".join(lines)


def open_corpus(path: str) -> IO[bytes]:
    """Open a corpus file for reading, transparently handling gzip.

    Compression is detected from the magic bytes, not the file extension.
    """
    f = open(path, "rb")
    magic = f.read(2)
    f.seek(0)
    if magic == GZIP_MAGIC:
        return gzip.open(f, "rb")
    return f


def read_corpus(
    path: str,
    errors: str = "skip",
    stats: dict | None = None,
) -> Iterator[Sentence]:
    """Parse sentences from a (possibly gzipped) CoNLL-U file."""
    with open_corpus(path) as stream:
        yield from parse_conllu(stream, errors=errors, stats=stats)
