"""Corpus ingestion, tokenization, structural cleaning, and statistics.

Everything downstream (alignment, language models, mining, selection,
evaluation) consumes the token streams produced here, so tokenization is
rule-based and deterministic: re-tokenizing the joined token stream always
reproduces it.
"""

from __future__ import annotations

import logging
import re
import unicodedata
import xml.parsers.expat
from dataclasses import dataclass, field

from corpusforge.errors import DataError, ParseError

logger = logging.getLogger(__name__)

# A token is either a word (letters/digits, possibly glued by word-internal
# apostrophes or hyphens) or a single non-word, non-space character.
_TOKEN_RE = re.compile(r"[\w]+(?:['’\-][\w]+)*|[^\w\s]")


@dataclass(frozen=True)
class TokenizationProfile:
    """Tokenizer switches; `lowercase` is on by default."""

    lowercase: bool = True


DEFAULT_PROFILE = TokenizationProfile()


def tokenize(raw: str, profile: TokenizationProfile = DEFAULT_PROFILE) -> list[str]:
    """Split raw text into tokens.

    Rules: optionally lowercase, split punctuation off words, keep
    word-internal apostrophes and hyphens intact, collapse whitespace.
    Empty input yields an empty list.
    """
    if profile.lowercase:
        raw = raw.lower()
    return _TOKEN_RE.findall(raw)


@dataclass(frozen=True)
class Sentence:
    """One sentence: the raw string plus its token sequence."""

    raw: str
    tokens: tuple[str, ...]

    @classmethod
    def from_raw(cls, raw: str, profile: TokenizationProfile = DEFAULT_PROFILE) -> "Sentence":
        return cls(raw=raw, tokens=tuple(tokenize(raw, profile)))

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass
class Document:
    """An ordered group of sentences with a non-empty identifier."""

    id: str
    sentences: list[Sentence]


@dataclass
class ParallelCorpus:
    """Sentence-aligned bilingual text as (source, target) pairs."""

    pairs: list[tuple[Sentence, Sentence]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    @property
    def source_sentences(self) -> list[Sentence]:
        return [s for s, _ in self.pairs]

    @property
    def target_sentences(self) -> list[Sentence]:
        return [t for _, t in self.pairs]


@dataclass
class CleaningRules:
    """Structural cleaning thresholds."""

    max_ratio: float = 4.0


@dataclass
class CleaningReport:
    """Where every input pair went; categories are mutually exclusive."""

    input_pairs: int = 0
    kept_pairs: int = 0
    dropped_duplicates: int = 0
    dropped_length_ratio: int = 0
    dropped_empty_or_control: int = 0

    def as_lines(self) -> list[str]:
        return [
            f"input_pairs={self.input_pairs}",
            f"kept_pairs={self.kept_pairs}",
            f"dropped_duplicates={self.dropped_duplicates}",
            f"dropped_length_ratio={self.dropped_length_ratio}",
            f"dropped_empty_or_control={self.dropped_empty_or_control}",
        ]


def _has_control_chars(raw: str) -> bool:
    return any(unicodedata.category(c) == "Cc" and c not in "\t\n\r" for c in raw)


def clean_parallel(
    corpus: ParallelCorpus, rules: CleaningRules | None = None
) -> tuple[ParallelCorpus, CleaningReport]:
    """Drop duplicate, badly length-ratioed, and empty/control-character pairs.

    Each pair is dropped for exactly one reason, checked in this order:
    exact duplicate (token-level, against all previously seen pairs), then
    token-length ratio above ``rules.max_ratio`` (only when both sides are
    non-empty), then empty side or control characters. Relative order of
    kept pairs is preserved; the operation is idempotent.
    """
    rules = rules or CleaningRules()
    report = CleaningReport(input_pairs=len(corpus.pairs))
    seen: set[tuple[tuple[str, ...], tuple[str, ...]]] = set()
    kept: list[tuple[Sentence, Sentence]] = []
    for src, tgt in corpus.pairs:
        key = (src.tokens, tgt.tokens)
        if key in seen:
            report.dropped_duplicates += 1
            continue
        seen.add(key)
        n_src, n_tgt = len(src.tokens), len(tgt.tokens)
        if n_src > 0 and n_tgt > 0 and max(n_src, n_tgt) / min(n_src, n_tgt) > rules.max_ratio:
            report.dropped_length_ratio += 1
            continue
        if (
            n_src == 0
            or n_tgt == 0
            or _has_control_chars(src.raw)
            or _has_control_chars(tgt.raw)
        ):
            report.dropped_empty_or_control += 1
            continue
        report.kept_pairs += 1
        kept.append((src, tgt))
    return ParallelCorpus(pairs=kept), report


class _TalkCollector:
    """Expat handlers that pick talk/seg elements out of TED-like XML."""

    def __init__(self, profile: TokenizationProfile):
        self.profile = profile
        self.documents: list[Document] = []
        self.rejected: list[str] = []
        self._current: Document | None = None
        self._missing_id = False
        self._talk_index = 0
        self._seg_chars: list[str] | None = None

    def start(self, name, attrs):
        if name == "talk":
            self._talk_index += 1
            talk_id = attrs.get("id", "").strip()
            if talk_id:
                self._current = Document(id=talk_id, sentences=[])
                self._missing_id = False
            else:
                self._current = None
                self._missing_id = True
                msg = f"talk #{self._talk_index} has no id attribute; document rejected"
                self.rejected.append(msg)
                logger.warning("%s", msg)
        elif name == "seg":
            self._seg_chars = []

    def end(self, name):
        if name == "seg" and self._seg_chars is not None:
            text = " ".join("".join(self._seg_chars).split())
            if self._current is not None:
                self._current.sentences.append(Sentence.from_raw(text, self.profile))
            self._seg_chars = None
        elif name == "talk":
            if self._current is not None:
                self.documents.append(self._current)
            self._current = None
            self._missing_id = False

    def chars(self, data):
        if self._seg_chars is not None:
            self._seg_chars.append(data)


def ingest_ted_xml(
    data: bytes, profile: TokenizationProfile = DEFAULT_PROFILE
) -> list[Document]:
    """Parse TED-like XML into one Document per ``<talk id=...>`` element.

    Each ``<seg>`` becomes one Sentence. Malformed XML raises ParseError
    naming the byte offset; a talk without an id is skipped with a logged
    diagnostic.
    """
    collector = _TalkCollector(profile)
    parser = xml.parsers.expat.ParserCreate()
    parser.buffer_text = True
    parser.StartElementHandler = collector.start
    parser.EndElementHandler = collector.end
    parser.CharacterDataHandler = collector.chars
    try:
        parser.Parse(data, True)
    except xml.parsers.expat.ExpatError as exc:
        raise ParseError(
            f"malformed XML: {xml.parsers.expat.errors.messages[exc.code]}",
            line=exc.lineno,
            byte_offset=parser.ErrorByteIndex,
        ) from exc
    return collector.documents


@dataclass
class CorpusStats:
    """Sentence, token, and distinct-token-form counts for one side."""

    sentences: int = 0
    tokens: int = 0
    unique_tokens: int = 0


@dataclass
class ParallelStats:
    source: CorpusStats
    target: CorpusStats


def _side_stats(sentences) -> CorpusStats:
    forms: set[str] = set()
    n_tokens = 0
    n_sentences = 0
    for sent in sentences:
        n_sentences += 1
        n_tokens += len(sent.tokens)
        forms.update(sent.tokens)
    return CorpusStats(sentences=n_sentences, tokens=n_tokens, unique_tokens=len(forms))


def corpus_stats(corpus) -> CorpusStats | ParallelStats:
    """Count sentences, tokens, and unique token forms (per side if parallel)."""
    if isinstance(corpus, ParallelCorpus):
        return ParallelStats(
            source=_side_stats(corpus.source_sentences),
            target=_side_stats(corpus.target_sentences),
        )
    return _side_stats(corpus)


def require_nonempty(corpus, what: str = "corpus") -> None:
    """Raise DataError when a corpus has no sentences/pairs."""
    if len(corpus) == 0:
        raise DataError(f"{what} is empty")
