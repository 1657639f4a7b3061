"""IBM Model 1 lexicon training and symmetrized word alignments.

The EM-trained lexicon t(target | source) is the lexical knowledge the
mining scorer runs on. Viterbi decoding in both directions plus a
symmetrization heuristic yields word alignments when those are wanted
directly.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

from corpusforge.errors import DataError
from corpusforge.text_pipeline import ParallelCorpus, Sentence

NULL_WORD = "<null>"


@dataclass
class TranslationLexicon:
    """t[(source, target)] = P(target | source); rows sum to one per source."""

    t: dict[tuple[str, str], float] = field(default_factory=dict)

    def prob(self, source: str, target: str) -> float:
        return self.t.get((source, target), 0.0)

    def translations(self, source: str) -> dict[str, float]:
        return {f: p for (e, f), p in self.t.items() if e == source}


@dataclass(frozen=True)
class AlignmentLinks:
    """Word links for one sentence pair as (source_index, target_index)."""

    links: frozenset[tuple[int, int]]

    @classmethod
    def of(cls, *pairs: tuple[int, int]) -> "AlignmentLinks":
        return cls(links=frozenset(pairs))


def train_model1(
    corpus: ParallelCorpus, iterations: int = 10
) -> tuple[TranslationLexicon, list[float]]:
    """Run IBM Model 1 EM and return the lexicon plus per-iteration log-likelihoods.

    Initialization is uniform over the target vocabulary. Entry i of the
    likelihood list is the corpus log-likelihood (natural log, including the
    uniform alignment prior 1/(l+1) per target token) under the parameters in
    force during iteration i, so the list is non-decreasing.
    """
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    if len(corpus) == 0:
        raise DataError("cannot train Model 1 on an empty corpus")

    pairs = [
        ([NULL_WORD] + list(src.tokens), list(tgt.tokens)) for src, tgt in corpus.pairs
    ]
    target_vocab = {f for _, tgt in pairs for f in tgt}
    if not target_vocab:
        raise DataError("corpus has no target tokens")
    uniform = 1.0 / len(target_vocab)

    t: dict[tuple[str, str], float] = {}
    for src, tgt in pairs:
        for e in src:
            for f in tgt:
                t[(e, f)] = uniform

    log_likelihoods: list[float] = []
    for _ in range(iterations):
        counts: dict[tuple[str, str], float] = defaultdict(float)
        totals: dict[str, float] = defaultdict(float)
        ll = 0.0
        for src, tgt in pairs:
            for f in tgt:
                denom = sum(t[(e, f)] for e in src)
                ll += math.log(denom) - math.log(len(src))
                for e in src:
                    share = t[(e, f)] / denom
                    counts[(e, f)] += share
                    totals[e] += share
        for (e, f), c in counts.items():
            t[(e, f)] = c / totals[e]
        log_likelihoods.append(ll)
    return TranslationLexicon(t=dict(t)), log_likelihoods


def viterbi_align(
    lexicon: TranslationLexicon, source: Sentence, target: Sentence
) -> AlignmentLinks:
    """Link each target token to its most likely source token.

    Ties between source positions go to the smallest index; NULL absorbs a
    target token (producing no link) only when it strictly beats every
    source position.
    """
    if len(source.tokens) == 0 or len(target.tokens) == 0:
        raise DataError("viterbi_align requires non-empty sentences")
    links = set()
    for j, f in enumerate(target.tokens):
        best_i = 0
        best_p = lexicon.prob(source.tokens[0], f)
        for i, e in enumerate(source.tokens[1:], start=1):
            p = lexicon.prob(e, f)
            if p > best_p:
                best_p = p
                best_i = i
        if lexicon.prob(NULL_WORD, f) > best_p:
            continue
        links.add((best_i, j))
    return AlignmentLinks(links=frozenset(links))


def _check_bounds(links: AlignmentLinks, source_len: int, target_len: int, name: str):
    for i, j in links.links:
        if not (0 <= i < source_len and 0 <= j < target_len):
            raise DataError(
                f"{name} link ({i}, {j}) outside declared bounds "
                f"{source_len}x{target_len}"
            )


def symmetrize(
    forward: AlignmentLinks,
    backward: AlignmentLinks,
    heuristic: str,
    source_len: int,
    target_len: int,
) -> AlignmentLinks:
    """Merge two directional link sets; both must be in forward orientation.

    ``intersection`` and ``union`` are set operations. ``grow-diag`` starts
    from the intersection and keeps scanning the union in row-major order,
    adding any link 8-adjacent to one already present, until a full pass
    adds nothing.
    """
    _check_bounds(forward, source_len, target_len, "forward")
    _check_bounds(backward, source_len, target_len, "backward")
    inter = forward.links & backward.links
    union = forward.links | backward.links
    if heuristic == "intersection":
        return AlignmentLinks(links=inter)
    if heuristic == "union":
        return AlignmentLinks(links=union)
    if heuristic != "grow-diag":
        raise ValueError(f"unknown symmetrization heuristic: {heuristic!r}")

    result = set(inter)
    candidates = sorted(union - result)
    changed = True
    while changed:
        changed = False
        for link in candidates:
            if link in result:
                continue
            i, j = link
            if any(
                max(abs(i - i2), abs(j - j2)) == 1 for i2, j2 in result
            ):
                result.add(link)
                changed = True
    return AlignmentLinks(links=frozenset(result))


def write_lexicon(lexicon: TranslationLexicon) -> str:
    """TSV rows `source target prob`, sorted by source, then prob descending."""
    rows = sorted(
        lexicon.t.items(), key=lambda item: (item[0][0], -item[1], item[0][1])
    )
    return "".join(f"{e}\t{f}\t{p:.10g}\n" for (e, f), p in rows)


def read_lexicon(text: str) -> TranslationLexicon:
    from corpusforge.errors import ParseError

    t: dict[tuple[str, str], float] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise ParseError("expected 3 tab-separated fields", line=lineno)
        try:
            t[(fields[0], fields[1])] = float(fields[2])
        except ValueError as exc:
            raise ParseError(f"bad probability: {fields[2]!r}", line=lineno) from exc
    return TranslationLexicon(t=t)
