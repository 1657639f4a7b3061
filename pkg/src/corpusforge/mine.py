"""Mine parallel sentence pairs out of comparable document pairs.

Each document pair is scored sentence-by-sentence with a lexicon-coverage
similarity, globally aligned with a gap-penalized Needleman-Wunsch dynamic
program, and filtered by a similarity threshold. Document pairs are
independent work units, so a collection fans out over a process pool and
merges results in submission order; output is identical for any worker
count. A grid tuner picks the threshold and gap penalty that maximize F1
against gold alignments.
"""

from __future__ import annotations

import functools
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from corpusforge.errors import DataError
from corpusforge.text_pipeline import Document, ParallelCorpus, Sentence
from corpusforge.word_align import TranslationLexicon

DEFAULT_THRESHOLD_GRID = tuple(round(0.1 * k, 1) for k in range(1, 10))
DEFAULT_PENALTY_GRID = (-0.05, -0.1, -0.2, -0.4, -0.8)


@dataclass
class MiningConfig:
    threshold: float = 0.5
    gap_penalty: float = -0.2
    min_prob: float = 0.1
    workers: int = 1

    def __post_init__(self):
        # Thresholds above 1.0 are tolerated as an explicit "mine nothing".
        if self.threshold < 0.0:
            raise ValueError(f"threshold must be >= 0, got {self.threshold}")
        if self.gap_penalty > 0:
            raise ValueError(f"gap penalty must be <= 0, got {self.gap_penalty}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


@dataclass
class DocumentPair:
    source: Document
    target: Document


@dataclass(frozen=True)
class AlignmentStep:
    """One move of the alignment path: a match or a one-sided gap."""

    kind: str  # "match" | "gap_source" | "gap_target"
    source_index: int | None = None
    target_index: int | None = None

    @classmethod
    def match(cls, i: int, j: int) -> "AlignmentStep":
        return cls("match", i, j)

    @classmethod
    def gap_source(cls, i: int) -> "AlignmentStep":
        return cls("gap_source", source_index=i)

    @classmethod
    def gap_target(cls, j: int) -> "AlignmentStep":
        return cls("gap_target", target_index=j)


@dataclass
class AlignmentPath:
    steps: list[AlignmentStep]
    score: float

    @property
    def gap_count(self) -> int:
        return sum(1 for s in self.steps if s.kind != "match")

    def matches(self) -> list[tuple[int, int]]:
        return [
            (s.source_index, s.target_index) for s in self.steps if s.kind == "match"
        ]


@dataclass
class MinedPair:
    source: Sentence
    target: Sentence
    similarity: float
    source_doc: str
    target_doc: str


@dataclass
class MiningReport:
    document_pairs: int = 0
    pairs_emitted: int = 0
    wall_time_s: float = 0.0
    per_pair_yield: list[tuple[str, str, int]] = field(default_factory=list)

    def as_lines(self, include_timings: bool = True) -> list[str]:
        lines = [
            f"document_pairs={self.document_pairs}",
            f"pairs_emitted={self.pairs_emitted}",
        ]
        if include_timings:
            lines.append(f"wall_time_s={self.wall_time_s:.3f}")
        for src_id, tgt_id, n in self.per_pair_yield:
            lines.append(f"yield.{src_id}:{tgt_id}={n}")
        return lines


@dataclass
class TuningResult:
    best_threshold: float
    best_gap_penalty: float
    precision: float
    recall: float
    f1: float
    grid: list[tuple[float, float, float, float, float]]


def score_pair(
    lexicon: TranslationLexicon, source: Sentence, target: Sentence, min_prob: float = 0.1
) -> float:
    """Lexicon-coverage similarity in [0, 1].

    Harmonic mean of the covered-token fractions on each side, times the
    length ratio min/max. A source token is covered when some target token
    is a lexicon translation with probability >= min_prob, or when the same
    literal token appears on the other side (numbers, names, punctuation).
    """
    n_src, n_tgt = len(source.tokens), len(target.tokens)
    if n_src == 0 or n_tgt == 0:
        return 0.0
    src_counts = Counter(source.tokens)
    tgt_counts = Counter(target.tokens)
    src_types = set(src_counts)
    tgt_types = set(tgt_counts)

    covered_src = sum(
        c
        for e, c in src_counts.items()
        if e in tgt_types or any(lexicon.prob(e, f) >= min_prob for f in tgt_types)
    )
    covered_tgt = sum(
        c
        for f, c in tgt_counts.items()
        if f in src_types or any(lexicon.prob(e, f) >= min_prob for e in src_types)
    )
    a = covered_src / n_src
    b = covered_tgt / n_tgt
    if a + b == 0.0:
        return 0.0
    harmonic = 2.0 * a * b / (a + b)
    return harmonic * (min(n_src, n_tgt) / max(n_src, n_tgt))


def nw_align_matrix(
    scores: list[list[float]], gap_penalty: float, shape: tuple[int, int] | None = None
) -> AlignmentPath:
    """Needleman-Wunsch on a precomputed score matrix.

    Maximizes total match score plus gap_penalty per gap over all monotone
    global alignments. Backtrace ties prefer match, then gap-source, then
    gap-target. ``shape`` makes the dimensions explicit when either side is
    empty and the matrix alone cannot convey them.
    """
    if shape is not None:
        n, m = shape
    else:
        n = len(scores)
        m = len(scores[0]) if n else 0
    h = [[0.0] * (m + 1) for _ in range(n + 1)]
    # borders accumulate the same float additions the backtrace re-derives
    for i in range(1, n + 1):
        h[i][0] = h[i - 1][0] + gap_penalty
    for j in range(1, m + 1):
        h[0][j] = h[0][j - 1] + gap_penalty
    for i in range(1, n + 1):
        row, prev, score_row = h[i], h[i - 1], scores[i - 1]
        for j in range(1, m + 1):
            row[j] = max(
                prev[j - 1] + score_row[j - 1],
                prev[j] + gap_penalty,
                row[j - 1] + gap_penalty,
            )
    steps: list[AlignmentStep] = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and h[i][j] == h[i - 1][j - 1] + scores[i - 1][j - 1]:
            steps.append(AlignmentStep.match(i - 1, j - 1))
            i -= 1
            j -= 1
        elif i > 0 and h[i][j] == h[i - 1][j] + gap_penalty:
            steps.append(AlignmentStep.gap_source(i - 1))
            i -= 1
        else:
            steps.append(AlignmentStep.gap_target(j - 1))
            j -= 1
    steps.reverse()
    return AlignmentPath(steps=steps, score=h[n][m])


def nw_align(
    source: list[Sentence], target: list[Sentence], scorer, gap_penalty: float
) -> AlignmentPath:
    """Globally align two sentence sequences under a pairwise scorer."""
    scores = [[scorer(s, t) for t in target] for s in source]
    return nw_align_matrix(scores, gap_penalty, shape=(len(source), len(target)))


def _score_matrix(pair: DocumentPair, lexicon, min_prob: float) -> list[list[float]]:
    return [
        [score_pair(lexicon, s, t, min_prob) for t in pair.target.sentences]
        for s in pair.source.sentences
    ]


def mine_document_pair(
    pair: DocumentPair, lexicon: TranslationLexicon, config: MiningConfig
) -> list[MinedPair]:
    """Align one document pair and keep matches scoring at or above threshold."""
    scores = _score_matrix(pair, lexicon, config.min_prob)
    path = nw_align_matrix(
        scores,
        config.gap_penalty,
        shape=(len(pair.source.sentences), len(pair.target.sentences)),
    )
    mined: list[MinedPair] = []
    for i, j in path.matches():
        similarity = scores[i][j]
        if similarity >= config.threshold:
            mined.append(
                MinedPair(
                    source=pair.source.sentences[i],
                    target=pair.target.sentences[j],
                    similarity=similarity,
                    source_doc=pair.source.id,
                    target_doc=pair.target.id,
                )
            )
    return mined


def mine_collection(
    pairs: list[DocumentPair], lexicon: TranslationLexicon, config: MiningConfig
) -> tuple[list[MinedPair], MiningReport]:
    """Mine many document pairs, fanning out over config.workers processes.

    Results are merged in input order, so output does not depend on the
    worker count or scheduling.
    """
    start = time.perf_counter()
    if config.workers == 1 or len(pairs) <= 1:
        per_doc = [mine_document_pair(p, lexicon, config) for p in pairs]
    else:
        task = functools.partial(mine_document_pair, lexicon=lexicon, config=config)
        chunksize = max(1, len(pairs) // (config.workers * 4))
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            per_doc = list(pool.map(task, pairs, chunksize=chunksize))
    mined = [mp for doc_result in per_doc for mp in doc_result]
    report = MiningReport(
        document_pairs=len(pairs),
        pairs_emitted=len(mined),
        wall_time_s=time.perf_counter() - start,
        per_pair_yield=[
            (pair.source.id, pair.target.id, len(doc_result))
            for pair, doc_result in zip(pairs, per_doc)
        ],
    )
    return mined, report


def as_parallel_corpus(mined: list[MinedPair]) -> ParallelCorpus:
    return ParallelCorpus(pairs=[(mp.source, mp.target) for mp in mined])


def tune(
    gold: list[tuple[DocumentPair, set[tuple[int, int]]]],
    lexicon: TranslationLexicon,
    threshold_grid=DEFAULT_THRESHOLD_GRID,
    penalty_grid=DEFAULT_PENALTY_GRID,
    min_prob: float = 0.1,
) -> TuningResult:
    """Grid-search threshold and gap penalty against gold sentence alignments.

    Every grid cell mines all gold documents and scores the emitted (i, j)
    matches with micro-averaged precision/recall/F1 (precision is 0 when
    nothing is emitted). The best cell maximizes F1; ties prefer the lower
    threshold, then the less-negative penalty. The full grid is returned.
    """
    if not gold:
        raise DataError("tuning requires at least one gold document pair")
    if not threshold_grid or not penalty_grid:
        raise ValueError("tuning grids must be non-empty")

    prepared = []
    for pair, links in gold:
        n, m = len(pair.source.sentences), len(pair.target.sentences)
        for i, j in links:
            if not (0 <= i < n and 0 <= j < m):
                raise DataError(
                    f"gold link ({i}, {j}) outside document pair "
                    f"{pair.source.id}:{pair.target.id} ({n}x{m} sentences)"
                )
        prepared.append((_score_matrix(pair, lexicon, min_prob), set(links)))
    total_gold = sum(len(links) for _, links in prepared)

    cells: dict[tuple[float, float], tuple[float, float, float]] = {}
    for gamma in penalty_grid:
        doc_matches = [
            ([(i, j, scores[i][j]) for i, j in nw_align_matrix(scores, gamma).matches()], links)
            for scores, links in prepared
        ]
        for theta in threshold_grid:
            tp = 0
            n_pred = 0
            for matches, links in doc_matches:
                predicted = {(i, j) for i, j, sim in matches if sim >= theta}
                n_pred += len(predicted)
                tp += len(predicted & links)
            precision = tp / n_pred if n_pred else 0.0
            recall = tp / total_gold if total_gold else 0.0
            f1 = (
                2 * precision * recall / (precision + recall)
                if precision + recall
                else 0.0
            )
            cells[(theta, gamma)] = (precision, recall, f1)

    grid = [
        (theta, gamma) + cells[(theta, gamma)]
        for theta in threshold_grid
        for gamma in penalty_grid
    ]
    best_theta, best_gamma = max(
        cells, key=lambda tg: (cells[tg][2], -tg[0], tg[1])
    )
    precision, recall, f1 = cells[(best_theta, best_gamma)]
    return TuningResult(
        best_threshold=best_theta,
        best_gap_penalty=best_gamma,
        precision=precision,
        recall=recall,
        f1=f1,
        grid=grid,
    )
