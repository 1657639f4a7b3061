"""Pseudo in-domain data selection.

General-domain sentences (or pairs) are scored against an in-domain profile
with three criteria: cosine tf-idf overlap, cross-entropy difference between
an in-domain and a general language model, and word-level edit-distance
similarity to in-domain sentences. Per-criterion ranks (average rank for
ties) are combined by weighted mean and the top fraction of candidates is
kept.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from corpusforge.errors import DataError
from corpusforge.lm import NGramModel, cross_entropy, train_lm
from corpusforge.text_pipeline import Sentence, require_nonempty

PAIR_MODES = ("source-side", "target-side", "both-sides-averaged")


@dataclass
class DomainProfile:
    """Everything needed to score a candidate for domain relevance."""

    tfidf_centroid: dict[str, float]
    idf: dict[str, float]
    in_lm: NGramModel
    gen_lm: NGramModel
    edit_reference: list[tuple[str, ...]]


@dataclass
class SelectionConfig:
    acceptance_rate: float = 0.20
    edit_sample_size: int = 2000
    pair_mode: str = "target-side"
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        if not 0.0 < self.acceptance_rate <= 1.0:
            raise ValueError(
                f"acceptance rate must be in (0, 1], got {self.acceptance_rate}"
            )
        if self.pair_mode not in PAIR_MODES:
            raise ValueError(f"pair_mode must be one of {PAIR_MODES}")


@dataclass
class ScoredCandidate:
    item: object  # Sentence or (source, target) pair
    tfidf_sim: float
    ced: float
    edit_sim: float
    combined_rank: int = 0
    selected: bool = False


def _idf_table(corpus: list[Sentence]) -> dict[str, float]:
    # Each sentence counts as one document; +1 keeps terms present in every
    # sentence from vanishing (a one-sentence profile must still have support).
    df: dict[str, int] = {}
    for sent in corpus:
        for term in set(sent.tokens):
            df[term] = df.get(term, 0) + 1
    n = len(corpus)
    return {term: math.log(n / d) + 1.0 for term, d in df.items()}


def _tfidf_vector(tokens, idf: dict[str, float]) -> dict[str, float]:
    vec: dict[str, float] = {}
    for tok in tokens:
        w = idf.get(tok)
        if w is not None:
            vec[tok] = vec.get(tok, 0.0) + w
    return vec


def _l2_normalize(vec: dict[str, float]) -> dict[str, float]:
    norm = math.sqrt(sum(w * w for w in vec.values()))
    if norm == 0.0:
        return dict(vec)
    return {t: w / norm for t, w in vec.items()}


def build_profile(
    in_domain: list[Sentence],
    general: list[Sentence],
    lm_order: int = 3,
    min_count: int = 1,
    edit_sample_size: int = 2000,
    seed: int = 0,
) -> DomainProfile:
    """Build the scoring profile from an in-domain and a general corpus.

    The general LM is trained on a seeded sample of general sentences whose
    token count matches the in-domain corpus, so the cross-entropy
    difference is not biased by corpus size.
    """
    require_nonempty(in_domain, "in-domain corpus")
    require_nonempty(general, "general corpus")

    idf = _idf_table(in_domain)
    centroid: dict[str, float] = {}
    for sent in in_domain:
        for term, w in _tfidf_vector(sent.tokens, idf).items():
            centroid[term] = centroid.get(term, 0.0) + w
    if not centroid:
        raise DataError("in-domain corpus has no tokens")
    centroid = _l2_normalize(centroid)

    rng = random.Random(seed)
    target_tokens = sum(len(s.tokens) for s in in_domain)
    indices = list(range(len(general)))
    rng.shuffle(indices)
    chosen: list[int] = []
    token_budget = 0
    for k in indices:
        if token_budget >= target_tokens and chosen:
            break
        chosen.append(k)
        token_budget += len(general[k].tokens)
    gen_sample = [general[k] for k in sorted(chosen)]

    reference = [s.tokens for s in in_domain]
    if len(reference) > edit_sample_size:
        keep = sorted(rng.sample(range(len(reference)), edit_sample_size))
        reference = [reference[k] for k in keep]

    return DomainProfile(
        tfidf_centroid=centroid,
        idf=idf,
        in_lm=train_lm(in_domain, order=lm_order, min_count=min_count),
        gen_lm=train_lm(gen_sample, order=lm_order, min_count=min_count),
        edit_reference=reference,
    )


def tfidf_score(profile: DomainProfile, candidate: Sentence) -> float:
    """Cosine between the candidate's tf-idf vector and the in-domain centroid.

    Terms unseen in-domain contribute nothing; a candidate with no in-domain
    terms scores 0.
    """
    vec = _tfidf_vector(candidate.tokens, profile.idf)
    norm = math.sqrt(sum(w * w for w in vec.values()))
    centroid_norm = math.sqrt(
        sum(w * w for w in profile.tfidf_centroid.values())
    )
    if norm == 0.0 or centroid_norm == 0.0:
        return 0.0
    dot = sum(w * profile.tfidf_centroid.get(t, 0.0) for t, w in vec.items())
    return dot / (norm * centroid_norm)


def ced_score(profile: DomainProfile, candidate: Sentence) -> float:
    """Cross-entropy difference H_in - H_gen; lower means more in-domain."""
    return cross_entropy(profile.in_lm, candidate) - cross_entropy(
        profile.gen_lm, candidate
    )


def word_edit_distance(a, b) -> int:
    """Plain word-level Levenshtein distance."""
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, tok_a in enumerate(a, start=1):
        current = [i]
        for j, tok_b in enumerate(b, start=1):
            current.append(
                min(
                    previous[j] + 1,
                    current[j - 1] + 1,
                    previous[j - 1] + (tok_a != tok_b),
                )
            )
        previous = current
    return previous[len(b)]


def edit_score(profile: DomainProfile, candidate: Sentence) -> float:
    """Best normalized edit similarity against the in-domain reference set."""
    best = 0.0
    for ref in profile.edit_reference:
        denom = max(len(candidate.tokens), len(ref))
        if denom == 0:
            return 1.0
        sim = 1.0 - word_edit_distance(candidate.tokens, ref) / denom
        if sim > best:
            best = sim
            if best == 1.0:
                break
    return best


def _average_ranks(values: list[float], reverse: bool) -> list[float]:
    """Rank 1 is best; tied values share the average of their positions."""
    order = sorted(range(len(values)), key=lambda k: values[k], reverse=reverse)
    ranks = [0.0] * len(values)
    pos = 0
    while pos < len(order):
        end = pos
        while end + 1 < len(order) and values[order[end + 1]] == values[order[pos]]:
            end += 1
        shared = (pos + end) / 2 + 1
        for k in range(pos, end + 1):
            ranks[order[k]] = shared
        pos = end + 1
    return ranks


def combine_ranks(
    scores: list[tuple[float, float, float]],
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0),
) -> tuple[list[float], list[int]]:
    """Combine (tfidf, ced, edit) triples into a selection order.

    tf-idf and edit similarity rank descending, cross-entropy difference
    ascending. Returns the weighted mean rank per candidate and candidate
    indices sorted by that mean (input index breaks exact ties).
    """
    tf_ranks = _average_ranks([s[0] for s in scores], reverse=True)
    ced_ranks = _average_ranks([s[1] for s in scores], reverse=False)
    edit_ranks = _average_ranks([s[2] for s in scores], reverse=True)
    w_tf, w_ced, w_edit = weights
    total = w_tf + w_ced + w_edit
    mean = [
        (w_tf * tf_ranks[k] + w_ced * ced_ranks[k] + w_edit * edit_ranks[k]) / total
        for k in range(len(scores))
    ]
    order = sorted(range(len(scores)), key=lambda k: (mean[k], k))
    return mean, order


def _score_item(profile: DomainProfile, item, pair_mode: str):
    if isinstance(item, tuple):
        src, tgt = item
        if pair_mode == "source-side":
            sides = [src]
        elif pair_mode == "target-side":
            sides = [tgt]
        else:
            sides = [src, tgt]
    else:
        sides = [item]
    triples = [
        (tfidf_score(profile, s), ced_score(profile, s), edit_score(profile, s))
        for s in sides
    ]
    k = len(triples)
    return tuple(sum(t[c] for t in triples) / k for c in range(3))


def combine_and_resample(
    candidates: list,
    profile: DomainProfile,
    config: SelectionConfig | None = None,
) -> tuple[list, list[ScoredCandidate]]:
    """Score, rank, and keep the top acceptance_rate fraction of candidates.

    Returns the selected items (in combined-rank order) and the full score
    table in input order. Exactly ceil(acceptance_rate * N) items are kept.
    """
    config = config or SelectionConfig()
    if not candidates:
        raise DataError("no candidates to select from")
    scores = [_score_item(profile, item, config.pair_mode) for item in candidates]
    _, order = combine_ranks(scores, config.weights)
    n_keep = math.ceil(config.acceptance_rate * len(candidates))
    selected_indices = order[:n_keep]
    selected_set = set(selected_indices)
    table = [
        ScoredCandidate(
            item=candidates[k],
            tfidf_sim=scores[k][0],
            ced=scores[k][1],
            edit_sim=scores[k][2],
        )
        for k in range(len(candidates))
    ]
    for position, k in enumerate(order, start=1):
        table[k].combined_rank = position
        table[k].selected = k in selected_set
    return [candidates[k] for k in selected_indices], table


def select_for_lm(
    monolingual: list[Sentence],
    profile: DomainProfile,
    config: SelectionConfig | None = None,
) -> list[Sentence]:
    """Select in-domain-looking sentences for language-model training."""
    selected, _ = combine_and_resample(list(monolingual), profile, config)
    return selected


def score_table_tsv(table: list[ScoredCandidate]) -> str:
    """`index tfidf ced edit combined_rank selected` rows, input order."""
    lines = ["index\ttfidf\tced\tedit\tcombined_rank\tselected"]
    for idx, row in enumerate(table):
        lines.append(
            f"{idx}\t{row.tfidf_sim:.6f}\t{row.ced:.6f}\t{row.edit_sim:.6f}"
            f"\t{row.combined_rank}\t{int(row.selected)}"
        )
    return "\n".join(lines) + "\n"
