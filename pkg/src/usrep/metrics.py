"""Evaluation suite: BLEU-1/4, ROUGE-L, CIDEr, keyword F1, embedding F1.

All metrics operate on (hypothesis, reference) corpora with a single
reference per item.  Chinese text is tokenized character-by-character with
ASCII alphanumeric runs kept whole; English text is lowercased and split on
non-alphanumeric runs.  Embedding-based F1 consumes externally computed
per-token vectors; no model runs here.  ``compare_runs`` expresses the
difference between two evaluation runs as relative gains per metric.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .kernels import lcs_length
from .segmenter import Report, normalize_text

__all__ = [
    "EmbeddingsError",
    "IdMismatchError",
    "MetricReport",
    "MkF1Result",
    "TokenizedPair",
    "UnknownSiteError",
    "bleu",
    "cider",
    "compare_runs",
    "evaluate_corpus",
    "greedy_embed_f1",
    "load_embeddings",
    "load_keywords",
    "mkf1",
    "rouge_l",
    "tokenize_for_metrics",
]

_ASCII_RUN = re.compile(r"[0-9A-Za-z]+")
_EN_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)


class IdMismatchError(ValueError):
    """Hypothesis and reference corpora whose ids do not align."""


class UnknownSiteError(ValueError):
    """A pair whose site has no keyword list."""


class EmbeddingsError(ValueError):
    """Malformed or incomplete embeddings provider data."""


@dataclass(frozen=True)
class TokenizedPair:
    hyp: tuple[str, ...]
    ref: tuple[str, ...]
    language: str


def tokenize_for_metrics(text: str, language: str) -> list[str]:
    """Language-specific metric tokenization; a pure function of its inputs.

    English: lowercase, split on non-alphanumeric runs.  Chinese: one token
    per Han character, with contiguous ASCII alphanumeric runs (e.g. "CFDI")
    kept as single tokens and punctuation dropped.
    """
    text = normalize_text(text)
    if language == "en":
        return _EN_TOKEN.findall(text.lower())

    tokens: list[str] = []
    pos = 0
    for match in _ASCII_RUN.finditer(text):
        tokens_from = [ch for ch in text[pos : match.start()] if ch.isalnum()]
        tokens.extend(tokens_from)
        tokens.append(match.group(0))
        pos = match.end()
    tokens.extend(ch for ch in text[pos:] if ch.isalnum())
    return tokens


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _brevity_penalty(hyp_len: int, ref_len: int) -> float:
    if hyp_len == 0:
        return 0.0
    return min(1.0, math.exp(1.0 - ref_len / hyp_len))


def _sentence_bleu(pair: TokenizedPair, n: int) -> float:
    """Smoothed per-pair BLEU: add-one on orders with zero matches."""
    if not pair.hyp:
        return 0.0
    log_sum = 0.0
    for k in range(1, n + 1):
        hyp_counts = _ngram_counts(pair.hyp, k)
        ref_counts = _ngram_counts(pair.ref, k)
        matches = sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
        total = max(0, len(pair.hyp) - k + 1)
        p = matches / total if matches > 0 else (matches + 1) / (total + 1)
        log_sum += math.log(p) / n
    return _brevity_penalty(len(pair.hyp), len(pair.ref)) * math.exp(log_sum)


def bleu(pairs: Sequence[TokenizedPair], n: int = 4, mode: str = "corpus") -> float:
    """BLEU with clipped modified n-gram precisions against a single reference.

    Corpus mode pools match and length totals over all pairs before the
    geometric mean and brevity penalty; sentence mode scores each pair with
    add-one smoothing and averages.
    """
    if not 1 <= n <= 4:
        raise ValueError(f"n must be in 1..4, got {n}")
    if not pairs:
        raise ValueError("bleu requires at least one pair")
    if mode == "sentence":
        return sum(_sentence_bleu(pair, n) for pair in pairs) / len(pairs)
    if mode != "corpus":
        raise ValueError(f"unknown BLEU mode {mode!r}")

    log_sum = 0.0
    for k in range(1, n + 1):
        matches = 0
        total = 0
        for pair in pairs:
            hyp_counts = _ngram_counts(pair.hyp, k)
            ref_counts = _ngram_counts(pair.ref, k)
            matches += sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
            total += max(0, len(pair.hyp) - k + 1)
        if matches == 0 or total == 0:
            return 0.0
        log_sum += math.log(matches / total) / n
    hyp_len = sum(len(p.hyp) for p in pairs)
    ref_len = sum(len(p.ref) for p in pairs)
    return _brevity_penalty(hyp_len, ref_len) * math.exp(log_sum)


def _rouge_l_pair(pair: TokenizedPair, beta: float) -> float:
    if not pair.hyp or not pair.ref:
        return 0.0
    lcs = lcs_length(pair.hyp, pair.ref)
    if lcs == 0:
        return 0.0
    precision = lcs / len(pair.hyp)
    recall = lcs / len(pair.ref)
    beta2 = beta * beta
    return (1 + beta2) * precision * recall / (recall + beta2 * precision)


def rouge_l(pairs: Sequence[TokenizedPair], beta: float = 1.0) -> float:
    """Mean per-pair LCS F-measure (balanced by default; *beta* > 1 favors recall)."""
    if not pairs:
        raise ValueError("rouge_l requires at least one pair")
    return sum(_rouge_l_pair(pair, beta) for pair in pairs) / len(pairs)


def _tf_idf_vector(counts: Counter, idf: dict, total: int) -> dict:
    if total <= 0:
        return {}
    return {g: (c / total) * idf[g] for g, c in counts.items()}


def _cosine(u: Mapping, v: Mapping) -> float:
    norm_u = math.sqrt(sum(x * x for x in u.values()))
    norm_v = math.sqrt(sum(x * x for x in v.values()))
    if norm_u == 0.0 or norm_v == 0.0:
        return 0.0
    dot = sum(x * v[g] for g, x in u.items() if g in v)
    return dot / (norm_u * norm_v)


def cider_per_item(
    pairs: Sequence[TokenizedPair], max_n: int = 4, scale: float = 10.0
) -> list[float]:
    """Per-item CIDEr: scaled mean cosine of TF-IDF n-gram vectors, n = 1..max_n.

    IDF is computed from references only, with natural log and a floor of one
    in the document-frequency denominator.
    """
    if not pairs:
        raise ValueError("cider requires at least one pair")
    num_items = len(pairs)

    idf_by_n: list[dict] = []
    for k in range(1, max_n + 1):
        doc_freq: Counter = Counter()
        for pair in pairs:
            doc_freq.update(set(_ngram_counts(pair.ref, k)))
        idf_by_n.append(
            {g: math.log(num_items / max(1, df)) for g, df in doc_freq.items()}
        )

    scores: list[float] = []
    for pair in pairs:
        sim_sum = 0.0
        for k in range(1, max_n + 1):
            idf = idf_by_n[k - 1]
            hyp_counts = _ngram_counts(pair.hyp, k)
            ref_counts = _ngram_counts(pair.ref, k)
            # n-grams absent from every reference get the floored idf.
            floor_idf = math.log(num_items)
            full_idf = {
                g: idf.get(g, floor_idf) for g in set(hyp_counts) | set(ref_counts)
            }
            hyp_vec = _tf_idf_vector(hyp_counts, full_idf, len(pair.hyp) - k + 1)
            ref_vec = _tf_idf_vector(ref_counts, full_idf, len(pair.ref) - k + 1)
            sim_sum += _cosine(hyp_vec, ref_vec)
        scores.append(scale * sim_sum / max_n)
    return scores


def cider(pairs: Sequence[TokenizedPair], max_n: int = 4, scale: float = 10.0) -> float:
    """Corpus CIDEr: mean of the per-item scores."""
    per_item = cider_per_item(pairs, max_n, scale)
    return sum(per_item) / len(per_item)


@dataclass(frozen=True)
class MkF1Result:
    """Keyword-F1 summary; ``macro`` is the headline value."""

    macro: float
    micro: float
    per_pair: tuple[float, ...] = field(default=())


def _keyword_norm(text: str) -> str:
    return normalize_text(text).casefold()


def _detected_keywords(text: str, keywords: Sequence[str]) -> set[str]:
    normalized = _keyword_norm(text)
    return {kw for kw in keywords if _keyword_norm(kw) in normalized}


def mkf1(
    items: Sequence[tuple[str, str, str]],
    keywords: Mapping[str, Sequence[str]],
) -> MkF1Result:
    """Matching-keyword F1 over (hyp text, ref text, site) triples.

    A keyword counts as present when its normalized form occurs as a
    substring of the normalized text (case-insensitive).  A pair where
    neither side contains any keyword scores 1.0 by convention.  Micro
    aggregates keyword hits globally before the F1.
    """
    if not items:
        raise ValueError("mkf1 requires at least one item")
    per_pair: list[float] = []
    tp = fp = fn = 0
    for hyp_text, ref_text, site in items:
        if site not in keywords:
            raise UnknownSiteError(f"no keyword list for site {site!r}")
        site_keywords = keywords[site]
        hyp_set = _detected_keywords(hyp_text, site_keywords)
        ref_set = _detected_keywords(ref_text, site_keywords)
        common = hyp_set & ref_set
        tp += len(common)
        fp += len(hyp_set - ref_set)
        fn += len(ref_set - hyp_set)
        precision = len(common) / len(hyp_set) if hyp_set else (1.0 if not ref_set else 0.0)
        recall = len(common) / len(ref_set) if ref_set else (1.0 if not hyp_set else 0.0)
        f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
        per_pair.append(f1)

    micro_p = tp / (tp + fp) if tp + fp else 1.0
    micro_r = tp / (tp + fn) if tp + fn else 1.0
    micro = 0.0 if micro_p + micro_r == 0 else 2 * micro_p * micro_r / (micro_p + micro_r)
    return MkF1Result(
        macro=sum(per_pair) / len(per_pair),
        micro=micro,
        per_pair=tuple(per_pair),
    )


def greedy_embed_f1(hyp_vectors: np.ndarray, ref_vectors: np.ndarray) -> float:
    """Greedy maximum-cosine token alignment F1 between two embedding matrices.

    Precision is the mean over hypothesis tokens of the best cosine
    similarity to any reference token; recall is symmetric.
    """
    hyp = np.asarray(hyp_vectors, dtype=np.float64)
    ref = np.asarray(ref_vectors, dtype=np.float64)
    if hyp.ndim != 2 or ref.ndim != 2 or hyp.shape[0] == 0 or ref.shape[0] == 0:
        raise EmbeddingsError("both sides need at least one embedding vector")
    if hyp.shape[1] != ref.shape[1]:
        raise EmbeddingsError(
            f"embedding dimension mismatch: {hyp.shape[1]} vs {ref.shape[1]}"
        )
    if np.isnan(hyp).any() or np.isnan(ref).any():
        raise EmbeddingsError("embeddings contain NaN entries")

    def unit_rows(mat: np.ndarray) -> np.ndarray:
        norms = np.linalg.norm(mat, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0  # zero vectors keep cosine 0 with everything
        return mat / norms

    sim = unit_rows(hyp) @ unit_rows(ref).T
    precision = float(sim.max(axis=1).mean())
    recall = float(sim.max(axis=0).mean())
    if precision + recall == 0.0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def load_keywords(path: str | Path) -> dict[str, list[str]]:
    """Load the site-to-keywords mapping from a JSON file."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: keyword file must map site -> list of keywords")
    keywords: dict[str, list[str]] = {}
    for site, words in data.items():
        if not isinstance(words, list) or not all(isinstance(w, str) for w in words):
            raise ValueError(f"{path}: site {site!r} must map to a list of strings")
        cleaned = [normalize_text(w) for w in words]
        if any(not w for w in cleaned):
            raise ValueError(f"{path}: site {site!r} contains an empty keyword")
        keywords[site] = cleaned
    return keywords


def load_embeddings(path: str | Path) -> dict[tuple[str, str], np.ndarray]:
    """Load per-token embeddings keyed by (id, role) from a JSON-lines file."""
    table: dict[tuple[str, str], np.ndarray] = {}
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise EmbeddingsError(f"{path}: line {line_number}: invalid JSON ({exc.msg})")
            role = record.get("role")
            if role not in ("hyp", "ref"):
                raise EmbeddingsError(f"{path}: line {line_number}: role must be 'hyp' or 'ref'")
            vectors = np.asarray(record.get("vectors", []), dtype=np.float64)
            if vectors.ndim != 2 or vectors.shape[0] == 0:
                raise EmbeddingsError(
                    f"{path}: line {line_number}: vectors must be a non-empty 2-d array"
                )
            if dim is None:
                dim = vectors.shape[1]
            elif vectors.shape[1] != dim:
                raise EmbeddingsError(
                    f"{path}: line {line_number}: dimension {vectors.shape[1]} != {dim}"
                )
            if np.isnan(vectors).any():
                raise EmbeddingsError(f"{path}: line {line_number}: NaN embedding entry")
            table[(str(record.get("id")), role)] = vectors
    return table


@dataclass
class MetricReport:
    """Corpus metric values with per-sample breakdowns.

    ``embed_f1`` is None when no embeddings provider was given.  ``config``
    records the settings the run used, for reproducibility.
    """

    b1: float
    b4: float
    rl: float
    cider: float
    mkf1: float
    mkf1_micro: float
    embed_f1: float | None
    corpus_size: int
    per_sample: list[dict[str, Any]]
    config: dict[str, Any]

    def values(self) -> dict[str, float | None]:
        return {
            "b1": self.b1,
            "b4": self.b4,
            "rl": self.rl,
            "cider": self.cider,
            "mkf1": self.mkf1,
            "mkf1_micro": self.mkf1_micro,
            "embed_f1": self.embed_f1,
        }

    def to_json_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = dict(self.values())
        out["corpus_size"] = self.corpus_size
        out["per_sample"] = self.per_sample
        out["config"] = self.config
        return out


def evaluate_corpus(
    hyps: Sequence[Report],
    refs: Sequence[Report],
    keywords: Mapping[str, Sequence[str]],
    embeddings: Mapping[tuple[str, str], np.ndarray] | None = None,
    *,
    bleu_mode: str = "corpus",
    cider_scale: float = 10.0,
    rouge_beta: float = 1.0,
) -> MetricReport:
    """Run the full metric suite over id-aligned hypothesis/reference corpora."""
    ref_by_id = {r.id: r for r in refs}
    hyp_ids = [h.id for h in hyps]
    if len(set(hyp_ids)) != len(hyp_ids):
        raise IdMismatchError("duplicate ids in hypothesis corpus")
    missing_refs = [i for i in hyp_ids if i not in ref_by_id]
    missing_hyps = sorted(set(ref_by_id) - set(hyp_ids))
    if missing_refs or missing_hyps:
        raise IdMismatchError(
            f"unmatched ids: {missing_refs} have no reference, {missing_hyps} have no hypothesis"
        )
    if not hyps:
        raise ValueError("evaluation requires at least one pair")

    pairs: list[TokenizedPair] = []
    mkf1_items: list[tuple[str, str, str]] = []
    for hyp in hyps:
        ref = ref_by_id[hyp.id]
        if hyp.language != ref.language:
            raise ValueError(
                f"id {hyp.id}: language mismatch ({hyp.language} vs {ref.language})"
            )
        if hyp.site != ref.site:
            raise ValueError(f"id {hyp.id}: site mismatch ({hyp.site} vs {ref.site})")
        pairs.append(
            TokenizedPair(
                hyp=tuple(tokenize_for_metrics(hyp.text, hyp.language)),
                ref=tuple(tokenize_for_metrics(ref.text, ref.language)),
                language=hyp.language,
            )
        )
        mkf1_items.append((hyp.text, ref.text, ref.site))

    b1 = bleu(pairs, 1, bleu_mode)
    b4 = bleu(pairs, 4, bleu_mode)
    rl = rouge_l(pairs, rouge_beta)
    cider_items = cider_per_item(pairs, scale=cider_scale)
    keyword_result = mkf1(mkf1_items, keywords)

    embed_values: list[float] | None = None
    if embeddings is not None:
        embed_values = []
        for hyp in hyps:
            missing = [role for role in ("hyp", "ref") if (hyp.id, role) not in embeddings]
            if missing:
                raise EmbeddingsError(f"id {hyp.id}: no {'/'.join(missing)} embeddings")
            embed_values.append(
                greedy_embed_f1(embeddings[(hyp.id, "hyp")], embeddings[(hyp.id, "ref")])
            )

    per_sample: list[dict[str, Any]] = []
    for i, hyp in enumerate(hyps):
        row: dict[str, Any] = {
            "id": hyp.id,
            "b1": _sentence_bleu(pairs[i], 1),
            "b4": _sentence_bleu(pairs[i], 4),
            "rl": _rouge_l_pair(pairs[i], rouge_beta),
            "cider": cider_items[i],
            "mkf1": keyword_result.per_pair[i],
        }
        if embed_values is not None:
            row["embed_f1"] = embed_values[i]
        per_sample.append(row)

    return MetricReport(
        b1=b1,
        b4=b4,
        rl=rl,
        cider=sum(cider_items) / len(cider_items),
        mkf1=keyword_result.macro,
        mkf1_micro=keyword_result.micro,
        embed_f1=(sum(embed_values) / len(embed_values)) if embed_values else None,
        corpus_size=len(pairs),
        per_sample=per_sample,
        config={
            "bleu_mode": bleu_mode,
            "cider_scale": cider_scale,
            "rouge_beta": rouge_beta,
            "tokenization": "zh: per-character with ASCII runs; en: lowercase non-alnum split",
        },
    )


_COMPARED_METRICS = ("b1", "b4", "rl", "cider", "mkf1", "mkf1_micro", "embed_f1")


def compare_runs(
    a: MetricReport | Mapping[str, Any], b: MetricReport | Mapping[str, Any]
) -> dict[str, float | None]:
    """Relative gain of run *a* over run *b* per metric, in percent.

    Rounded to one decimal; None marks a gain that is undefined because the
    baseline value is zero.  Metrics absent from either run are skipped.
    """
    a_values = a.values() if isinstance(a, MetricReport) else a
    b_values = b.values() if isinstance(b, MetricReport) else b
    gains: dict[str, float | None] = {}
    for name in _COMPARED_METRICS:
        x, y = a_values.get(name), b_values.get(name)
        if x is None or y is None:
            continue
        gains[name] = None if y == 0 else round((x - y) / y * 100.0, 1)
    return gains
