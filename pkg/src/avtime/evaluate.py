"""Scoring of predicted answers: span recall and judge-style accuracy.

Answers are compared span-wise through IoU and text-wise through token
F1.  The offline deterministic judge blends the two components into an
integer 0-5 score so the suite never needs a network; an HTTP judge
endpoint can replace it, in which case transport errors surface instead
of silently degrading the evaluation.
"""

from __future__ import annotations

import math
import re
import warnings
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .intervals import TimeInterval, iou
from .llmclient import HttpLlmClient
from .parsing import ParsedAnswer, parse_intervals
from .synth import ClipQARecord

DETERMINISTIC = "deterministic"
LLM_CLIENT = "llm-client"

_WORD_RE = re.compile(r"[a-z0-9']+")

_JUDGE_PROMPT = (
    "You are grading a model's answer about events in a video against the "
    "reference answer. Respond with a single integer score from 0 to 5 "
    "indicating the accuracy, where 5 is a perfect match of both the "
    "described events and their timestamps.\n\n"
    "Reference answer: {reference}\n\nPredicted answer: {prediction}\n"
)


@dataclass(frozen=True)
class JudgeScore:
    score: int
    accurate: bool


@dataclass
class EvalConfig:
    judge_mode: str = DETERMINISTIC
    threshold: int = 3
    client: HttpLlmClient | None = None
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.judge_mode not in (DETERMINISTIC, LLM_CLIENT):
            raise ValueError(f"unknown judge mode {self.judge_mode!r}")
        if self.judge_mode == LLM_CLIENT and self.client is None:
            raise ValueError("llm-client judge mode needs a configured client")


@dataclass
class EvalReport:
    accuracy: float
    r1_iou_05: float
    r1_iou_07: float
    n: int
    judge_mode: str
    threshold: int
    mean_score: float
    by_variant: dict[str, dict] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "r1_iou_0.5": self.r1_iou_05,
            "r1_iou_0.7": self.r1_iou_07,
            "n": self.n,
            "judge_mode": self.judge_mode,
            "threshold": self.threshold,
            "mean_score": self.mean_score,
            "by_variant": self.by_variant,
        }


def recall_at_1(
    predictions: list[TimeInterval],
    references: list[TimeInterval],
    threshold: float,
) -> float:
    """Fraction of items whose predicted interval reaches the IoU threshold."""
    if len(predictions) != len(references):
        raise ValueError(
            f"{len(predictions)} predictions vs {len(references)} references"
        )
    if not 0 < threshold <= 1:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    if not predictions:
        warnings.warn("recall_at_1 called with empty lists", stacklevel=2)
        return 0.0
    hits = sum(1 for p, r in zip(predictions, references) if iou(p, r) >= threshold)
    return hits / len(predictions)


def _token_f1(a: str, b: str) -> float:
    ta = Counter(_WORD_RE.findall(a.lower()))
    tb = Counter(_WORD_RE.findall(b.lower()))
    if not ta and not tb:
        return 1.0
    if not ta or not tb:
        return 0.0
    common = sum((ta & tb).values())
    if common == 0:
        return 0.0
    precision = common / sum(ta.values())
    recall = common / sum(tb.values())
    return 2 * precision * recall / (precision + recall)


def _interval_match(pred: ParsedAnswer, ref: ParsedAnswer) -> float:
    """Greedy best-match mean IoU: highest-IoU pairs are matched first and
    unmatched spans on either side count as zero."""
    if not pred.intervals and not ref.intervals:
        return 1.0
    if not pred.intervals or not ref.intervals:
        return 0.0
    scored = sorted(
        (
            (iou(p, r), pi, ri)
            for pi, p in enumerate(pred.intervals)
            for ri, r in enumerate(ref.intervals)
        ),
        key=lambda item: -item[0],
    )
    used_p: set[int] = set()
    used_r: set[int] = set()
    total = 0.0
    for value, pi, ri in scored:
        if pi in used_p or ri in used_r:
            continue
        used_p.add(pi)
        used_r.add(ri)
        total += value
    return total / max(len(pred.intervals), len(ref.intervals))


def judge(
    prediction: str,
    reference: str,
    config: EvalConfig | None = None,
) -> JudgeScore:
    """Score a predicted answer against the reference on the 0-5 scale."""
    config = config or EvalConfig()
    if not reference:
        raise ValueError("reference text must be non-empty")
    if config.judge_mode == LLM_CLIENT:
        score = config.client.score(
            _JUDGE_PROMPT.format(reference=reference, prediction=prediction)
        )
    else:
        pred = parse_intervals(prediction)
        ref = parse_intervals(reference)
        blended = 0.5 * _interval_match(pred, ref) + 0.5 * _token_f1(
            pred.residual_text, ref.residual_text
        )
        score = min(5, max(0, int(math.floor(5.0 * blended + 0.5))))
    return JudgeScore(score=score, accurate=score >= config.threshold)


def _first_span(text: str) -> TimeInterval | None:
    spans = parse_intervals(text).intervals
    return spans[0] if spans else None


def _recall_over(items: list[tuple[TimeInterval | None, TimeInterval | None]], threshold: float) -> float:
    if not items:
        return 0.0
    hits = 0
    for pred, ref in items:
        if pred is not None and ref is not None and iou(pred, ref) >= threshold:
            hits += 1
    return hits / len(items)


def evaluate_dataset(
    records: list[ClipQARecord],
    predictions: list[str],
    config: EvalConfig | None = None,
) -> EvalReport:
    """Aggregate judge accuracy and R@1 at IoU 0.5/0.7 over aligned lists.

    The reference for each record is its assistant text; R@1 pairs the
    first span parsed from the prediction against the first span of the
    reference, and a missing span on either side counts as a miss.
    """
    config = config or EvalConfig()
    if len(records) != len(predictions):
        raise ValueError(
            f"{len(records)} records vs {len(predictions)} predictions"
        )
    references = [record.reference_text() for record in records]
    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            scores = list(pool.map(lambda pr: judge(pr[0], pr[1], config), zip(predictions, references)))
    else:
        scores = [judge(p, r, config) for p, r in zip(predictions, references)]

    spans = [(_first_span(p), _first_span(r)) for p, r in zip(predictions, references)]

    def summary(indices: list[int]) -> dict:
        if not indices:
            return {"accuracy": 0.0, "r1_iou_0.5": 0.0, "r1_iou_0.7": 0.0, "n": 0, "mean_score": 0.0}
        picked = [scores[i] for i in indices]
        picked_spans = [spans[i] for i in indices]
        return {
            "accuracy": sum(s.accurate for s in picked) / len(picked),
            "r1_iou_0.5": _recall_over(picked_spans, 0.5),
            "r1_iou_0.7": _recall_over(picked_spans, 0.7),
            "n": len(picked),
            "mean_score": sum(s.score for s in picked) / len(picked),
        }

    overall = summary(list(range(len(records))))
    by_variant = {}
    for variant in sorted({r.variant for r in records}):
        by_variant[variant] = summary(
            [i for i, r in enumerate(records) if r.variant == variant]
        )
    return EvalReport(
        accuracy=overall["accuracy"],
        r1_iou_05=overall["r1_iou_0.5"],
        r1_iou_07=overall["r1_iou_0.7"],
        n=overall["n"],
        judge_mode=config.judge_mode,
        threshold=config.threshold,
        mean_score=overall["mean_score"],
        by_variant=by_variant,
    )
