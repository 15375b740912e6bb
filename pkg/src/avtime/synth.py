"""Synthetic transition-QA dataset generation.

The pipeline chunks a captioned source video around pairs (or triples) of
events separated by short gaps, mutes the chunk's original audio, anchors
a randomly sampled sound event into each gap, and emits question-answer
turns about the events surrounding each sound.  Everything is
deterministic given (manifest, sound library, seed); media is never
touched, records carry a declarative edit plan instead.
"""

from __future__ import annotations

import enum
import hashlib
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .intervals import ClipTimeline, TimeInterval, remap_to_local
from .parsing import parse_intervals
from .templates import (
    GENERATION_PROMPT_SINGLE_SOUND,
    GENERATION_PROMPT_TWO_SOUNDS,
    Turn,
    mt_turns,
    st_turns,
)

ST = "st"
MT = "mt"

_SPAN_TOLERANCE = 0.05


class SoundCorpus(str, enum.Enum):
    URBANSOUND8K = "urbansound8k"
    ESC50 = "esc50"
    FSD50K = "fsd50k"
    NONSPEECH7K = "nonspeech7k"
    OTHER = "other"


class TrimMode(str, enum.Enum):
    NONE = "none"
    CUT_TO_GAP = "cut-to-gap"
    LOOP_TO_GAP = "loop-to-gap"


@dataclass(frozen=True)
class SoundEvent:
    """One reusable sound clip from a sound-effect corpus."""

    sound_id: str
    label: str
    duration: float
    source_uri: str = ""
    corpus: SoundCorpus = SoundCorpus.OTHER

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise ValueError(f"sound duration must be positive, got {self.duration}")
        if not self.label:
            raise ValueError("sound label must be non-empty")


@dataclass
class CaptionManifest:
    """Timestamped captions of one source video, sorted and non-overlapping."""

    video_id: str
    entries: list[tuple[TimeInterval, str]]

    def __post_init__(self) -> None:
        prev_end = None
        for interval, _ in self.entries:
            if prev_end is not None and interval.start < prev_end - 1e-9:
                raise ValueError(
                    f"manifest {self.video_id}: entries must be sorted and non-overlapping"
                )
            prev_end = interval.end

    @classmethod
    def from_dict(cls, payload: dict) -> "CaptionManifest":
        entries = [
            (TimeInterval(float(e["start"]), float(e["end"])), str(e["caption"]))
            for e in payload["entries"]
        ]
        return cls(video_id=str(payload["video_id"]), entries=entries)

    def to_dict(self) -> dict:
        return {
            "video_id": self.video_id,
            "entries": [
                {"start": iv.start, "end": iv.end, "caption": text}
                for iv, text in self.entries
            ],
        }


@dataclass(frozen=True)
class Overlay:
    sound_id: str
    label: str
    interval: TimeInterval
    trim: TrimMode


@dataclass
class AudioEditPlan:
    """Declarative audio edits for one chunk: mute, then overlay sounds."""

    mute_original: bool
    overlays: list[Overlay] = field(default_factory=list)

    def __post_init__(self) -> None:
        spans = sorted((o.interval.start, o.interval.end) for o in self.overlays)
        for (_, prev_end), (start, _) in zip(spans, spans[1:]):
            if start < prev_end - 1e-9:
                raise ValueError("overlay intervals must be pairwise disjoint")


@dataclass
class ClipQARecord:
    """One generated sample: chunk provenance, edit plan, and dialogue."""

    record_id: str
    source_video_id: str
    chunk: TimeInterval
    timeline: ClipTimeline
    edit_plan: AudioEditPlan
    turns: list[Turn]
    variant: str
    flags: tuple[str, ...] = ()

    def validate(self) -> None:
        """Check the structural invariants every emitted record must satisfy."""
        pairs = len(self.turns) / 2
        roles = [t.role for t in self.turns]
        if roles != ["user", "assistant"] * int(pairs):
            raise ValueError(f"{self.record_id}: turns must alternate user/assistant")
        if self.variant == ST and len(self.turns) != 2:
            raise ValueError(f"{self.record_id}: single-turn records need exactly one pair")
        if self.variant == MT and len(self.turns) < 4:
            raise ValueError(f"{self.record_id}: multi-turn records need at least two pairs")
        duration = self.timeline.duration
        allowed = [o.interval for o in self.edit_plan.overlays]
        allowed += [iv for iv, _ in self.timeline.events]
        for turn in self.turns:
            if turn.role != "assistant":
                continue
            for span in parse_intervals(turn.text).intervals:
                if span.start < -_SPAN_TOLERANCE or span.end > duration + _SPAN_TOLERANCE:
                    raise ValueError(
                        f"{self.record_id}: span {span} outside [0, {duration}]"
                    )
                if not any(
                    abs(span.start - iv.start) <= _SPAN_TOLERANCE
                    and abs(span.end - iv.end) <= _SPAN_TOLERANCE
                    for iv in allowed
                ):
                    raise ValueError(
                        f"{self.record_id}: span {span} matches no overlay or caption"
                    )

    def reference_text(self) -> str:
        """All assistant text joined, used as the evaluation reference."""
        return " ".join(t.text for t in self.turns if t.role == "assistant")

    def to_dict(self) -> dict:
        payload = {
            "id": self.record_id,
            "video_id": self.source_video_id,
            "chunk": {"start": self.chunk.start, "end": self.chunk.end},
            "events": [
                {"start": iv.start, "end": iv.end, "caption": text}
                for iv, text in self.timeline.events
            ],
            "edits": {
                "mute": self.edit_plan.mute_original,
                "overlays": [
                    {
                        "sound_id": o.sound_id,
                        "label": o.label,
                        "start": o.interval.start,
                        "end": o.interval.end,
                        "trim": o.trim.value,
                    }
                    for o in self.edit_plan.overlays
                ],
            },
            "turns": [{"role": t.role, "text": t.text} for t in self.turns],
            "variant": self.variant,
        }
        if self.flags:
            payload["flags"] = list(self.flags)
        return payload

    @classmethod
    def from_dict(cls, payload: dict) -> "ClipQARecord":
        chunk = TimeInterval(float(payload["chunk"]["start"]), float(payload["chunk"]["end"]))
        events = [
            (TimeInterval(float(e["start"]), float(e["end"])), str(e["caption"]))
            for e in payload["events"]
        ]
        overlays = [
            Overlay(
                sound_id=str(o["sound_id"]),
                label=str(o["label"]),
                interval=TimeInterval(float(o["start"]), float(o["end"])),
                trim=TrimMode(o["trim"]),
            )
            for o in payload["edits"]["overlays"]
        ]
        return cls(
            record_id=str(payload["id"]),
            source_video_id=str(payload["video_id"]),
            chunk=chunk,
            timeline=ClipTimeline(chunk.start, chunk.duration(), events),
            edit_plan=AudioEditPlan(bool(payload["edits"]["mute"]), overlays),
            turns=[Turn(t["role"], t["text"]) for t in payload["turns"]],
            variant=str(payload["variant"]),
            flags=tuple(payload.get("flags", ())),
        )


def derive_seed(master_seed: int, *parts: object) -> int:
    """Stable per-item seed, independent of process hash randomization."""
    key = "|".join([str(master_seed), *[str(p) for p in parts]])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def select_transition_pairs(
    manifest: CaptionManifest, m: float, T: float
) -> list[tuple[int, int]]:
    """All caption pairs (i, j), i < j, whose gap is in (0, m) and whose
    overall span from the first start to the last end is at most T."""
    if m <= 0 or T <= 0:
        raise ValueError("m and T must be positive")
    pairs = []
    entries = manifest.entries
    for i in range(len(entries)):
        for j in range(i + 1, len(entries)):
            gap = entries[j][0].start - entries[i][0].end
            span = entries[j][0].end - entries[i][0].start
            if 0 < gap < m and span <= T:
                pairs.append((i, j))
    return pairs


def select_transition_triples(
    manifest: CaptionManifest, m: float, T: float
) -> list[tuple[int, int, int]]:
    """All caption triples (i, j, k) with both consecutive gaps in (0, m)
    and total span at most T."""
    if m <= 0 or T <= 0:
        raise ValueError("m and T must be positive")
    triples = []
    entries = manifest.entries
    for i in range(len(entries)):
        for j in range(i + 1, len(entries)):
            gap_ij = entries[j][0].start - entries[i][0].end
            if not 0 < gap_ij < m:
                continue
            for k in range(j + 1, len(entries)):
                gap_jk = entries[k][0].start - entries[j][0].end
                span = entries[k][0].end - entries[i][0].start
                if 0 < gap_jk < m and span <= T:
                    triples.append((i, j, k))
    return triples


def _trim_for(sound: SoundEvent, gap: float) -> TrimMode:
    if sound.duration > gap:
        return TrimMode.CUT_TO_GAP
    if sound.duration < gap:
        return TrimMode.LOOP_TO_GAP
    return TrimMode.NONE


def anchor_sounds(
    selection: Sequence[int],
    manifest: CaptionManifest,
    sound_library: Sequence[SoundEvent],
    rng_seed: int,
    match_label_prob: float = 0.3,
) -> tuple[ClipTimeline, AudioEditPlan]:
    """Chunk the manifest around ``selection`` and fill each caption gap
    with a sampled sound.

    The chunk starts at the first selected caption's start; captions are
    remapped chunk-local, the original audio is muted, and each gap gets
    one overlay covering it exactly.  Sounds longer than their gap are cut
    to it, shorter ones loop to fill it.  For two-gap selections the
    second sound's label is forced to match the first with probability
    ``match_label_prob`` so clarification dialogues occur.
    """
    if not sound_library:
        raise ValueError("sound library is empty")
    if len(selection) < 2:
        raise ValueError("selection must cover at least two captions")
    entries = [manifest.entries[i] for i in selection]
    origin = entries[0][0].start
    duration = entries[-1][0].end - origin
    events = [(remap_to_local(iv, origin), text) for iv, text in entries]
    timeline = ClipTimeline(global_origin=origin, duration=duration, events=events)

    rng = random.Random(rng_seed)
    overlays: list[Overlay] = []
    previous: SoundEvent | None = None
    for (left, _), (right, _) in zip(events, events[1:]):
        gap = TimeInterval(left.end, right.start)
        if previous is not None and rng.random() < match_label_prob:
            candidates = [s for s in sound_library if s.label == previous.label]
            sound = rng.choice(candidates)
        else:
            sound = rng.choice(list(sound_library))
        overlays.append(
            Overlay(
                sound_id=sound.sound_id,
                label=sound.label,
                interval=gap,
                trim=_trim_for(sound, gap.duration()),
            )
        )
        previous = sound
    return timeline, AudioEditPlan(mute_original=True, overlays=overlays)


def generate_st_qa(
    timeline: ClipTimeline,
    edit_plan: AudioEditPlan,
    rng_seed: int,
    direction: str,
) -> list[Turn]:
    """Single question-answer pair about the event before or after the
    chunk's one anchored sound."""
    if len(edit_plan.overlays) != 1:
        raise ValueError("single-turn QA needs exactly one overlay")
    overlay = edit_plan.overlays[0]
    return st_turns(timeline, overlay.label, overlay.interval, rng_seed, direction)


def generate_mt_dialogue(
    timeline: ClipTimeline, edit_plan: AudioEditPlan, rng_seed: int
) -> list[Turn]:
    """Four question-answer pairs over a chunk with two anchored sounds."""
    if len(edit_plan.overlays) != 2:
        raise ValueError("multi-turn dialogue needs exactly two overlays")
    sounds = [(o.label, o.interval) for o in edit_plan.overlays]
    return mt_turns(timeline, sounds, rng_seed)


def convert_av_annotations_mt(
    annotations: Sequence[tuple[TimeInterval, str, str]],
) -> list[Turn]:
    """Dialogue turns from real timestamped audio-visual annotations.

    ``annotations`` holds (interval, label, modality) rows with modality
    "audio" or "video".  No sounds are injected: the annotated audio
    events anchor the questions directly.  Two or more audio events yield
    the four-pair dialogue shape (built from the first two); a single
    audio event yields one question-answer pair.
    """
    if not annotations:
        raise ValueError("annotation list is empty")
    audio = sorted(
        [(iv, label) for iv, label, mod in annotations if mod == "audio"],
        key=lambda item: item[0].start,
    )
    video = sorted(
        [(iv, label) for iv, label, mod in annotations if mod == "video"],
        key=lambda item: item[0].start,
    )
    if not audio:
        raise ValueError("annotations carry no audio events")
    duration = max(iv.end for iv, _, _ in annotations)
    timeline = ClipTimeline(global_origin=0.0, duration=duration, events=video)
    if len(audio) == 1:
        interval, label = audio[0]
        from .templates import caption_after, caption_before

        direction = "after" if caption_after(timeline, interval.end) else "before"
        if direction == "before" and caption_before(timeline, interval.start) is None:
            raise ValueError("no video annotation adjacent to the audio event")
        return st_turns(timeline, label, interval, 0, direction)
    sounds = [(label, iv) for iv, label in audio[:2]]
    return mt_turns(timeline, sounds, 0)


def _kept_selections(
    selections: Iterable[tuple[int, ...]], seed: int, video_id: str
) -> list[tuple[int, ...]]:
    """At most one selection per starting caption index, seeded choice."""
    by_start: dict[int, list[tuple[int, ...]]] = {}
    for sel in selections:
        by_start.setdefault(sel[0], []).append(sel)
    kept = []
    for start_index in sorted(by_start):
        rng = random.Random(derive_seed(seed, video_id, "keep", start_index))
        kept.append(rng.choice(by_start[start_index]))
    return kept


def build_st_records(
    manifest: CaptionManifest,
    sound_library: Sequence[SoundEvent],
    seed: int,
    m: float = 10.0,
    T: float = 30.0,
) -> list[ClipQARecord]:
    """All single-turn records for one manifest (one per kept pair)."""
    records = []
    pairs = _kept_selections(select_transition_pairs(manifest, m, T), seed, manifest.video_id)
    for n, pair in enumerate(pairs):
        record_seed = derive_seed(seed, manifest.video_id, ST, n)
        timeline, plan = anchor_sounds(pair, manifest, sound_library, record_seed)
        direction = random.Random(derive_seed(record_seed, "direction")).choice(
            ("before", "after")
        )
        turns = generate_st_qa(timeline, plan, derive_seed(record_seed, "qa"), direction)
        record = ClipQARecord(
            record_id=f"{manifest.video_id}-st-{n:04d}",
            source_video_id=manifest.video_id,
            chunk=TimeInterval(
                timeline.global_origin, timeline.global_origin + timeline.duration
            ),
            timeline=timeline,
            edit_plan=plan,
            turns=turns,
            variant=ST,
        )
        record.validate()
        records.append(record)
    return records


def build_mt_records(
    manifest: CaptionManifest,
    sound_library: Sequence[SoundEvent],
    seed: int,
    m: float = 10.0,
    T: float = 30.0,
    match_label_prob: float = 0.3,
) -> list[ClipQARecord]:
    """All multi-turn records for one manifest (one per kept triple)."""
    records = []
    triples = _kept_selections(
        select_transition_triples(manifest, m, T), seed, manifest.video_id
    )
    for n, triple in enumerate(triples):
        record_seed = derive_seed(seed, manifest.video_id, MT, n)
        timeline, plan = anchor_sounds(
            triple, manifest, sound_library, record_seed, match_label_prob
        )
        turns = generate_mt_dialogue(timeline, plan, derive_seed(record_seed, "qa"))
        record = ClipQARecord(
            record_id=f"{manifest.video_id}-mt-{n:04d}",
            source_video_id=manifest.video_id,
            chunk=TimeInterval(
                timeline.global_origin, timeline.global_origin + timeline.duration
            ),
            timeline=timeline,
            edit_plan=plan,
            turns=turns,
            variant=MT,
        )
        record.validate()
        records.append(record)
    return records


def convert_mt_record(
    video_id: str, annotations: Sequence[tuple[TimeInterval, str, str]]
) -> ClipQARecord:
    """Record wrapper around :func:`convert_av_annotations_mt`.

    The edit plan lists the real audio events as overlays without muting,
    since nothing synthetic is injected."""
    turns = convert_av_annotations_mt(annotations)
    audio = sorted(
        [(iv, label) for iv, label, mod in annotations if mod == "audio"],
        key=lambda item: item[0].start,
    )
    video = sorted(
        [(iv, label) for iv, label, mod in annotations if mod == "video"],
        key=lambda item: item[0].start,
    )
    duration = max(iv.end for iv, _, _ in annotations)
    overlays = [
        Overlay(sound_id=f"annotated-{n}", label=label, interval=iv, trim=TrimMode.NONE)
        for n, (iv, label) in enumerate(audio[:2])
    ]
    record = ClipQARecord(
        record_id=f"{video_id}-unav-mt",
        source_video_id=video_id,
        chunk=TimeInterval(0.0, duration),
        timeline=ClipTimeline(0.0, duration, video),
        edit_plan=AudioEditPlan(mute_original=False, overlays=overlays),
        turns=turns,
        variant=MT if len(turns) >= 4 else ST,
    )
    record.validate()
    return record


# ---------------------------------------------------------------------------
# Optional LLM paraphrase pass
# ---------------------------------------------------------------------------


def _captions_block(timeline: ClipTimeline, edit_plan: AudioEditPlan) -> str:
    lines = ["Timestamped video and audio captions:"]
    for n, (iv, text) in enumerate(timeline.events, start=1):
        lines.append(f'"video caption {n}": {text} from {iv.start:g} to {iv.end:g},')
    overlays = edit_plan.overlays
    for n, overlay in enumerate(overlays, start=1):
        name = "audio caption" if len(overlays) == 1 else f"audio caption {n}"
        lines.append(
            f'"{name}": There is a sound of {overlay.label} from '
            f"{overlay.interval.start:g} to {overlay.interval.end:g}."
        )
    return "\n".join(lines)


def _spans_rounded(text: str) -> list[tuple[float, float]]:
    return [
        (round(iv.start, 1), round(iv.end, 1))
        for iv in parse_intervals(text).intervals
    ]


def _matches_original(new_turns: list[Turn], original: list[Turn], labels: list[str]) -> bool:
    if len(new_turns) != len(original):
        return False
    for new, old in zip(new_turns, original):
        if new.role != old.role:
            return False
        if old.role != "assistant":
            continue
        if sorted(_spans_rounded(new.text)) != sorted(_spans_rounded(old.text)):
            return False
        for label in labels:
            if label.lower() in old.text.lower() and label.lower() not in new.text.lower():
                return False
    return True


def paraphrase_via_llm(
    turns: list[Turn],
    client,
    timeline: ClipTimeline,
    edit_plan: AudioEditPlan,
) -> tuple[list[Turn], bool]:
    """Rewrite dialogue surface text through an LLM client.

    Sends the canned generation prompt plus the chunk's caption block,
    expects one JSON dictionary per question-answer pair in the response,
    and keeps the result only if every assistant turn preserves the
    original timestamps and sound labels.  Returns ``(turns, False)``
    unchanged when the client is absent, fails, or produces turns that do
    not validate.
    """
    if client is None:
        return list(turns), False
    prompt = (
        GENERATION_PROMPT_TWO_SOUNDS
        if len(edit_plan.overlays) >= 2
        else GENERATION_PROMPT_SINGLE_SOUND
    )
    prompt = prompt + "\n\n" + _captions_block(timeline, edit_plan)
    try:
        response = client.complete(prompt)
    except Exception:
        return list(turns), False
    new_turns: list[Turn] = []
    for line in response.splitlines():
        line = line.strip()
        if not line.startswith("{"):
            continue
        try:
            payload = json.loads(line)
        except json.JSONDecodeError:
            return list(turns), False
        if "user" not in payload or "assistant" not in payload:
            return list(turns), False
        new_turns.append(Turn("user", str(payload["user"])))
        new_turns.append(Turn("assistant", str(payload["assistant"])))
    labels = [o.label for o in edit_plan.overlays]
    if not new_turns or not _matches_original(new_turns, turns, labels):
        return list(turns), False
    return new_turns, True


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------


def load_manifests(path: str | Path) -> list[CaptionManifest]:
    """Read one manifest object or a list of them from a JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if isinstance(payload, dict):
        payload = [payload]
    return [CaptionManifest.from_dict(item) for item in payload]


def load_sound_library(path: str | Path) -> list[SoundEvent]:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    sounds = [
        SoundEvent(
            sound_id=str(s["id"]),
            label=str(s["label"]),
            duration=float(s["duration"]),
            source_uri=str(s.get("uri", "")),
            corpus=SoundCorpus(s.get("corpus", "other")),
        )
        for s in payload["sounds"]
    ]
    if not sounds:
        raise ValueError(f"{path}: sound library is empty")
    return sounds


def load_annotations(path: str | Path) -> list[tuple[str, list[tuple[TimeInterval, str, str]]]]:
    """Read UnAV-style annotation files: one object or a list of objects
    shaped {"video_id", "annotations": [{"start","end","label","modality"}]}."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if isinstance(payload, dict):
        payload = [payload]
    out = []
    for item in payload:
        rows = [
            (
                TimeInterval(float(a["start"]), float(a["end"])),
                str(a["label"]),
                str(a["modality"]),
            )
            for a in item["annotations"]
        ]
        out.append((str(item["video_id"]), rows))
    return out


def write_records_jsonl(records: Iterable[ClipQARecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")


def read_records_jsonl(path: str | Path) -> list[ClipQARecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(ClipQARecord.from_dict(json.loads(line)))
    return records
