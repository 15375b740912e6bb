"""Dialogue templates for transition-anchored question-answer generation.

Answers always state the sound interval first and then the neighbouring
caption with its interval, with every span rendered to one decimal place.
Multi-turn dialogues follow a fixed four-pair shape: an ambiguous sound
question (answered with a clarification when the two sounds share a
label), a follow-up, a caption-anchored question, and a negative question
about an absent sound answered with a refusal.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .intervals import ClipTimeline, TimeInterval
from .parsing import format_span


@dataclass(frozen=True)
class Turn:
    role: str  # "user" or "assistant"
    text: str


# Question phrasings; {event} is an anchored reference such as
# "the event after the sound of trumpet".
INSTRUCTION_VARIANTS: tuple[str, ...] = (
    "Start and end timestamps should be included while describing what {event} is.",
    "Please include the start and end time when briefly describing what {event} entails.",
    "Start and end timestamps are required while providing a brief description of what {event} involves.",
    "Include the exact start and end times when describing what {event} refers to.",
    "Ensure to mention the start and end timestamps when explaining what {event} covers.",
    "With the start and end times, please provide a brief explanation of what {event} is.",
    "Start and end timestamps should be given alongside a description of what {event} involves.",
    "When describing what {event} is, include the exact start and end time information.",
    "Include start and end time details when summarizing what {event} entails.",
    "Start and end timestamps must be specified when giving a brief description of what {event} refers to.",
    "Describe what {event} is with start and end timestamps.",
    "Please briefly describe what {event} entails, including its exact start and end timestamps.",
    "Provide a brief description of what {event} includes, along with the start and end times.",
    "Give a short description of what {event} is, including the precise start and end time details.",
    "Briefly explain what {event} involves, including its start and end timestamps.",
    "Please summarize what {event} covers, specifying the start and end timestamps.",
    "Give a brief explanation of what {event} is, making sure to include both the start and end times.",
    "Could you describe what {event} refers to, including the exact start and end times?",
    "Please provide a concise overview of what {event} involves, along with start and end time details.",
    "Could you explain what {event} is, ensuring the start and end timestamps are included?",
)

# Labels tried for the negative question, first non-colliding wins.  The
# leading entries are common enough that collisions are rare.
ABSENT_SOUND_CANDIDATES: tuple[str, ...] = (
    "bird chirping",
    "car horn",
    "dog bark",
    "drilling",
    "siren",
    "coughing",
    "sneezing",
    "gun shot",
    "jackhammer",
    "street music",
)

_TIMESTAMP_SUFFIX = "Answer with start and end timestamps."


def caption_before(timeline: ClipTimeline, t: float) -> tuple[TimeInterval, str] | None:
    """Latest caption ending at or before ``t``."""
    best = None
    for interval, text in timeline.events:
        if interval.end <= t + 1e-6:
            best = (interval, text)
    return best


def caption_after(timeline: ClipTimeline, t: float) -> tuple[TimeInterval, str] | None:
    """Earliest caption starting at or after ``t``."""
    for interval, text in timeline.events:
        if interval.start >= t - 1e-6:
            return (interval, text)
    return None


def pick_absent_label(present_labels: set[str]) -> str:
    present = {label.lower() for label in present_labels}
    for candidate in ABSENT_SOUND_CANDIDATES:
        if candidate.lower() not in present:
            return candidate
    return "white noise"


def _sound_then_caption(label: str, sound: TimeInterval, caption: tuple[TimeInterval, str]) -> str:
    interval, text = caption
    return (
        f"The sound of {label} is from {format_span(sound)}. "
        f"From {format_span(interval)}, {text}."
    )


def st_question(label: str, direction: str, rng: random.Random) -> str:
    event = f"the event {direction} the sound of {label}"
    return rng.choice(INSTRUCTION_VARIANTS).format(event=event)


def st_turns(
    timeline: ClipTimeline,
    label: str,
    sound: TimeInterval,
    rng_seed: int,
    direction: str,
) -> list[Turn]:
    """One question-answer pair about the event before or after a sound."""
    if direction not in ("before", "after"):
        raise ValueError(f"direction must be 'before' or 'after', got {direction!r}")
    if direction == "before":
        caption = caption_before(timeline, sound.start)
    else:
        caption = caption_after(timeline, sound.end)
    if caption is None:
        raise ValueError(f"no caption {direction} the sound at {format_span(sound)}")
    rng = random.Random(rng_seed)
    return [
        Turn("user", st_question(label, direction, rng)),
        Turn("assistant", _sound_then_caption(label, sound, caption)),
    ]


def _direct_sound_pair(
    timeline: ClipTimeline, label: str, sound: TimeInterval
) -> list[Turn]:
    """Question about one unambiguous sound, answered directly.  Prefers the
    caption after the sound and falls back to the one before it."""
    caption = caption_after(timeline, sound.end)
    direction = "after"
    if caption is None:
        caption = caption_before(timeline, sound.start)
        direction = "before"
    question = Turn(
        "user",
        f"What is happening in the video {direction} the sound of {label}? {_TIMESTAMP_SUFFIX}",
    )
    if caption is None:
        return [question, Turn("assistant", f"The sound of {label} is from {format_span(sound)}.")]
    return [question, Turn("assistant", _sound_then_caption(label, sound, caption))]


def mt_turns(
    timeline: ClipTimeline,
    sounds: list[tuple[str, TimeInterval]],
    rng_seed: int,
) -> list[Turn]:
    """Four question-answer pairs over a chunk with two anchored sounds.

    The templates themselves are deterministic; ``rng_seed`` is threaded
    through so callers sit behind the same seeding contract as the
    single-turn path (and so a paraphrasing stage can reuse it).
    """
    del rng_seed
    if len(sounds) != 2:
        raise ValueError(f"multi-turn dialogue needs exactly 2 sounds, got {len(sounds)}")
    (label1, sound1), (label2, sound2) = sounds
    turns: list[Turn] = []

    if label1.lower() == label2.lower():
        # Ambiguous question, clarification, then disambiguation.
        turns.append(
            Turn(
                "user",
                f"What is happening in the video after the sound of {label1}? {_TIMESTAMP_SUFFIX}",
            )
        )
        turns.append(
            Turn(
                "assistant",
                f"There are two sounds of {label1}, one from {format_span(sound1)} "
                f"and the other one from {format_span(sound2)}. "
                f"Which {label1} are you referring to?",
            )
        )
        anchor = caption_before(timeline, sound2.start)
        if anchor is not None:
            reference = f"the {label2} that happens after {anchor[1]}"
        else:
            reference = f"the {label2} from {format_span(sound2)}"
        turns.append(Turn("user", f"I am referring to {reference}."))
        tail = caption_after(timeline, sound2.end)
        if tail is not None:
            turns.append(
                Turn(
                    "assistant",
                    f"Okay, so the {label2} from {format_span(sound2)}. "
                    f"After this sound of {label2} from {format_span(tail[0])}, {tail[1]}.",
                )
            )
        else:
            turns.append(
                Turn("assistant", f"Okay, so the {label2} from {format_span(sound2)}.")
            )
    else:
        turns.extend(_direct_sound_pair(timeline, label1, sound1))
        turns.extend(_direct_sound_pair(timeline, label2, sound2))

    # Caption-anchored question about what follows the first caption.
    first = caption_before(timeline, sound1.start)
    follow = caption_after(timeline, sound1.end)
    if first is not None and follow is not None:
        turns.append(
            Turn(
                "user",
                f"Thanks, what is happening in the video after {first[1]}? {_TIMESTAMP_SUFFIX}",
            )
        )
        turns.append(
            Turn(
                "assistant",
                f"There is a sound of {label1} from {format_span(sound1)} "
                f"and from {format_span(follow[0])}, {follow[1]}.",
            )
        )

    absent = pick_absent_label({label1, label2})
    turns.append(
        Turn(
            "user",
            f"Thanks, what is happening in the video after the sound of {absent}? {_TIMESTAMP_SUFFIX}",
        )
    )
    turns.append(Turn("assistant", f"Sorry, there is no sound of {absent}."))
    return turns


# ---------------------------------------------------------------------------
# Prompts for the optional LLM rewriting pass.  The captions block for the
# chunk at hand is appended below the prompt; the model is expected to
# answer with one JSON dictionary per question-answer pair.
# ---------------------------------------------------------------------------

GENERATION_PROMPT_SINGLE_SOUND = """\
You are an AI assistant that can analyze a video.
You receive timestamped video and audio captions with start time and end times describing the video you are observing.
Based on these audio and video captions, create 2 question and answer pairs where a question is asked by the person (the user) and the answer is given by you (the assistant) about the events in the video/audio.
Here are some additional requirements about the generated question-answer pairs:
1. The question asked by the user should be from the audio caption and the answer given by the assistant should be from the video caption before or after that timestamp in question.
2. Only describe what you are certain about, and avoid providing descriptions that maybe ambiguous or inaccurate.
4. The number of words in the answer should not exceed 100 words. Keep it as concise as possible. You do not need to include everything in the answer.
Include timestamp information in the answers.

Example 1:

Timestamped video and audio captions:
"video caption 1": season the chicken on both sides with salt and pepper then cut it into pieces from 0.0 to 18,
"video caption 2": put the chicken pieces to a boiling pot of water cover it and let it cook from 20 to 22,
"audio caption": There is a sound of Trumpet from 18 to 20.

QA:

User: What is happening in the video before the sound of trumpet?
Assistant: The sound of trumpet is from [18.0, 20.0]. From [0.0, 18.0], the chicken is seasoned on both sides with salt and pepper then cut it into pieces.

User: What is happening in the video after the sound of trumpet?
Assistant: The sound of trumpet is from [18.0, 20.0]. From [20.0, 22.0], the chicken pieces are put to a boiling pot of water, covered and then cooked.

Based on the example above, design 2 question and answer pairs between the user and assistant for the example given below.

Format each QA pair in a single line as a JSON dictionary (key "user" for question, and "assistant" for answer).
"""

GENERATION_PROMPT_TWO_SOUNDS = """\
You are an AI assistant that can analyze a video.
You receive timestamped video and audio captions with start time and end times describing the video you are observing.
Based on these audio and video captions, create 4 question and answer pairs where a question is asked by the person (the user) and the answer is given by you (the assistant) about the events in the video/audio.
You can ask clarification questions if the question asked by the user is not clear.
Here are some additional requirements about the generated question-answer pairs:
1. The question asked by the user can be from the audio caption or the video caption and the answer given by the assistant should be from the video caption before or after that timestamp in question.
2. Only describe what you are certain about, and avoid providing descriptions that maybe ambiguous or inaccurate.
4. The number of words in the answer should not exceed 100 words. Keep it as concise as possible. You do not need to include everything in the answer.
Include timestamp information in the answers.

Example 1:

Timestamped video and audio captions:
"video caption 1": season the chicken on both sides with salt and pepper then cut it into pieces from 0.0 to 18,
"video caption 2": put the chicken pieces to a boiling pot of water cover it and let it cook from 20 to 22,
"video caption 3": chop celery to small pieces chop cheese to cubes and chop ham also to the same size from 26 to 50,
"audio caption 1": There is a sound of laugh from 18 to 20,
"audio caption 2": There is a sound of laugh from 22 to 26.

QA:

User: What is happening in the video after the sound of laugh? Answer with start and end timestamps.
Assistant: There are two sounds of laugh, one from [18.0, 20.0] and the other one from [22.0, 26.0]. Which laugh are you referring to?

User: I am referring to the laugh that happens after the chicken pieces are out to a boiling pot of water.
Assistant: Okay, so the laugh from [22.0, 26.0]. After this sound of laugh from [26.0, 50.0], celery is chopped to small pieces, cheese is chopped to cubes and ham is chopped also to the same size.

User: Thanks, what is happening in the video after the chicken is seasoned on both sides with salt and pepper. Answer with start and end timestamps.
Assistant: There is a sound of laugh from [18.0, 20.0] and from [20.0, 22.0], the chicken pieces are put ot a boiling pot of water, covered and cooked.

User: Thanks, what is happening in the video after the sound of bird chirping? Answer with start and end timestamps.
Assistant: Sorry, there is no sound of bird chirping.

Based on the above examples, design 4 question and answer pairs between the user and assistant for the example given below.

Format each QA pair in a single line as a JSON dictionary (key "user" for question, and "assistant" for answer, wrapped with { and }).
"""
