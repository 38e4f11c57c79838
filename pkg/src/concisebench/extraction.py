"""Final-answer extraction and grading for numeric QA.

Pulls the concluding number out of generated text with a priority-ordered
family of rules and compares it against the ground truth. The rules are a
documented best effort; they are the single place to swap for a different
grading strategy.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import IngestionError

# A standalone number: optional sign and currency symbol, digits with
# optional thousands separators, optional decimal part. Lookarounds keep
# it from firing inside words or decimals already being matched.
_NUMBER_RE = re.compile(
    r"(?<![\w.])[-−]?\$?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?(?!\w)"
)
_MARKER_RE = re.compile(r"####\s*([^\n]*)")
_ANSWER_IS_RE = re.compile(r"answer\s+is", re.IGNORECASE)
_SENTENCE_BOUNDARY_RE = re.compile(r"[.!?](?=\s+[A-Z0-9])")

RULE_MARKER = "marker"
RULE_PHRASE = "phrase"
RULE_LAST_NUMBER = "last-number"
RULE_NONE = "none"


@dataclass(frozen=True)
class ExtractedAnswer:
    """Result of answer extraction: value, location, and the rule that fired."""

    value: float | None
    source_span: tuple[int, int] | None
    rule: str

    def __post_init__(self):
        if (self.value is None) != (self.rule == RULE_NONE):
            raise ValueError("value must be present exactly when a rule fired")


def _parse_number(token: str) -> float:
    cleaned = (
        token.replace(",", "")
        .replace("$", "")
        .replace("−", "-")
        .strip()
        .rstrip(".")
    )
    return float(cleaned)


def _first_number(text: str, offset: int = 0) -> tuple[float, tuple[int, int]] | None:
    match = _NUMBER_RE.search(text)
    if not match:
        return None
    return _parse_number(match.group()), (offset + match.start(), offset + match.end())


def _last_number(text: str) -> tuple[float, tuple[int, int]] | None:
    matches = list(_NUMBER_RE.finditer(text))
    if not matches:
        return None
    match = matches[-1]
    return _parse_number(match.group()), (match.start(), match.end())


def _final_sentence_start(text: str) -> int:
    boundaries = list(_SENTENCE_BOUNDARY_RE.finditer(text))
    if not boundaries:
        return 0
    return boundaries[-1].end()


def extract_answer(text: str) -> ExtractedAnswer:
    """Extract the concluding numeric answer from generated text.

    Rules, in priority order: a "#### x" marker anywhere (last one wins);
    an "answer is x" phrase or "= x" equation in the final sentence; the
    last standalone number anywhere. Text without a number extracts
    nothing and is graded incorrect downstream.
    """
    markers = list(_MARKER_RE.finditer(text))
    if markers:
        tail = markers[-1]
        found = _first_number(tail.group(1), offset=tail.start(1))
        if found:
            value, span = found
            return ExtractedAnswer(value=value, source_span=span, rule=RULE_MARKER)

    start = _final_sentence_start(text)
    final_sentence = text[start:]
    phrase_matches = list(_ANSWER_IS_RE.finditer(final_sentence))
    if phrase_matches:
        after = phrase_matches[-1].end()
        found = _first_number(final_sentence[after:], offset=start + after)
        if found:
            value, span = found
            return ExtractedAnswer(value=value, source_span=span, rule=RULE_PHRASE)
    equals = final_sentence.rfind("=")
    if equals != -1:
        found = _first_number(final_sentence[equals + 1 :], offset=start + equals + 1)
        if found:
            value, span = found
            return ExtractedAnswer(value=value, source_span=span, rule=RULE_PHRASE)

    found = _last_number(text)
    if found:
        value, span = found
        return ExtractedAnswer(value=value, source_span=span, rule=RULE_LAST_NUMBER)
    return ExtractedAnswer(value=None, source_span=None, rule=RULE_NONE)


def answers_equal(extracted: float, truth: float) -> bool:
    """Equality check for graded answers.

    Integral values compare exactly; anything else uses a relative
    tolerance that only absorbs float formatting noise, since the
    arithmetic datasets have exact answers.
    """
    if float(extracted).is_integer() and float(truth).is_integer():
        return extracted == truth
    return abs(extracted - truth) <= 1e-6 * max(1.0, abs(truth))


def parse_ground_truth(raw: str | int | float, source: str) -> float:
    """Parse a dataset answer field into a number.

    GSM8K answers end in a "#### x" line; SVAMP answers are plain numbers;
    ASDIV answers may carry a unit suffix such as "8 (pieces)".
    """
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        return float(raw)
    text = str(raw)
    if source == "gsm8k":
        marker = text.rfind("####")
        if marker == -1:
            raise IngestionError("ground truth is missing the final '####' marker")
        text = text[marker + 4 :]
    found = _first_number(text)
    if found is None:
        raise IngestionError(f"no numeric ground truth in {raw!r}")
    return found[0]
