"""Prompt construction for the three evaluation modes.

A prompt is the user question, optionally followed by a step-by-step
request, optionally followed by a sentence bounding the answer length in
words. Templates are overridable so phrasing sensitivity can be studied.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

from .errors import ConfigurationError

Mode = Literal["base", "cot", "ccot"]

DEFAULT_COT_SUFFIX = "Let's think a bit step by step"
DEFAULT_CCOT_SUFFIX = "and limit the answer length to {k} words."


@dataclass(frozen=True)
class PromptSpec:
    """Prompting mode plus its optional word-length constraint."""

    mode: Mode = "base"
    length_limit: int | None = None
    cot_suffix: str = DEFAULT_COT_SUFFIX
    ccot_suffix: str = DEFAULT_CCOT_SUFFIX

    def __post_init__(self):
        if self.mode not in ("base", "cot", "ccot"):
            raise ConfigurationError(f"unknown prompt mode {self.mode!r}")
        if self.mode == "ccot":
            if self.length_limit is None or self.length_limit < 1:
                raise ConfigurationError(
                    "length-constrained mode requires length_limit >= 1"
                )
            if self.ccot_suffix.count("{k}") != 1:
                raise ConfigurationError(
                    "length-constraint template must contain exactly one {k} placeholder"
                )

    @property
    def label(self) -> str:
        if self.mode == "ccot":
            return f"ccot-{self.length_limit}"
        return self.mode


def build_prompt(question: str, spec: PromptSpec) -> str:
    """Assemble the prompt for one question under one mode.

    The question appears verbatim as a prefix; segments are joined by a
    single space.
    """
    if not question:
        raise ConfigurationError("question must be non-empty")
    if spec.mode == "base":
        return question
    if spec.mode == "cot":
        return f"{question} {spec.cot_suffix}"
    constraint = spec.ccot_suffix.replace("{k}", str(spec.length_limit))
    return f"{question} {spec.cot_suffix} {constraint}"
