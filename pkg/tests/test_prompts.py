import pytest
from hypothesis import given
from hypothesis import strategies as st

from concisebench.errors import ConfigurationError
from concisebench.prompts import PromptSpec, build_prompt
from sample_answers import CCOT45_PROMPT, COT_PROMPT, TRACY_QUESTION

questions = st.text(min_size=1, max_size=200).filter(lambda q: q.strip())


def test_base_is_identity():
    assert build_prompt(TRACY_QUESTION, PromptSpec(mode="base")) == TRACY_QUESTION


def test_cot_prompt_matches_reference():
    assert build_prompt(TRACY_QUESTION, PromptSpec(mode="cot")) == COT_PROMPT


def test_ccot_prompt_byte_for_byte():
    spec = PromptSpec(mode="ccot", length_limit=45)
    assert build_prompt(TRACY_QUESTION, spec) == CCOT45_PROMPT


def test_ccot_requires_length_limit():
    with pytest.raises(ConfigurationError):
        PromptSpec(mode="ccot")
    with pytest.raises(ConfigurationError):
        PromptSpec(mode="ccot", length_limit=0)


def test_ccot_suffix_needs_single_placeholder():
    with pytest.raises(ConfigurationError):
        PromptSpec(mode="ccot", length_limit=30, ccot_suffix="keep it short")
    with pytest.raises(ConfigurationError):
        PromptSpec(mode="ccot", length_limit=30, ccot_suffix="use {k} of {k} words")


def test_templates_overridable():
    spec = PromptSpec(
        mode="ccot",
        length_limit=30,
        cot_suffix="Reason step by step",
        ccot_suffix="in at most {k} words.",
    )
    assert build_prompt("Q?", spec) == "Q? Reason step by step in at most 30 words."


def test_empty_question_rejected():
    with pytest.raises(ConfigurationError):
        build_prompt("", PromptSpec(mode="cot"))


def test_unknown_mode_rejected():
    with pytest.raises(ConfigurationError):
        PromptSpec(mode="fancy")


def test_labels():
    assert PromptSpec(mode="base").label == "base"
    assert PromptSpec(mode="cot").label == "cot"
    assert PromptSpec(mode="ccot", length_limit=60).label == "ccot-60"


@given(question=questions, limit=st.integers(min_value=1, max_value=500))
def test_question_is_verbatim_prefix_and_limit_rendered(question, limit):
    spec = PromptSpec(mode="ccot", length_limit=limit)
    prompt = build_prompt(question, spec)
    assert prompt.startswith(question)
    assert str(limit) in prompt
    assert build_prompt(question, spec) == prompt
