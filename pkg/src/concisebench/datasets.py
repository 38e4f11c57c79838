"""Dataset ingestion into a common question/answer record.

Three arithmetic-reasoning test sets are supported in their canonical
published layouts: GSM8K (JSON lines), SVAMP (one JSON array), and ASDIV
(an XML problem list). Each loader is isolated behind the shared QAItem
record so format drift stays local.
"""

from __future__ import annotations

import json
import random
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from .errors import FormatMismatchError, IngestionError
from .extraction import parse_ground_truth

SOURCES = ("gsm8k", "svamp", "asdiv")


@dataclass(frozen=True)
class QAItem:
    """One benchmark question with its numeric ground truth."""

    id: str
    question: str
    ground_truth: float
    source: str


# Loaders yield either a QAItem or an IngestionError describing one bad
# record, so strict loading and lenient validation share one pass.


def _iter_gsm8k(path: Path) -> Iterator[QAItem | IngestionError]:
    with open(path, encoding="utf-8") as handle:
        head = handle.read(1)
        if head == "[":
            raise FormatMismatchError(
                f"{path}: starts with a JSON array; expected one JSON object per line"
            )
        handle.seek(0)
        for lineno, line in enumerate(handle, 1):
            if not line.strip():
                continue
            locator = f"{path}:{lineno}"
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                yield IngestionError(f"{locator}: invalid JSON ({exc})")
                continue
            if not isinstance(record, dict) or "question" not in record or "answer" not in record:
                yield IngestionError(f"{locator}: expected question/answer fields")
                continue
            item_id = f"gsm8k-{lineno:05d}"
            question = str(record["question"]).strip()
            if not question:
                yield IngestionError(f"{locator}: empty question")
                continue
            try:
                truth = parse_ground_truth(record["answer"], "gsm8k")
            except IngestionError as exc:
                yield IngestionError(f"{locator} (item {item_id}): {exc}")
                continue
            yield QAItem(id=item_id, question=question, ground_truth=truth, source="gsm8k")


def _iter_svamp(path: Path) -> Iterator[QAItem | IngestionError]:
    with open(path, encoding="utf-8") as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise FormatMismatchError(f"{path}: not a JSON document ({exc})") from exc
    if not isinstance(data, list):
        raise FormatMismatchError(f"{path}: expected a JSON array of problems")
    for index, record in enumerate(data):
        locator = f"{path}[{index}]"
        if not isinstance(record, dict):
            yield IngestionError(f"{locator}: expected a JSON object")
            continue
        missing = {"Body", "Question", "Answer"} - record.keys()
        if missing:
            yield IngestionError(f"{locator}: missing fields {sorted(missing)}")
            continue
        item_id = str(record.get("ID") or f"svamp-{index:05d}")
        question = f"{str(record['Body']).strip()} {str(record['Question']).strip()}".strip()
        if not question:
            yield IngestionError(f"{locator}: empty question")
            continue
        try:
            truth = parse_ground_truth(record["Answer"], "svamp")
        except IngestionError as exc:
            yield IngestionError(f"{locator} (item {item_id}): {exc}")
            continue
        yield QAItem(id=item_id, question=question, ground_truth=truth, source="svamp")


def _iter_asdiv(path: Path) -> Iterator[QAItem | IngestionError]:
    try:
        root = ET.parse(path).getroot()
    except ET.ParseError as exc:
        raise FormatMismatchError(f"{path}: not well-formed XML ({exc})") from exc
    problems = list(root.iter("Problem"))
    if not problems:
        raise FormatMismatchError(f"{path}: no <Problem> elements found")
    for index, problem in enumerate(problems):
        item_id = problem.get("ID") or f"asdiv-{index:05d}"
        locator = f"{path} <Problem {item_id}>"
        body = (problem.findtext("Body") or "").strip()
        question = (problem.findtext("Question") or "").strip()
        answer = problem.findtext("Answer")
        if not body and not question:
            yield IngestionError(f"{locator}: missing body and question")
            continue
        if answer is None:
            yield IngestionError(f"{locator}: missing answer")
            continue
        try:
            truth = parse_ground_truth(answer, "asdiv")
        except IngestionError as exc:
            yield IngestionError(f"{locator}: {exc}")
            continue
        yield QAItem(
            id=item_id,
            question=f"{body} {question}".strip(),
            ground_truth=truth,
            source="asdiv",
        )


_LOADERS = {"gsm8k": _iter_gsm8k, "svamp": _iter_svamp, "asdiv": _iter_asdiv}


def _events(path: str | Path, source: str) -> Iterator[QAItem | IngestionError]:
    if source not in _LOADERS:
        raise ValueError(f"unknown dataset source {source!r}; expected one of {SOURCES}")
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset file not found: {path}")
    return _LOADERS[source](path)


def load_dataset(
    path: str | Path,
    source: str,
    limit: int | None = None,
    seed: int | None = None,
) -> list[QAItem]:
    """Load and validate a dataset file; any bad record aborts the load.

    With ``limit`` set, returns a seeded uniform sample without
    replacement so subsets are reproducible; the seed defaults to 0.
    Duplicate item ids are rejected.
    """
    items: list[QAItem] = []
    seen: set[str] = set()
    for event in _events(path, source):
        if isinstance(event, IngestionError):
            raise event
        if event.id in seen:
            raise IngestionError(f"{path}: duplicate item id {event.id!r}")
        seen.add(event.id)
        items.append(event)
    if limit is not None and limit < len(items):
        rng = random.Random(0 if seed is None else seed)
        items = rng.sample(items, limit)
    return items


def validate_dataset(path: str | Path, source: str) -> tuple[int, list[str]]:
    """Lenient pass over a dataset file: item count plus parse errors.

    Unlike ``load_dataset`` this does not stop at the first bad record, so
    it suits checking the health of a freshly obtained file.
    """
    count = 0
    errors: list[str] = []
    seen: set[str] = set()
    for event in _events(path, source):
        if isinstance(event, IngestionError):
            errors.append(str(event))
            continue
        if event.id in seen:
            errors.append(f"duplicate item id {event.id!r}")
            continue
        seen.add(event.id)
        count += 1
    return count, errors
