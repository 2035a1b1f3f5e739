"""Dataset loading: canonical JSONL plus the COPA and E-CARE source formats.

Every loader returns validated :class:`CqaExample` values with 0-based gold
indices; COPA's 1-based most-plausible-alternative is converted here.
"""

from __future__ import annotations

import json
import random
import xml.etree.ElementTree as ET
from pathlib import Path

from .errors import DataError
from .model import CqaExample, Direction, Source, validate_example


def load_canonical(path: str | Path) -> list[CqaExample]:
    """One JSON object per line: id, context, direction, candidates, gold_index, source."""
    examples = []
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                examples.append(validate_example(CqaExample.from_dict(json.loads(line))))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: bad example line: {exc}") from exc
    if not examples:
        raise DataError(f"{path}: no examples")
    return examples


def dump_canonical(examples: list[CqaExample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for example in examples:
            fh.write(json.dumps(example.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")


def load_copa(path: str | Path) -> list[CqaExample]:
    """Parse COPA XML: item elements with asks-for and most-plausible-alternative."""
    path = Path(path)
    try:
        root = ET.parse(path).getroot()
    except ET.ParseError as exc:
        raise DataError(f"{path}: malformed XML: {exc}") from exc
    examples = []
    for item in root.iter("item"):
        item_id = item.get("id", "")
        asks_for = item.get("asks-for", "")
        if asks_for not in ("cause", "effect"):
            raise DataError(f"{path}: item {item_id!r} has unknown asks-for value {asks_for!r}")
        alternative = item.get("most-plausible-alternative", "")
        if alternative not in ("1", "2"):
            raise DataError(
                f"{path}: item {item_id!r} has bad most-plausible-alternative {alternative!r}"
            )
        children = {}
        for tag in ("p", "a1", "a2"):
            node = item.find(tag)
            if node is None or not (node.text or "").strip():
                raise DataError(f"{path}: item {item_id!r} is missing child <{tag}>")
            children[tag] = node.text.strip()
        examples.append(
            CqaExample(
                id=f"copa-{item_id}" if item_id else f"copa-{len(examples) + 1}",
                context=children["p"],
                direction=Direction(asks_for),
                candidates=(children["a1"], children["a2"]),
                gold_index=int(alternative) - 1,
                source=Source.COPA,
            )
        )
    if not examples:
        raise DataError(f"{path}: no <item> elements")
    return examples


def load_ecare(
    path: str | Path, sample_n: int | None = None, seed: int = 13
) -> list[CqaExample]:
    """Parse E-CARE JSONL (premise, ask-for, hypothesis1/2, label).

    ``sample_n`` draws a fixed-size random sample under the given seed, so
    repeat loads select the same examples.
    """
    path = Path(path)
    examples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: bad JSON: {exc}") from exc
            try:
                ask_for = row["ask-for"]
                premise = row["premise"]
                hypotheses = (row["hypothesis1"], row["hypothesis2"])
                label = row["label"]
            except KeyError as exc:
                raise DataError(f"{path}:{lineno}: missing key {exc}") from exc
            if ask_for not in ("cause", "effect"):
                raise DataError(f"{path}:{lineno}: unknown ask-for value {ask_for!r}")
            if label not in (0, 1):
                raise DataError(f"{path}:{lineno}: label must be 0 or 1, got {label!r}")
            examples.append(
                CqaExample(
                    id=f"ecare-{row.get('index', lineno)}",
                    context=premise,
                    direction=Direction(ask_for),
                    candidates=hypotheses,
                    gold_index=int(label),
                    source=Source.ECARE,
                )
            )
    if not examples:
        raise DataError(f"{path}: no examples")
    if sample_n is not None and sample_n < len(examples):
        examples = random.Random(seed).sample(examples, sample_n)
    return examples
