"""Shared fixture builders plus the acceptance-summary report hook."""

from __future__ import annotations

import json
from typing import Optional

import pytest

from accsams.model import (
    Annotations,
    BBox,
    BlockCategory,
    ContentBlock,
    ExamDocument,
    Page,
    SourceInfo,
)


def block(
    bid: str,
    box: tuple[float, float, float, float],
    category: str = "paragraph",
    page: int = 0,
    text: Optional[str] = None,
    **kwargs,
) -> ContentBlock:
    return ContentBlock(
        id=bid,
        bbox=BBox(page, *box),
        category=BlockCategory(category),
        text=text,
        **kwargs,
    )


def document(
    blocks,
    pages: int = 1,
    width: float = 600.0,
    height: float = 900.0,
    filename: str = "exam.pdf",
    language: str = "de",
    order: Optional[dict[str, int]] = None,
    level: Optional[dict[str, int]] = None,
) -> ExamDocument:
    annotations = None
    if order is not None or level is not None:
        annotations = Annotations(order=order or {}, level=level or {})
    return ExamDocument(
        version=1,
        source=SourceInfo(filename=filename, language=language),
        pages=tuple(Page(i, width, height) for i in range(pages)),
        blocks=tuple(blocks),
        annotations=annotations,
    )


def block_dict(bid: str, box, category: str = "paragraph", page: int = 0, **kwargs) -> dict:
    raw = {
        "id": bid,
        "page": page,
        "bbox": list(box),
        "category": category,
        "text": kwargs.pop("text", None),
        "confidence": kwargs.pop("confidence", None),
        "color_accent": kwargs.pop("color_accent", False),
        "font_size": kwargs.pop("font_size", None),
        "alt_text": kwargs.pop("alt_text", None),
        "is_solution": kwargs.pop("is_solution", False),
    }
    assert not kwargs, f"unknown block fields: {kwargs}"
    return raw


def doc_dict(blocks, pages: int = 1, width: float = 600.0, height: float = 900.0, **kwargs) -> dict:
    return {
        "version": kwargs.pop("version", 1),
        "source": {
            "filename": kwargs.pop("filename", "exam.pdf"),
            "language": kwargs.pop("language", "de"),
        },
        "pages": [
            {"index": i, "width": width, "height": height, "image": None} for i in range(pages)
        ],
        "blocks": list(blocks),
        "annotations": kwargs.pop("annotations", None),
    }


def doc_json(blocks, **kwargs) -> str:
    return json.dumps(doc_dict(blocks, **kwargs), ensure_ascii=False)


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(label): marks a test as one acceptance criterion"
    )


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one PASS/FAIL line per acceptance criterion."""
    lines: list[tuple[str, str]] = []
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            if getattr(report, "when", "call") != "call" and status != "error":
                continue
            keywords = getattr(report, "keywords", {})
            if "acceptance" not in keywords:
                continue
            item = report.nodeid
            label = _acceptance_label(config, report)
            verdict = "PASS" if status == "passed" else "FAIL"
            lines.append((verdict, label or item))
    if lines:
        terminalreporter.section("acceptance criteria")
        for verdict, label in sorted(set(lines), key=lambda pair: pair[1]):
            terminalreporter.write_line(f"{verdict}: {label}")


def _acceptance_label(config, report) -> Optional[str]:
    # The label travels in the report's user_properties (set by a fixture).
    for name, value in getattr(report, "user_properties", []):
        if name == "acceptance_label":
            return str(value)
    return None


@pytest.fixture(autouse=True)
def _record_acceptance_label(request, record_property):
    marker = request.node.get_closest_marker("acceptance")
    if marker and marker.args:
        record_property("acceptance_label", marker.args[0])
    yield
