"""Block-file parsing/serialization and the corpus-filtering stages.

The block file is the canonical JSON interchange format: pages, detected
content blocks, and optional gold annotations.  The filter stages keep
manifest entries whose URL carries an include keyword, drop entries whose
text contains a known false-positive phrase, and suggest a study field by
weighted keyword counting.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Any, Optional

from .model import (
    Annotations,
    BBox,
    BlockCategory,
    ContentBlock,
    ExamDocument,
    Page,
    SourceInfo,
    Violation,
    validate_document,
)

BLOCK_FILE_VERSION = 1

#: Flag attached to manifest entries that cannot be text-filtered.
NEEDS_TEXT = "NEEDS_TEXT"


class SchemaError(ValueError):
    """A block file field is missing, has the wrong type, or an unknown value."""


class ValidationError(ValueError):
    """A structurally parseable document violates model invariants."""

    def __init__(self, violations: list[Violation]):
        self.violations = violations
        summary = "; ".join(f"{v.code}: {v.message}" for v in violations)
        super().__init__(f"document failed validation: {summary}")


def _require(obj: dict, key: str, kind, where: str):
    if key not in obj:
        raise SchemaError(f"{where}: missing field {key!r}")
    value = obj[key]
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise SchemaError(f"{where}: field {key!r} must be a number, got {value!r}")
        return float(value)
    if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
        raise SchemaError(f"{where}: field {key!r} must be {kind.__name__}, got {value!r}")
    return value


def _optional(obj: dict, key: str, kind, where: str):
    if obj.get(key) is None:
        return None
    return _require(obj, key, kind, where)


def _parse_block(raw: Any, pos: int) -> ContentBlock:
    where = f"blocks[{pos}]"
    if not isinstance(raw, dict):
        raise SchemaError(f"{where}: must be an object")
    block_id = _require(raw, "id", str, where)
    page = _require(raw, "page", int, where)
    bbox_raw = _require(raw, "bbox", list, where)
    if len(bbox_raw) != 4 or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in bbox_raw):
        raise SchemaError(f"{where}: bbox must be [x0, y0, x1, y1], got {bbox_raw!r}")
    category_raw = _require(raw, "category", str, where)
    try:
        category = BlockCategory(category_raw)
    except ValueError:
        raise SchemaError(f"{where}: unknown category {category_raw!r}") from None
    return ContentBlock(
        id=block_id,
        bbox=BBox(page, *(float(v) for v in bbox_raw)),
        category=category,
        text=_optional(raw, "text", str, where),
        confidence=_optional(raw, "confidence", float, where),
        color_accent=bool(raw.get("color_accent", False)),
        font_size=_optional(raw, "font_size", float, where),
        alt_text=_optional(raw, "alt_text", str, where),
        is_solution=bool(raw.get("is_solution", False)),
    )


def parse_block_file(data: bytes | str) -> ExamDocument:
    """Parse block-file JSON into a validated ExamDocument.

    Raises json.JSONDecodeError on malformed JSON, SchemaError on shape
    problems, and ValidationError when the parsed document violates model
    invariants.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    raw = json.loads(data)
    if not isinstance(raw, dict):
        raise SchemaError("top level: must be an object")

    version = _require(raw, "version", int, "top level")
    if version != BLOCK_FILE_VERSION:
        raise SchemaError(f"top level: unsupported schema version {version}")

    source_raw = _require(raw, "source", dict, "top level")
    source = SourceInfo(
        filename=_require(source_raw, "filename", str, "source"),
        language=_require(source_raw, "language", str, "source"),
    )

    pages = []
    for i, page_raw in enumerate(_require(raw, "pages", list, "top level")):
        where = f"pages[{i}]"
        if not isinstance(page_raw, dict):
            raise SchemaError(f"{where}: must be an object")
        pages.append(
            Page(
                index=_require(page_raw, "index", int, where),
                width=_require(page_raw, "width", float, where),
                height=_require(page_raw, "height", float, where),
                image=_optional(page_raw, "image", str, where),
            )
        )

    blocks = [_parse_block(b, i) for i, b in enumerate(_require(raw, "blocks", list, "top level"))]

    annotations = None
    ann_raw = raw.get("annotations")
    if ann_raw is not None:
        if not isinstance(ann_raw, dict):
            raise SchemaError("annotations: must be an object or null")
        order = ann_raw.get("order") or {}
        level = ann_raw.get("level") or {}
        for name, mapping in (("order", order), ("level", level)):
            if not isinstance(mapping, dict) or not all(
                isinstance(k, str) and isinstance(v, int) and not isinstance(v, bool) for k, v in mapping.items()
            ):
                raise SchemaError(f"annotations.{name}: must map block ids to integers")
        annotations = Annotations(order=dict(order), level=dict(level))

    doc = ExamDocument(
        version=version,
        source=source,
        pages=tuple(pages),
        blocks=tuple(blocks),
        annotations=annotations,
    )
    violations = validate_document(doc)
    if violations:
        raise ValidationError(violations)
    return doc


def document_to_dict(doc: ExamDocument) -> dict:
    """Render a document as the canonical block-file object."""
    return {
        "version": doc.version,
        "source": {"filename": doc.source.filename, "language": doc.source.language},
        "pages": [
            {"index": p.index, "width": p.width, "height": p.height, "image": p.image}
            for p in doc.pages
        ],
        "blocks": [
            {
                "id": b.id,
                "page": b.bbox.page,
                "bbox": [b.bbox.x0, b.bbox.y0, b.bbox.x1, b.bbox.y1],
                "category": b.category.value,
                "text": b.text,
                "confidence": b.confidence,
                "color_accent": b.color_accent,
                "font_size": b.font_size,
                "alt_text": b.alt_text,
                "is_solution": b.is_solution,
            }
            for b in doc.blocks
        ],
        "annotations": (
            {"order": dict(doc.annotations.order), "level": dict(doc.annotations.level)}
            if doc.annotations is not None
            else None
        ),
    }


def serialize_block_file(doc: ExamDocument) -> str:
    return json.dumps(document_to_dict(doc), ensure_ascii=False, indent=2) + "\n"


@dataclass(frozen=True)
class ManifestEntry:
    url: str
    path: Optional[str] = None
    text: Optional[str] = None
    flags: tuple[str, ...] = ()


def parse_manifest(data: str) -> list[ManifestEntry]:
    """Parse a JSON Lines manifest; raises ValueError naming the bad line."""
    entries = []
    for lineno, line in enumerate(data.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"manifest line {lineno}: malformed JSON ({exc.msg})") from exc
        if not isinstance(raw, dict) or not isinstance(raw.get("url"), str) or not raw["url"]:
            raise ValueError(f"manifest line {lineno}: entry must be an object with a non-empty 'url'")
        entries.append(
            ManifestEntry(
                url=raw["url"],
                path=raw.get("path"),
                text=raw.get("text"),
            )
        )
    return entries


DEFAULT_INCLUDE_KEYWORDS = ("exam", "klausur")
DEFAULT_FALSE_POSITIVE_PHRASES = ("exam schedule",)


@dataclass(frozen=True)
class FilterConfig:
    include_keywords: tuple[str, ...] = DEFAULT_INCLUDE_KEYWORDS
    false_positive_phrases: tuple[str, ...] = DEFAULT_FALSE_POSITIVE_PHRASES
    field_keywords: dict[str, dict[str, float]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.include_keywords:
            raise ValueError("include_keywords must be non-empty")
        for kw in list(self.include_keywords) + list(self.false_positive_phrases):
            if kw != kw.lower():
                raise ValueError(f"filter keywords must be lowercase: {kw!r}")

    @classmethod
    def from_dict(cls, raw: dict) -> "FilterConfig":
        fields: dict[str, dict[str, float]] = {}
        for name, keywords in (raw.get("field_keywords") or {}).items():
            # Accepts {"kw": weight} maps or [["kw", weight], ...] pair lists.
            if isinstance(keywords, dict):
                fields[name] = {str(k): float(w) for k, w in keywords.items()}
            else:
                fields[name] = {str(k): float(w) for k, w in keywords}
        return cls(
            include_keywords=tuple(raw.get("include_keywords", DEFAULT_INCLUDE_KEYWORDS)),
            false_positive_phrases=tuple(raw.get("false_positive_phrases", DEFAULT_FALSE_POSITIVE_PHRASES)),
            field_keywords=fields,
        )

    @classmethod
    def from_file(cls, path) -> "FilterConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def filter_urls(entries: list[ManifestEntry], cfg: FilterConfig) -> list[ManifestEntry]:
    """Keep exactly the entries whose lowercased URL contains an include keyword."""
    return [e for e in entries if any(kw in e.url.lower() for kw in cfg.include_keywords)]


def filter_false_positives(entries: list[ManifestEntry], cfg: FilterConfig) -> list[ManifestEntry]:
    """Drop entries whose lowercased text contains a false-positive phrase.

    Entries without a text layer cannot be judged; they are kept and flagged
    NEEDS_TEXT for manual review.
    """
    kept = []
    for entry in entries:
        if entry.text is None:
            if NEEDS_TEXT not in entry.flags:
                entry = replace(entry, flags=entry.flags + (NEEDS_TEXT,))
            kept.append(entry)
            continue
        text = entry.text.lower()
        if any(phrase in text for phrase in cfg.false_positive_phrases):
            continue
        kept.append(entry)
    return kept


@dataclass(frozen=True)
class FieldSuggestion:
    field: Optional[str]
    score: float


def suggest_study_field(text: Optional[str], cfg: FilterConfig) -> FieldSuggestion:
    """Score each configured study field by weighted keyword counts.

    score(field) = sum over keywords of occurrence count * weight; the best
    field wins, ties broken by lexicographic field name, none when all zero.
    """
    if not text or not cfg.field_keywords:
        return FieldSuggestion(None, 0.0)
    low = text.lower()
    best: Optional[str] = None
    best_score = 0.0
    for name in sorted(cfg.field_keywords):
        score = sum(low.count(kw.lower()) * weight for kw, weight in cfg.field_keywords[name].items())
        if score > best_score:
            best, best_score = name, score
    return FieldSuggestion(best, best_score)


@dataclass
class FilterReport:
    """Outcome of running both filter stages plus field suggestions."""

    kept: list[ManifestEntry]
    total: int
    dropped_no_keyword: int
    dropped_false_positive: int
    needs_text: int
    suggestions: dict[str, FieldSuggestion]


def run_filter_pipeline(entries: list[ManifestEntry], cfg: FilterConfig) -> FilterReport:
    by_url = filter_urls(entries, cfg)
    kept = filter_false_positives(by_url, cfg)
    suggestions = {e.url: suggest_study_field(e.text, cfg) for e in kept}
    return FilterReport(
        kept=kept,
        total=len(entries),
        dropped_no_keyword=len(entries) - len(by_url),
        dropped_false_positive=len(by_url) - len(kept),
        needs_text=sum(1 for e in kept if NEEDS_TEXT in e.flags),
        suggestions=suggestions,
    )
