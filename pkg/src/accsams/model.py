"""Core domain types shared by every pipeline stage, plus structural validation."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

# Detection boxes may overflow page edges slightly; tolerated up to this margin.
BBOX_PAGE_TOLERANCE = 1.0


class BlockCategory(Enum):
    HEADING = "heading"
    PARAGRAPH = "paragraph"
    LIST_SYMBOL = "list_symbol"
    FIGURE = "figure"
    FORMULA = "formula"
    TABLE = "table"


#: Categories that must carry non-empty alt text by export time.
VISUAL_CATEGORIES = frozenset(
    {BlockCategory.FIGURE, BlockCategory.FORMULA, BlockCategory.TABLE}
)


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in page units, origin top-left, y grows downward."""

    page: int
    x0: float
    y0: float
    x1: float
    y1: float

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def center_y(self) -> float:
        return (self.y0 + self.y1) / 2.0


@dataclass(frozen=True)
class ContentBlock:
    """One detected region of a page; the atom of the whole pipeline."""

    id: str
    bbox: BBox
    category: BlockCategory
    text: Optional[str] = None
    confidence: Optional[float] = None
    color_accent: bool = False
    font_size: Optional[float] = None
    alt_text: Optional[str] = None
    is_solution: bool = False


@dataclass(frozen=True)
class Page:
    index: int
    width: float
    height: float
    image: Optional[str] = None


@dataclass(frozen=True)
class SourceInfo:
    filename: str
    language: str


@dataclass(frozen=True)
class Annotations:
    """Optional gold data for evaluation fixtures (per-block order and level)."""

    order: dict[str, int] = field(default_factory=dict)
    level: dict[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class ExamDocument:
    version: int
    source: SourceInfo
    pages: tuple[Page, ...]
    blocks: tuple[ContentBlock, ...]
    annotations: Optional[Annotations] = None

    def block_by_id(self, block_id: str) -> ContentBlock:
        for block in self.blocks:
            if block.id == block_id:
                return block
        raise KeyError(block_id)


@dataclass(frozen=True)
class Violation:
    """A structural defect found by validate_document; data, not an error."""

    code: str
    message: str
    block_id: Optional[str] = None


def validate_document(doc: ExamDocument) -> list[Violation]:
    """Check structural invariants and return all violations (empty = valid).

    Pure and deterministic; never mutates.  Codes are stable identifiers:
    DUP_ID, BAD_PAGE, BAD_PAGE_REF, BBOX_RANGE, BAD_GOLD_ORDER, BAD_FIELD.
    """
    violations: list[Violation] = []

    for i, page in enumerate(doc.pages):
        if page.index != i:
            violations.append(
                Violation("BAD_PAGE", f"page indices must be contiguous from 0, got {page.index} at position {i}")
            )
        if page.width <= 0 or page.height <= 0:
            violations.append(
                Violation("BAD_PAGE", f"page {page.index} has non-positive extent {page.width}x{page.height}")
            )

    seen: set[str] = set()
    for block in doc.blocks:
        if block.id in seen:
            violations.append(Violation("DUP_ID", f"duplicate block id {block.id!r}", block.id))
        seen.add(block.id)

        bbox = block.bbox
        if not 0 <= bbox.page < len(doc.pages):
            violations.append(
                Violation("BAD_PAGE_REF", f"block {block.id!r} references page {bbox.page} of {len(doc.pages)}", block.id)
            )
        else:
            page = doc.pages[bbox.page]
            t = BBOX_PAGE_TOLERANCE
            if bbox.x0 < -t or bbox.y0 < -t or bbox.x1 > page.width + t or bbox.y1 > page.height + t:
                violations.append(
                    Violation("BBOX_RANGE", f"block {block.id!r} bbox lies outside page {bbox.page} extent", block.id)
                )
        if bbox.x0 >= bbox.x1 or bbox.y0 >= bbox.y1:
            violations.append(
                Violation("BBOX_RANGE", f"block {block.id!r} bbox is degenerate", block.id)
            )

        if block.confidence is not None and not 0.0 <= block.confidence <= 1.0:
            violations.append(
                Violation("BAD_FIELD", f"block {block.id!r} confidence {block.confidence} outside [0, 1]", block.id)
            )
        if block.font_size is not None and block.font_size <= 0:
            violations.append(
                Violation("BAD_FIELD", f"block {block.id!r} font_size {block.font_size} must be positive", block.id)
            )

    if doc.annotations is not None:
        known = {b.id for b in doc.blocks}
        for name, mapping in (("order", doc.annotations.order), ("level", doc.annotations.level)):
            for block_id in mapping:
                if block_id not in known:
                    violations.append(
                        Violation("BAD_GOLD_ORDER", f"annotations.{name} references unknown block {block_id!r}", block_id)
                    )
        order = doc.annotations.order
        if order and sorted(order.values()) != list(range(len(order))):
            violations.append(
                Violation("BAD_GOLD_ORDER", f"annotations.order values must form a permutation of 0..{len(order) - 1}")
            )

    return violations
