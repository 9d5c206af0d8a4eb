"""Reading order, enumeration-marker classification, and hierarchy tree building.

Reading order sorts blocks by page, then by line band (blocks whose vertical
intervals overlap by at least half the smaller height share a band), then by
horizontal position.  Markers parsed from leading text drive heading levels;
a stack walk over the ordered blocks yields the document tree whose preorder
equals the reading order.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterator, Optional, Sequence

from .model import BlockCategory, ContentBlock, ExamDocument

# Fraction of the smaller block height two vertical intervals must share
# to be considered the same line band.
BAND_OVERLAP = 0.5

DEFAULT_HEADING_KEYWORDS = (
    "aufgabe",
    "teilaufgabe",
    "frage",
    "question",
    "exercise",
    "problem",
    "task",
    "part",
)


class MarkerStyle(Enum):
    DECIMAL_DOT = "decimal_dot"
    DECIMAL_PAREN = "decimal_paren"
    MULTILEVEL_DECIMAL = "multilevel_decimal"
    ALPHA_LOWER = "alpha_lower"
    ALPHA_UPPER = "alpha_upper"
    ROMAN_LOWER = "roman_lower"
    ROMAN_UPPER = "roman_upper"
    BULLET = "bullet"
    KEYWORD_HEADING = "keyword_heading"
    NONE = "none"


#: Flat, value-carrying styles whose level is inherited from the nearest
#: preceding heading of the same style.
FLAT_ORDINAL_STYLES = frozenset(
    {
        MarkerStyle.DECIMAL_DOT,
        MarkerStyle.DECIMAL_PAREN,
        MarkerStyle.ALPHA_LOWER,
        MarkerStyle.ALPHA_UPPER,
        MarkerStyle.ROMAN_LOWER,
        MarkerStyle.ROMAN_UPPER,
    }
)


@dataclass(frozen=True)
class Marker:
    style: MarkerStyle
    value: Optional[int] = None
    depth: int = 1
    literal: str = ""


NO_MARKER = Marker(MarkerStyle.NONE)

_ROMAN_VALUES = {"i": 1, "v": 5, "x": 10, "l": 50, "c": 100, "d": 500, "m": 1000}
_ROMAN_CANON = re.compile(r"^m{0,3}(cm|cd|d?c{0,3})(xc|xl|l?x{0,3})(ix|iv|v?i{0,3})$")
# Single letters readable as either a roman numeral or an alphabetic ordinal.
_AMBIGUOUS_ROMAN_CHARS = frozenset("ivxlcdm")


def roman_to_int(token: str) -> Optional[int]:
    """Parse a canonical roman numeral (one consistent case); None if invalid."""
    low = token.lower()
    if token not in (low, token.upper()) or not low or not _ROMAN_CANON.match(low):
        return None
    total = 0
    for ch, nxt in zip(low, low[1:] + " "):
        value = _ROMAN_VALUES[ch]
        total += -value if nxt != " " and _ROMAN_VALUES.get(nxt, 0) > value else value
    return total


_KEYWORD_RE_CACHE: dict[tuple[str, ...], re.Pattern] = {}

_MULTI_RE = re.compile(r"^(\d+(?:\.\d+)+)\.?(?=[\s:]|$)")
_BARE_NUM_RE = re.compile(r"^(\d+)(?=\s)")
_DEC_DOT_RE = re.compile(r"^(\d+)\.(?=\s|$)")
_DEC_PAREN_RE = re.compile(r"^\(?(\d+)\)(?=\s|$)")
_ALPHA_RE = re.compile(r"^\(?([A-Za-z])[.)](?=\s|$)")
_ROMAN_RE = re.compile(r"^\(?([ivxlcdm]+|[IVXLCDM]+)[.)](?=\s|$)")
_BULLET_RE = re.compile(r"^([•◦▪‣∙·*–—-])(?=\s|$)")


def _keyword_re(keywords: tuple[str, ...]) -> re.Pattern:
    pattern = _KEYWORD_RE_CACHE.get(keywords)
    if pattern is None:
        alts = "|".join(re.escape(kw) for kw in sorted(keywords, key=len, reverse=True))
        pattern = re.compile(rf"^((?:{alts})\b(?:\s+(\d+))?)", re.IGNORECASE)
        _KEYWORD_RE_CACHE[keywords] = pattern
    return pattern


def classify_marker(text: Optional[str], heading_keywords: Sequence[str] = DEFAULT_HEADING_KEYWORDS) -> Marker:
    """Parse a leading enumeration marker; total function, longest match wins.

    Ambiguous single letters that read as roman numerals ("i.", "v)") default
    to the roman style; resolve_marker_runs flips them to alphabetic when they
    continue an alphabetic sibling run.
    """
    if not text:
        return NO_MARKER
    head = text.lstrip()

    candidates: list[Marker] = []
    m = _keyword_re(tuple(k.lower() for k in heading_keywords)).match(head)
    if m:
        value = int(m.group(2)) if m.group(2) else None
        candidates.append(Marker(MarkerStyle.KEYWORD_HEADING, value, 1, m.group(1)))
    m = _MULTI_RE.match(head)
    if m:
        parts = m.group(1).split(".")
        candidates.append(Marker(MarkerStyle.MULTILEVEL_DECIMAL, int(parts[-1]), len(parts), m.group(0)))
    else:
        # A bare number heading ("1 Introduction") opens a multilevel family.
        m = _BARE_NUM_RE.match(head)
        if m:
            candidates.append(Marker(MarkerStyle.MULTILEVEL_DECIMAL, int(m.group(1)), 1, m.group(1)))
    m = _DEC_DOT_RE.match(head)
    if m:
        candidates.append(Marker(MarkerStyle.DECIMAL_DOT, int(m.group(1)), 1, m.group(0)))
    m = _DEC_PAREN_RE.match(head)
    if m:
        candidates.append(Marker(MarkerStyle.DECIMAL_PAREN, int(m.group(1)), 1, m.group(0)))
    m = _ROMAN_RE.match(head)
    if m:
        value = roman_to_int(m.group(1))
        if value is not None:
            style = MarkerStyle.ROMAN_LOWER if m.group(1).islower() else MarkerStyle.ROMAN_UPPER
            candidates.append(Marker(style, value, 1, m.group(0)))
    m = _ALPHA_RE.match(head)
    if m:
        ch = m.group(1)
        style = MarkerStyle.ALPHA_LOWER if ch.islower() else MarkerStyle.ALPHA_UPPER
        candidates.append(Marker(style, ord(ch.lower()) - ord("a") + 1, 1, m.group(0)))
    m = _BULLET_RE.match(head)
    if m:
        candidates.append(Marker(MarkerStyle.BULLET, None, 1, m.group(1)))

    if not candidates:
        return NO_MARKER
    best_len = max(len(c.literal) for c in candidates)
    return next(c for c in candidates if len(c.literal) == best_len)


def _is_ambiguous_roman(marker: Marker) -> bool:
    if marker.style not in (MarkerStyle.ROMAN_LOWER, MarkerStyle.ROMAN_UPPER):
        return False
    token = marker.literal.strip("().").strip()
    return len(token) == 1 and token.lower() in _AMBIGUOUS_ROMAN_CHARS


def resolve_marker_runs(markers: Sequence[Marker]) -> list[Marker]:
    """Re-style ambiguous roman/alpha single letters to continue a sibling run.

    "h." followed by "i." reads alphabetic; a standalone "i." stays roman.
    """
    resolved: list[Marker] = []
    prev: Optional[Marker] = None
    for marker in markers:
        if _is_ambiguous_roman(marker) and prev is not None:
            token = marker.literal.strip("().").strip()
            alpha_style = MarkerStyle.ALPHA_LOWER if token.islower() else MarkerStyle.ALPHA_UPPER
            alpha_value = ord(token.lower()) - ord("a") + 1
            if prev.style == alpha_style and prev.value == alpha_value - 1:
                marker = replace(marker, style=alpha_style, value=alpha_value)
        resolved.append(marker)
        if marker.style is not MarkerStyle.NONE:
            prev = marker
    return resolved


def _line_bands(blocks: list[ContentBlock]) -> dict[str, int]:
    """Group same-page blocks into line bands (connected components under the
    pairwise >=50%-of-smaller-height vertical overlap rule)."""
    order = sorted(blocks, key=lambda b: (b.bbox.y0, b.bbox.x0, b.id))
    parent = list(range(len(order)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, a in enumerate(order):
        for j in range(i + 1, len(order)):
            b = order[j]
            if b.bbox.y0 >= a.bbox.y1:
                break
            overlap = min(a.bbox.y1, b.bbox.y1) - max(a.bbox.y0, b.bbox.y0)
            smaller = min(a.bbox.height, b.bbox.height)
            if smaller > 0 and overlap >= BAND_OVERLAP * smaller:
                parent[find(i)] = find(j)

    # Band indices follow the topmost (then leftmost) member of each band.
    roots: dict[int, tuple] = {}
    for i, block in enumerate(order):
        root = find(i)
        key = (block.bbox.y0, block.bbox.x0, block.id)
        if root not in roots or key < roots[root]:
            roots[root] = key
    ranked = sorted(roots, key=lambda r: roots[r])
    band_of_root = {root: rank for rank, root in enumerate(ranked)}
    return {block.id: band_of_root[find(i)] for i, block in enumerate(order)}


def reading_order(blocks: Sequence[ContentBlock]) -> list[str]:
    """Total, deterministic reading order: (page, line band, x0, id).

    Canonical: any permutation of the same blocks yields the same output.
    """
    by_page: dict[int, list[ContentBlock]] = {}
    for block in blocks:
        by_page.setdefault(block.bbox.page, []).append(block)

    ordered: list[str] = []
    for page in sorted(by_page):
        page_blocks = by_page[page]
        bands = _line_bands(page_blocks)
        page_blocks.sort(key=lambda b: (bands[b.id], b.bbox.x0, b.id))
        ordered.extend(b.id for b in page_blocks)
    return ordered


def assign_heading_levels(headings: Sequence[tuple[ContentBlock, Marker]]) -> dict[str, int]:
    """Assign a level >= 0 to each heading, walked in reading order.

    Title (level 0): the first unmarked heading on page 0, when it carries the
    largest known font size among page-0 headings.  keyword_heading -> 1;
    multilevel -> its depth; flat ordinal styles inherit the level of the
    nearest preceding same-style heading (else previous level + 1, else 1);
    unmarked headings inherit the previous heading's level (else 1).
    """
    levels: dict[str, int] = {}
    if not headings:
        return levels

    title_id = None
    page0_sizes = [b.font_size for b, _ in headings if b.bbox.page == 0 and b.font_size is not None]
    first_block, first_marker = headings[0]
    if first_marker.style is MarkerStyle.NONE and first_block.bbox.page == 0:
        if first_block.font_size is not None and page0_sizes and first_block.font_size >= max(page0_sizes):
            title_id = first_block.id

    assigned: list[tuple[Marker, int]] = []
    for block, marker in headings:
        if block.id == title_id:
            level = 0
        elif marker.style is MarkerStyle.KEYWORD_HEADING:
            level = 1
        elif marker.style is MarkerStyle.MULTILEVEL_DECIMAL:
            level = marker.depth
        elif marker.style in FLAT_ORDINAL_STYLES:
            same = [lv for mk, lv in assigned if mk.style == marker.style]
            if same:
                level = same[-1]
            elif assigned:
                level = assigned[-1][1] + 1
            else:
                level = 1
        else:
            level = assigned[-1][1] if assigned else 1
        levels[block.id] = level
        assigned.append((marker, level))
    return levels


@dataclass
class TreeNode:
    """A node of the document tree.

    Synthetic nodes (the root, generated section or hint headings) carry no
    block and set heading_text instead.  Merged list items keep the content
    block as `block` and the consumed list symbol as `symbol_block`.
    """

    level: int
    block: Optional[ContentBlock] = None
    symbol_block: Optional[ContentBlock] = None
    heading_text: Optional[str] = None
    marker: Marker = NO_MARKER
    is_solution: bool = False
    children: list["TreeNode"] = field(default_factory=list)

    @property
    def block_id(self) -> Optional[str]:
        return self.block.id if self.block is not None else None

    @property
    def is_heading(self) -> bool:
        if self.heading_text is not None:
            return True
        return self.block is not None and self.block.category is BlockCategory.HEADING

    @property
    def is_list_item(self) -> bool:
        return self.symbol_block is not None or (
            self.block is not None and self.block.category is BlockCategory.LIST_SYMBOL
        )

    def covered_block_ids(self) -> list[str]:
        ids = []
        if self.symbol_block is not None:
            ids.append(self.symbol_block.id)
        if self.block is not None:
            ids.append(self.block.id)
        return ids

    def walk(self) -> Iterator["TreeNode"]:
        yield self
        for child in self.children:
            yield from child.walk()

    def copy(self) -> "TreeNode":
        return replace(self, children=[c.copy() for c in self.children])


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    block_id: Optional[str] = None


@dataclass
class DocTree:
    """Hierarchy tree over content blocks; preorder equals reading order."""

    root: TreeNode
    diagnostics: list[Diagnostic] = field(default_factory=list)

    def preorder(self) -> Iterator[TreeNode]:
        for child in self.root.children:
            yield from child.walk()

    @property
    def ordered(self) -> list[str]:
        ids: list[str] = []
        for node in self.preorder():
            ids.extend(node.covered_block_ids())
        return ids

    def block_level_map(self) -> dict[str, int]:
        levels: dict[str, int] = {}
        for node in self.preorder():
            for block_id in node.covered_block_ids():
                levels[block_id] = node.level
        return levels

    def copy(self) -> "DocTree":
        return DocTree(root=self.root.copy(), diagnostics=list(self.diagnostics))


def build_tree(
    doc: ExamDocument,
    heading_keywords: Sequence[str] = DEFAULT_HEADING_KEYWORDS,
) -> DocTree:
    """Run reading order, list-symbol merging, marker classification, and the
    level stack to construct the document tree."""
    by_id = {b.id: b for b in doc.blocks}
    order = reading_order(doc.blocks)
    diagnostics: list[Diagnostic] = []

    page_bands: dict[int, dict[str, int]] = {}
    for page in {b.bbox.page for b in doc.blocks}:
        page_bands[page] = _line_bands([b for b in doc.blocks if b.bbox.page == page])

    def same_band(a: ContentBlock, b: ContentBlock) -> bool:
        if a.bbox.page != b.bbox.page:
            return False
        bands = page_bands[a.bbox.page]
        return bands[a.id] == bands[b.id]

    # Merge each list symbol with its same-band successor into one list item.
    items: list[tuple[ContentBlock, Optional[ContentBlock]]] = []  # (block, symbol)
    i = 0
    while i < len(order):
        block = by_id[order[i]]
        if block.category is BlockCategory.LIST_SYMBOL:
            nxt = by_id[order[i + 1]] if i + 1 < len(order) else None
            if nxt is not None and nxt.category is not BlockCategory.LIST_SYMBOL and same_band(block, nxt):
                items.append((nxt, block))
                i += 2
                continue
            diagnostics.append(
                Diagnostic("DANGLING_LIST_SYMBOL", f"list symbol {block.id!r} has no same-band successor", block.id)
            )
        items.append((block, None))
        i += 1

    markers: list[Marker] = []
    heading_run: Optional[Marker] = None
    list_run: Optional[Marker] = None
    for block, symbol in items:
        if block.category is BlockCategory.HEADING:
            marker = classify_marker(block.text, heading_keywords)
            resolved = resolve_marker_runs([heading_run, marker])[-1] if heading_run else marker
            heading_run = resolved
            list_run = None  # a heading starts a fresh list context
            markers.append(resolved)
        elif symbol is not None or block.category is BlockCategory.LIST_SYMBOL:
            source = symbol if symbol is not None else block
            marker = classify_marker(source.text, heading_keywords)
            resolved = resolve_marker_runs([list_run, marker])[-1] if list_run else marker
            list_run = resolved
            markers.append(resolved)
        else:
            markers.append(NO_MARKER)

    heading_pairs = [
        (block, marker)
        for (block, _), marker in zip(items, markers)
        if block.category is BlockCategory.HEADING
    ]
    levels = assign_heading_levels(heading_pairs)

    # Enumeration cues win over font size; note conflicts for review.
    prev_heading: Optional[tuple[ContentBlock, int]] = None
    for block, _ in heading_pairs:
        level = levels[block.id]
        if prev_heading is not None:
            prev_block, prev_level = prev_heading
            if (
                level > prev_level
                and block.font_size is not None
                and prev_block.font_size is not None
                and block.font_size > prev_block.font_size
            ):
                diagnostics.append(
                    Diagnostic(
                        "CUE_CONFLICT",
                        f"heading {block.id!r} is nested under {prev_block.id!r} by enumeration but has a larger font",
                        block.id,
                    )
                )
        prev_heading = (block, level)

    root = TreeNode(level=-1)
    stack: list[TreeNode] = [root]
    for (block, symbol), marker in zip(items, markers):
        flagged = block.is_solution or (symbol is not None and symbol.is_solution)
        if block.category is BlockCategory.HEADING:
            level = levels[block.id]
            while stack[-1].level >= level:
                stack.pop()
            node = TreeNode(level=level, block=block, marker=marker, is_solution=flagged)
            stack[-1].children.append(node)
            stack.append(node)
        else:
            node = TreeNode(
                level=stack[-1].level + 1,
                block=block,
                symbol_block=symbol,
                marker=marker,
                is_solution=flagged,
            )
            stack[-1].children.append(node)

    return DocTree(root=root, diagnostics=diagnostics)
