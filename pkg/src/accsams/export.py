"""Accessible Markdown and HTML emission from a document tree.

Both formats guarantee explicit heading hierarchy, at most one blank line
between elements, and non-empty alt text for every figure, formula, and
table.  HTML is the word-processor import vehicle; Markdown is the inline
editing format.
"""

from __future__ import annotations

import html
import io
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping, Optional

from .model import BlockCategory, ContentBlock, ExamDocument, VISUAL_CATEGORIES
from .solutions import (
    DEFAULT_SOLUTION_CONFIG,
    ExportLayout,
    SolutionConfig,
    reposition,
)
from .structure import Diagnostic, DocTree, TreeNode, _line_bands, reading_order

_CATEGORY_LABELS = {
    BlockCategory.FIGURE: "Figure",
    BlockCategory.FORMULA: "Formula",
    BlockCategory.TABLE: "Table",
}

_CAPTION_PREFIXES = ("figure", "fig.", "abbildung", "tabelle", "table")


class ExportFormat(Enum):
    MARKDOWN = "markdown"
    HTML = "html"


@dataclass(frozen=True)
class ExportOptions:
    format: ExportFormat = ExportFormat.MARKDOWN
    layout: ExportLayout = ExportLayout.INLINE_SOLUTIONS
    asset_dir: Optional[Path] = None
    max_heading_depth: int = 6

    def __post_init__(self):
        if not 1 <= self.max_heading_depth <= 6:
            raise ValueError("max_heading_depth must be in [1, 6]")

    @property
    def asset_ref_dir(self) -> str:
        return self.asset_dir.name if self.asset_dir is not None else "assets"


class MissingAltTextError(ValueError):
    """Export refuses visual blocks without alt text."""

    def __init__(self, block_ids: list[str]):
        self.block_ids = block_ids
        super().__init__(f"missing alt text for blocks: {', '.join(block_ids)}")


def _collapse(text: Optional[str]) -> str:
    return re.sub(r"\s+", " ", text or "").strip()


def placeholder_alt_text(block: ContentBlock, doc: ExamDocument) -> str:
    """Deterministic alt-text fallback: category ordinal and page, plus an
    adjacent caption paragraph when one exists.  Never empty."""
    label = _CATEGORY_LABELS[block.category]
    order = reading_order(doc.blocks)
    by_id = {b.id: b for b in doc.blocks}
    same_kind = [
        bid for bid in order
        if by_id[bid].bbox.page == block.bbox.page and by_id[bid].category is block.category
    ]
    ordinal = same_kind.index(block.id) + 1
    base = f"{label} {ordinal} on page {block.bbox.page + 1}"

    caption = _find_caption(block, doc, order, by_id)
    if caption:
        return f"{base} — {caption}"
    return base


def _find_caption(block: ContentBlock, doc: ExamDocument, order: list[str], by_id: dict) -> Optional[str]:
    candidates: list[ContentBlock] = []
    idx = order.index(block.id)
    if idx + 1 < len(order):
        candidates.append(by_id[order[idx + 1]])
    bands = _line_bands([b for b in doc.blocks if b.bbox.page == block.bbox.page])
    for other in doc.blocks:
        if other.id != block.id and other.bbox.page == block.bbox.page and bands[other.id] == bands[block.id]:
            candidates.append(other)
    for cand in candidates:
        if cand.category is BlockCategory.PARAGRAPH and cand.text:
            text = _collapse(cand.text)
            if text.lower().startswith(_CAPTION_PREFIXES):
                return text
    return None


def _effective_alt(node: TreeNode) -> str:
    return (node.block.alt_text or "").strip() if node.block else ""


def _missing_alt_ids(trees: list[DocTree]) -> list[str]:
    missing = []
    for tree in trees:
        for node in tree.preorder():
            if node.block is not None and node.block.category in VISUAL_CATEGORIES:
                if not _effective_alt(node):
                    missing.append(node.block.id)
    return missing


def _fence_for(text: str) -> str:
    longest = max((len(run) for run in re.findall(r"`+", text)), default=0)
    return "`" * max(3, longest + 1)


def _heading_hashes(level: int, opts: ExportOptions) -> str:
    return "#" * min(max(level + 1, 1), opts.max_heading_depth)


def _md_list_line(node: TreeNode, assets: Mapping[str, str]) -> str:
    literal = node.marker.literal.strip()
    block = node.block
    if block is not None and block.category is BlockCategory.LIST_SYMBOL:
        # Dangling symbol kept as its own item.
        return f"- {_collapse(block.text)}".rstrip()
    if block is not None and block.category in VISUAL_CATEGORIES:
        if block.category is BlockCategory.FIGURE and block.id in assets:
            body = f"![{_effective_alt(node)}]({assets[block.id]})"
        else:
            body = f"*{_effective_alt(node)}*"
    else:
        body = _collapse(block.text if block else "")
    prefix = f"- {literal} " if literal else "- "
    return (prefix + body).rstrip()


def _md_node_chunks(node: TreeNode, opts: ExportOptions, assets: Mapping[str, str]) -> list[str]:
    if node.is_heading:
        text = _collapse(node.heading_text if node.heading_text is not None else (node.block.text if node.block else ""))
        return [f"{_heading_hashes(node.level, opts)} {text}".rstrip()]

    block = node.block
    if block is None:
        return []
    if block.category is BlockCategory.FIGURE:
        alt = _effective_alt(node)
        if block.id in assets:
            return [f"![{alt}]({assets[block.id]})"]
        return [f"*{alt}*"]
    if block.category is BlockCategory.FORMULA:
        chunks = [f"*{_effective_alt(node)}*"]
        if block.text and block.text.strip():
            chunks.append(f"$$\n{block.text.strip()}\n$$")
        return chunks
    if block.category is BlockCategory.TABLE:
        chunks = [f"*{_effective_alt(node)}*"]
        if block.text and block.text.strip():
            raw = block.text.strip("\n")
            fence = _fence_for(raw)
            chunks.append(f"{fence}\n{raw}\n{fence}")
        return chunks
    text = _collapse(block.text)
    return [text] if text else []


def _md_render_children(parent: TreeNode, opts: ExportOptions, assets: Mapping[str, str]) -> list[str]:
    chunks: list[str] = []
    run: list[str] = []
    for child in parent.children:
        if child.is_list_item and not child.children:
            run.append(_md_list_line(child, assets))
            continue
        if run:
            chunks.append("\n".join(run))
            run = []
        chunks.extend(_md_node_chunks(child, opts, assets))
        chunks.extend(_md_render_children(child, opts, assets))
    if run:
        chunks.append("\n".join(run))
    return chunks


def _finish_markdown(chunks: list[str]) -> str:
    text = "\n\n".join(c for c in chunks if c)
    text = re.sub(r"\n{3,}", "\n\n", text)
    return text.strip("\n") + "\n"


def _render_markdown(tree: DocTree, opts: ExportOptions, assets: Mapping[str, str]) -> str:
    return _finish_markdown(_md_render_children(tree.root, opts, assets))


def _html_node_lines(node: TreeNode, opts: ExportOptions, assets: Mapping[str, str]) -> list[str]:
    if node.is_heading:
        rank = min(max(node.level + 1, 1), opts.max_heading_depth, 6)
        text = _collapse(node.heading_text if node.heading_text is not None else (node.block.text if node.block else ""))
        return [f"<h{rank}>{html.escape(text)}</h{rank}>"]

    block = node.block
    if block is None:
        return []
    alt = html.escape(_effective_alt(node))
    if block.category is BlockCategory.FIGURE:
        lines = ["<figure>"]
        if block.id in assets:
            lines.append(f'<img src="{html.escape(assets[block.id], quote=True)}" alt="{alt}" />')
        lines.append(f"<figcaption>{alt}</figcaption>")
        lines.append("</figure>")
        return lines
    if block.category is BlockCategory.FORMULA:
        lines = ['<figure class="formula">']
        if block.text and block.text.strip():
            lines.append(f"<pre>{html.escape(block.text.strip())}</pre>")
        lines.append(f"<figcaption>{alt}</figcaption>")
        lines.append("</figure>")
        return lines
    if block.category is BlockCategory.TABLE:
        lines = ['<figure class="table">']
        if block.text and block.text.strip():
            lines.append(f"<pre>{html.escape(block.text.strip())}</pre>")
        lines.append(f"<figcaption>{alt}</figcaption>")
        lines.append("</figure>")
        return lines
    text = _collapse(block.text)
    return [f"<p>{html.escape(text)}</p>"] if text else []


def _html_list_line(node: TreeNode, assets: Mapping[str, str]) -> str:
    literal = node.marker.literal.strip()
    block = node.block
    if block is not None and block.category is BlockCategory.LIST_SYMBOL:
        return f"<li>{html.escape(_collapse(block.text))}</li>"
    if block is not None and block.category in VISUAL_CATEGORIES:
        alt = html.escape(_effective_alt(node))
        if block.category is BlockCategory.FIGURE and block.id in assets:
            body = f'<img src="{html.escape(assets[block.id], quote=True)}" alt="{alt}" />'
        else:
            body = f"<em>{alt}</em>"
    else:
        body = html.escape(_collapse(block.text if block else ""))
    prefix = html.escape(literal) + " " if literal else ""
    return f"<li>{prefix}{body}</li>"


def _html_render_children(parent: TreeNode, opts: ExportOptions, assets: Mapping[str, str]) -> list[str]:
    lines: list[str] = []
    run: list[str] = []
    for child in parent.children:
        if child.is_list_item and not child.children:
            run.append(_html_list_line(child, assets))
            continue
        if run:
            lines.append("<ul>")
            lines.extend(run)
            lines.append("</ul>")
            run = []
        lines.extend(_html_node_lines(child, opts, assets))
        lines.extend(_html_render_children(child, opts, assets))
    if run:
        lines.append("<ul>")
        lines.extend(run)
        lines.append("</ul>")
    return lines


def _render_html(tree: DocTree, doc: ExamDocument, opts: ExportOptions, assets: Mapping[str, str]) -> str:
    title = doc.source.filename
    for node in tree.preorder():
        if node.is_heading and node.level == 0:
            title = _collapse(node.heading_text if node.heading_text is not None else (node.block.text if node.block else ""))
            break
    body = _html_render_children(tree.root, opts, assets)
    lines = [
        "<!DOCTYPE html>",
        f'<html lang="{html.escape(doc.source.language, quote=True)}">',
        "<head>",
        '<meta charset="utf-8" />',
        f"<title>{html.escape(title)}</title>",
        "</head>",
        "<body>",
        *body,
        "</body>",
        "</html>",
    ]
    return "\n".join(lines) + "\n"


def extract_assets(doc: ExamDocument, opts: ExportOptions) -> tuple[dict[str, str], dict[str, bytes]]:
    """Crop figure regions out of page rasters.

    Returns (block id -> relative reference, relative path -> encoded bytes).
    Figures on pages without a readable raster are skipped; the renderer
    falls back to the alt-text placeholder.
    """
    refs: dict[str, str] = {}
    payloads: dict[str, bytes] = {}
    order = reading_order(doc.blocks)
    by_id = {b.id: b for b in doc.blocks}
    counters: dict[int, int] = {}
    for block_id in order:
        block = by_id[block_id]
        if block.category is not BlockCategory.FIGURE:
            continue
        page = doc.pages[block.bbox.page]
        if not page.image:
            continue
        image_path = Path(page.image)
        if not image_path.is_file():
            continue
        data = _crop_figure(image_path, page.width, page.height, block)
        if data is None:
            continue
        counters[block.bbox.page] = counters.get(block.bbox.page, 0) + 1
        ext = image_path.suffix.lower() or ".png"
        name = f"p{block.bbox.page}-fig{counters[block.bbox.page]}{ext}"
        ref = f"{opts.asset_ref_dir}/{name}"
        refs[block.id] = ref
        payloads[ref] = data
    return refs, payloads


def _crop_figure(image_path: Path, page_width: float, page_height: float, block: ContentBlock) -> Optional[bytes]:
    from PIL import Image

    try:
        with Image.open(image_path) as img:
            sx = img.width / page_width
            sy = img.height / page_height
            left = max(0, round(block.bbox.x0 * sx))
            top = max(0, round(block.bbox.y0 * sy))
            right = min(img.width, round(block.bbox.x1 * sx))
            bottom = min(img.height, round(block.bbox.y1 * sy))
            if right <= left or bottom <= top:
                return None
            crop = img.crop((left, top, right, bottom))
            buf = io.BytesIO()
            fmt = "JPEG" if image_path.suffix.lower() in (".jpg", ".jpeg") else "PNG"
            if fmt == "JPEG" and crop.mode not in ("RGB", "L"):
                crop = crop.convert("RGB")
            crop.save(buf, format=fmt)
            return buf.getvalue()
    except OSError:
        return None


@dataclass
class ExportResult:
    files: dict[str, str]
    assets: dict[str, bytes] = field(default_factory=dict)
    warnings: list[Diagnostic] = field(default_factory=list)


def export_document(
    doc: ExamDocument,
    tree: DocTree,
    opts: ExportOptions,
    solution_cfg: SolutionConfig = DEFAULT_SOLUTION_CONFIG,
) -> ExportResult:
    """Apply the layout and render; the single code path behind both the CLI
    and the review service, so their outputs are byte-identical."""
    result = reposition(tree, opts.layout, solution_cfg)

    missing = _missing_alt_ids(result.trees)
    if missing:
        raise MissingAltTextError(missing)

    refs, payloads = extract_assets(doc, opts)
    ext = ".md" if opts.format is ExportFormat.MARKDOWN else ".html"

    def render(t: DocTree) -> str:
        if opts.format is ExportFormat.MARKDOWN:
            return _render_markdown(t, opts, refs)
        return _render_html(t, doc, opts, refs)

    stem = Path(doc.source.filename).stem or "document"
    if len(result.trees) == 2:
        files = {
            f"questions{ext}": render(result.trees[0]),
            f"solutions{ext}": render(result.trees[1]),
        }
    else:
        files = {f"{stem}{ext}": render(result.trees[0])}

    used = {ref for ref in refs.values() if any(ref in text for text in files.values())}
    assets = {path: data for path, data in payloads.items() if path in used}
    return ExportResult(files=files, assets=assets, warnings=result.warnings)


def to_markdown(
    tree: DocTree,
    doc: ExamDocument,
    opts: ExportOptions,
    solution_cfg: SolutionConfig = DEFAULT_SOLUTION_CONFIG,
):
    """Render Markdown under the given layout.

    Returns one string, or a (questions, solutions) pair for the
    separate_solutions layout."""
    result = export_document(doc, tree, ExportOptions(ExportFormat.MARKDOWN, opts.layout, opts.asset_dir, opts.max_heading_depth), solution_cfg)
    texts = list(result.files.values())
    return texts[0] if len(texts) == 1 else tuple(texts)


def to_html(
    tree: DocTree,
    doc: ExamDocument,
    opts: ExportOptions,
    solution_cfg: SolutionConfig = DEFAULT_SOLUTION_CONFIG,
):
    """Render HTML under the given layout; pair for separate_solutions."""
    result = export_document(doc, tree, ExportOptions(ExportFormat.HTML, opts.layout, opts.asset_dir, opts.max_heading_depth), solution_cfg)
    texts = list(result.files.values())
    return texts[0] if len(texts) == 1 else tuple(texts)
