"""Solution detection (keyword subtree, color accent, blank-answer guard) and
the repositioning layouts that relocate solutions for export."""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence

from .structure import Diagnostic, DocTree, TreeNode

DEFAULT_SOLUTION_KEYWORDS = ("solution", "answer", "lösung", "antwort", "musterlösung")


@dataclass(frozen=True)
class SolutionConfig:
    keywords: tuple[str, ...] = DEFAULT_SOLUTION_KEYWORDS
    synthesized_heading_label: str = "Solution"
    consolidated_section_label: str = "Solutions"

    def __post_init__(self):
        if not self.keywords:
            raise ValueError("solution keywords must be non-empty")
        for kw in self.keywords:
            if kw != kw.lower():
                raise ValueError(f"solution keywords must be lowercase: {kw!r}")


DEFAULT_SOLUTION_CONFIG = SolutionConfig()


class ExportLayout(Enum):
    INLINE_SOLUTIONS = "inline_solutions"
    SOLUTIONS_AT_END = "solutions_at_end"
    SEPARATE_SOLUTIONS = "separate_solutions"


_FILL_RUN_RE = re.compile(r"[_.–—-]{3,}")
_ONLY_FILL_RE = re.compile(r"^[\s_.–—-]*$")


def is_blank_answer_prompt(text: Optional[str], keywords: Sequence[str] = DEFAULT_SOLUTION_KEYWORDS) -> bool:
    """True for fill-in cues like "Your answer: ______" that must not be
    treated as solution headings.

    Matches a keyword followed (after an optional colon) by a run of >= 3
    fill characters (underscore/dot/dash) and nothing else, or by a purely
    whitespace remainder after "keyword: "."""
    if not text:
        return False
    low = text.lower()
    for keyword in keywords:
        idx = low.find(keyword)
        if idx < 0:
            continue
        rest = text[idx + len(keyword):].lstrip()
        had_colon = rest.startswith(":")
        if had_colon:
            rest = rest[1:]
        if _ONLY_FILL_RE.match(rest) and _FILL_RUN_RE.search(rest):
            return True
        if had_colon and rest != "" and rest.strip() == "":
            return True
    return False


def _heading_is_solution(text: Optional[str], cfg: SolutionConfig) -> bool:
    if not text:
        return False
    low = text.lower()
    if not any(kw in low for kw in cfg.keywords):
        return False
    return not is_blank_answer_prompt(text, cfg.keywords)


def detect_solutions(tree: DocTree, cfg: SolutionConfig = DEFAULT_SOLUTION_CONFIG) -> DocTree:
    """Flag solution nodes: keyword headings flag their whole subtree, color
    accents flag the single node.  Flags are only ever set, never cleared."""
    out = tree.copy()

    def visit(node: TreeNode, in_solution_subtree: bool) -> None:
        if node.is_heading and node.block is not None and _heading_is_solution(node.block.text, cfg):
            in_solution_subtree = True
        colored = (node.block is not None and node.block.color_accent) or (
            node.symbol_block is not None and node.symbol_block.color_accent
        )
        if in_solution_subtree or colored:
            node.is_solution = True
        for child in node.children:
            visit(child, in_solution_subtree)

    for child in out.root.children:
        visit(child, False)
    return out


@dataclass
class RepositionResult:
    """One tree (inline/at-end) or two (questions + solutions), plus warnings."""

    trees: list[DocTree]
    warnings: list[Diagnostic] = field(default_factory=list)


def _fully_flagged(node: TreeNode) -> bool:
    return node.is_solution and all(_fully_flagged(c) for c in node.children)


def _question_path(ancestors: list[TreeNode]) -> str:
    labels = []
    for node in ancestors:
        # Level 0 is the document title, not a question heading.
        if not node.is_heading or node.level == 0:
            continue
        label = node.marker.literal.strip()
        if not label:
            label = (node.heading_text or (node.block.text if node.block else "") or "").strip()
        if label:
            labels.append(label)
    return " > ".join(labels)


def _extract_flagged(
    node: TreeNode,
    ancestors: list[TreeNode],
    found: list[tuple[TreeNode, str]],
    last_question: list[str],
) -> list[TreeNode]:
    """Pull flagged material out of a subtree, in preorder.

    A fully flagged subtree moves whole.  A flagged node with unflagged
    descendants (a color-accented heading over plain content) moves alone as
    a childless shell; its surviving children are promoted into its place so
    question order is untouched.  Returns the replacement node list.

    last_question tracks the most recent unflagged question heading's path so
    that solution headings sitting next to (not under) their question still
    get a usable cross-reference.
    """
    if _fully_flagged(node):
        found.append((node, _question_path(ancestors) or last_question[0]))
        return []
    if node.is_solution:
        shell = replace(node, children=[])
        found.append((shell, _question_path(ancestors) or last_question[0]))
        promoted: list[TreeNode] = []
        for child in node.children:
            promoted.extend(_extract_flagged(child, ancestors + [node], found, last_question))
        return promoted
    if node.is_heading and node.level > 0:
        last_question[0] = _question_path(ancestors + [node])
    kept: list[TreeNode] = []
    for child in node.children:
        kept.extend(_extract_flagged(child, ancestors + [node], found, last_question))
    node.children = kept
    return [node]


def _shift_levels(node: TreeNode, delta: int) -> None:
    node.level += delta
    for child in node.children:
        _shift_levels(child, delta)


def reposition(
    tree: DocTree,
    layout: ExportLayout,
    cfg: SolutionConfig = DEFAULT_SOLUTION_CONFIG,
) -> RepositionResult:
    """Apply an export layout to a solution-flagged tree.

    inline_solutions synthesizes hint headings over flagged regions that lack
    one; solutions_at_end moves every maximal flagged subtree into a final
    consolidated section with "Solution to <question path>" references;
    separate_solutions splits that section off as its own tree.
    """
    out = tree.copy()
    warnings: list[Diagnostic] = []

    if layout is ExportLayout.INLINE_SOLUTIONS:
        _synthesize_inline_headings(out.root, cfg, warnings)
        return RepositionResult([out], warnings)

    roots: list[tuple[TreeNode, str]] = []
    remaining: list[TreeNode] = []
    last_question = [""]
    for child in out.root.children:
        remaining.extend(_extract_flagged(child, [], roots, last_question))

    if not roots:
        warnings.append(Diagnostic("NO_SOLUTIONS_FOUND", f"no solution blocks to relocate for layout {layout.value}"))
        return RepositionResult([out], warnings)

    out.root.children = remaining

    section = TreeNode(level=1, heading_text=cfg.consolidated_section_label, is_solution=True)
    for node, path in roots:
        label = f"Solution to {path}" if path else cfg.synthesized_heading_label
        section.children.append(TreeNode(level=2, heading_text=label, is_solution=True))
        if node.is_heading and node.level < section.level + 1:
            _shift_levels(node, section.level + 1 - node.level)
        elif not node.is_heading:
            node.level = section.level + 1
        section.children.append(node)

    if layout is ExportLayout.SOLUTIONS_AT_END:
        out.root.children.append(section)
        return RepositionResult([out], warnings)

    # As its own document, the section heading becomes the title (level 0).
    _shift_levels(section, -1)
    solutions_tree = DocTree(root=TreeNode(level=-1, children=[section]))
    return RepositionResult([out, solutions_tree], warnings)


def _synthesize_inline_headings(parent: TreeNode, cfg: SolutionConfig, warnings: list[Diagnostic]) -> None:
    rebuilt: list[TreeNode] = []
    run: list[TreeNode] = []

    def flush() -> None:
        if not run:
            return
        hint = TreeNode(
            level=parent.level + 1,
            heading_text=cfg.synthesized_heading_label,
            is_solution=True,
            children=list(run),
        )
        for child in hint.children:
            child.level = hint.level + 1
        warnings.append(
            Diagnostic(
                "SYNTHESIZED_HEADING",
                f"inserted {cfg.synthesized_heading_label!r} hint heading over {len(run)} solution block(s)",
                run[0].block_id,
            )
        )
        rebuilt.append(hint)
        run.clear()

    for child in parent.children:
        # Only maximal flagged regions qualify; inside a flagged heading's
        # subtree the region already starts with that heading.
        if not parent.is_solution and not child.is_heading and _fully_flagged(child):
            run.append(child)
            continue
        flush()
        rebuilt.append(child)
    flush()

    parent.children = rebuilt
    for child in parent.children:
        if child.heading_text is None:
            _synthesize_inline_headings(child, cfg, warnings)
