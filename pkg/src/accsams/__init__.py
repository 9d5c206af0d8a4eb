"""Exam-document accessibility toolkit.

Converts per-page content-block detections of exam documents into accessible
Markdown/HTML with an explicit heading hierarchy, relocated solutions, and
mandatory alt text; ships an evaluation harness, a corpus filter, and an
HTTP review service.
"""

from .export import (
    ExportFormat,
    ExportOptions,
    ExportResult,
    MissingAltTextError,
    export_document,
    placeholder_alt_text,
    to_html,
    to_markdown,
)
from .ingest import (
    FilterConfig,
    ManifestEntry,
    SchemaError,
    ValidationError,
    parse_block_file,
    parse_manifest,
    run_filter_pipeline,
    serialize_block_file,
    suggest_study_field,
)
from .metrics import (
    Detection,
    GroundTruth,
    LevelAnnotation,
    OrderAnnotation,
    ard,
    average_precision,
    detection_report,
    hierarchy_distances,
    iou,
)
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
from .solutions import (
    ExportLayout,
    SolutionConfig,
    detect_solutions,
    is_blank_answer_prompt,
    reposition,
)
from .structure import (
    DocTree,
    Marker,
    MarkerStyle,
    TreeNode,
    build_tree,
    classify_marker,
    reading_order,
)

__all__ = [
    "Annotations",
    "BBox",
    "BlockCategory",
    "ContentBlock",
    "Detection",
    "DocTree",
    "ExamDocument",
    "ExportFormat",
    "ExportLayout",
    "ExportOptions",
    "ExportResult",
    "FilterConfig",
    "GroundTruth",
    "LevelAnnotation",
    "ManifestEntry",
    "Marker",
    "MarkerStyle",
    "MissingAltTextError",
    "OrderAnnotation",
    "Page",
    "SchemaError",
    "SolutionConfig",
    "SourceInfo",
    "TreeNode",
    "ValidationError",
    "Violation",
    "ard",
    "average_precision",
    "build_tree",
    "classify_marker",
    "detect_solutions",
    "detection_report",
    "export_document",
    "hierarchy_distances",
    "iou",
    "is_blank_answer_prompt",
    "parse_block_file",
    "parse_manifest",
    "placeholder_alt_text",
    "reading_order",
    "reposition",
    "run_filter_pipeline",
    "serialize_block_file",
    "suggest_study_field",
    "to_html",
    "to_markdown",
    "validate_document",
]

__version__ = "0.1.0"
