"""HTTP review service: upload a block file, correct blocks and hierarchy,
recompute, and export — with optimistic versioning and on-disk persistence.

Each session lives in its own directory (state.json + log.jsonl + page
rasters).  The append-only log replays to the exact current state.  Mutations
are serialized per session; reads are lock-free snapshots.
"""

from __future__ import annotations

import io
import json
import mimetypes
import os
import shutil
import threading
import uuid
import zipfile
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse, JSONResponse, Response

from .export import (
    ExportFormat,
    ExportOptions,
    MissingAltTextError,
    export_document,
)
from .ingest import SchemaError, ValidationError, document_to_dict, parse_block_file
from .model import BlockCategory, ContentBlock, ExamDocument, Page
from .solutions import DEFAULT_SOLUTION_CONFIG, ExportLayout, detect_solutions
from .structure import (
    DEFAULT_HEADING_KEYWORDS,
    DocTree,
    MarkerStyle,
    NO_MARKER,
    TreeNode,
    build_tree,
    classify_marker,
)

DEFAULT_MAX_UPLOAD = 10 * 1024 * 1024  # bytes

PATCHABLE_FIELDS = ("category", "text", "alt_text", "is_solution")

#: Fixed archive entry timestamp so exports are byte-deterministic.
ZIP_EPOCH = (1980, 1, 1, 0, 0, 0)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


# ---------------------------------------------------------------------------
# Wire form of the tree (also the persisted form).


def node_to_wire(node: TreeNode) -> dict:
    marker = None
    if node.marker.style is not MarkerStyle.NONE:
        marker = {
            "style": node.marker.style.value,
            "value": node.marker.value,
            "depth": node.marker.depth,
            "literal": node.marker.literal,
        }
    if node.is_heading:
        kind = "heading"
    elif node.is_list_item:
        kind = "list_item"
    else:
        kind = "block"
    return {
        "block_id": node.block_id,
        "symbol_id": node.symbol_block.id if node.symbol_block is not None else None,
        "level": node.level,
        "kind": kind,
        "heading_text": node.heading_text,
        "is_solution": node.is_solution,
        "marker": marker,
        "children": [node_to_wire(c) for c in node.children],
    }


def tree_to_wire(tree: DocTree) -> dict:
    return {
        "level": -1,
        "children": [node_to_wire(c) for c in tree.root.children],
    }


def _materialize_node(wire: dict, by_id: dict[str, ContentBlock]) -> TreeNode:
    block = by_id[wire["block_id"]] if wire.get("block_id") else None
    symbol = by_id[wire["symbol_id"]] if wire.get("symbol_id") else None
    marker = NO_MARKER
    if symbol is not None:
        marker = classify_marker(symbol.text)
    elif block is not None and block.category is BlockCategory.LIST_SYMBOL:
        marker = classify_marker(block.text)
    elif block is not None and block.category is BlockCategory.HEADING:
        marker = classify_marker(block.text, DEFAULT_HEADING_KEYWORDS)
    node = TreeNode(
        level=int(wire["level"]),
        block=block,
        symbol_block=symbol,
        marker=marker,
        is_solution=bool(wire.get("is_solution", False)),
    )
    node.children = [_materialize_node(c, by_id) for c in wire.get("children", [])]
    return node


def wire_to_tree(wire_root: dict, doc: ExamDocument) -> DocTree:
    """Rebuild a DocTree from its persisted wire form against the current
    document, so block edits show through without recomputing structure."""
    by_id = {b.id: b for b in doc.blocks}
    root = TreeNode(level=-1)
    root.children = [_materialize_node(c, by_id) for c in wire_root.get("children", [])]
    return DocTree(root=root)


class HierarchyError(ValueError):
    """A submitted hierarchy violates tree invariants."""


def validate_wire_tree(wire_root: Any, doc: ExamDocument) -> dict:
    """Check a client-submitted tree and return its normalized wire form.

    Every document block must be referenced exactly once (as block_id or
    symbol_id); levels are integers strictly increasing from parent to child;
    only heading blocks may have children; symbol_id must name a list symbol.
    """
    if not isinstance(wire_root, dict) or not isinstance(wire_root.get("children"), list):
        raise HierarchyError("tree must be an object with a 'children' list")
    by_id = {b.id: b for b in doc.blocks}
    seen: set[str] = set()

    def check(raw: Any, parent_level: int) -> dict:
        if not isinstance(raw, dict):
            raise HierarchyError("tree node must be an object")
        level = raw.get("level")
        if not isinstance(level, int) or isinstance(level, bool):
            raise HierarchyError("node level must be an integer")
        if level <= parent_level:
            raise HierarchyError(f"node level {level} must exceed its parent's level {parent_level}")
        block_id = raw.get("block_id")
        symbol_id = raw.get("symbol_id")
        if block_id is None and symbol_id is None:
            raise HierarchyError("node must reference a block_id or symbol_id")
        for ref in (block_id, symbol_id):
            if ref is None:
                continue
            if not isinstance(ref, str) or ref not in by_id:
                raise HierarchyError(f"unknown block id {ref!r}")
            if ref in seen:
                raise HierarchyError(f"block {ref!r} referenced more than once")
            seen.add(ref)
        if symbol_id is not None and by_id[symbol_id].category is not BlockCategory.LIST_SYMBOL:
            raise HierarchyError(f"symbol_id {symbol_id!r} must name a list_symbol block")
        is_heading = block_id is not None and by_id[block_id].category is BlockCategory.HEADING
        children_raw = raw.get("children") or []
        if not isinstance(children_raw, list):
            raise HierarchyError("node children must be a list")
        if children_raw and not is_heading:
            raise HierarchyError(f"non-heading node {block_id or symbol_id!r} cannot have children")
        if is_heading and level < 0:
            raise HierarchyError("heading levels start at 0")
        return {
            "block_id": block_id,
            "symbol_id": symbol_id,
            "level": level,
            "is_solution": bool(raw.get("is_solution", False)),
            "children": [check(c, level) for c in children_raw],
        }

    normalized = {"level": -1, "children": [check(c, -1) for c in wire_root["children"]]}
    missing = sorted(set(by_id) - seen)
    if missing:
        raise HierarchyError(f"blocks not covered by the tree: {', '.join(missing)}")
    return normalized


# ---------------------------------------------------------------------------
# Session state and the event log.


@dataclass(frozen=True)
class SessionState:
    id: str
    version: int
    created: str
    updated: str
    document: ExamDocument
    tree_wire: dict
    diagnostics: tuple[dict, ...]
    pins: frozenset[tuple[str, str]]
    hierarchy_pinned: bool


def _compute_tree(doc: ExamDocument, pins: frozenset[tuple[str, str]]) -> tuple[dict, tuple[dict, ...]]:
    tree = detect_solutions(build_tree(doc), DEFAULT_SOLUTION_CONFIG)
    forced = {bid for bid, fld in pins if fld == "is_solution"}
    if forced:
        by_id = {b.id: b for b in doc.blocks}
        for node in tree.preorder():
            for bid in node.covered_block_ids():
                if bid in forced:
                    node.is_solution = by_id[bid].is_solution
    diagnostics = tuple(
        {"code": d.code, "message": d.message, "block_id": d.block_id} for d in tree.diagnostics
    )
    return tree_to_wire(tree), diagnostics


def _localize_pages(doc: ExamDocument, session_dir: Path) -> ExamDocument:
    """Copy readable page rasters into the session directory and point the
    document at the copies; unreadable paths are kept untouched."""
    pages = []
    for page in doc.pages:
        if page.image and Path(page.image).is_file():
            target_dir = session_dir / "pages"
            target_dir.mkdir(parents=True, exist_ok=True)
            suffix = Path(page.image).suffix or ".png"
            target = target_dir / f"{page.index}{suffix}"
            shutil.copyfile(page.image, target)
            pages.append(Page(page.index, page.width, page.height, str(target)))
        else:
            pages.append(page)
    return replace(doc, pages=tuple(pages))


def _state_create(session_id: str, doc: ExamDocument, at: str, session_dir: Path) -> SessionState:
    doc = _localize_pages(doc, session_dir)
    tree_wire, diagnostics = _compute_tree(doc, frozenset())
    return SessionState(
        id=session_id,
        version=1,
        created=at,
        updated=at,
        document=doc,
        tree_wire=tree_wire,
        diagnostics=diagnostics,
        pins=frozenset(),
        hierarchy_pinned=False,
    )


def _state_patch(state: SessionState, block_id: str, fields: dict, at: str) -> SessionState:
    blocks = []
    for block in state.document.blocks:
        if block.id == block_id:
            updates = dict(fields)
            if "category" in updates:
                updates["category"] = BlockCategory(updates["category"])
            block = replace(block, **updates)
        blocks.append(block)
    doc = replace(state.document, blocks=tuple(blocks))
    pins = state.pins | {(block_id, name) for name in fields}
    return replace(state, version=state.version + 1, updated=at, document=doc, pins=pins)


def _state_put_hierarchy(state: SessionState, wire: dict, at: str) -> SessionState:
    return replace(
        state,
        version=state.version + 1,
        updated=at,
        tree_wire=wire,
        diagnostics=(),
        hierarchy_pinned=True,
    )


def _state_recompute(state: SessionState, at: str) -> SessionState:
    if state.hierarchy_pinned:
        return replace(state, version=state.version + 1, updated=at)
    tree_wire, diagnostics = _compute_tree(state.document, state.pins)
    return replace(
        state,
        version=state.version + 1,
        updated=at,
        tree_wire=tree_wire,
        diagnostics=diagnostics,
    )


def state_to_dict(state: SessionState) -> dict:
    return {
        "id": state.id,
        "version": state.version,
        "created": state.created,
        "updated": state.updated,
        "pins": sorted(list(pin) for pin in state.pins),
        "hierarchy_pinned": state.hierarchy_pinned,
        "diagnostics": list(state.diagnostics),
        "tree": state.tree_wire,
        "document": document_to_dict(state.document),
    }


def apply_event(
    state: Optional[SessionState], event: dict, session_id: str, session_dir: Path
) -> SessionState:
    """Advance a session state by one logged event; replaying the whole log
    from None reproduces the current state exactly."""
    kind = event["event"]
    at = event["at"]
    if kind == "create":
        doc = parse_block_file(json.dumps(event["document"]))
        return _state_create(session_id, doc, at, session_dir)
    if state is None:
        raise ValueError("log must start with a create event")
    if kind == "patch_block":
        return _state_patch(state, event["block_id"], event["fields"], at)
    if kind == "put_hierarchy":
        return _state_put_hierarchy(state, event["tree"], at)
    if kind == "recompute":
        return _state_recompute(state, at)
    raise ValueError(f"unknown event {kind!r}")


def replay_log(session_dir: Path) -> SessionState:
    session_id = session_dir.name
    state: Optional[SessionState] = None
    with open(session_dir / "log.jsonl", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                state = apply_event(state, json.loads(line), session_id, session_dir)
    if state is None:
        raise ValueError(f"session {session_id}: empty log")
    return state


class SessionStore:
    """Directory-per-session persistence with per-session write locks."""

    def __init__(self, root: Path):
        self.root = root
        self.root.mkdir(parents=True, exist_ok=True)
        self._states: dict[str, SessionState] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        for entry in sorted(self.root.iterdir()):
            state_file = entry / "state.json"
            if state_file.is_file():
                state = _state_from_dict(json.loads(state_file.read_text(encoding="utf-8")))
                self._states[state.id] = state
                self._locks[state.id] = threading.Lock()

    def ids(self) -> list[str]:
        with self._registry_lock:
            return sorted(self._states)

    def get(self, session_id: str) -> Optional[SessionState]:
        return self._states.get(session_id)

    def session_dir(self, session_id: str) -> Path:
        return self.root / session_id

    def create(self, doc: ExamDocument, raw_document: dict) -> SessionState:
        with self._registry_lock:
            session_id = uuid.uuid4().hex
            while session_id in self._states or (self.root / session_id).exists():
                session_id = uuid.uuid4().hex
            self._locks[session_id] = threading.Lock()
        session_dir = self.session_dir(session_id)
        session_dir.mkdir(parents=True)
        event = {"at": _now(), "event": "create", "document": raw_document}
        state = _state_create(session_id, doc, event["at"], session_dir)
        self._append_event(session_id, event)
        self._persist(state)
        with self._registry_lock:
            self._states[session_id] = state
        return state

    def mutate(self, session_id: str, expected_version: int, event: dict) -> SessionState:
        """Apply one event under the session lock; raises VersionConflict."""
        lock = self._locks[session_id]
        with lock:
            state = self._states[session_id]
            if expected_version != state.version:
                raise VersionConflict(state.version)
            event = {"at": _now(), **event}
            new_state = apply_event(state, event, session_id, self.session_dir(session_id))
            self._append_event(session_id, event)
            self._persist(new_state)
            self._states[session_id] = new_state
            return new_state

    def _append_event(self, session_id: str, event: dict) -> None:
        with open(self.session_dir(session_id) / "log.jsonl", "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, ensure_ascii=False) + "\n")

    def _persist(self, state: SessionState) -> None:
        target = self.session_dir(state.id) / "state.json"
        tmp = target.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(state_to_dict(state), ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
        os.replace(tmp, target)


class VersionConflict(Exception):
    def __init__(self, actual: int):
        self.actual = actual
        super().__init__(f"version conflict: actual version is {actual}")


def _state_from_dict(raw: dict) -> SessionState:
    return SessionState(
        id=raw["id"],
        version=raw["version"],
        created=raw["created"],
        updated=raw["updated"],
        document=parse_block_file(json.dumps(raw["document"])),
        tree_wire=raw["tree"],
        diagnostics=tuple(raw["diagnostics"]),
        pins=frozenset((bid, fld) for bid, fld in raw["pins"]),
        hierarchy_pinned=raw["hierarchy_pinned"],
    )


# ---------------------------------------------------------------------------
# HTTP layer.


def _error(status: int, code: str, message: str, **extra) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": code, "message": message, **extra})


def _state_payload(state: SessionState) -> dict:
    payload = state_to_dict(state)
    doc = payload.pop("document")
    payload["source"] = doc["source"]
    payload["blocks"] = doc["blocks"]
    payload["pages"] = [
        {"index": p["index"], "width": p["width"], "height": p["height"], "has_image": bool(p["image"])}
        for p in doc["pages"]
    ]
    payload["ordered"] = _ordered_ids(state.tree_wire)
    return payload


def _ordered_ids(wire_root: dict) -> list[str]:
    ordered: list[str] = []

    def walk(node: dict) -> None:
        if node.get("symbol_id"):
            ordered.append(node["symbol_id"])
        if node.get("block_id"):
            ordered.append(node["block_id"])
        for child in node.get("children", []):
            walk(child)

    for child in wire_root.get("children", []):
        walk(child)
    return ordered


def _summary(state: SessionState) -> dict:
    return {
        "id": state.id,
        "version": state.version,
        "created": state.created,
        "updated": state.updated,
        "filename": state.document.source.filename,
        "block_count": len(state.document.blocks),
    }


def build_export_payload(state: SessionState, layout: ExportLayout, fmt: ExportFormat) -> tuple[str, str, bytes]:
    """Render a session to (filename, media type, payload bytes); multi-file
    exports (or ones with image assets) are zipped with fixed timestamps."""
    tree = wire_to_tree(state.tree_wire, state.document)
    opts = ExportOptions(format=fmt, layout=layout, asset_dir=Path("assets"))
    result = export_document(state.document, tree, opts)

    if len(result.files) == 1 and not result.assets:
        name, text = next(iter(result.files.items()))
        media = "text/markdown; charset=utf-8" if fmt is ExportFormat.MARKDOWN else "text/html; charset=utf-8"
        return name, media, text.encode("utf-8")

    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, "w", zipfile.ZIP_DEFLATED) as archive:
        entries: dict[str, bytes] = {name: text.encode("utf-8") for name, text in result.files.items()}
        entries.update(result.assets)
        for name in sorted(entries):
            archive.writestr(zipfile.ZipInfo(name, date_time=ZIP_EPOCH), entries[name])
    stem = Path(state.document.source.filename).stem or "document"
    return f"{stem}-export.zip", "application/zip", buffer.getvalue()


def create_app(data_dir: str | Path | None = None, max_upload: int | None = None) -> FastAPI:
    """Build the service app; configuration falls back to ACCSAMS_DATA_DIR
    and ACCSAMS_MAX_UPLOAD."""
    if data_dir is None:
        data_dir = os.environ.get("ACCSAMS_DATA_DIR", "accsams-data")
    if max_upload is None:
        max_upload = int(os.environ.get("ACCSAMS_MAX_UPLOAD", DEFAULT_MAX_UPLOAD))
    store = SessionStore(Path(data_dir))

    app = FastAPI(title="accsams review service")
    # The browser wizard is served as static files from wherever is handy, so
    # cross-origin calls must work and the export filename must be readable.
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
        expose_headers=["Content-Disposition"],
    )
    app.state.store = store

    @app.post("/api/documents", status_code=201)
    async def create_document(request: Request):
        body = await request.body()
        if len(body) > max_upload:
            return _error(413, "PayloadTooLarge", f"upload exceeds {max_upload} bytes")
        try:
            doc = parse_block_file(body)
        except json.JSONDecodeError as exc:
            return _error(400, "SyntaxError", f"malformed JSON: {exc}")
        except SchemaError as exc:
            return _error(400, "SchemaError", str(exc))
        except ValidationError as exc:
            violations = [
                {"code": v.code, "message": v.message, "block_id": v.block_id} for v in exc.violations
            ]
            return _error(400, "ValidationError", str(exc), violations=violations)
        raw_document = json.loads(body.decode("utf-8"))
        state = store.create(doc, raw_document)
        return JSONResponse(status_code=201, content=_state_payload(state))

    @app.get("/api/documents")
    def list_documents():
        return [_summary(store.get(sid)) for sid in store.ids()]

    @app.get("/api/documents/{session_id}")
    def get_document(session_id: str):
        state = store.get(session_id)
        if state is None:
            return _error(404, "NotFound", f"no session {session_id!r}")
        return _state_payload(state)

    @app.patch("/api/documents/{session_id}/blocks/{block_id}")
    async def patch_block(session_id: str, block_id: str, request: Request):
        state = store.get(session_id)
        if state is None:
            return _error(404, "NotFound", f"no session {session_id!r}")
        try:
            body = await request.json()
        except json.JSONDecodeError as exc:
            return _error(400, "SyntaxError", f"malformed JSON: {exc}")
        if not isinstance(body, dict) or not isinstance(body.get("expected_version"), int):
            return _error(422, "BadRequest", "body must include an integer expected_version")
        try:
            state.document.block_by_id(block_id)
        except KeyError:
            return _error(404, "NotFound", f"no block {block_id!r}")
        fields = {k: v for k, v in body.items() if k in PATCHABLE_FIELDS}
        if not fields:
            return _error(422, "BadRequest", f"nothing to patch; allowed fields: {', '.join(PATCHABLE_FIELDS)}")
        if "category" in fields:
            try:
                BlockCategory(fields["category"])
            except ValueError:
                return _error(422, "InvalidCategory", f"unknown category {fields['category']!r}")
        if "is_solution" in fields and not isinstance(fields["is_solution"], bool):
            return _error(422, "BadRequest", "is_solution must be a boolean")
        for name in ("text", "alt_text"):
            if name in fields and fields[name] is not None and not isinstance(fields[name], str):
                return _error(422, "BadRequest", f"{name} must be a string or null")
        try:
            new_state = store.mutate(
                session_id,
                body["expected_version"],
                {"event": "patch_block", "block_id": block_id, "fields": fields},
            )
        except VersionConflict as exc:
            return _error(409, "VersionConflict", str(exc), actual_version=exc.actual)
        return _state_payload(new_state)

    @app.put("/api/documents/{session_id}/hierarchy")
    async def put_hierarchy(session_id: str, request: Request):
        state = store.get(session_id)
        if state is None:
            return _error(404, "NotFound", f"no session {session_id!r}")
        try:
            body = await request.json()
        except json.JSONDecodeError as exc:
            return _error(400, "SyntaxError", f"malformed JSON: {exc}")
        if not isinstance(body, dict) or not isinstance(body.get("expected_version"), int):
            return _error(422, "BadRequest", "body must include an integer expected_version")
        try:
            wire = validate_wire_tree(body.get("tree"), state.document)
        except HierarchyError as exc:
            return _error(422, "InvalidHierarchy", str(exc))
        try:
            new_state = store.mutate(
                session_id, body["expected_version"], {"event": "put_hierarchy", "tree": wire}
            )
        except VersionConflict as exc:
            return _error(409, "VersionConflict", str(exc), actual_version=exc.actual)
        return _state_payload(new_state)

    @app.post("/api/documents/{session_id}/recompute")
    async def recompute(session_id: str, request: Request):
        state = store.get(session_id)
        if state is None:
            return _error(404, "NotFound", f"no session {session_id!r}")
        try:
            body = await request.json()
        except json.JSONDecodeError as exc:
            return _error(400, "SyntaxError", f"malformed JSON: {exc}")
        if not isinstance(body, dict) or not isinstance(body.get("expected_version"), int):
            return _error(422, "BadRequest", "body must include an integer expected_version")
        try:
            new_state = store.mutate(session_id, body["expected_version"], {"event": "recompute"})
        except VersionConflict as exc:
            return _error(409, "VersionConflict", str(exc), actual_version=exc.actual)
        return _state_payload(new_state)

    @app.post("/api/documents/{session_id}/export")
    async def export_session(session_id: str, request: Request):
        state = store.get(session_id)
        if state is None:
            return _error(404, "NotFound", f"no session {session_id!r}")
        try:
            body = await request.json()
        except json.JSONDecodeError as exc:
            return _error(400, "SyntaxError", f"malformed JSON: {exc}")
        if not isinstance(body, dict):
            return _error(422, "BadRequest", "body must be a JSON object")
        try:
            layout = ExportLayout(body.get("layout", ExportLayout.INLINE_SOLUTIONS.value))
        except ValueError:
            return _error(422, "BadRequest", f"unknown layout {body.get('layout')!r}")
        try:
            fmt = ExportFormat(body.get("format", ExportFormat.MARKDOWN.value))
        except ValueError:
            return _error(422, "BadRequest", f"unknown format {body.get('format')!r}")
        try:
            name, media, payload = build_export_payload(state, layout, fmt)
        except MissingAltTextError as exc:
            return _error(
                422,
                "MissingAltText",
                f"blocks missing alt text: {', '.join(exc.block_ids)}",
                block_ids=exc.block_ids,
            )
        headers = {"Content-Disposition": f'attachment; filename="{name}"'}
        return Response(content=payload, media_type=media, headers=headers)

    @app.get("/api/documents/{session_id}/pages/{page_index}")
    def get_page(session_id: str, page_index: int):
        state = store.get(session_id)
        if state is None:
            return _error(404, "NotFound", f"no session {session_id!r}")
        for page in state.document.pages:
            if page.index == page_index:
                if not page.image or not Path(page.image).is_file():
                    return _error(404, "NotFound", f"page {page_index} has no raster")
                media, _ = mimetypes.guess_type(page.image)
                return FileResponse(page.image, media_type=media or "application/octet-stream")
        return _error(404, "NotFound", f"no page {page_index}")

    return app
