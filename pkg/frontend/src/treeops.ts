import type { WireBlock, WireNode, WireTree } from './types.js';

/** One row of the flattened tree, as rendered by the hierarchy editor. */
export interface TreeRow {
  node: WireNode;
  parent: WireNode | null;
  /** Index within the parent's children. */
  index: number;
  /** Nesting depth in the tree (0 for root children), independent of level. */
  depth: number;
  /** Stable key: block id or symbol id. */
  key: string;
}

export function cloneTree(tree: WireTree): WireTree {
  return JSON.parse(JSON.stringify(tree)) as WireTree;
}

export function nodeKey(node: WireNode): string {
  return node.block_id ?? node.symbol_id ?? '';
}

/** Flatten to preorder rows; the same order the export will use. */
export function flattenTree(tree: WireTree): TreeRow[] {
  const rows: TreeRow[] = [];
  const walk = (node: WireNode, parent: WireNode | null, index: number, depth: number) => {
    rows.push({ node, parent, index, depth, key: nodeKey(node) });
    node.children.forEach((child, i) => walk(child, node, i, depth + 1));
  };
  tree.children.forEach((child, i) => walk(child, null, i, 0));
  return rows;
}

export function findRow(tree: WireTree, key: string): TreeRow | null {
  return flattenTree(tree).find((row) => row.key === key) ?? null;
}

function childrenOf(tree: WireTree, parent: WireNode | null): WireNode[] {
  return parent === null ? tree.children : parent.children;
}

function shiftLevels(node: WireNode, delta: number): void {
  node.level += delta;
  node.children.forEach((child) => shiftLevels(child, delta));
}

function isHeading(node: WireNode, blocksById: Map<string, WireBlock>): boolean {
  if (node.block_id === null) return false;
  return blocksById.get(node.block_id)?.category === 'heading';
}

export interface MoveResult {
  ok: boolean;
  reason?: string;
}

/**
 * Indent: the row becomes the last child of its previous sibling.  The
 * sibling must be a heading (only headings may have children); levels of the
 * moved subtree shift so node.level = sibling.level + 1.
 */
export function indentRow(
  tree: WireTree,
  key: string,
  blocksById: Map<string, WireBlock>,
): MoveResult {
  const row = findRow(tree, key);
  if (!row) return { ok: false, reason: `no tree row ${key}` };
  const siblings = childrenOf(tree, row.parent);
  if (row.index === 0) return { ok: false, reason: 'no previous sibling to nest under' };
  const target = siblings[row.index - 1]!;
  if (!isHeading(target, blocksById)) {
    return { ok: false, reason: 'previous sibling is not a heading; only headings take children' };
  }
  siblings.splice(row.index, 1);
  shiftLevels(row.node, target.level + 1 - row.node.level);
  target.children.push(row.node);
  return { ok: true };
}

/**
 * Outdent: the row becomes its parent's next sibling.  Rejected at the top
 * level — that would place the node beside (or above) the document title.
 */
export function outdentRow(tree: WireTree, key: string): MoveResult {
  const row = findRow(tree, key);
  if (!row) return { ok: false, reason: `no tree row ${key}` };
  if (row.parent === null) {
    return { ok: false, reason: 'already at the top level; cannot move above the title' };
  }
  const parentRow = findRow(tree, nodeKey(row.parent))!;
  const grandSiblings = childrenOf(tree, parentRow.parent);
  row.parent.children.splice(row.index, 1);
  shiftLevels(row.node, row.parent.level - row.node.level);
  grandSiblings.splice(parentRow.index + 1, 0, row.node);
  return { ok: true };
}

/** Swap the row with its previous (-1) or next (+1) sibling. */
export function moveRow(tree: WireTree, key: string, delta: -1 | 1): MoveResult {
  const row = findRow(tree, key);
  if (!row) return { ok: false, reason: `no tree row ${key}` };
  const siblings = childrenOf(tree, row.parent);
  const target = row.index + delta;
  if (target < 0 || target >= siblings.length) {
    return { ok: false, reason: 'no sibling in that direction' };
  }
  const [node] = siblings.splice(row.index, 1);
  siblings.splice(target, 0, node!);
  return { ok: true };
}

/**
 * Client-side mirror of the server's hierarchy validation, so a PUT that
 * would 422 is caught before it leaves the browser.  Returns human-readable
 * problems; an empty list means the tree is valid.
 */
export function validateTree(tree: WireTree, blocks: WireBlock[]): string[] {
  const problems: string[] = [];
  const byId = new Map(blocks.map((b) => [b.id, b]));
  const seen = new Set<string>();

  const check = (node: WireNode, parentLevel: number, path: string) => {
    if (!Number.isInteger(node.level)) {
      problems.push(`${path}: level must be an integer`);
      return;
    }
    if (node.level <= parentLevel) {
      problems.push(`${path}: level ${node.level} must exceed its parent's level ${parentLevel}`);
    }
    if (node.block_id === null && node.symbol_id === null) {
      problems.push(`${path}: node references no block`);
    }
    for (const ref of [node.block_id, node.symbol_id]) {
      if (ref === null) continue;
      if (!byId.has(ref)) {
        problems.push(`${path}: unknown block id ${ref}`);
      } else if (seen.has(ref)) {
        problems.push(`${path}: block ${ref} referenced more than once`);
      }
      seen.add(ref);
    }
    if (node.symbol_id !== null && byId.get(node.symbol_id)?.category !== 'list_symbol') {
      problems.push(`${path}: symbol_id ${node.symbol_id} must name a list_symbol block`);
    }
    const heading = isHeading(node, byId);
    if (node.children.length > 0 && !heading) {
      problems.push(`${path}: non-heading node cannot have children`);
    }
    if (heading && node.level < 0) {
      problems.push(`${path}: heading levels start at 0`);
    }
    node.children.forEach((child, i) => check(child, node.level, `${path}.${i}`));
  };

  tree.children.forEach((child, i) => check(child, -1, `node ${i}`));

  const missing = blocks.map((b) => b.id).filter((id) => !seen.has(id));
  if (missing.length > 0) {
    problems.push(`blocks not covered by the tree: ${missing.join(', ')}`);
  }
  return problems;
}

/** Display label for a node, derived from the block list (PUT-stored trees
 * carry no heading_text). */
export function nodeLabel(node: WireNode, blocksById: Map<string, WireBlock>): string {
  const block = node.block_id !== null ? blocksById.get(node.block_id) : undefined;
  const symbol = node.symbol_id !== null ? blocksById.get(node.symbol_id) : undefined;
  const text = block?.text ?? node.heading_text ?? '';
  const prefix = symbol?.text ? `${symbol.text} ` : '';
  const label = `${prefix}${text}`.trim();
  if (label) return label;
  return block ? `[${block.category} ${block.id}]` : `[${nodeKey(node)}]`;
}

/** Strip display-only fields so a PUT body matches the server's normalized
 * shape byte-for-byte semantics. */
export function toPutTree(tree: WireTree): WireTree {
  const strip = (node: WireNode): WireNode => ({
    block_id: node.block_id,
    symbol_id: node.symbol_id,
    level: node.level,
    is_solution: node.is_solution,
    children: node.children.map(strip),
  });
  return { level: -1, children: tree.children.map(strip) };
}

/** Preorder block/symbol ids, mirroring the server's reading order listing. */
export function orderedIds(tree: WireTree): string[] {
  const ids: string[] = [];
  const walk = (node: WireNode) => {
    if (node.symbol_id !== null) ids.push(node.symbol_id);
    if (node.block_id !== null) ids.push(node.block_id);
    node.children.forEach(walk);
  };
  tree.children.forEach(walk);
  return ids;
}
