import { el } from './dom.js';
import { missingAltBlocks } from './steps/altText.js';
import { flattenTree } from './treeops.js';
import type { SessionPayload } from './types.js';

/**
 * Persistent side panel summarizing every prediction at once, so reviewers
 * see the whole document's state instead of only the current step's slice.
 */
export function renderSummary(container: HTMLElement, session: SessionPayload | null): void {
  container.replaceChildren();
  container.append(el('h2', {}, 'Document overview'));
  if (!session) {
    container.append(el('p', {}, 'No document loaded yet.'));
    return;
  }

  const counts = new Map<string, number>();
  for (const block of session.blocks) {
    counts.set(block.category, (counts.get(block.category) ?? 0) + 1);
  }
  const solutions = session.blocks.filter((b) => b.is_solution).length;
  const flaggedNodes = flattenTree(session.tree).filter((r) => r.node.is_solution).length;
  const missingAlt = missingAltBlocks(session.blocks).length;
  const depth = Math.max(0, ...flattenTree(session.tree).map((r) => r.depth + 1));

  const items: [string, string][] = [
    ['File', session.source.filename],
    ['Version', `v${session.version}`],
    ['Blocks', String(session.blocks.length)],
    ...[...counts.entries()].sort().map(([k, v]): [string, string] => [`— ${k}`, String(v)]),
    ['Solution blocks', String(solutions)],
    ['Solution tree nodes', String(flaggedNodes)],
    ['Missing alt text', String(missingAlt)],
    ['Tree depth', String(depth)],
    ['Hierarchy', session.hierarchy_pinned ? 'manually set (pinned)' : 'computed'],
    ['Pinned fields', String(session.pins.length)],
  ];

  const list = el('dl', { class: 'summary-list' });
  for (const [term, value] of items) {
    list.append(el('dt', {}, term), el('dd', {}, value));
  }
  container.append(list);

  if (session.diagnostics.length > 0) {
    container.append(el('h3', {}, 'Diagnostics'));
    const diags = el('ul', {});
    for (const diag of session.diagnostics) {
      diags.append(el('li', {}, `${diag.code}: ${diag.message}`));
    }
    container.append(diags);
  }
}
