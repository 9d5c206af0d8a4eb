import type { WizardController } from '../controller.js';
import { el } from '../dom.js';
import { flattenTree, nodeLabel } from '../treeops.js';
import type { WireBlock } from '../types.js';

/**
 * Step 3: review solution/question assignment on the tree.  Each node shows
 * the detected flag as a checkbox; toggling pins the block's flag and
 * recomputes, so keyword-rule side effects (a flagged heading flags its
 * subtree) are visible immediately.
 */
export function renderSolutions(container: HTMLElement, ctl: WizardController): void {
  const session = ctl.store.get().session;
  if (!session) return;

  container.append(
    el('h2', {}, 'Review solution flags'),
    el(
      'p',
      {},
      'Checked nodes are treated as answer content and can be repositioned at ' +
        'export time. Unchecking a detected node pins it as question content.',
    ),
  );

  const byId = new Map(session.blocks.map((b) => [b.id, b]));
  const list = el('ul', { class: 'tree solution-tree' });

  for (const row of flattenTree(session.tree)) {
    if (row.node.block_id === null && row.node.symbol_id === null) continue;
    const blockId = row.node.block_id ?? row.node.symbol_id!;
    const checkbox = el('input', {
      id: `solution-flag-${blockId}`,
      type: 'checkbox',
      'aria-label': `Solution flag for ${blockId}`,
    });
    checkbox.checked = row.node.is_solution;
    checkbox.addEventListener('change', async () => {
      const ok = await ctl.patchBlock(blockId, { is_solution: checkbox.checked }, true);
      if (ok) {
        ctl.info(
          checkbox.checked
            ? `${blockId} marked as solution content.`
            : `${blockId} pinned as question content.`,
        );
      } else {
        checkbox.checked = !checkbox.checked;
      }
    });

    const label = el(
      'label',
      { class: row.node.is_solution ? 'is-solution' : '' },
      '',
    );
    label.append(checkbox, ` ${describe(row.node.level, row.depth)} ${nodeLabel(row.node, byId)}`);
    const item = el('li', { style: `margin-left: ${row.depth * 1.5}em` });
    item.append(label);
    list.append(item);
  }

  container.append(list);

  const pinned = session.pins.filter(([, field]) => field === 'is_solution');
  if (pinned.length > 0) {
    container.append(
      el(
        'p',
        { class: 'pin-note' },
        `Pinned flags (kept across recomputes): ${pinned.map(([id]) => id).join(', ')}`,
      ),
    );
  }
}

function describe(level: number, depth: number): string {
  void depth;
  return level === 0 ? '[title]' : `[L${level}]`;
}

export function solutionCount(blocks: WireBlock[]): number {
  return blocks.filter((b) => b.is_solution).length;
}
