import type { WizardController } from '../controller.js';
import { button, el } from '../dom.js';
import {
  cloneTree,
  flattenTree,
  indentRow,
  moveRow,
  nodeLabel,
  outdentRow,
  toPutTree,
  validateTree,
} from '../treeops.js';
import type { MoveResult } from '../treeops.js';

export function treeRowId(key: string): string {
  return `tree-row-${key}`;
}

/**
 * Step 5: hierarchy editor.  The tree renders as an ARIA tree whose rows
 * take Alt+Arrow keys (left: outdent, right: indent, up/down: reorder) and
 * plain Arrow up/down to walk rows; each row also carries explicit buttons
 * and HTML drag-and-drop for pointer users.  Edits stay in a local draft
 * until "Save hierarchy" PUTs the whole tree; the draft is validated
 * client-side first and violations are listed inline.
 */
export function renderHierarchy(container: HTMLElement, ctl: WizardController): void {
  const session = ctl.store.get().session;
  if (!session) return;

  if (ctl.hierarchyDraft === null) {
    ctl.hierarchyDraft = cloneTree(session.tree);
  }
  const draft = ctl.hierarchyDraft;
  const byId = new Map(session.blocks.map((b) => [b.id, b]));

  container.append(el('h2', {}, 'Edit the hierarchy'));
  container.append(
    el(
      'p',
      {},
      'Reading order is the top-to-bottom order below; nesting controls the ' +
        'heading levels in the export. Use the row buttons or Alt+Arrow keys.',
    ),
  );
  if (session.hierarchy_pinned) {
    container.append(
      el('p', { class: 'pin-note' }, 'This hierarchy was saved manually and is pinned: recomputes keep it.'),
    );
  }

  const problemsBox = el('ul', { class: 'problems', 'aria-live': 'polite' });
  const problems = validateTree(draft, session.blocks);
  for (const problem of problems) problemsBox.append(el('li', {}, problem));

  const tree = el('ul', { class: 'tree', role: 'tree', 'aria-label': 'Document hierarchy' });
  const rows = flattenTree(draft);
  let dragKey: string | null = null;

  const rerender = (focusKey?: string) => {
    container.replaceChildren();
    renderHierarchy(container, ctl);
    if (focusKey) {
      document.getElementById(treeRowId(focusKey))?.focus();
    }
  };

  const applyEdit = (key: string, result: MoveResult) => {
    if (result.ok) {
      rerender(key);
    } else if (result.reason) {
      ctl.info(result.reason);
      document.getElementById(treeRowId(key))?.focus();
    }
  };

  rows.forEach((row, rowIndex) => {
    const item = el('li', {
      id: treeRowId(row.key),
      role: 'treeitem',
      tabindex: rowIndex === 0 ? '0' : '-1',
      draggable: 'true',
      'aria-level': String(row.depth + 1),
      class: row.node.is_solution ? 'is-solution' : '',
      style: `margin-left: ${row.depth * 1.5}em`,
    });
    const levelTag = row.node.level === 0 ? 'title' : `L${row.node.level}`;
    item.append(el('span', { class: 'row-label' }, `[${levelTag}] ${nodeLabel(row.node, byId)}`));

    const controls = el('span', { class: 'row-controls' });
    controls.append(
      button('Outdent', () => applyEdit(row.key, outdentRow(draft, row.key)), {
        'aria-label': `Outdent ${row.key}`,
      }),
      button('Indent', () => applyEdit(row.key, indentRow(draft, row.key, byId)), {
        'aria-label': `Indent ${row.key}`,
      }),
      button('Move up', () => applyEdit(row.key, moveRow(draft, row.key, -1)), {
        'aria-label': `Move ${row.key} up`,
      }),
      button('Move down', () => applyEdit(row.key, moveRow(draft, row.key, 1)), {
        'aria-label': `Move ${row.key} down`,
      }),
    );
    item.append(controls);

    item.addEventListener('keydown', (event: KeyboardEvent) => {
      if (event.target !== item) return;
      if (event.altKey && event.key === 'ArrowLeft') {
        event.preventDefault();
        applyEdit(row.key, outdentRow(draft, row.key));
      } else if (event.altKey && event.key === 'ArrowRight') {
        event.preventDefault();
        applyEdit(row.key, indentRow(draft, row.key, byId));
      } else if (event.altKey && event.key === 'ArrowUp') {
        event.preventDefault();
        applyEdit(row.key, moveRow(draft, row.key, -1));
      } else if (event.altKey && event.key === 'ArrowDown') {
        event.preventDefault();
        applyEdit(row.key, moveRow(draft, row.key, 1));
      } else if (event.key === 'ArrowUp' || event.key === 'ArrowDown') {
        // Roving focus between rows.
        event.preventDefault();
        const next = rows[rowIndex + (event.key === 'ArrowUp' ? -1 : 1)];
        if (next) document.getElementById(treeRowId(next.key))?.focus();
      }
    });

    item.addEventListener('dragstart', () => {
      dragKey = row.key;
    });
    item.addEventListener('dragover', (event) => event.preventDefault());
    item.addEventListener('drop', (event) => {
      event.preventDefault();
      if (dragKey === null || dragKey === row.key) return;
      // Drop = keep moving the dragged row until it sits next to the target.
      const moved = dragKey;
      const from = flattenTree(draft).findIndex((r) => r.key === moved);
      const to = flattenTree(draft).findIndex((r) => r.key === row.key);
      const step: -1 | 1 = from > to ? -1 : 1;
      let guard = rows.length;
      while (guard-- > 0) {
        const index = flattenTree(draft).findIndex((r) => r.key === moved);
        if (index === to || !moveRow(draft, moved, step).ok) break;
      }
      dragKey = null;
      rerender(moved);
    });

    tree.append(item);
  });

  const save = button('Save hierarchy', async () => {
    const current = validateTree(draft, session.blocks);
    if (current.length > 0) {
      ctl.info(`Fix ${current.length} problem(s) before saving.`);
      return;
    }
    if (await ctl.saveHierarchy(toPutTree(draft))) {
      ctl.hierarchyDraft = null;
      ctl.info('Hierarchy saved; recomputes will keep it.');
    }
  });
  if (problems.length > 0) save.setAttribute('aria-disabled', 'true');

  const discard = button('Discard draft', () => {
    ctl.hierarchyDraft = cloneTree(session.tree);
    rerender();
  });

  container.append(problemsBox, tree, el('p', {}, save, ' ', discard));
}
