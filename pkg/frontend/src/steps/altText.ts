import type { WizardController } from '../controller.js';
import { el } from '../dom.js';
import type { WireBlock } from '../types.js';
import { VISUAL_CATEGORIES } from '../types.js';

export function missingAltBlocks(blocks: WireBlock[]): WireBlock[] {
  return blocks.filter(
    (b) => VISUAL_CATEGORIES.includes(b.category) && (b.alt_text === null || b.alt_text.trim() === ''),
  );
}

/** DOM id of a block's alt-text field, used by the export step's checklist. */
export function altFieldId(blockId: string): string {
  return `alt-field-${blockId}`;
}

/**
 * Step 4: alt text for every figure, formula, and table.  Export refuses
 * documents with missing alt text, so the step shows a live counter.
 */
export function renderAltText(container: HTMLElement, ctl: WizardController): void {
  const session = ctl.store.get().session;
  if (!session) return;

  const visuals = session.blocks.filter((b) => VISUAL_CATEGORIES.includes(b.category));
  const missing = missingAltBlocks(session.blocks);

  container.append(el('h2', {}, 'Write alt text'));
  container.append(
    el(
      'p',
      { class: missing.length > 0 ? 'alt-missing' : 'alt-complete' },
      missing.length > 0
        ? `${missing.length} of ${visuals.length} visual blocks still need alt text.`
        : visuals.length > 0
          ? `All ${visuals.length} visual blocks have alt text.`
          : 'This document has no figures, formulas, or tables.',
    ),
  );

  const list = el('dl', { class: 'alt-list' });
  for (const block of visuals) {
    const term = el(
      'dt',
      { class: `category-${block.category}` },
      `${block.category} ${block.id} (page ${block.page + 1})`,
    );
    if (block.text) term.append(el('small', {}, ` — ${block.text}`));

    const field = el('textarea', {
      id: altFieldId(block.id),
      rows: '2',
      cols: '60',
      'aria-label': `Alt text for ${block.id}`,
    });
    field.value = block.alt_text ?? '';
    field.addEventListener('change', async () => {
      const value = field.value.trim() === '' ? null : field.value;
      const ok = await ctl.patchBlock(block.id, { alt_text: value });
      if (ok) ctl.info(`Saved alt text for ${block.id}.`);
    });

    const detail = el('dd', {});
    detail.append(field);
    list.append(term, detail);
  }
  container.append(list);
}
