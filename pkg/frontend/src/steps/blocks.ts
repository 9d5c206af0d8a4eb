import type { WizardController } from '../controller.js';
import { button, el, labelled } from '../dom.js';
import type { BlockCategory, SessionPayload, WireBlock } from '../types.js';
import { BLOCK_CATEGORIES } from '../types.js';

/**
 * Step 2: review block categories and text.  A page raster (when present)
 * gets color-coded overlays; every overlay is a real button focusing the
 * matching table row, so the whole step works without a pointer.  Category
 * and text edits PATCH with the current version and trigger a recompute so
 * the hierarchy summary updates immediately.
 */
export function renderBlocks(container: HTMLElement, ctl: WizardController): void {
  const session = ctl.store.get().session;
  if (!session) return;

  container.append(el('h2', {}, 'Review content blocks'));

  const pages = session.pages.filter((p) => p.has_image);
  const overlayHost = el('div', { class: 'page-overlay-host' });
  if (pages.length > 0) {
    const pageSelect = el('select', { 'aria-label': 'Page' });
    for (const page of pages) {
      pageSelect.append(el('option', { value: String(page.index) }, `Page ${page.index + 1}`));
    }
    const renderPage = () => {
      const index = Number(pageSelect.value);
      const page = session.pages.find((p) => p.index === index)!;
      overlayHost.replaceChildren();
      const frame = el('div', { class: 'page-frame', style: `aspect-ratio: ${page.width} / ${page.height}` });
      frame.append(
        el('img', {
          src: ctl.api().pageUrl(session.id, index),
          alt: `Scanned page ${index + 1}`,
          class: 'page-raster',
        }),
      );
      for (const block of session.blocks.filter((b) => b.page === index)) {
        const [x0, y0, x1, y1] = block.bbox;
        const overlay = button(
          `${block.category} ${block.id}`,
          () => {
            document.getElementById(rowId(block.id))?.querySelector('select')?.focus();
          },
          {
            class: `block-overlay category-${block.category}`,
            style:
              `left: ${(x0 / page.width) * 100}%; top: ${(y0 / page.height) * 100}%;` +
              `width: ${((x1 - x0) / page.width) * 100}%; height: ${((y1 - y0) / page.height) * 100}%;`,
            title: block.text ?? block.id,
          },
        );
        frame.append(overlay);
      }
      overlayHost.append(frame);
    };
    pageSelect.addEventListener('change', renderPage);
    container.append(el('p', {}, labelled('Page', pageSelect)));
    renderPage();
  } else {
    container.append(el('p', {}, 'This document has no page rasters; edit blocks in the table below.'));
  }
  container.append(overlayHost);

  container.append(buildTable(session, ctl));

  const recompute = button('Recompute structure', async () => {
    if (await ctl.recomputeNow()) ctl.info('Structure recomputed.');
  });
  container.append(el('p', {}, recompute));
}

function rowId(blockId: string): string {
  return `block-row-${blockId}`;
}

function buildTable(session: SessionPayload, ctl: WizardController): HTMLTableElement {
  const table = el('table', { class: 'block-table' }, el('caption', {}, 'Blocks in reading order'));
  const head = el(
    'tr',
    {},
    el('th', {}, 'Block'),
    el('th', {}, 'Category'),
    el('th', {}, 'Text'),
    el('th', {}, 'Flags'),
  );
  table.append(el('thead', {}, head));
  const body = el('tbody', {});

  const byId = new Map(session.blocks.map((b) => [b.id, b]));
  const orderedBlocks = session.ordered
    .map((id) => byId.get(id))
    .filter((b): b is WireBlock => b !== undefined);

  for (const block of orderedBlocks) {
    body.append(buildRow(block, ctl));
  }
  table.append(body);
  return table;
}

function buildRow(block: WireBlock, ctl: WizardController): HTMLTableRowElement {
  const select = el('select', { id: `category-${block.id}`, 'aria-label': `Category of ${block.id}` });
  for (const category of BLOCK_CATEGORIES) {
    const option = el('option', { value: category }, category);
    if (category === block.category) option.setAttribute('selected', '');
    select.append(option);
  }
  select.addEventListener('change', async () => {
    // Category changes reshape the tree, so chain a recompute for live feedback.
    const ok = await ctl.patchBlock(block.id, { category: select.value as BlockCategory }, true);
    if (ok) ctl.info(`Saved ${block.id}: category = ${select.value}.`);
  });

  const text = el('textarea', {
    id: `text-${block.id}`,
    rows: '2',
    cols: '40',
    'aria-label': `Text of ${block.id}`,
  });
  text.value = block.text ?? '';
  text.addEventListener('change', async () => {
    const ok = await ctl.patchBlock(block.id, { text: text.value === '' ? null : text.value });
    if (ok) ctl.info(`Saved ${block.id}: text.`);
  });

  const flags: string[] = [];
  if (block.is_solution) flags.push('solution');
  if (block.color_accent) flags.push('color accent');
  if (block.confidence !== null) flags.push(`conf ${block.confidence.toFixed(2)}`);

  const row = el(
    'tr',
    { id: rowId(block.id), class: `category-${block.category}` },
    el('th', { scope: 'row' }, block.id),
    el('td', {}),
    el('td', {}),
    el('td', {}, flags.join(', ')),
  );
  row.children[1]!.append(select);
  row.children[2]!.append(text);
  return row;
}
