import { ApiError } from '../api.js';
import type { WizardController } from '../controller.js';
import { button, el, labelled } from '../dom.js';
import { goToStep } from '../store.js';
import type { ExportFormat, ExportLayout } from '../types.js';
import { EXPORT_FORMATS, EXPORT_LAYOUTS } from '../types.js';
import { isZip, readZip } from '../zip.js';
import { altFieldId, missingAltBlocks } from './altText.js';

const LAYOUT_HELP: Record<ExportLayout, string> = {
  inline_solutions: 'Solutions stay where they are in the document.',
  solutions_at_end: 'Solutions move to a consolidated section at the end.',
  separate_solutions: 'Questions and solutions become two files.',
};

/**
 * Step 6: pick layout and format, preview, download.  Missing alt text makes
 * the server refuse with a checklist; each entry links back to the alt-text
 * step and focuses the offending field.
 */
export function renderExport(container: HTMLElement, ctl: WizardController): void {
  const session = ctl.store.get().session;
  if (!session) return;

  container.append(el('h2', {}, 'Export'));

  const missing = missingAltBlocks(session.blocks);
  if (missing.length > 0) {
    const list = el('ul', {});
    for (const block of missing) {
      const jump = button(`Write alt text for ${block.id}`, () => {
        goToStep(ctl.store, 'alt_text');
        setTimeout(() => document.getElementById(altFieldId(block.id))?.focus(), 0);
      });
      const item = el('li', {}, `${block.category} ${block.id} (page ${block.page + 1}) `);
      item.append(jump);
      list.append(item);
    }
    container.append(
      el('p', { class: 'alt-missing' }, 'Export is disabled: these blocks still need alt text.'),
      list,
    );
  }

  const layoutBox = el('fieldset', {}, el('legend', {}, 'Layout'));
  for (const layout of EXPORT_LAYOUTS) {
    const radio = el('input', { type: 'radio', name: 'export-layout', value: layout });
    if (layout === 'solutions_at_end') radio.setAttribute('checked', '');
    layoutBox.append(el('p', {}, labelled(`${layout} — ${LAYOUT_HELP[layout]}`, radio)));
  }

  const formatBox = el('fieldset', {}, el('legend', {}, 'Format'));
  for (const format of EXPORT_FORMATS) {
    const radio = el('input', { type: 'radio', name: 'export-format', value: format });
    if (format === 'markdown') radio.setAttribute('checked', '');
    formatBox.append(el('p', {}, labelled(format, radio)));
  }

  const picked = <T extends string>(name: string, fallback: T): T => {
    const checked = container.querySelector<HTMLInputElement>(`input[name="${name}"]:checked`);
    return (checked?.value as T) ?? fallback;
  };

  const previewBox = el('div', { class: 'preview', 'aria-live': 'polite' });

  const runExport = async (): Promise<ReturnType<typeof readZip> | null> => {
    const layout = picked<ExportLayout>('export-layout', 'solutions_at_end');
    const format = picked<ExportFormat>('export-format', 'markdown');
    try {
      const download = await ctl.exportDocument(layout, format);
      return isZip(download.bytes)
        ? readZip(download.bytes)
        : Promise.resolve([{ name: download.filename, bytes: download.bytes }]);
    } catch (error) {
      if (error instanceof ApiError && error.code === 'MissingAltText') {
        // Re-pull server state so the checklist below reflects the refusal
        // even when this client was stale.
        await ctl.refresh().catch(() => undefined);
        ctl.fail(
          new Error(
            `Export refused: missing alt text on ${error.blockIds?.join(', ') ?? 'some blocks'}. ` +
              'Use the checklist above.',
          ),
        );
        return null;
      }
      ctl.fail(error);
      return null;
    }
  };

  const preview = button('Preview', async () => {
    const entries = await runExport();
    if (!entries) return;
    previewBox.replaceChildren();
    const decoder = new TextDecoder();
    for (const entry of await entries) {
      if (/\.(md|html)$/.test(entry.name)) {
        previewBox.append(el('h3', {}, entry.name), el('pre', {}, decoder.decode(entry.bytes)));
      } else {
        previewBox.append(el('h3', {}, entry.name), el('p', {}, `${entry.bytes.length} bytes`));
      }
    }
  });

  const download = button('Download', async () => {
    const entries = await runExport();
    if (!entries || !ctl.lastExport) return;
    saveBytes(ctl.lastExport.filename, ctl.lastExport.mediaType, ctl.lastExport.bytes);
    ctl.info(`Downloaded ${ctl.lastExport.filename} (${ctl.lastExport.bytes.length} bytes).`);
  });
  if (missing.length > 0) {
    download.disabled = true;
    download.title = 'Disabled until every figure, formula, and table has alt text.';
  }

  container.append(layoutBox, formatBox, el('p', {}, preview, ' ', download), previewBox);
}

/** Trigger a browser download; quietly skipped where object URLs don't exist
 * (the test DOM), in which case the bytes stay on controller.lastExport. */
function saveBytes(filename: string, mediaType: string, bytes: Uint8Array): void {
  if (typeof URL.createObjectURL !== 'function') return;
  const url = URL.createObjectURL(new Blob([bytes as BlobPart], { type: mediaType }));
  const anchor = el('a', { href: url, download: filename });
  document.body.append(anchor);
  anchor.click();
  anchor.remove();
  URL.revokeObjectURL(url);
}
