import type { WizardController } from '../controller.js';
import { button, el, labelled } from '../dom.js';
import { goToStep } from '../store.js';

/** FileReader works everywhere (including test DOMs without Blob.text). */
function readFileText(file: File): Promise<string> {
  return new Promise((resolve, reject) => {
    const reader = new FileReader();
    reader.onerror = () => reject(reader.error ?? new Error('could not read the chosen file'));
    reader.onload = () => resolve(String(reader.result));
    reader.readAsText(file);
  });
}

/** Step 1: pick the service, then upload a block file or reopen a session. */
export function renderUpload(container: HTMLElement, ctl: WizardController): void {
  const heading = el('h2', {}, 'Upload an exam');
  const intro = el(
    'p',
    {},
    'Choose a block file (the JSON produced by the extraction pipeline). ' +
      'The service computes reading order, hierarchy, and solution flags; ' +
      'the following steps let you review and correct them.',
  );

  const urlInput = el('input', {
    type: 'url',
    value: ctl.store.get().serviceUrl,
    size: '40',
    'aria-label': 'Service URL',
  });
  urlInput.addEventListener('change', () => ctl.setServiceUrl(urlInput.value));

  const fileInput = el('input', {
    type: 'file',
    accept: 'application/json,.json',
    'aria-label': 'Block file',
  });
  fileInput.addEventListener('change', async () => {
    const file = fileInput.files?.[0];
    if (!file) return;
    try {
      await ctl.upload(await readFileText(file));
      goToStep(ctl.store, 'blocks');
    } catch (error) {
      ctl.fail(error);
    }
  });

  const sessions = el('div', { class: 'session-list' });
  const listButton = button('List existing sessions', async () => {
    try {
      const list = await ctl.api().listSessions();
      sessions.replaceChildren();
      if (list.length === 0) {
        sessions.append(el('p', {}, 'No sessions on this service yet.'));
        return;
      }
      const table = el('table', {}, el('caption', {}, 'Existing sessions'));
      for (const entry of list) {
        const open = button('Open', async () => {
          try {
            await ctl.openSession(entry.id);
            goToStep(ctl.store, 'blocks');
          } catch (error) {
            ctl.fail(error);
          }
        });
        const row = el(
          'tr',
          {},
          el('td', {}, entry.filename),
          el('td', {}, `v${entry.version}`),
          el('td', {}, entry.updated),
          el('td', {}),
        );
        row.lastElementChild!.append(open);
        table.append(row);
      }
      sessions.append(table);
    } catch (error) {
      ctl.fail(error);
    }
  });

  container.append(
    heading,
    intro,
    el('p', {}, labelled('Service URL', urlInput)),
    el('p', {}, labelled('Block file', fileInput)),
    el('p', {}, listButton),
    sessions,
  );
}
