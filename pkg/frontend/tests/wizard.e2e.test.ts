// @vitest-environment jsdom
//
// Drives the wizard in a real DOM against a real running service, keyboard
// only: every interaction goes through the tab-order helpers, which throw if
// the target is not keyboard-reachable.  Covers the full six-step flow, the
// version-conflict recovery path, and the missing-alt-text export refusal.
import { mkdtempSync } from 'node:fs';
import { readFile, writeFile } from 'node:fs/promises';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { ServiceClient } from '../src/api.js';
import type { WizardController } from '../src/controller.js';
import { initialState, Store } from '../src/store.js';
import type { WireNode } from '../src/types.js';
import { readZip } from '../src/zip.js';
import { renderWizard, stepButtonId } from '../src/wizard.js';
import {
  eventually,
  fixtureDoc,
  focusables,
  pressEnter,
  pressKeyOnFocused,
  pressSpace,
  runConvert,
  startService,
  tabTo,
  typeInto,
  chooseOption,
  type RunningService,
} from './helpers.js';

const ALT_TEXT = 'Skizze der Parabel f(x) = x^2 mit Tangente im Punkt (1, 1).';

let service: RunningService;
let workDir: string;

beforeAll(async () => {
  service = await startService();
  workDir = mkdtempSync(join(tmpdir(), 'wizard-e2e-'));
});

afterAll(() => {
  service.stop();
});

function mount(): { store: Store; ctl: WizardController } {
  document.body.replaceChildren();
  const root = document.createElement('div');
  root.id = 'app';
  document.body.append(root);
  const store = new Store(initialState(service.url));
  const ctl = renderWizard(root, store);
  return { store, ctl };
}

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`no element #${id}`);
  return node as T;
}

function buttonByText(text: string): HTMLButtonElement {
  const match = [...document.querySelectorAll('button')].find((b) => b.textContent === text);
  if (!match) throw new Error(`no button labeled ${JSON.stringify(text)}`);
  return match;
}

function radioFor(name: string, value: string): HTMLInputElement {
  const match = document.querySelector<HTMLInputElement>(`input[name="${name}"][value="${value}"]`);
  if (!match) throw new Error(`no ${name} radio for ${value}`);
  return match;
}

/** Put a block file into the picker and fire the change a user's Enter in the
 * OS file dialog would produce. */
function pickFile(doc: Record<string, unknown>): void {
  const input = document.querySelector<HTMLInputElement>('input[aria-label="Block file"]');
  if (!input) throw new Error('no file input');
  tabTo(input);
  const file = new File([JSON.stringify(doc)], 'klausur.json', { type: 'application/json' });
  Object.defineProperty(input, 'files', { value: [file], configurable: true });
  input.dispatchEvent(new Event('change', { bubbles: true }));
}

async function uploadThroughUi(store: Store, doc: Record<string, unknown>): Promise<string> {
  pickFile(doc);
  await eventually(() => {
    const state = store.get();
    expect(state.session).not.toBeNull();
    expect(state.step).toBe('blocks');
  });
  return store.get().session!.id;
}

function treeChildIds(node: WireNode | { children: WireNode[] }): (string | null)[] {
  return node.children.map((child) => child.block_id ?? child.symbol_id);
}

describe('wizard end to end', () => {
  it('completes all six steps with the keyboard and exports byte-identically to the converter CLI', async () => {
    const { store } = mount();
    const direct = new ServiceClient(service.url);

    // -- Step 1: upload ----------------------------------------------------
    const sessionId = await uploadThroughUi(store, fixtureDoc());
    expect(store.get().session!.version).toBe(1);
    expect(store.get().session!.ordered).toHaveLength(12);

    // -- Step 2: blocks — recategorize p2 as a heading ----------------------
    // The table lists blocks in server reading order and every row's controls
    // are in the tab order.
    expect(byId('category-p2')).toBeTruthy();
    chooseOption(byId<HTMLSelectElement>('category-p2'), 'heading');
    await eventually(() => {
      const session = store.get().session!;
      expect(session.blocks.find((b) => b.id === 'p2')!.category).toBe('heading');
      expect(session.version).toBe(3); // patch + chained recompute
      expect(store.get().busy).toBe(false);
    });

    // Acceptance: the category PATCH round-trips through a plain GET.
    const afterPatch = await direct.getState(sessionId);
    expect(afterPatch.blocks.find((b) => b.id === 'p2')!.category).toBe('heading');
    expect(afterPatch.pins).toContainEqual(['p2', 'category']);

    // -- Step 3: solutions — flag the give-away hint ------------------------
    pressEnter(byId(stepButtonId('solutions')));
    await eventually(() => expect(store.get().step).toBe('solutions'));
    // Keyword detection already flagged the answer section server-side.
    expect(byId<HTMLInputElement>('solution-flag-s1').checked).toBe(true);
    expect(byId<HTMLInputElement>('solution-flag-sp1').checked).toBe(true);
    expect(byId<HTMLInputElement>('solution-flag-xp').checked).toBe(false);

    pressSpace(byId<HTMLInputElement>('solution-flag-xp'));
    await eventually(() => {
      const session = store.get().session!;
      expect(session.blocks.find((b) => b.id === 'xp')!.is_solution).toBe(true);
      expect(session.pins).toContainEqual(['xp', 'is_solution']);
      expect(session.version).toBe(5); // patch + chained recompute
    });

    // -- Step 4: alt text for the figure ------------------------------------
    pressEnter(byId(stepButtonId('alt_text')));
    await eventually(() => expect(store.get().step).toBe('alt_text'));
    typeInto(byId<HTMLTextAreaElement>('alt-field-g1'), ALT_TEXT);
    await eventually(() => {
      const session = store.get().session!;
      expect(session.blocks.find((b) => b.id === 'g1')!.alt_text).toBe(ALT_TEXT);
      expect(session.version).toBe(6);
    });

    // -- Step 5: hierarchy — indent p2 under q1, save, verify, reload -------
    pressEnter(byId(stepButtonId('hierarchy')));
    await eventually(() => expect(store.get().step).toBe('hierarchy'));

    // Roving tabindex: only the first row is in the Tab order; arrows walk.
    tabTo(byId('tree-row-t'));
    for (const expected of ['tree-row-q1', 'tree-row-p1', 'tree-row-g1', 'tree-row-p2']) {
      pressKeyOnFocused('ArrowDown');
      expect(document.activeElement?.id).toBe(expected);
    }
    expect(byId('tree-row-p2').getAttribute('aria-level')).toBe('2');

    pressKeyOnFocused('ArrowRight', { altKey: true });
    expect(document.activeElement?.id).toBe('tree-row-p2');
    expect(byId('tree-row-p2').getAttribute('aria-level')).toBe('3');

    pressEnter(buttonByText('Save hierarchy'));
    await eventually(() => {
      expect(store.get().session!.hierarchy_pinned).toBe(true);
      expect(store.get().session!.version).toBe(7);
    });

    // Acceptance: the PUT hierarchy is what a fresh GET returns.
    const pinned = await direct.getState(sessionId);
    expect(pinned.hierarchy_pinned).toBe(true);
    expect(treeChildIds(pinned.tree)).toEqual(['t']);
    const title = pinned.tree.children[0]!;
    expect(treeChildIds(title)).toEqual(['q1', 'q2', 'q3', 's1']);
    const q1 = title.children[0]!;
    expect(treeChildIds(q1)).toEqual(['p1', 'g1', 'p2']);
    expect(q1.children[2]!.level).toBe(2);

    // Acceptance: the hierarchy survives a page reload.  Mount a brand-new
    // wizard (fresh store, fresh DOM) and reopen the session from the list.
    const { store: store2, ctl: ctl2 } = mount();
    pressEnter(buttonByText('List existing sessions'));
    await eventually(() => expect(buttonByText('Open')).toBeTruthy());
    pressEnter(buttonByText('Open'));
    await eventually(() => {
      expect(store2.get().session?.id).toBe(sessionId);
      expect(store2.get().step).toBe('blocks');
    });
    expect(store2.get().session!.hierarchy_pinned).toBe(true);

    pressEnter(byId(stepButtonId('hierarchy')));
    await eventually(() => expect(store2.get().step).toBe('hierarchy'));
    expect(byId('tree-row-p2').getAttribute('aria-level')).toBe('3');
    expect(document.querySelector('.pin-note')?.textContent).toMatch(/pinned/);

    // Undo the indent in the reloaded wizard: the tree goes back to exactly
    // the shape the pipeline computed, still pinned.
    tabTo(byId('tree-row-t'));
    for (let i = 0; i < 4; i += 1) pressKeyOnFocused('ArrowDown');
    expect(document.activeElement?.id).toBe('tree-row-p2');
    pressKeyOnFocused('ArrowLeft', { altKey: true });
    expect(byId('tree-row-p2').getAttribute('aria-level')).toBe('2');
    pressEnter(buttonByText('Save hierarchy'));
    await eventually(() => expect(store2.get().session!.version).toBe(8));

    const restored = await direct.getState(sessionId);
    expect(treeChildIds(restored.tree.children[0]!)).toEqual(['q1', 'p2', 'q2', 'q3', 's1']);
    expect(restored.tree.children[0]!.children[1]!.level).toBe(1);
    expect(restored.tree.children[0]!.children[1]!.children).toEqual([]);

    // -- Step 6: export — byte-identical to the converter CLI ---------------
    // Mirror the wizard's edits into a local block file: same category, same
    // pinned solution flag, same alt text.  The converter CLI on that file
    // must produce exactly the bytes the service export streams back.
    const mirrored = fixtureDoc();
    const blocks = mirrored['blocks'] as Record<string, unknown>[];
    blocks.find((b) => b['id'] === 'p2')!['category'] = 'heading';
    blocks.find((b) => b['id'] === 'xp')!['is_solution'] = true;
    blocks.find((b) => b['id'] === 'g1')!['alt_text'] = ALT_TEXT;
    const mirrorPath = join(workDir, 'mirrored.json');
    await writeFile(mirrorPath, JSON.stringify(mirrored));

    pressEnter(byId(stepButtonId('export')));
    await eventually(() => expect(store2.get().step).toBe('export'));
    // Alt text is complete, so no checklist and the download is enabled.
    expect(document.querySelector('.alt-missing')).toBeNull();
    expect(buttonByText('Download').disabled).toBe(false);

    // Defaults: solutions_at_end + markdown.
    expect(radioFor('export-layout', 'solutions_at_end').checked).toBe(true);
    expect(radioFor('export-format', 'markdown').checked).toBe(true);
    pressEnter(buttonByText('Download'));
    await eventually(() => expect(ctl2.lastExport).not.toBeNull());
    expect(ctl2.lastExport!.filename).toBe('klausur.md');
    expect(ctl2.lastExport!.mediaType).toBe('text/markdown');

    const atEndDir = join(workDir, 'at-end');
    await runConvert(mirrorPath, atEndDir, 'solutions_at_end', 'markdown');
    const cliAtEnd = await readFile(join(atEndDir, 'klausur.md'));
    expect(Buffer.from(ctl2.lastExport!.bytes).equals(cliAtEnd)).toBe(true);

    // separate_solutions downloads a zip whose entries match the CLI files.
    let previous = ctl2.lastExport;
    pressSpace(radioFor('export-layout', 'separate_solutions'));
    pressEnter(buttonByText('Download'));
    await eventually(() => expect(ctl2.lastExport).not.toBe(previous));
    expect(ctl2.lastExport!.filename).toBe('klausur-export.zip');

    const separateDir = join(workDir, 'separate');
    await runConvert(mirrorPath, separateDir, 'separate_solutions', 'markdown');
    const entries = await readZip(ctl2.lastExport!.bytes);
    expect(entries.map((e) => e.name)).toEqual(['questions.md', 'solutions.md']);
    for (const entry of entries) {
      const cliBytes = await readFile(join(separateDir, entry.name));
      expect(Buffer.from(entry.bytes).equals(cliBytes)).toBe(true);
    }

    // And the HTML format, back on the single-file layout.
    previous = ctl2.lastExport;
    pressSpace(radioFor('export-layout', 'solutions_at_end'));
    pressSpace(radioFor('export-format', 'html'));
    pressEnter(buttonByText('Download'));
    await eventually(() => expect(ctl2.lastExport).not.toBe(previous));
    expect(ctl2.lastExport!.filename).toBe('klausur.html');

    const htmlDir = join(workDir, 'html');
    await runConvert(mirrorPath, htmlDir, 'solutions_at_end', 'html');
    const cliHtml = await readFile(join(htmlDir, 'klausur.html'));
    expect(Buffer.from(ctl2.lastExport!.bytes).equals(cliHtml)).toBe(true);

    // Every step keeps at least one keyboard-reachable control.
    for (const step of ['upload', 'blocks', 'solutions', 'alt_text', 'hierarchy', 'export'] as const) {
      pressEnter(byId(stepButtonId(step)));
      await eventually(() => expect(store2.get().step).toBe(step));
      const content = document.querySelector<HTMLElement>('.wizard-content')!;
      expect(focusables(content).length).toBeGreaterThan(0);
    }
  });

  it('recovers from a version conflict without losing either edit', async () => {
    const { store } = mount();
    const direct = new ServiceClient(service.url);
    const sessionId = await uploadThroughUi(store, fixtureDoc());

    // Another client edits the document behind the wizard's back.
    const outOfBand = await direct.patchBlock(sessionId, 'q2', store.get().session!.version, {
      text: 'Aufgabe 2 (neu nummeriert)',
    });
    expect(outOfBand.version).toBe(2);

    // The wizard, still at version 1, edits a different block: 409.
    const typed = 'Beschreiben Sie den Rechenweg.';
    typeInto(byId<HTMLTextAreaElement>('text-p1'), typed);
    await eventually(() => {
      expect(store.get().banner?.kind).toBe('conflict');
      expect(store.get().banner?.text).toMatch(/version 2/);
    });
    // Nothing was saved yet; the server still has the original paragraph.
    expect((await direct.getState(sessionId)).blocks.find((b) => b.id === 'p1')!.text).toMatch(
      /Ableitung/,
    );

    // The banner offers reload-and-reapply; taking it replays the edit on the
    // fresh version, losing neither change.
    pressEnter(buttonByText('Reload & reapply'));
    await eventually(() => {
      expect(store.get().banner?.kind).toBe('info');
      expect(store.get().session!.version).toBe(3);
    });
    const merged = await direct.getState(sessionId);
    expect(merged.blocks.find((b) => b.id === 'p1')!.text).toBe(typed);
    expect(merged.blocks.find((b) => b.id === 'q2')!.text).toBe('Aufgabe 2 (neu nummeriert)');
    // The wizard shows the refreshed server state, both edits included.
    expect(byId<HTMLTextAreaElement>('text-p1').value).toBe(typed);
    expect(byId<HTMLTextAreaElement>('text-q2').value).toBe('Aufgabe 2 (neu nummeriert)');
  });

  it('refuses to export while alt text is missing and jumps to the offending block', async () => {
    const { store } = mount();
    await uploadThroughUi(store, fixtureDoc());

    pressEnter(byId(stepButtonId('export')));
    await eventually(() => expect(store.get().step).toBe('export'));

    // Client-side: download disabled (not even keyboard-reachable), checklist
    // links to the alt-text step.
    const download = buttonByText('Download');
    expect(download.disabled).toBe(true);
    expect(focusables().includes(download)).toBe(false);
    expect(document.querySelector('.alt-missing')?.textContent).toMatch(/alt text/);

    // Server-side: previewing anyway gets the 422 refusal as a banner.
    pressEnter(buttonByText('Preview'));
    await eventually(() => {
      expect(store.get().banner?.kind).toBe('error');
      expect(store.get().banner?.text).toMatch(/g1/);
    });

    // The checklist entry jumps to the alt-text step and focuses the field.
    pressEnter(buttonByText('Write alt text for g1'));
    await eventually(() => {
      expect(store.get().step).toBe('alt_text');
      expect(document.activeElement?.id).toBe('alt-field-g1');
    });

    typeInto(byId<HTMLTextAreaElement>('alt-field-g1'), 'Leeres Koordinatensystem.');
    await eventually(() =>
      expect(store.get().session!.blocks.find((b) => b.id === 'g1')!.alt_text).toBe(
        'Leeres Koordinatensystem.',
      ),
    );

    pressEnter(byId(stepButtonId('export')));
    await eventually(() => expect(store.get().step).toBe('export'));
    const enabled = buttonByText('Download');
    expect(enabled.disabled).toBe(false);
    expect(focusables().includes(enabled)).toBe(true);
  });
});
