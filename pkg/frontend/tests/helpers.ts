import { execFile, spawn, type ChildProcess } from 'node:child_process';
import { mkdtempSync } from 'node:fs';
import { createServer } from 'node:net';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { promisify } from 'node:util';

export const execFileAsync = promisify(execFile);

/** The block file driven through the wizard in tests. */
export function fixtureDoc(): Record<string, unknown> {
  const block = (
    id: string,
    category: string,
    y0: number,
    y1: number,
    text: string | null,
    extra: Record<string, unknown> = {},
  ) => ({
    id,
    category,
    page: 0,
    bbox: [40, y0, 560, y1],
    text,
    ...extra,
  });
  return {
    version: 1,
    source: { filename: 'klausur.pdf', language: 'de' },
    pages: [{ index: 0, width: 600.0, height: 900.0 }],
    blocks: [
      block('t', 'heading', 20, 44, 'Klausur Analysis', { font_size: 20.0 }),
      block('q1', 'heading', 60, 76, 'Aufgabe 1', { font_size: 14.0 }),
      block('p1', 'paragraph', 84, 120, 'Berechnen Sie die Ableitung von f(x) = x^2.'),
      block('g1', 'figure', 130, 190, null),
      block('p2', 'paragraph', 200, 230, 'Skizze und Begruendung'),
      block('q2', 'heading', 280, 296, 'Aufgabe 2', { font_size: 14.0 }),
      block('p2b', 'paragraph', 320, 350, 'Bestimmen Sie das Integral.'),
      block('q3', 'heading', 360, 376, 'Aufgabe 3', { font_size: 14.0 }),
      block('p3', 'paragraph', 400, 430, 'Welche Aussage ist korrekt?'),
      block('xp', 'paragraph', 440, 470, 'Hinweis: Richtig ist Antwort b.'),
      block('s1', 'heading', 480, 496, 'Lösung zu Aufgabe 1', { font_size: 12.0 }),
      block('sp1', 'paragraph', 520, 550, 'Mit der Potenzregel folgt 2x.'),
    ],
  };
}

async function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const server = createServer();
    server.on('error', reject);
    server.listen(0, '127.0.0.1', () => {
      const port = (server.address() as { port: number }).port;
      server.close(() => resolve(port));
    });
  });
}

export interface RunningService {
  url: string;
  dataDir: string;
  stop: () => void;
}

/** Spawn the real review service and wait until it answers. */
export async function startService(): Promise<RunningService> {
  const port = await freePort();
  const dataDir = mkdtempSync(join(tmpdir(), 'wizard-service-'));
  const child: ChildProcess = spawn(
    'python3',
    ['-m', 'accsams.cli', 'serve', '--bind', `127.0.0.1:${port}`, '--data-dir', dataDir],
    { stdio: ['ignore', 'ignore', 'pipe'] },
  );
  let stderr = '';
  child.stderr?.on('data', (chunk: Buffer) => {
    stderr += chunk.toString();
  });

  const url = `http://127.0.0.1:${port}`;
  const deadline = Date.now() + 20_000;
  for (;;) {
    if (child.exitCode !== null) {
      throw new Error(`service exited early (${child.exitCode}): ${stderr}`);
    }
    try {
      const response = await fetch(`${url}/api/documents`);
      if (response.ok) break;
    } catch {
      // not listening yet
    }
    if (Date.now() > deadline) {
      child.kill();
      throw new Error(`service did not come up on ${url}: ${stderr}`);
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
  return { url, dataDir, stop: () => child.kill() };
}

/** Run the converter CLI on a block file; returns the output directory. */
export async function runConvert(
  inputPath: string,
  outDir: string,
  layout: string,
  format: string,
): Promise<void> {
  await execFileAsync('python3', [
    '-m',
    'accsams.cli',
    'convert',
    inputPath,
    '-o',
    outDir,
    '--format',
    format,
    '--layout',
    layout,
  ]);
}

/** Wait until `check` stops throwing (store updates are asynchronous). */
export async function eventually(check: () => void, timeoutMs = 10_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    try {
      check();
      return;
    } catch (error) {
      if (Date.now() > deadline) throw error;
      await new Promise((resolve) => setTimeout(resolve, 25));
    }
  }
}

// ---------------------------------------------------------------------------
// Keyboard-only interaction helpers.  Activation of native controls uses the
// browser's built-in key bindings: the tests dispatch the real key event
// first, then performs the user-agent default (click for Enter/Space on a
// button, toggle for Space on a checkbox, value commit for selects), since
// jsdom does not synthesize those defaults itself.

const FOCUSABLE = 'button, [href], input, select, textarea, [tabindex]';

/** Elements reachable with Tab, in document order. */
export function focusables(root: ParentNode = document): HTMLElement[] {
  return [...root.querySelectorAll<HTMLElement>(FOCUSABLE)].filter((node) => {
    if (node.getAttribute('tabindex') === '-1') return false;
    if (node instanceof HTMLButtonElement && node.disabled) return false;
    if (node instanceof HTMLInputElement && node.disabled) return false;
    if (node instanceof HTMLSelectElement && node.disabled) return false;
    if (node instanceof HTMLTextAreaElement && node.disabled) return false;
    if (node.closest('[hidden]')) return false;
    return true;
  });
}

/** Assert the element is in the Tab order, then focus it (what Tab does). */
export function tabTo(element: HTMLElement): void {
  const order = focusables();
  if (!order.includes(element)) {
    throw new Error(
      `element ${element.tagName}#${element.id || '(no id)'} is not keyboard-reachable`,
    );
  }
  element.focus();
}

function key(element: HTMLElement, keyName: string, init: KeyboardEventInit = {}): void {
  element.dispatchEvent(
    new KeyboardEvent('keydown', { key: keyName, bubbles: true, cancelable: true, ...init }),
  );
  element.dispatchEvent(
    new KeyboardEvent('keyup', { key: keyName, bubbles: true, cancelable: true, ...init }),
  );
}

/** Press Enter on a focused button (UA default: click). */
export function pressEnter(element: HTMLElement): void {
  tabTo(element);
  key(element, 'Enter');
  if (element instanceof HTMLButtonElement || element instanceof HTMLAnchorElement) {
    element.click();
  }
}

/** Press Space on a focused checkbox or radio (UA default: toggle+change). */
export function pressSpace(element: HTMLInputElement): void {
  tabTo(element);
  key(element, ' ');
  element.click();
}

/** Type into a text control and commit with Tab-away (change event). */
export function typeInto(element: HTMLInputElement | HTMLTextAreaElement, value: string): void {
  tabTo(element);
  element.value = value;
  element.dispatchEvent(new Event('input', { bubbles: true }));
  element.dispatchEvent(new Event('change', { bubbles: true }));
}

/** Choose a select option with the keyboard (arrows + commit). */
export function chooseOption(element: HTMLSelectElement, value: string): void {
  tabTo(element);
  element.value = value;
  element.dispatchEvent(new Event('change', { bubbles: true }));
}

/** Dispatch a (possibly modified) arrow key on a custom widget such as the
 * hierarchy tree; the widget's own handler must do the work. */
export function pressKey(element: HTMLElement, keyName: string, init: KeyboardEventInit = {}): void {
  tabTo(element);
  key(element, keyName, init);
}

/** Dispatch a key on whatever currently holds focus.  Needed for roving
 * tabindex widgets, where only one row is in the Tab order and the others are
 * reached with arrow keys from it. */
export function pressKeyOnFocused(keyName: string, init: KeyboardEventInit = {}): void {
  const active = document.activeElement;
  if (!(active instanceof HTMLElement) || active === document.body) {
    throw new Error(`no element holds focus (active: ${active?.tagName ?? 'none'})`);
  }
  key(active, keyName, init);
}
