import { ApiError, ServiceClient } from './api.js';
import { Store } from './store.js';
import type { BlockPatch, ExportDownload, ExportFormat, ExportLayout, WireTree } from './types.js';


/**
 * All service traffic goes through here: one mutation at a time, every
 * response replaces the session snapshot (the server is the single source of
 * truth), and version conflicts turn into a banner offering reload-and-
 * reapply so no local edit is silently dropped.
 */
export class WizardController {
  readonly store: Store;
  private client: ServiceClient;
  /** Most recent export, kept so the download can be re-saved or inspected. */
  lastExport: ExportDownload | null = null;
  /** Unsaved hierarchy edits; survives re-renders, cleared on save/discard. */
  hierarchyDraft: WireTree | null = null;

  constructor(store: Store) {
    this.store = store;
    this.client = new ServiceClient(store.get().serviceUrl);
  }

  api(): ServiceClient {
    return this.client;
  }

  setServiceUrl(url: string): void {
    this.store.set({ serviceUrl: url });
    this.client = new ServiceClient(url);
  }

  private sessionId(): string {
    const session = this.store.get().session;
    if (!session) throw new Error('no session loaded');
    return session.id;
  }

  private version(): number {
    const session = this.store.get().session;
    if (!session) throw new Error('no session loaded');
    return session.version;
  }

  fail(error: unknown): void {
    const text = error instanceof Error ? error.message : String(error);
    this.store.set({ banner: { kind: 'error', text } });
  }

  info(text: string): void {
    this.store.set({ banner: { kind: 'info', text } });
  }

  async upload(blockFile: string): Promise<void> {
    await this.store.mutate(async () => {
      const payload = await this.client.createSession(blockFile);
      this.hierarchyDraft = null;
      this.store.acceptSession(payload);
    });
  }

  async openSession(sessionId: string): Promise<void> {
    await this.store.mutate(async () => {
      const payload = await this.client.getState(sessionId);
      this.hierarchyDraft = null;
      this.store.acceptSession(payload);
    });
  }

  /** Re-fetch server state, discarding nothing (all edits live server-side). */
  async refresh(): Promise<void> {
    const payload = await this.client.getState(this.sessionId());
    this.store.acceptSession(payload);
  }

  /**
   * PATCH one block.  On a version conflict the edit is kept in the banner:
   * "reload and reapply" re-fetches, then re-issues the same patch against
   * the fresh version; "reload only" just re-fetches.
   */
  async patchBlock(blockId: string, patch: BlockPatch, recompute = false): Promise<boolean> {
    try {
      await this.store.mutate(async () => {
        let payload = await this.client.patchBlock(this.sessionId(), blockId, this.version(), patch);
        this.store.acceptSession(payload);
        if (recompute) {
          payload = await this.client.recompute(this.sessionId(), payload.version);
          this.store.acceptSession(payload);
        }
      });
      return true;
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.conflictBanner(
          `Someone else changed this document (server is at version ${error.actualVersion}).`,
          () => this.patchBlock(blockId, patch, recompute),
        );
        return false;
      }
      this.fail(error);
      return false;
    }
  }

  async recomputeNow(): Promise<boolean> {
    try {
      await this.store.mutate(async () => {
        const payload = await this.client.recompute(this.sessionId(), this.version());
        this.store.acceptSession(payload);
      });
      return true;
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.conflictBanner('The document changed on the server.', () => this.recomputeNow());
        return false;
      }
      this.fail(error);
      return false;
    }
  }

  /** PUT the whole tree; caller has already run client-side validation. */
  async saveHierarchy(tree: WireTree): Promise<boolean> {
    try {
      await this.store.mutate(async () => {
        const payload = await this.client.putHierarchy(this.sessionId(), this.version(), tree);
        this.store.acceptSession(payload);
      });
      return true;
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.conflictBanner('The document changed on the server.', () => this.saveHierarchy(tree));
        return false;
      }
      this.fail(error);
      return false;
    }
  }

  /** Export; throws ApiError (including the 422 missing-alt checklist). */
  async exportDocument(layout: ExportLayout, format: ExportFormat): Promise<ExportDownload> {
    return await this.store.mutate(async () => {
      const download = await this.client.exportDocument(this.sessionId(), layout, format);
      this.lastExport = download;
      return download;
    });
  }

  private conflictBanner(text: string, reapply: () => Promise<unknown>): void {
    this.store.set({
      banner: {
        kind: 'conflict',
        text: `${text} Your edit was not saved.`,
        actions: [
          {
            label: 'Reload & reapply',
            run: async () => {
              await this.refresh();
              const ok = await reapply();
              if (ok !== false) this.info('Reloaded the latest state and reapplied your edit.');
            },
          },
          {
            label: 'Reload only',
            run: async () => {
              await this.refresh();
              this.store.set({ banner: null });
            },
          },
        ],
      },
    });
  }
}
