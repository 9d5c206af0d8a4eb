import type {
  BlockPatch,
  ExportDownload,
  ExportFormat,
  ExportLayout,
  SessionPayload,
  SessionSummary,
  WireTree,
} from './types.js';

/** A non-2xx response, decoded from the service's error payload. */
export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly actualVersion?: number;
  readonly blockIds?: string[];

  constructor(status: number, code: string, message: string, extra: Record<string, unknown>) {
    super(message);
    this.name = 'ApiError';
    this.status = status;
    this.code = code;
    if (typeof extra['actual_version'] === 'number') {
      this.actualVersion = extra['actual_version'];
    }
    if (Array.isArray(extra['block_ids'])) {
      this.blockIds = extra['block_ids'].map(String);
    }
  }
}

async function raise(response: Response): Promise<never> {
  let code = 'HttpError';
  let message = `${response.status} ${response.statusText}`;
  let extra: Record<string, unknown> = {};
  try {
    const body = (await response.json()) as Record<string, unknown>;
    if (typeof body['error'] === 'string') code = body['error'];
    if (typeof body['message'] === 'string') message = body['message'];
    extra = body;
  } catch {
    // non-JSON error body; keep the status line
  }
  throw new ApiError(response.status, code, message, extra);
}

function parseAttachmentName(disposition: string | null): string | null {
  if (!disposition) return null;
  const match = /filename="([^"]+)"/.exec(disposition);
  return match ? match[1]! : null;
}

/** Thin typed client over the review service; one instance per service URL. */
export class ServiceClient {
  readonly baseUrl: string;

  constructor(baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, '');
  }

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, init);
    if (!response.ok) await raise(response);
    return (await response.json()) as T;
  }

  listSessions(): Promise<SessionSummary[]> {
    return this.json('/api/documents');
  }

  createSession(blockFile: string | Uint8Array): Promise<SessionPayload> {
    return this.json('/api/documents', {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: blockFile as BodyInit,
    });
  }

  getState(sessionId: string): Promise<SessionPayload> {
    return this.json(`/api/documents/${encodeURIComponent(sessionId)}`);
  }

  patchBlock(
    sessionId: string,
    blockId: string,
    expectedVersion: number,
    patch: BlockPatch,
  ): Promise<SessionPayload> {
    return this.json(
      `/api/documents/${encodeURIComponent(sessionId)}/blocks/${encodeURIComponent(blockId)}`,
      {
        method: 'PATCH',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify({ expected_version: expectedVersion, ...patch }),
      },
    );
  }

  putHierarchy(sessionId: string, expectedVersion: number, tree: WireTree): Promise<SessionPayload> {
    return this.json(`/api/documents/${encodeURIComponent(sessionId)}/hierarchy`, {
      method: 'PUT',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ expected_version: expectedVersion, tree }),
    });
  }

  recompute(sessionId: string, expectedVersion: number): Promise<SessionPayload> {
    return this.json(`/api/documents/${encodeURIComponent(sessionId)}/recompute`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ expected_version: expectedVersion }),
    });
  }

  async exportDocument(
    sessionId: string,
    layout: ExportLayout,
    format: ExportFormat,
  ): Promise<ExportDownload> {
    const response = await fetch(
      `${this.baseUrl}/api/documents/${encodeURIComponent(sessionId)}/export`,
      {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify({ layout, format }),
      },
    );
    if (!response.ok) await raise(response);
    const bytes = new Uint8Array(await response.arrayBuffer());
    const filename =
      parseAttachmentName(response.headers.get('content-disposition')) ?? 'export.bin';
    const mediaType = (response.headers.get('content-type') ?? 'application/octet-stream').split(
      ';',
    )[0]!;
    return { filename, mediaType, bytes };
  }

  pageUrl(sessionId: string, pageIndex: number): string {
    return `${this.baseUrl}/api/documents/${encodeURIComponent(sessionId)}/pages/${pageIndex}`;
  }
}
