/** Wire types for the review service HTTP API. */

export type BlockCategory =
  | 'heading'
  | 'paragraph'
  | 'list_symbol'
  | 'figure'
  | 'formula'
  | 'table';

export const BLOCK_CATEGORIES: readonly BlockCategory[] = [
  'heading',
  'paragraph',
  'list_symbol',
  'figure',
  'formula',
  'table',
];

/** Categories that must carry alt text in exports. */
export const VISUAL_CATEGORIES: readonly BlockCategory[] = ['figure', 'formula', 'table'];

export interface WireBlock {
  id: string;
  page: number;
  bbox: [number, number, number, number];
  category: BlockCategory;
  text: string | null;
  confidence: number | null;
  color_accent: boolean;
  font_size: number | null;
  alt_text: string | null;
  is_solution: boolean;
}

export interface WirePage {
  index: number;
  width: number;
  height: number;
  has_image: boolean;
}

export interface WireMarker {
  style: string;
  value: number | null;
  depth: number;
  literal: string;
}

/**
 * A tree node as served by the API.  Computed trees carry kind /
 * heading_text / marker; trees stored from a hierarchy PUT carry only the
 * core fields, so everything beyond those is optional and display labels
 * must be derived from the block list.
 */
export interface WireNode {
  block_id: string | null;
  symbol_id: string | null;
  level: number;
  is_solution: boolean;
  children: WireNode[];
  kind?: 'heading' | 'list_item' | 'block';
  heading_text?: string | null;
  marker?: WireMarker | null;
}

export interface WireTree {
  level: number;
  children: WireNode[];
}

export interface Diagnostic {
  code: string;
  message: string;
  block_id: string | null;
}

/** Full session state returned by create / get / every mutation. */
export interface SessionPayload {
  id: string;
  version: number;
  created: string;
  updated: string;
  pins: [string, string][];
  hierarchy_pinned: boolean;
  diagnostics: Diagnostic[];
  tree: WireTree;
  source: { filename: string; language: string };
  blocks: WireBlock[];
  pages: WirePage[];
  ordered: string[];
}

export interface SessionSummary {
  id: string;
  filename: string;
  version: number;
  created: string;
  updated: string;
}

export type ExportLayout = 'inline_solutions' | 'solutions_at_end' | 'separate_solutions';
export type ExportFormat = 'markdown' | 'html';

export const EXPORT_LAYOUTS: readonly ExportLayout[] = [
  'inline_solutions',
  'solutions_at_end',
  'separate_solutions',
];
export const EXPORT_FORMATS: readonly ExportFormat[] = ['markdown', 'html'];

export interface ExportDownload {
  filename: string;
  mediaType: string;
  bytes: Uint8Array;
}

/** Fields a block PATCH may carry (besides expected_version). */
export interface BlockPatch {
  category?: BlockCategory;
  text?: string | null;
  alt_text?: string | null;
  is_solution?: boolean;
}

export type StepId = 'upload' | 'blocks' | 'solutions' | 'alt_text' | 'hierarchy' | 'export';

export const STEP_ORDER: readonly StepId[] = [
  'upload',
  'blocks',
  'solutions',
  'alt_text',
  'hierarchy',
  'export',
];
