import type { SessionPayload, StepId } from './types.js';
import { STEP_ORDER } from './types.js';

export interface Banner {
  kind: 'error' | 'conflict' | 'info';
  text: string;
  /** Offered recovery actions, rendered as buttons next to the banner. */
  actions?: { label: string; run: () => void | Promise<void> }[];
}

export interface WizardState {
  serviceUrl: string;
  step: StepId;
  /** Steps the user has completed at least once; gates forward jumps. */
  visited: Set<StepId>;
  session: SessionPayload | null;
  /** True while a mutation is in flight; further mutations are rejected. */
  busy: boolean;
  banner: Banner | null;
}

export function initialState(serviceUrl: string): WizardState {
  return {
    serviceUrl,
    step: 'upload',
    visited: new Set<StepId>(['upload']),
    session: null,
    busy: false,
    banner: null,
  };
}

type Listener = () => void;

/** Minimal observable state container; set() notifies subscribers. */
export class Store {
  private state: WizardState;
  private listeners: Listener[] = [];

  constructor(state: WizardState) {
    this.state = state;
  }

  get(): WizardState {
    return this.state;
  }

  set(partial: Partial<WizardState>): void {
    this.state = { ...this.state, ...partial };
    this.listeners.forEach((fn) => fn());
  }

  subscribe(fn: Listener): () => void {
    this.listeners.push(fn);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  /** Server state always wins: every response replaces the session snapshot. */
  acceptSession(payload: SessionPayload): void {
    this.set({ session: payload });
  }

  /**
   * Run one mutation at a time.  A second call while one is in flight is
   * rejected (the UI disables controls, but keyboard races still end up
   * here).  Errors land in the banner unless the caller handles them.
   */
  async mutate<T>(run: () => Promise<T>): Promise<T> {
    if (this.state.busy) {
      throw new Error('another change is still being saved');
    }
    this.set({ busy: true });
    try {
      return await run();
    } finally {
      this.set({ busy: false });
    }
  }
}

/** Which steps may be entered given the current state. */
export function canEnterStep(state: WizardState, step: StepId): boolean {
  if (step === 'upload') return true;
  if (state.session === null) return false;
  // The hierarchy editor assumes blocks were reviewed (categories settled).
  if (step === 'hierarchy') return state.visited.has('blocks');
  return true;
}

/** Move to a step if permitted; marks the departed step as visited. */
export function goToStep(store: Store, step: StepId): boolean {
  const state = store.get();
  if (!canEnterStep(state, step)) return false;
  const visited = new Set(state.visited);
  visited.add(state.step);
  visited.add(step);
  store.set({ step, visited, banner: null });
  return true;
}

export function nextStep(current: StepId): StepId | null {
  const i = STEP_ORDER.indexOf(current);
  return i >= 0 && i + 1 < STEP_ORDER.length ? STEP_ORDER[i + 1]! : null;
}

export function previousStep(current: StepId): StepId | null {
  const i = STEP_ORDER.indexOf(current);
  return i > 0 ? STEP_ORDER[i - 1]! : null;
}
