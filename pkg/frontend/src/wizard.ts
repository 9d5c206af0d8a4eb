import { WizardController } from './controller.js';
import { button, el } from './dom.js';
import { canEnterStep, goToStep, nextStep, previousStep, Store } from './store.js';
import { renderAltText } from './steps/altText.js';
import { renderBlocks } from './steps/blocks.js';
import { renderExport } from './steps/exportStep.js';
import { renderHierarchy } from './steps/hierarchy.js';
import { renderSolutions } from './steps/solutions.js';
import { renderUpload } from './steps/upload.js';
import { renderSummary } from './summary.js';
import type { StepId } from './types.js';
import { STEP_ORDER } from './types.js';

const STEP_TITLES: Record<StepId, string> = {
  upload: 'Upload',
  blocks: 'Blocks',
  solutions: 'Solutions',
  alt_text: 'Alt text',
  hierarchy: 'Hierarchy',
  export: 'Export',
};

const STEP_RENDERERS: Record<StepId, (c: HTMLElement, ctl: WizardController) => void> = {
  upload: renderUpload,
  blocks: renderBlocks,
  solutions: renderSolutions,
  alt_text: renderAltText,
  hierarchy: renderHierarchy,
  export: renderExport,
};

export function stepButtonId(step: StepId): string {
  return `step-nav-${step}`;
}

/** Mount the six-step wizard; returns the controller for tests and tooling. */
export function renderWizard(root: HTMLElement, store: Store): WizardController {
  const ctl = new WizardController(store);

  const nav = el('nav', { class: 'wizard-nav', 'aria-label': 'Wizard steps' });
  const banner = el('div', { class: 'banner', role: 'alert', hidden: '' });
  const content = el('section', { class: 'wizard-content' });
  const summary = el('aside', { class: 'wizard-summary', 'aria-label': 'Document overview' });
  const footer = el('p', { class: 'wizard-footer' });

  const shell = el('div', { class: 'wizard' });
  shell.append(nav, banner, el('div', { class: 'wizard-body' }, content, summary), footer);
  root.append(shell);

  const sync = () => {
    const state = store.get();
    shell.setAttribute('aria-busy', state.busy ? 'true' : 'false');

    // Keep keyboard position stable across re-renders.
    const focused = document.activeElement instanceof HTMLElement ? document.activeElement.id : '';

    nav.replaceChildren();
    STEP_ORDER.forEach((step, index) => {
      const allowed = canEnterStep(state, step);
      const node = button(
        `${index + 1}. ${STEP_TITLES[step]}`,
        () => {
          goToStep(store, step);
        },
        { id: stepButtonId(step) },
      );
      if (!allowed) node.disabled = true;
      if (step === state.step) node.setAttribute('aria-current', 'step');
      nav.append(node);
    });

    if (state.banner) {
      banner.replaceChildren(el('span', {}, state.banner.text));
      banner.className = `banner banner-${state.banner.kind}`;
      for (const action of state.banner.actions ?? []) {
        banner.append(
          ' ',
          button(action.label, () => {
            void action.run();
          }),
        );
      }
      banner.append(
        ' ',
        button('Dismiss', () => store.set({ banner: null }), { 'aria-label': 'Dismiss message' }),
      );
      banner.removeAttribute('hidden');
    } else {
      banner.setAttribute('hidden', '');
      banner.replaceChildren();
    }

    content.replaceChildren();
    STEP_RENDERERS[state.step](content, ctl);

    renderSummary(summary, state.session);

    footer.replaceChildren();
    const back = previousStep(state.step);
    const forward = nextStep(state.step);
    if (back) {
      footer.append(button(`Back: ${STEP_TITLES[back]}`, () => goToStep(store, back)));
    }
    if (forward) {
      const forwardButton = button(`Next: ${STEP_TITLES[forward]}`, () => goToStep(store, forward));
      if (!canEnterStep(state, forward)) forwardButton.disabled = true;
      footer.append(' ', forwardButton);
    }

    if (focused) document.getElementById(focused)?.focus();
  };

  sync();
  store.subscribe(sync);
  return ctl;
}
