import { initialState, Store } from './store.js';
import { renderWizard } from './wizard.js';

const params = new URLSearchParams(window.location.search);
const serviceUrl = params.get('service') ?? window.location.origin;

const root = document.getElementById('app');
if (root) {
  renderWizard(root, new Store(initialState(serviceUrl)));
}
