// Tab shell wiring the three workflows to the pipeline service.

import { ApiClient } from './api';
import { BatchCommandForm } from './batch';
import { SampleBrowser } from './samples';
import { SessionFlow } from './session';
import './style.css';

const DEFAULT_BASE_URL = 'http://127.0.0.1:8321';

type TabName = 'single' | 'batch' | 'samples';
const TABS: TabName[] = ['single', 'batch', 'samples'];

function switchTab(tab: TabName): void {
  for (const name of TABS) {
    const button = document.querySelector(`[data-tab-button="${name}"]`) as HTMLElement;
    const content = document.querySelector(`[data-tab="${name}"]`) as HTMLElement;
    button.classList.toggle('active', name === tab);
    content.style.display = name === tab ? 'block' : 'none';
  }
}

function boot(): void {
  const root = document.getElementById('app');
  if (!root) throw new Error('missing #app root');

  const baseUrl = localStorage.getItem('convosynth.baseUrl') ?? DEFAULT_BASE_URL;
  const api = new ApiClient(baseUrl);

  root.innerHTML = `
    <header>
      <h1>convosynth</h1>
      <label>service <input id="base-url" size="28" value="${baseUrl}"></label>
      <nav>
        <button data-tab-button="single">Single Sample</button>
        <button data-tab-button="batch">Batch Command</button>
        <button data-tab-button="samples">Sample Inspection</button>
      </nav>
    </header>
    <main>
      <div data-tab="single"></div>
      <div data-tab="batch"></div>
      <div data-tab="samples"></div>
    </main>
  `;

  const baseInput = document.getElementById('base-url') as HTMLInputElement;
  baseInput.addEventListener('change', () => {
    localStorage.setItem('convosynth.baseUrl', baseInput.value.trim());
    location.reload();
  });

  new SessionFlow(document.querySelector('[data-tab="single"]') as HTMLElement, api);
  new BatchCommandForm(document.querySelector('[data-tab="batch"]') as HTMLElement, api);
  new SampleBrowser(document.querySelector('[data-tab="samples"]') as HTMLElement, api);

  for (const name of TABS) {
    (document.querySelector(`[data-tab-button="${name}"]`) as HTMLElement).addEventListener(
      'click',
      () => switchTab(name),
    );
  }
  switchTab('single');
}

boot();
