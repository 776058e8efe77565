import { beforeEach, describe, expect, it } from 'vitest';

import { ApiClient } from '../src/api';
import { BatchCommandForm } from '../src/batch';
import { readTestEnv } from './global-setup';

const { baseUrl } = readTestEnv();

function input(root: HTMLElement, name: string): HTMLInputElement {
  return root.querySelector(`[name="${name}"]`) as HTMLInputElement;
}

describe('batch command form', () => {
  let root: HTMLElement;
  let form: BatchCommandForm;

  beforeEach(async () => {
    document.body.innerHTML = '<div id="root"></div>';
    root = document.getElementById('root') as HTMLElement;
    form = new BatchCommandForm(root, new ApiClient(baseUrl));
    await form.update();
  });

  it('shows a command containing the form flags', async () => {
    input(root, 'output_dir').value = 'runs/demo';
    input(root, 'samples').value = '100';
    input(root, 'parallelism').value = '4';
    await form.update();
    expect(form.lastError).toBeNull();
    expect(form.command).toContain('convosynth generate');
    expect(form.command).toContain('--output-dir runs/demo');
    expect(form.command).toContain('--samples 100');
    expect(form.command).toContain('--parallelism 4');
    const rendered = (root.querySelector('.batch-command') as HTMLElement).textContent;
    expect(rendered).toBe(form.command);
    expect(root.querySelector('button.copy-button')).not.toBeNull();
  });

  it('round-trips through the service parser', async () => {
    input(root, 'output_dir').value = 'runs/rt';
    input(root, 'samples').value = '25';
    input(root, 'rng_seed').value = '9';
    input(root, 'custom_prompts').value = 'two chefs argue | a calm interview';
    await form.update();
    const api = new ApiClient(baseUrl);
    const echoed = await api.batchCommand(form.currentForm());
    expect(echoed.command).toBe(form.command);
    expect(echoed.config.sample_count).toBe(25);
    expect(echoed.config.rng_seed).toBe(9);
    expect(echoed.config.output_dir).toBe('runs/rt');
  });

  it('reactively updates when a field changes', async () => {
    input(root, 'samples').value = '7';
    input(root, 'samples').dispatchEvent(new Event('input'));
    await new Promise((resolve) => setTimeout(resolve, 200));
    expect(form.command).toContain('--samples 7');
  });

  it('invalid field shows inline validation error', async () => {
    input(root, 'output_dir').value = '';
    await form.update();
    expect(form.lastError).toContain('output_dir');
    expect((root.querySelector('.batch-error') as HTMLElement).textContent).toContain(
      'output_dir',
    );
    expect(form.command).toBe('');
  });
});
