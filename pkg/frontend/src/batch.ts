// Batch tab: a form that turns into a ready-to-paste CLI command. The
// command string comes from the service (which parses it back to verify
// the round trip); the form never builds CLI syntax itself.

import { ApiClient, ApiError } from './api';
import type { BatchForm } from './types';

function field(labelText: string, input: HTMLElement): HTMLElement {
  const wrapper = document.createElement('label');
  wrapper.className = 'batch-field';
  const span = document.createElement('span');
  span.textContent = labelText;
  wrapper.appendChild(span);
  wrapper.appendChild(input);
  return wrapper;
}

export class BatchCommandForm {
  command = '';
  lastError: string | null = null;
  private inputs: Record<string, HTMLInputElement | HTMLSelectElement> = {};

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
  ) {
    this.render();
  }

  private makeInput(name: string, value: string, type = 'text'): HTMLInputElement {
    const input = document.createElement('input');
    input.type = type;
    input.value = value;
    input.name = name;
    input.addEventListener('input', () => void this.update());
    this.inputs[name] = input;
    return input;
  }

  private render(): void {
    this.root.innerHTML = '';
    const form = document.createElement('div');
    form.className = 'batch-form';
    form.appendChild(field('Output directory', this.makeInput('output_dir', 'out')));
    form.appendChild(field('Samples', this.makeInput('samples', '100', 'number')));
    form.appendChild(field('Parallelism', this.makeInput('parallelism', '4', 'number')));
    form.appendChild(field('RNG seed', this.makeInput('rng_seed', '42', 'number')));

    const language = document.createElement('select');
    language.name = 'language';
    for (const code of ['en', 'zh']) {
      const option = document.createElement('option');
      option.value = code;
      option.textContent = code;
      language.appendChild(option);
    }
    language.addEventListener('change', () => void this.update());
    this.inputs.language = language;
    form.appendChild(field('Language', language));

    const prompts = document.createElement('input');
    prompts.name = 'custom_prompts';
    prompts.placeholder = 'optional; separate prompts with |';
    prompts.addEventListener('input', () => void this.update());
    this.inputs.custom_prompts = prompts;
    form.appendChild(field('Custom prompts', prompts));

    this.root.appendChild(form);

    const errorBox = document.createElement('div');
    errorBox.className = 'batch-error';
    this.root.appendChild(errorBox);

    const output = document.createElement('div');
    output.className = 'batch-output';
    const code = document.createElement('code');
    code.className = 'batch-command';
    output.appendChild(code);
    const copy = document.createElement('button');
    copy.textContent = 'copy';
    copy.className = 'copy-button';
    copy.addEventListener('click', () => {
      if (navigator.clipboard && this.command) void navigator.clipboard.writeText(this.command);
    });
    output.appendChild(copy);
    this.root.appendChild(output);

    void this.update();
  }

  currentForm(): BatchForm {
    const value = (name: string) => this.inputs[name].value.trim();
    const form: BatchForm = { output_dir: value('output_dir') };
    if (value('samples')) form.samples = Number(value('samples'));
    if (value('parallelism')) form.parallelism = Number(value('parallelism'));
    if (value('rng_seed')) form.rng_seed = Number(value('rng_seed'));
    form.language = value('language') as BatchForm['language'] & string;
    const prompts = value('custom_prompts');
    if (prompts) {
      form.custom_prompts = prompts
        .split('|')
        .map((p) => p.trim())
        .filter(Boolean);
    }
    return form;
  }

  async update(): Promise<void> {
    const errorBox = this.root.querySelector('.batch-error') as HTMLElement;
    const code = this.root.querySelector('.batch-command') as HTMLElement;
    try {
      const response = await this.api.batchCommand(this.currentForm());
      this.command = response.command;
      this.lastError = null;
      errorBox.textContent = '';
      code.textContent = this.command;
    } catch (error) {
      this.lastError = error instanceof ApiError ? error.message : String(error);
      errorBox.textContent = this.lastError;
      this.command = '';
      code.textContent = '';
    }
  }
}
