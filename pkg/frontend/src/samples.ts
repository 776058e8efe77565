// Sample inspection: browse a batch output directory, filter by status
// or score, and open one dialogue in a detail view with audio playback.

import { ApiClient, ApiError } from './api';
import type { ManifestRecord, SampleDetail } from './types';

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

const QUALITY_COLUMNS = ['consistency', 'coherence', 'naturalness', 'mos', 'error_rate'];

export class SampleBrowser {
  records: ManifestRecord[] = [];
  directory = '';
  statusFilter = 'all';
  minNaturalness: number | null = null;
  lastError: string | null = null;

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
  ) {
    this.renderShell();
  }

  private renderShell(): void {
    this.root.innerHTML = '';
    const controls = el('div', 'samples-controls');
    const dirInput = el('input') as HTMLInputElement;
    dirInput.placeholder = 'batch output directory';
    dirInput.className = 'dir-input';
    dirInput.size = 48;
    controls.appendChild(dirInput);

    const loadButton = el('button', 'load-samples', 'Load');
    loadButton.addEventListener('click', () => void this.load(dirInput.value.trim()));
    controls.appendChild(loadButton);

    const statusSelect = el('select', 'status-filter') as HTMLSelectElement;
    for (const status of ['all', 'passed', 'speech_failed', 'content_failed', 'error']) {
      const option = el('option', undefined, status) as HTMLOptionElement;
      option.value = status;
      statusSelect.appendChild(option);
    }
    statusSelect.addEventListener('change', () => {
      this.statusFilter = statusSelect.value;
      this.renderTable();
    });
    controls.appendChild(statusSelect);

    const minScore = el('input', 'min-naturalness') as HTMLInputElement;
    minScore.type = 'number';
    minScore.placeholder = 'min naturalness';
    minScore.addEventListener('input', () => {
      this.minNaturalness = minScore.value === '' ? null : Number(minScore.value);
      this.renderTable();
    });
    controls.appendChild(minScore);

    const errorBox = el('div', 'samples-error');
    controls.appendChild(errorBox);
    this.root.appendChild(controls);
    this.root.appendChild(el('div', 'samples-table-holder'));
    this.root.appendChild(el('div', 'sample-detail'));
  }

  async load(directory: string): Promise<void> {
    const errorBox = this.root.querySelector('.samples-error') as HTMLElement;
    try {
      const listing = await this.api.listSamples(directory);
      this.directory = listing.directory;
      this.records = listing.records;
      this.lastError = null;
      errorBox.textContent = '';
      this.renderTable();
    } catch (error) {
      this.lastError = error instanceof ApiError ? error.message : String(error);
      errorBox.textContent = this.lastError;
    }
  }

  visibleRecords(): ManifestRecord[] {
    return this.records.filter((record) => {
      if (this.statusFilter !== 'all' && record.status !== this.statusFilter) return false;
      if (this.minNaturalness !== null) {
        const score = record.quality.naturalness;
        if (score === null || score === undefined || score < this.minNaturalness) return false;
      }
      return true;
    });
  }

  private renderTable(): void {
    const holder = this.root.querySelector('.samples-table-holder') as HTMLElement;
    holder.innerHTML = '';
    const table = el('table', 'samples-table');
    const head = el('tr');
    for (const column of ['dialogue', 'status', ...QUALITY_COLUMNS, 'turns']) {
      head.appendChild(el('th', undefined, column));
    }
    table.appendChild(head);
    for (const record of this.visibleRecords()) {
      const row = el('tr', 'sample-row');
      row.dataset.dialogueId = record.dialogue_id;
      row.appendChild(el('td', 'sample-id', record.dialogue_id));
      const statusCell = el('td');
      statusCell.appendChild(el('span', `status-badge status-${record.status}`, record.status));
      row.appendChild(statusCell);
      for (const column of QUALITY_COLUMNS) {
        const value = record.quality[column];
        row.appendChild(
          el('td', 'score-cell', value === null || value === undefined ? '-' : Number(value).toFixed(2)),
        );
      }
      row.appendChild(el('td', undefined, String(record.stats.turn_count ?? '-')));
      row.addEventListener('click', () => void this.openDetail(record.dialogue_id));
      table.appendChild(row);
    }
    holder.appendChild(table);
  }

  async openDetail(dialogueId: string): Promise<void> {
    const panel = this.root.querySelector('.sample-detail') as HTMLElement;
    panel.innerHTML = '';
    let detail: SampleDetail;
    try {
      detail = await this.api.sampleDetail(dialogueId, this.directory);
    } catch (error) {
      panel.appendChild(
        el('div', 'samples-error', error instanceof ApiError ? error.message : String(error)),
      );
      return;
    }
    panel.appendChild(el('h3', undefined, dialogueId));
    panel.appendChild(
      el('span', `status-badge status-${detail.record.status}`, detail.record.status),
    );

    if (detail.artifacts.offsets) {
      const audio = el('div', 'detail-audio');
      const player = el('audio') as HTMLAudioElement;
      player.controls = true;
      player.src = this.api.sampleAudioUrl(dialogueId, this.directory, 'dialogue');
      audio.appendChild(player);
      panel.appendChild(audio);
    }
    // mirror the single-generation layout: one panel per artifact
    for (const name of ['seed', 'metadata', 'script', 'dialogue', 'voices', 'quality']) {
      if (!(name in detail.artifacts)) continue;
      const section = el('section', 'detail-panel');
      section.dataset.artifact = name;
      section.appendChild(el('h4', undefined, name));
      const pre = el('pre', 'artifact-json');
      pre.textContent = JSON.stringify(detail.artifacts[name], null, 2);
      section.appendChild(pre);
      panel.appendChild(section);
    }
  }
}
