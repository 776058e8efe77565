// Single-sample generation: run the pipeline stage by stage (or all at
// once) and inspect every intermediate artifact. Six panels mirror the
// pipeline: Seed, Metadata, Script, Dialogue, Audio, Quality.

import { ApiClient, ApiError } from './api';
import type {
  DialoguePayload,
  QualityPayload,
  SessionInfo,
  SpeechSummary,
  StageName,
} from './types';
import { PIPELINE_STAGES } from './types';

export const PANELS = ['seed', 'metadata', 'script', 'dialogue', 'audio', 'quality'] as const;
export type PanelName = (typeof PANELS)[number];

// Which UI panel a completed service stage lands in; voices renders
// inside the audio panel once speech exists.
const PANEL_FOR_STAGE: Partial<Record<StageName, PanelName>> = {
  seed: 'seed',
  metadata: 'metadata',
  script: 'script',
  dialogue: 'dialogue',
  speech: 'audio',
  evaluate: 'quality',
};

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

function jsonBlock(value: unknown): HTMLElement {
  const pre = el('pre', 'artifact-json');
  pre.textContent = JSON.stringify(value, null, 2);
  return pre;
}

export class SessionFlow {
  session: SessionInfo | null = null;
  stages: Partial<Record<StageName, unknown>> = {};
  /** Panels in the order they were filled; drives the stepper display. */
  filledOrder: PanelName[] = [];
  lastError: string | null = null;
  private voiceMap: Record<string, string> = {};

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
  ) {
    this.renderShell();
  }

  private renderShell(): void {
    this.root.innerHTML = '';
    const controls = el('div', 'session-controls');

    const promptLabel = el('label', undefined, 'Custom prompt (optional): ');
    const promptInput = el('input');
    promptInput.id = 'custom-prompt';
    promptInput.size = 48;
    promptLabel.appendChild(promptInput);
    controls.appendChild(promptLabel);

    const languageLabel = el('label', undefined, ' Language: ');
    const language = el('select');
    language.id = 'session-language';
    for (const code of ['en', 'zh']) {
      const option = el('option', undefined, code) as HTMLOptionElement;
      option.value = code;
      language.appendChild(option);
    }
    languageLabel.appendChild(language);
    controls.appendChild(languageLabel);

    const runAll = el('button', 'run-all', 'Run all stages');
    runAll.addEventListener('click', () => void this.runAll());
    controls.appendChild(runAll);

    const nextStage = el('button', 'run-next', 'Run next stage');
    nextStage.addEventListener('click', () => void this.runNext());
    controls.appendChild(nextStage);

    const errorBox = el('div', 'stage-error');
    errorBox.id = 'session-error';
    controls.appendChild(errorBox);
    this.root.appendChild(controls);

    const panels = el('div', 'stage-panels');
    for (const name of PANELS) {
      const panel = el('section', 'stage-panel');
      panel.dataset.panel = name;
      panel.appendChild(el('h3', undefined, name));
      panel.appendChild(el('div', 'panel-body panel-empty'));
      panels.appendChild(panel);
    }
    this.root.appendChild(panels);
  }

  private panelBody(name: PanelName): HTMLElement {
    return this.root.querySelector(`[data-panel="${name}"] .panel-body`) as HTMLElement;
  }

  private setError(message: string | null): void {
    this.lastError = message;
    const box = this.root.querySelector('#session-error') as HTMLElement;
    box.textContent = message ?? '';
    const done = new Set(Object.keys(this.stages));
    for (const panel of this.root.querySelectorAll<HTMLElement>('.stage-panel')) {
      const name = panel.dataset.panel as PanelName;
      const stageDone =
        name === 'audio' ? done.has('speech') : name === 'quality' ? done.has('evaluate') : done.has(name);
      panel.classList.toggle('panel-disabled', message !== null && !stageDone);
    }
  }

  private async ensureSession(): Promise<SessionInfo> {
    if (this.session) return this.session;
    const language = (this.root.querySelector('#session-language') as HTMLSelectElement).value;
    this.session = await this.api.createSession(language);
    return this.session;
  }

  nextStage(): StageName | null {
    for (const stage of PIPELINE_STAGES) {
      if (!(stage in this.stages)) return stage;
    }
    return null;
  }

  async runNext(): Promise<void> {
    const stage = this.nextStage();
    if (stage) await this.runStage(stage);
  }

  async runAll(): Promise<void> {
    this.stages = {};
    this.filledOrder = [];
    this.session = null;
    for (const panel of PANELS) {
      const body = this.panelBody(panel);
      body.innerHTML = '';
      body.classList.add('panel-empty');
    }
    for (const stage of PIPELINE_STAGES) {
      const ok = await this.runStage(stage);
      if (!ok) break;
    }
  }

  async runStage(stage: StageName): Promise<boolean> {
    this.setError(null);
    try {
      const session = await this.ensureSession();
      const body = stage === 'seed' ? this.seedBody() : {};
      const payload = await this.api.runStage(session.session_id, stage, body);
      this.stages[stage] = payload;
      // rerunning an earlier stage invalidates everything after it
      for (const later of PIPELINE_STAGES.slice(PIPELINE_STAGES.indexOf(stage) + 1)) {
        delete this.stages[later];
      }
      this.renderStage(stage, payload);
      return true;
    } catch (error) {
      const detail =
        error instanceof ApiError ? `${stage}: ${error.message}` : `${stage}: ${String(error)}`;
      this.setError(detail);
      return false;
    }
  }

  private seedBody(): unknown {
    const prompt = (this.root.querySelector('#custom-prompt') as HTMLInputElement).value.trim();
    return prompt ? { custom_prompt: prompt } : {};
  }

  private fillPanel(name: PanelName, content: HTMLElement): void {
    const body = this.panelBody(name);
    body.innerHTML = '';
    body.classList.remove('panel-empty');
    body.appendChild(content);
    if (!this.filledOrder.includes(name)) this.filledOrder.push(name);
  }

  private renderStage(stage: StageName, payload: unknown): void {
    if (stage === 'voices') {
      this.voiceMap = payload as Record<string, string>;
      return; // shown inside the audio panel once speech exists
    }
    const panel = PANEL_FOR_STAGE[stage];
    if (!panel) return;
    if (stage === 'speech') {
      this.fillPanel('audio', this.renderAudio(payload as SpeechSummary));
    } else if (stage === 'evaluate') {
      this.fillPanel('quality', this.renderQuality(payload as QualityPayload));
    } else if (stage === 'dialogue') {
      this.fillPanel('dialogue', this.renderDialogue(payload as DialoguePayload));
    } else {
      this.fillPanel(panel, jsonBlock(payload));
    }
  }

  private renderDialogue(dialogue: DialoguePayload): HTMLElement {
    const container = el('div');
    const list = el('ol', 'turn-list');
    for (const turn of dialogue.turns) {
      const item = el('li', 'turn');
      item.appendChild(el('span', 'turn-speaker', turn.speaker_name));
      item.appendChild(
        el('span', 'turn-annotations', ` [${turn.emotion}, ${turn.speech_rate}] `),
      );
      item.appendChild(el('span', 'turn-text', turn.text));
      list.appendChild(item);
    }
    container.appendChild(list);
    return container;
  }

  private renderAudio(speech: SpeechSummary): HTMLElement {
    const container = el('div');
    const sessionId = this.session!.session_id;

    const voices = el('div', 'voice-assignment');
    for (const [speaker, voiceId] of Object.entries(this.voiceMap)) {
      voices.appendChild(el('span', 'voice-chip', `${speaker} -> ${voiceId}`));
    }
    container.appendChild(voices);

    const full = el('div', 'full-audio');
    full.appendChild(el('span', undefined, `full dialogue (${speech.duration_seconds.toFixed(2)} s) `));
    const player = el('audio') as HTMLAudioElement;
    player.controls = true;
    player.src = this.api.sessionAudioUrl(sessionId, 'dialogue');
    full.appendChild(player);
    const download = el('a', 'download-link', 'download package') as HTMLAnchorElement;
    download.href = this.api.packageUrl(sessionId);
    full.appendChild(download);
    container.appendChild(full);

    const turns = el('ul', 'turn-audio-list');
    for (const turn of speech.turns) {
      const item = el('li');
      item.appendChild(
        el('span', undefined, `turn ${turn.turn_index} (${turn.voice_id}, ${turn.duration_seconds.toFixed(2)} s) `),
      );
      const turnPlayer = el('audio') as HTMLAudioElement;
      turnPlayer.controls = true;
      turnPlayer.src = this.api.sessionAudioUrl(sessionId, turn.turn_index);
      item.appendChild(turnPlayer);
      turns.appendChild(item);
    }
    container.appendChild(turns);
    return container;
  }

  private renderQuality(quality: QualityPayload): HTMLElement {
    const container = el('div');
    const gate = el(
      'div',
      quality.gate.passed ? 'gate gate-passed' : 'gate gate-failed',
      quality.gate.passed ? 'gate: passed' : 'gate: failed',
    );
    container.appendChild(gate);
    if (!quality.gate.passed) {
      const failures = el('ul', 'gate-failures');
      for (const failure of quality.gate.failures) {
        failures.appendChild(
          el(
            'li',
            undefined,
            `${failure.metric}: ${failure.value.toFixed(3)} vs threshold ${failure.threshold}`,
          ),
        );
      }
      container.appendChild(failures);
    }
    const scores = el('table', 'score-table');
    const rows: [string, string][] = [
      ['consistency', quality.consistency ? quality.consistency.overall.toFixed(2) : 'n/a'],
      ['coherence', quality.coherence.overall.toFixed(2)],
      ['naturalness', quality.naturalness.overall.toFixed(2)],
    ];
    if (quality.speech) {
      rows.push(['MOS', quality.speech.dialogue_mos.toFixed(2)]);
      rows.push([
        quality.speech.metric_kind,
        quality.speech.dialogue_error_rate.toFixed(4),
      ]);
    }
    for (const [label, value] of rows) {
      const row = el('tr');
      row.appendChild(el('td', undefined, label));
      row.appendChild(el('td', 'score-value', value));
      scores.appendChild(row);
    }
    container.appendChild(scores);
    return container;
  }
}
