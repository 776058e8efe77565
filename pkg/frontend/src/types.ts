// Payload shapes mirrored from the service's JSON responses. Only the
// fields the UI reads are typed; artifacts keep their canonical layout.

export type StageName =
  | 'seed'
  | 'metadata'
  | 'script'
  | 'dialogue'
  | 'voices'
  | 'speech'
  | 'evaluate';

export const PIPELINE_STAGES: StageName[] = [
  'seed',
  'metadata',
  'script',
  'dialogue',
  'voices',
  'speech',
  'evaluate',
];

export interface SessionInfo {
  session_id: string;
  language: string;
  rng_seed: number;
}

export interface SessionState extends SessionInfo {
  created_at: number;
  completed_stages: StageName[];
  stages: Record<StageName, unknown | null>;
}

export interface TurnOffset {
  turn_index: number;
  start_sample: number;
  end_sample: number;
}

export interface SpeechSummary {
  sample_rate: number;
  duration_seconds: number;
  turn_offsets: TurnOffset[];
  turns: {
    turn_index: number;
    voice_id: string;
    duration_seconds: number;
    control_prompt_used: string | null;
  }[];
}

export interface GateFailure {
  metric: string;
  value: number;
  threshold: number;
}

export interface QualityPayload {
  consistency: { overall: number } | null;
  coherence: { overall: number };
  naturalness: { overall: number };
  speech: {
    dialogue_mos: number;
    dialogue_error_rate: number;
    metric_kind: string;
  } | null;
  gate: { passed: boolean; failures: GateFailure[] };
}

export interface DialoguePayload {
  dialogue_id: string;
  turns: {
    turn_index: number;
    speaker_name: string;
    text: string;
    emotion: string;
    speech_rate: string;
    pause_before_seconds: number;
  }[];
}

export interface ManifestRecord {
  dialogue_id: string;
  index: number;
  status: string;
  artifacts: Record<string, string>;
  quality: Record<string, number | null>;
  stats: Record<string, unknown>;
  flags: string[];
  error: string | null;
}

export interface SamplesListing {
  directory: string;
  corrupt_lines: number;
  records: ManifestRecord[];
}

export interface SampleDetail {
  record: ManifestRecord;
  artifacts: Record<string, unknown>;
}

export interface BatchForm {
  output_dir: string;
  samples?: number;
  parallelism?: number;
  rng_seed?: number;
  language?: string;
  custom_prompts?: string[];
  seed_overrides?: Record<string, string>;
  backend_mode?: 'mock' | 'live';
  mock_seed?: number;
}

export interface BatchCommandResponse {
  command: string;
  config: {
    sample_count: number;
    parallelism: number;
    rng_seed: number;
    language: string;
    output_dir: string;
  };
}
