export interface WorldView {
  effector: number[];
  object: number[];
  goal: number[];
  goal_radius: number;
  bounds: number[];
}

export interface Snapshot {
  id: string;
  phase: string;
  episode: number;
  step: number;
  total_steps: number;
  episode_len: number;
  step_period_s: number;
  batch: boolean;
  world: WorldView;
  last_action: number[] | null;
  history: { count0: number; count1: number };
  episode_clicks: number[];
  fallback_count: number;
  last_prompt: string;
}

export interface SessionConfigBody {
  model?: { kind: string; seed?: number };
  step_period_s?: number;
  episode_len?: number;
  warmup_episodes?: number;
  batch?: boolean;
  seed?: number;
}
