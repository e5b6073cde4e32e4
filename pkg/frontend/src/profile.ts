// Profile draft state and the recompute scheduler.
//
// Edits are debounced before posting; an edit made while a request is in
// flight aborts it, and response ids increase monotonically so a stale
// response can never overwrite a newer one.

import type { ProfileRequest, ProfileResponse } from './types.js';

// Factors the trash-barrel robot deployment deliberately leaves out: it
// works sidewalks and plazas only, never crossing intersections or riding
// in car traffic.
export const TRASHBOT_EXCLUDED: readonly string[] = [
  'traffic_management',
  'zoning_regulation',
  'shade_existence',
  'intersection_safety',
  'vehicle_traffic',
  'bike_lane_availability',
];

export interface ProfileDraft {
  name: string;
  included: Set<string>;
  polarityOverrides: Map<string, 1 | -1>;
  slopeK: number | null;
  slopeD: number | null;
  dirty: boolean;
}

export function newDraft(activeIds: string[]): ProfileDraft {
  return {
    name: 'custom',
    included: new Set(activeIds),
    polarityOverrides: new Map(),
    slopeK: null,
    slopeD: null,
    dirty: false,
  };
}

export function draftValid(draft: ProfileDraft): boolean {
  return draft.included.size >= 2;
}

export function toggleFeature(draft: ProfileDraft, id: string): ProfileDraft {
  const included = new Set(draft.included);
  if (included.has(id)) {
    included.delete(id);
  } else {
    included.add(id);
  }
  return { ...draft, included, dirty: true };
}

export function flipPolarity(draft: ProfileDraft, id: string, base: 1 | -1): ProfileDraft {
  const overrides = new Map(draft.polarityOverrides);
  const current = overrides.get(id) ?? base;
  const flipped = (current === 1 ? -1 : 1) as 1 | -1;
  if (flipped === base) {
    overrides.delete(id);
  } else {
    overrides.set(id, flipped);
  }
  return { ...draft, polarityOverrides: overrides, dirty: true };
}

export function setSlopeParams(
  draft: ProfileDraft,
  k: number | null,
  d: number | null,
): ProfileDraft {
  return { ...draft, slopeK: k, slopeD: d, dirty: true };
}

export function applyTrashbotPreset(draft: ProfileDraft, activeIds: string[]): ProfileDraft {
  const included = new Set(activeIds.filter((id) => !TRASHBOT_EXCLUDED.includes(id)));
  return { ...draft, name: 'trashbot', included, dirty: true };
}

export function toRequest(draft: ProfileDraft, order: string[]): ProfileRequest {
  const overrides: Record<string, Record<string, number>> = {};
  if (draft.included.has('slope_gradient') && (draft.slopeK !== null || draft.slopeD !== null)) {
    const params: Record<string, number> = {};
    if (draft.slopeK !== null) params.k = draft.slopeK;
    if (draft.slopeD !== null) params.max_distance = draft.slopeD;
    overrides.slope_gradient = params;
  }
  const polarity: Record<string, 1 | -1> = {};
  for (const [id, p] of draft.polarityOverrides) {
    if (draft.included.has(id)) polarity[id] = p;
  }
  return {
    name: draft.name,
    included_features: order.filter((id) => draft.included.has(id)),
    polarity_overrides: polarity,
    extractor_param_overrides: overrides,
  };
}

export interface ScheduledResult {
  responseId: number;
  response: ProfileResponse;
}

type PostFn = (req: ProfileRequest, signal: AbortSignal) => Promise<ProfileResponse>;

export class RecomputeScheduler {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private inFlight: AbortController | null = null;
  private nextId = 1;
  private lastDelivered = 0;

  constructor(
    private post: PostFn,
    private onResult: (r: ScheduledResult) => void,
    private onError: (err: unknown) => void,
    private debounceMs = 300,
  ) {}

  /** Schedule a recompute for the draft; supersedes anything pending. */
  submit(req: ProfileRequest): number {
    const id = this.nextId++;
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      this.fire(id, req);
    }, this.debounceMs);
    return id;
  }

  private async fire(id: number, req: ProfileRequest): Promise<void> {
    if (this.inFlight) this.inFlight.abort();
    const controller = new AbortController();
    this.inFlight = controller;
    try {
      const response = await this.post(req, controller.signal);
      if (id > this.lastDelivered && !controller.signal.aborted) {
        this.lastDelivered = id;
        this.onResult({ responseId: id, response });
      }
    } catch (err) {
      if (controller.signal.aborted) return; // superseded, stay quiet
      this.onError(err);
    } finally {
      if (this.inFlight === controller) this.inFlight = null;
    }
  }
}
