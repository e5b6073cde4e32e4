// Console wiring: profile editor on the left, weight bars and zone map on
// the right. Every displayed number is lifted verbatim from a service
// response; edits are debounced and superseded requests cancelled.

import { ServiceClient, ServiceError } from './api.js';
import { renderChoropleth, type ChoroplethLayer } from './choropleth.js';
import {
  applyTrashbotPreset,
  draftValid,
  flipPolarity,
  newDraft,
  RecomputeScheduler,
  setSlopeParams,
  toggleFeature,
  toRequest,
  type ProfileDraft,
} from './profile.js';
import { shortlistZones } from './shortlist.js';
import { totalPct, weightBars } from './weights.js';
import type { CatalogEntry, ProfileResponse, ZoneCollection, ZoneProperties } from './types.js';

interface AppState {
  catalog: CatalogEntry[];
  activeIds: string[];
  draft: ProfileDraft;
  zones: ZoneCollection;
  lastResponse: ProfileResponse | null;
  band: number;
  layer: ChoroplethLayer | null;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

export async function startApp(baseUrl = ''): Promise<void> {
  const client = new ServiceClient(baseUrl);
  const [catalogDoc, weightsDoc, zonesDoc] = await Promise.all([
    client.getCatalog(),
    client.getWeights(),
    client.getZones(),
  ]);
  const activeIds = catalogDoc.features
    .filter((f) => !f.excluded && f.has_data)
    .map((f) => f.id);
  const state: AppState = {
    catalog: catalogDoc.features,
    activeIds,
    draft: newDraft(activeIds),
    zones: zonesDoc,
    lastResponse: null,
    band: 0.1,
    layer: null,
  };

  const scheduler = new RecomputeScheduler(
    (req, signal) => client.postProfile(req, signal),
    async ({ response }) => {
      state.lastResponse = response;
      clearBanner();
      try {
        state.zones = await client.getZones(response.profile_token);
      } catch (err) {
        showBanner(err); // stale layer retained
        return;
      }
      renderWeights(state);
      renderMap(state);
      renderShortlist(state);
      renderSummary(state);
    },
    (err) => showBanner(err),
  );

  function recompute(): void {
    renderEditor(state); // reflect validity immediately
    if (!draftValid(state.draft)) return; // invalid drafts never hit the wire
    scheduler.submit(toRequest(state.draft, state.activeIds));
  }

  function showBanner(err: unknown): void {
    const banner = el<HTMLDivElement>('banner');
    banner.hidden = false;
    if (err instanceof ServiceError && err.fieldErrors.length) {
      banner.textContent = err.fieldErrors
        .map((e) => `${e.field}: ${e.message}`)
        .join(' | ');
    } else {
      banner.textContent = err instanceof Error ? err.message : String(err);
    }
  }

  function clearBanner(): void {
    const banner = el<HTMLDivElement>('banner');
    banner.hidden = true;
    banner.textContent = '';
  }

  function renderEditor(s: AppState): void {
    const list = el<HTMLDivElement>('features');
    list.replaceChildren();
    for (const entry of s.catalog) {
      const row = document.createElement('div');
      row.className = 'feature-row' + (entry.excluded ? ' excluded' : '');

      const checkbox = document.createElement('input');
      checkbox.type = 'checkbox';
      checkbox.id = `feat-${entry.id}`;
      checkbox.disabled = entry.excluded || !entry.has_data;
      checkbox.checked = s.draft.included.has(entry.id);
      checkbox.addEventListener('change', () => {
        s.draft = toggleFeature(s.draft, entry.id);
        recompute();
      });

      const label = document.createElement('label');
      label.htmlFor = checkbox.id;
      label.textContent = entry.display_name;
      if (entry.excluded) label.title = entry.exclusion_reason ?? 'excluded';

      row.append(checkbox, label);
      if (!entry.excluded && entry.has_data) {
        const pol = document.createElement('button');
        pol.className = 'polarity';
        const effective = s.draft.polarityOverrides.get(entry.id) ?? entry.polarity;
        pol.textContent = effective === 1 ? '+' : '−';
        pol.title = 'flip polarity';
        pol.addEventListener('click', () => {
          s.draft = flipPolarity(s.draft, entry.id, entry.polarity);
          recompute();
        });
        row.append(pol);
      }
      list.append(row);
    }
    const hint = el<HTMLSpanElement>('validity-hint');
    hint.textContent = draftValid(s.draft) ? '' : 'keep at least 2 features included';
  }

  function renderWeights(s: AppState): void {
    const panel = el<HTMLDivElement>('weights');
    panel.replaceChildren();
    const weights = s.lastResponse ? s.lastResponse.weights.weights : weightsDoc.weights;
    const bars = weightBars(weights);
    for (const bar of bars) {
      const row = document.createElement('div');
      row.className = 'weight-row';
      const name = document.createElement('span');
      name.className = 'weight-name';
      name.textContent = bar.id;
      const track = document.createElement('div');
      track.className = 'bar-track';
      const fill = document.createElement('div');
      fill.className = 'bar-fill';
      fill.style.width = `${bar.pct}%`;
      track.append(fill);
      const value = document.createElement('span');
      value.className = 'weight-value';
      value.setAttribute('data-weight-id', bar.id);
      value.textContent = String(bar.weight);
      row.append(name, track, value);
      panel.append(row);
    }
    el<HTMLSpanElement>('weights-total').textContent = `${totalPct(bars)}%`;
  }

  function zonesForList(s: AppState): ZoneProperties[] {
    if (s.lastResponse) return s.lastResponse.zones;
    return s.zones.features.map((f) => f.properties);
  }

  function renderMap(s: AppState): void {
    s.layer = renderChoropleth(el<HTMLDivElement>('map'), s.zones, (zoneId) => {
      s.layer?.panTo(zoneId);
    });
  }

  function renderShortlist(s: AppState): void {
    const { top, bottom } = shortlistZones(zonesForList(s), s.band);
    const render = (target: HTMLElement, items: ZoneProperties[]) => {
      target.replaceChildren();
      for (const z of items) {
        const li = document.createElement('li');
        li.textContent = `${z.zone_id} (mean ${z.mean_score}, ${z.point_count} pts)`;
        li.setAttribute('data-zone-id', z.zone_id);
        li.addEventListener('click', () => s.layer?.panTo(z.zone_id));
        target.append(li);
      }
    };
    render(el<HTMLUListElement>('top-zones'), top);
    render(el<HTMLUListElement>('bottom-zones'), bottom);
    s.layer?.highlight([...top, ...bottom].map((z) => z.zone_id));
  }

  function renderSummary(s: AppState): void {
    const summary = el<HTMLDivElement>('summary');
    if (!s.lastResponse) {
      summary.textContent = '';
      return;
    }
    const { graph_score, scored_points, max_min_zone_ratio } = s.lastResponse.summary;
    const ratio = max_min_zone_ratio === null ? 'n/a' : `${max_min_zone_ratio}×`;
    summary.textContent =
      `graph score ${graph_score} over ${scored_points} points; ` +
      `max/min zone ratio ${ratio}`;
  }

  el<HTMLButtonElement>('preset-trashbot').addEventListener('click', () => {
    state.draft = applyTrashbotPreset(state.draft, state.activeIds);
    recompute();
  });
  el<HTMLButtonElement>('preset-full').addEventListener('click', () => {
    state.draft = newDraft(state.activeIds);
    state.draft = { ...state.draft, dirty: true };
    recompute();
  });

  const bandSlider = el<HTMLInputElement>('band');
  bandSlider.addEventListener('input', () => {
    state.band = Number(bandSlider.value) / 100;
    el<HTMLSpanElement>('band-label').textContent = `${bandSlider.value}%`;
    renderShortlist(state); // re-sort only, no refetch
  });

  const slopeK = el<HTMLInputElement>('slope-k');
  const slopeD = el<HTMLInputElement>('slope-d');
  const onSlope = () => {
    state.draft = setSlopeParams(
      state.draft,
      slopeK.value ? Number(slopeK.value) : null,
      slopeD.value ? Number(slopeD.value) : null,
    );
    el<HTMLSpanElement>('slope-label').textContent =
      `k=${slopeK.value || 'default'}, D=${slopeD.value || 'default'}m`;
    recompute();
  };
  slopeK.addEventListener('input', onSlope);
  slopeD.addEventListener('input', onSlope);

  renderEditor(state);
  renderWeights(state);
  renderMap(state);
  renderShortlist(state);
  renderSummary(state);
}

declare global {
  interface Window {
    ROBOTABILITY_BASE_URL?: string;
  }
}

if (typeof document !== 'undefined' && document.getElementById('app-root')) {
  startApp(window.ROBOTABILITY_BASE_URL ?? '').catch((err) => {
    const banner = document.getElementById('banner');
    if (banner) {
      (banner as HTMLDivElement).hidden = false;
      banner.textContent = `failed to load: ${err instanceof Error ? err.message : err}`;
    }
  });
}
