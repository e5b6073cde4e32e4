import { describe, expect, it } from 'vitest';

import { shortlistZones } from '../src/shortlist';
import type { ZoneCollection, ZoneProperties } from '../src/types';

import zonesBase from './fixtures/zones_base.json';
import rankBands from './fixtures/rank_bands.json';

const zones = (zonesBase as unknown as ZoneCollection).features.map(
  (f) => f.properties,
);
const serverRanks = rankBands as Record<string, { top: string[]; bottom: string[] }>;

describe('shortlist parity with the service ranking', () => {
  for (const band of ['0.1', '0.25', '0.5']) {
    it(`matches the service's top/bottom lists at band ${band}`, () => {
      const { top, bottom } = shortlistZones(zones, Number(band));
      expect(top.map((z) => z.zone_id)).toEqual(serverRanks[band].top);
      expect(bottom.map((z) => z.zone_id)).toEqual(serverRanks[band].bottom);
    });
  }

  it('no-data zones never appear in either list', () => {
    const { top, bottom } = shortlistZones(zones, 0.5);
    const ids = [...top, ...bottom].map((z) => z.zone_id);
    expect(ids).not.toContain('offgrid');
  });

  it('band 0.5 puts every data zone in exactly one list', () => {
    const { top, bottom } = shortlistZones(zones, 0.5);
    const dataZones = zones.filter((z) => z.percentile_rank !== null);
    const ids = [...top, ...bottom].map((z) => z.zone_id);
    expect(new Set(ids).size).toBe(ids.length);
    expect(ids.length).toBe(dataZones.length);
  });

  it('re-sorting with a new band is pure (same inputs, no fetch)', () => {
    const first = shortlistZones(zones, 0.25);
    const second = shortlistZones(zones, 0.25);
    expect(second).toEqual(first);
  });

  it('rejects an out-of-range band', () => {
    expect(() => shortlistZones(zones, 0)).toThrow(RangeError);
    expect(() => shortlistZones(zones, 0.6)).toThrow(RangeError);
  });
});

describe('shortlist ordering', () => {
  const mk = (id: string, mean: number, rank: number): ZoneProperties => ({
    zone_id: id,
    mean_score: mean,
    point_count: 1,
    percentile_rank: rank,
  });

  it('top list is best-first, bottom list worst-first', () => {
    const sample = [
      mk('a', 0.1, 0.0),
      mk('b', 0.2, 1 / 3),
      mk('c', 0.3, 2 / 3),
      mk('d', 0.4, 1.0),
    ];
    const { top, bottom } = shortlistZones(sample, 0.5);
    expect(top.map((z) => z.zone_id)).toEqual(['d', 'c']);
    expect(bottom.map((z) => z.zone_id)).toEqual(['a', 'b']);
  });
});
