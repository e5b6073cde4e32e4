// Top/bottom band selection mirroring the service's zone ranking rules:
// the lists are a pure re-sort of served percentile ranks and means, so
// moving the band slider needs no refetch and shows no number the server
// did not produce.

import type { ZoneProperties } from './types.js';

export interface Shortlist {
  top: ZoneProperties[];
  bottom: ZoneProperties[];
}

export function shortlistZones(zones: ZoneProperties[], band: number): Shortlist {
  if (!(band > 0 && band <= 0.5)) {
    throw new RangeError(`band must be in (0, 0.5], got ${band}`);
  }
  const data = zones.filter(
    (z): z is ZoneProperties & { mean_score: number; percentile_rank: number } =>
      z.percentile_rank !== null && z.mean_score !== null,
  );
  const top = data
    .filter((z) => z.percentile_rank >= 1 - band)
    .sort((a, b) => b.mean_score - a.mean_score || cmpId(a.zone_id, b.zone_id));
  const topIds = new Set(top.map((z) => z.zone_id));
  const bottom = data
    .filter((z) => z.percentile_rank <= band && !topIds.has(z.zone_id))
    .sort((a, b) => a.mean_score - b.mean_score || cmpId(a.zone_id, b.zone_id));
  return { top, bottom };
}

function cmpId(a: string, b: string): number {
  return a < b ? -1 : a > b ? 1 : 0;
}
