// Diverging red -> yellow -> green scale over percentile rank.
// Rank (not raw score) keeps the palette stable across missingness
// policies; zones without data render white.

const RED: [number, number, number] = [215, 48, 39];
const YELLOW: [number, number, number] = [254, 224, 139];
const GREEN: [number, number, number] = [26, 152, 80];

export const NO_DATA_COLOR = '#ffffff';

function lerp(a: [number, number, number], b: [number, number, number], t: number): string {
  const c = a.map((v, i) => Math.round(v + (b[i] - v) * t));
  return `rgb(${c[0]}, ${c[1]}, ${c[2]})`;
}

export function rankColor(rank: number | null): string {
  if (rank === null || Number.isNaN(rank)) return NO_DATA_COLOR;
  const t = Math.min(1, Math.max(0, rank));
  return t < 0.5 ? lerp(RED, YELLOW, t * 2) : lerp(YELLOW, GREEN, (t - 0.5) * 2);
}
