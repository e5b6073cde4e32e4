// Weight bar model. Bar lengths are percentages that always sum to
// exactly 100.0 (largest-remainder rounding at one decimal); the number
// printed next to each bar is the server's weight, untouched.

export interface WeightBar {
  id: string;
  weight: number; // exactly as served
  pct: number; // display-rounded share, one decimal
}

export function weightBars(weights: Record<string, number>): WeightBar[] {
  const ids = Object.keys(weights);
  const total = ids.reduce((acc, id) => acc + weights[id], 0);
  if (total <= 0) return ids.map((id) => ({ id, weight: weights[id], pct: 0 }));

  const exact = ids.map((id) => (weights[id] / total) * 1000); // tenths of %
  const floored = exact.map(Math.floor);
  let shortfall = 1000 - floored.reduce((a, b) => a + b, 0);
  const order = ids
    .map((_, i) => i)
    .sort((a, b) => (exact[b] - floored[b]) - (exact[a] - floored[a]) || a - b);
  const tenths = [...floored];
  for (const i of order) {
    if (shortfall <= 0) break;
    tenths[i] += 1;
    shortfall -= 1;
  }
  return ids
    .map((id, i) => ({ id, weight: weights[id], pct: tenths[i] / 10 }))
    .sort((a, b) => b.weight - a.weight || (a.id < b.id ? -1 : 1));
}

export function totalPct(bars: WeightBar[]): number {
  return Math.round(bars.reduce((acc, b) => acc + b.pct * 10, 0)) / 10;
}
