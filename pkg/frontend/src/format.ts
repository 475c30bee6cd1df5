// Display-only unit helpers. The single conversion the UI is allowed
// to do is ml <-> cups at the same constant the backend uses.

export const CUP_ML = 236.588;

export function mlToCups(ml: number): number {
  return ml / CUP_ML;
}

export function cupsLabel(ml: number): string {
  const cups = mlToCups(ml);
  const rounded = Math.round(cups * 10) / 10;
  return `${rounded} cup${rounded === 1 ? "" : "s"}`;
}

export function percent(fraction: number): string {
  return `${(fraction * 100).toFixed(1)}%`;
}

export function secondsLeft(deadlineMs: number, nowMs: number): number {
  return Math.max(0, Math.ceil((deadlineMs - nowMs) / 1000));
}
