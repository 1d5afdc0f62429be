/**
 * SVG path for the per-round IoU history. Values are ratios in [0, 1];
 * rounds without a value (no ground truth) are skipped, breaking the line.
 */

export function sparklinePath(
  values: (number | null)[],
  width: number,
  height: number,
  pad = 2,
): string {
  const n = values.length;
  if (n === 0) return "";
  const innerW = width - 2 * pad;
  const innerH = height - 2 * pad;
  const stepX = n > 1 ? innerW / (n - 1) : 0;
  const parts: string[] = [];
  let drawing = false;
  for (let i = 0; i < n; i++) {
    const v = values[i];
    if (v === null || v === undefined) {
      drawing = false;
      continue;
    }
    const clamped = Math.min(1, Math.max(0, v));
    const x = pad + (n > 1 ? i * stepX : innerW / 2);
    const y = pad + (1 - clamped) * innerH;
    parts.push(`${drawing ? "L" : "M"}${round2(x)},${round2(y)}`);
    drawing = true;
  }
  return parts.join(" ");
}

function round2(v: number): number {
  return Math.round(v * 100) / 100;
}
