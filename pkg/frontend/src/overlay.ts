/**
 * Pure pixel work for the mask overlay: a binary mask becomes a premultiplied
 * RGBA buffer the canvas can blit, foreground tinted, background transparent.
 */

export type Rgb = [number, number, number];

export const OVERLAY_COLOR: Rgb = [66, 133, 244];
export const OVERLAY_ALPHA = 140; // out of 255

export function renderOverlay(
  mask: Uint8Array,
  width: number,
  height: number,
  color: Rgb = OVERLAY_COLOR,
  alpha: number = OVERLAY_ALPHA,
): Uint8ClampedArray<ArrayBuffer> {
  if (mask.length !== width * height) {
    throw new Error(`mask has ${mask.length} entries, expected ${width * height}`);
  }
  const out = new Uint8ClampedArray(width * height * 4);
  for (let i = 0; i < mask.length; i++) {
    if (!mask[i]) continue;
    const o = i * 4;
    out[o] = color[0];
    out[o + 1] = color[1];
    out[o + 2] = color[2];
    out[o + 3] = alpha;
  }
  return out;
}

export function buffersEqual(
  a: ArrayLike<number>,
  b: ArrayLike<number>,
): boolean {
  if (a.length !== b.length) return false;
  for (let i = 0; i < a.length; i++) {
    if (a[i] !== b[i]) return false;
  }
  return true;
}
