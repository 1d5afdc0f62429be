/**
 * Row-major run-length encoding of binary masks, matching the server's wire
 * format: counts alternate background/foreground runs and always start with a
 * background run (a leading 0 when the first pixel is foreground).
 */

export interface Rle {
  size: [number, number]; // [height, width]
  counts: number[];
}

function checkCounts(rle: Rle): number {
  const [h, w] = rle.size;
  if (!Number.isInteger(h) || !Number.isInteger(w) || h < 1 || w < 1) {
    throw new Error(`invalid mask size [${rle.size}]`);
  }
  let total = 0;
  for (const c of rle.counts) {
    if (!Number.isInteger(c) || c < 0) {
      throw new Error(`run counts must be non-negative integers, got ${c}`);
    }
    total += c;
  }
  if (total !== h * w) {
    throw new Error(`run counts sum to ${total}, mask has ${h * w} pixels`);
  }
  return h * w;
}

/** Binary mask (0/1 per pixel, row-major) from its run-length form. */
export function decodeMask(rle: Rle): Uint8Array {
  const total = checkCounts(rle);
  const out = new Uint8Array(total);
  let offset = 0;
  let value = 0;
  for (const count of rle.counts) {
    if (value) out.fill(1, offset, offset + count);
    offset += count;
    value ^= 1;
  }
  return out;
}

/** Run-length form of a row-major binary mask; non-zero bytes are foreground. */
export function encodeMask(mask: Uint8Array, height: number, width: number): Rle {
  if (mask.length !== height * width) {
    throw new Error(`mask has ${mask.length} entries, size says ${height * width}`);
  }
  const counts: number[] = [];
  let value = 0; // encoding starts with a background run
  let run = 0;
  for (let i = 0; i < mask.length; i++) {
    const pixel = mask[i] ? 1 : 0;
    if (pixel === value) {
      run += 1;
    } else {
      counts.push(run);
      value = pixel;
      run = 1;
    }
  }
  counts.push(run);
  return { size: [height, width], counts };
}
