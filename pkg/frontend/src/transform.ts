/**
 * Viewport math between image pixels and screen (canvas) coordinates.
 *
 * screen = image * scale + offset. All functions are pure and return new
 * viewports, so interaction handlers can compose zoom and pan freely without
 * accumulating drift: converting a screen point to image space and back is
 * exact up to floating point.
 */

export interface Viewport {
  scale: number;
  offsetX: number;
  offsetY: number;
}

export interface Point {
  x: number;
  y: number;
}

export const MIN_SCALE = 0.25;
export const MAX_SCALE = 64;

export function imageToScreen(vp: Viewport, p: Point): Point {
  return { x: p.x * vp.scale + vp.offsetX, y: p.y * vp.scale + vp.offsetY };
}

export function screenToImage(vp: Viewport, p: Point): Point {
  return { x: (p.x - vp.offsetX) / vp.scale, y: (p.y - vp.offsetY) / vp.scale };
}

/**
 * Integer pixel under a screen point, or null outside the image bounds.
 * Pixel (row, col) owns the half-open square [col, col+1) x [row, row+1).
 */
export function imagePixelAt(
  vp: Viewport,
  p: Point,
  width: number,
  height: number,
): { row: number; col: number } | null {
  const img = screenToImage(vp, p);
  const col = Math.floor(img.x);
  const row = Math.floor(img.y);
  if (row < 0 || col < 0 || row >= height || col >= width) return null;
  return { row, col };
}

/** Rescale around a screen anchor so the image point under it stays put. */
export function zoomAt(vp: Viewport, anchor: Point, factor: number): Viewport {
  const scale = Math.min(MAX_SCALE, Math.max(MIN_SCALE, vp.scale * factor));
  const fixed = screenToImage(vp, anchor);
  return {
    scale,
    offsetX: anchor.x - fixed.x * scale,
    offsetY: anchor.y - fixed.y * scale,
  };
}

export function pan(vp: Viewport, dx: number, dy: number): Viewport {
  return { scale: vp.scale, offsetX: vp.offsetX + dx, offsetY: vp.offsetY + dy };
}

/** Largest centered contain-fit of an image inside a canvas. */
export function fitImage(
  imageWidth: number,
  imageHeight: number,
  canvasWidth: number,
  canvasHeight: number,
): Viewport {
  const scale = Math.min(canvasWidth / imageWidth, canvasHeight / imageHeight);
  return {
    scale,
    offsetX: (canvasWidth - imageWidth * scale) / 2,
    offsetY: (canvasHeight - imageHeight * scale) / 2,
  };
}
