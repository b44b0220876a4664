import { Point, ViewTransform, screenToImage } from "./coords";

// Rectangle in image pixel coordinates, the shape the server's API expects.
export interface RectSelection {
  x: number;
  y: number;
  w: number;
  h: number;
}

export const MIN_RECT = 4;

// Drag endpoints in screen space -> integer image rect.
//
// Direction-independent (either corner may come first), snapped outward to
// whole pixels, clamped to the image. Returns null when the clamped rect
// falls below the 4x4 minimum; the caller shows a hint instead of posting.
export function dragToRect(
  a: Point,
  b: Point,
  view: ViewTransform,
  imageW: number,
  imageH: number,
): RectSelection | null {
  const p = screenToImage(a, view);
  const q = screenToImage(b, view);
  const x0 = Math.max(0, Math.floor(Math.min(p.x, q.x)));
  const y0 = Math.max(0, Math.floor(Math.min(p.y, q.y)));
  const x1 = Math.min(imageW, Math.ceil(Math.max(p.x, q.x)));
  const y1 = Math.min(imageH, Math.ceil(Math.max(p.y, q.y)));
  if (x1 - x0 < MIN_RECT || y1 - y0 < MIN_RECT) return null;
  return { x: x0, y: y0, w: x1 - x0, h: y1 - y0 };
}

export function rectsEqual(a: RectSelection | null, b: RectSelection | null): boolean {
  if (a === null || b === null) return a === b;
  return a.x === b.x && a.y === b.y && a.w === b.w && a.h === b.h;
}

// Mean RGB and max channel spread over a rect of RGBA canvas pixels, in
// display code values (0..255). This is the neutrality readout only: it is
// measured on the gamma-encoded preview so the annotator can judge "the
// channels are about equal". The server computes the actual illuminant on
// linear data.
export interface PatchStats {
  mean: [number, number, number];
  maxDeviation: number;
}

export function patchStats(
  rgba: Uint8ClampedArray,
  rowStride: number,
  rect: RectSelection,
): PatchStats {
  let r = 0;
  let g = 0;
  let b = 0;
  for (let y = rect.y; y < rect.y + rect.h; y++) {
    for (let x = rect.x; x < rect.x + rect.w; x++) {
      const i = (y * rowStride + x) * 4;
      r += rgba[i];
      g += rgba[i + 1];
      b += rgba[i + 2];
    }
  }
  const n = rect.w * rect.h;
  const mean: [number, number, number] = [r / n, g / n, b / n];
  return { mean, maxDeviation: Math.max(...mean) - Math.min(...mean) };
}
