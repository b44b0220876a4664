// Screen <-> image pixel mapping for the annotation canvas.
//
// The view is a uniform zoom plus a pan: screen = image * zoom + pan.
// zoom is screen pixels per image pixel, pan is where image (0,0) lands
// on screen. All selection math happens in image coordinates; the canvas
// only ever sees the forward transform.

export interface Point {
  x: number;
  y: number;
}

export interface ViewTransform {
  zoom: number;
  panX: number;
  panY: number;
}

export const MIN_ZOOM = 0.25;
export const MAX_ZOOM = 8;

export function clampZoom(zoom: number): number {
  return Math.min(MAX_ZOOM, Math.max(MIN_ZOOM, zoom));
}

export function imageToScreen(p: Point, view: ViewTransform): Point {
  return { x: p.x * view.zoom + view.panX, y: p.y * view.zoom + view.panY };
}

export function screenToImage(p: Point, view: ViewTransform): Point {
  return { x: (p.x - view.panX) / view.zoom, y: (p.y - view.panY) / view.zoom };
}

// Rescale about a fixed screen point so the pixel under the cursor stays put.
export function zoomAround(view: ViewTransform, factor: number, at: Point): ViewTransform {
  const zoom = clampZoom(view.zoom * factor);
  const anchor = screenToImage(at, view);
  return { zoom, panX: at.x - anchor.x * zoom, panY: at.y - anchor.y * zoom };
}

export function panBy(view: ViewTransform, dx: number, dy: number): ViewTransform {
  return { zoom: view.zoom, panX: view.panX + dx, panY: view.panY + dy };
}

// Largest zoom that shows the whole image, centered.
export function fitView(
  imageW: number,
  imageH: number,
  canvasW: number,
  canvasH: number,
): ViewTransform {
  const zoom = clampZoom(Math.min(canvasW / imageW, canvasH / imageH));
  return {
    zoom,
    panX: (canvasW - imageW * zoom) / 2,
    panY: (canvasH - imageH * zoom) / 2,
  };
}
