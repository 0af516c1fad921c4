/** Pan/zoom view transform between patch-image pixels and canvas pixels.
 *
 * canvas = (image - origin) * zoom. Zooming about a canvas point keeps the
 * image point under that canvas point fixed; round trips are exact up to
 * floating arithmetic (and bit-exact at integer zoom with integer origins).
 */

export interface ViewTransform {
  originRow: number;
  originCol: number;
  zoom: number;
}

export function identityView(): ViewTransform {
  return { originRow: 0, originCol: 0, zoom: 1 };
}

export function imageToCanvas(
  v: ViewTransform,
  row: number,
  col: number,
): { x: number; y: number } {
  return { x: (col - v.originCol) * v.zoom, y: (row - v.originRow) * v.zoom };
}

export function canvasToImage(
  v: ViewTransform,
  x: number,
  y: number,
): { row: number; col: number } {
  return { row: y / v.zoom + v.originRow, col: x / v.zoom + v.originCol };
}

/** New transform after zooming by `factor` about the canvas point (x, y). */
export function zoomAbout(
  v: ViewTransform,
  factor: number,
  x: number,
  y: number,
): ViewTransform {
  const anchor = canvasToImage(v, x, y);
  const zoom = clampZoom(v.zoom * factor);
  return {
    zoom,
    originRow: anchor.row - y / zoom,
    originCol: anchor.col - x / zoom,
  };
}

/** New transform after dragging the canvas by (dx, dy) pixels. */
export function pan(v: ViewTransform, dx: number, dy: number): ViewTransform {
  return {
    zoom: v.zoom,
    originRow: v.originRow - dy / v.zoom,
    originCol: v.originCol - dx / v.zoom,
  };
}

export function clampZoom(zoom: number): number {
  return Math.min(64, Math.max(1 / 16, zoom));
}

/** Fit a size x size patch into a square canvas at integer zoom when able. */
export function fitPatch(patchSize: number, canvasSize: number): ViewTransform {
  const raw = canvasSize / patchSize;
  const zoom = raw >= 1 ? Math.floor(raw) : raw;
  return { originRow: 0, originCol: 0, zoom: clampZoom(zoom) };
}
