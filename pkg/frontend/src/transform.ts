/** Pan/zoom display transform: viewport = image * zoom + pan. */
export interface ViewTransform {
  zoom: number;
  panX: number;
  panY: number;
}

export const IDENTITY: ViewTransform = { zoom: 1, panX: 0, panY: 0 };

export interface Point {
  x: number;
  y: number;
}

/** Image-space point to viewport coordinates (exact, no rounding). */
export function imageToViewport(point: Point, transform: ViewTransform): Point {
  return {
    x: point.x * transform.zoom + transform.panX,
    y: point.y * transform.zoom + transform.panY,
  };
}

/**
 * Viewport click to integer image coordinates: exact inverse of the display
 * transform, rounded to the nearest pixel and clamped to image bounds.
 * Clicks landing outside the rendered image rect return null.
 */
export function mapClickCoords(
  viewport: Point,
  transform: ViewTransform,
  imageWidth: number,
  imageHeight: number,
): Point | null {
  if (transform.zoom <= 0) {
    throw new RangeError(`zoom must be positive, got ${transform.zoom}`);
  }
  const exactX = (viewport.x - transform.panX) / transform.zoom;
  const exactY = (viewport.y - transform.panY) / transform.zoom;
  if (exactX < 0 || exactX >= imageWidth || exactY < 0 || exactY >= imageHeight) {
    return null;
  }
  return {
    x: Math.min(imageWidth - 1, Math.max(0, Math.round(exactX))),
    y: Math.min(imageHeight - 1, Math.max(0, Math.round(exactY))),
  };
}
