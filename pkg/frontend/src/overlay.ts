import type { Bitmap } from "./rle.js";
import type { Marker } from "./state.js";

/** RGBA frame backed by a flat byte buffer, row-major, 4 bytes per pixel. */
export interface Frame {
  width: number;
  height: number;
  /** Length = width * height * 4. */
  pixels: Uint8ClampedArray<ArrayBuffer>;
}

export const MASK_TINT: readonly [number, number, number] = [66, 133, 244];
export const POSITIVE_COLOR: readonly [number, number, number] = [0, 200, 83];
export const NEGATIVE_COLOR: readonly [number, number, number] = [229, 57, 53];

/** Blend the mask tint over foreground pixels only; alpha = opacity. */
export function tintMask(frame: Frame, mask: Bitmap | null, opacity: number): void {
  if (mask === null || opacity <= 0) {
    return;
  }
  if (mask.width !== frame.width || mask.height !== frame.height) {
    throw new Error(
      `mask ${mask.width}x${mask.height} does not match frame ${frame.width}x${frame.height}`,
    );
  }
  const a = Math.min(1, opacity);
  const { pixels } = frame;
  for (let i = 0; i < mask.data.length; i++) {
    if (!mask.data[i]) {
      continue;
    }
    const base = i * 4;
    pixels[base] = pixels[base]! * (1 - a) + MASK_TINT[0] * a;
    pixels[base + 1] = pixels[base + 1]! * (1 - a) + MASK_TINT[1] * a;
    pixels[base + 2] = pixels[base + 2]! * (1 - a) + MASK_TINT[2] * a;
  }
}

/** Stamp a filled disk; pending markers blend at half strength. */
function drawDisk(
  frame: Frame,
  cx: number,
  cy: number,
  radius: number,
  color: readonly [number, number, number],
  alpha: number,
): void {
  const { width, height, pixels } = frame;
  const r2 = radius * radius;
  const top = Math.max(0, cy - radius);
  const bottom = Math.min(height - 1, cy + radius);
  const left = Math.max(0, cx - radius);
  const right = Math.min(width - 1, cx + radius);
  for (let y = top; y <= bottom; y++) {
    for (let x = left; x <= right; x++) {
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) > r2) {
        continue;
      }
      const base = (y * width + x) * 4;
      pixels[base] = pixels[base]! * (1 - alpha) + color[0] * alpha;
      pixels[base + 1] = pixels[base + 1]! * (1 - alpha) + color[1] * alpha;
      pixels[base + 2] = pixels[base + 2]! * (1 - alpha) + color[2] * alpha;
    }
  }
}

/** Draw click markers last: positive green, negative red. */
export function drawMarkers(frame: Frame, markers: readonly Marker[], radius = 3): void {
  for (const marker of markers) {
    const color = marker.polarity === "positive" ? POSITIVE_COLOR : NEGATIVE_COLOR;
    const alpha = marker.index === null ? 0.5 : 1.0;
    drawDisk(frame, marker.x, marker.y, radius, color, alpha);
  }
}

/** Full composite: copy the image, tint mask foreground, draw markers on top. */
export function renderOverlay(
  image: Frame,
  mask: Bitmap | null,
  markers: readonly Marker[],
  opacity: number,
  markerRadius = 3,
): Frame {
  const out: Frame = {
    width: image.width,
    height: image.height,
    pixels: new Uint8ClampedArray(image.pixels),
  };
  tintMask(out, mask, opacity);
  drawMarkers(out, markers, markerRadius);
  return out;
}
