import { describe, expect, it } from "vitest";

import { IDENTITY, imageToViewport, mapClickCoords } from "../src/transform.js";

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

describe("mapClickCoords", () => {
  it("is the identity at zoom 1, pan 0", () => {
    expect(mapClickCoords({ x: 10, y: 10 }, IDENTITY, 64, 64)).toEqual({ x: 10, y: 10 });
  });

  it("halves coordinates at zoom 2", () => {
    const transform = { zoom: 2, panX: 0, panY: 0 };
    expect(mapClickCoords({ x: 10, y: 10 }, transform, 64, 64)).toEqual({ x: 5, y: 5 });
  });

  it("inverts the display transform within half a pixel over random transforms", () => {
    const rand = mulberry32(11);
    let checked = 0;
    for (let trial = 0; trial < 500; trial++) {
      const width = 8 + Math.floor(rand() * 120);
      const height = 8 + Math.floor(rand() * 120);
      const transform = {
        zoom: 0.1 + rand() * 31.9,
        panX: (rand() - 0.5) * 1000,
        panY: (rand() - 0.5) * 1000,
      };
      const point = {
        x: Math.floor(rand() * width),
        y: Math.floor(rand() * height),
      };
      const viewport = imageToViewport(point, transform);
      const roundTripped = mapClickCoords(viewport, transform, width, height);
      expect(roundTripped).not.toBeNull();
      expect(Math.abs(roundTripped!.x - point.x)).toBeLessThanOrEqual(0.5);
      expect(Math.abs(roundTripped!.y - point.y)).toBeLessThanOrEqual(0.5);
      checked += 1;
    }
    expect(checked).toBe(500);
  });

  it("ignores clicks outside the rendered image rect", () => {
    const transform = { zoom: 2, panX: 10, panY: 10 };
    expect(mapClickCoords({ x: 9, y: 50 }, transform, 32, 32), "left of image").toBeNull();
    expect(mapClickCoords({ x: 50, y: 9 }, transform, 32, 32), "above image").toBeNull();
    expect(mapClickCoords({ x: 74, y: 50 }, transform, 32, 32), "right of image").toBeNull();
    expect(mapClickCoords({ x: 50, y: 74 }, transform, 32, 32), "below image").toBeNull();
    expect(mapClickCoords({ x: 73.9, y: 73.9 }, transform, 32, 32)).not.toBeNull();
  });

  it("clamps edge rounding to the last pixel", () => {
    // Exact inverse 31.75 rounds to 32, which clamping pulls back in bounds.
    const transform = { zoom: 4, panX: 0, panY: 0 };
    expect(mapClickCoords({ x: 127, y: 127 }, transform, 32, 32)).toEqual({ x: 31, y: 31 });
  });

  it("rejects non-positive zoom", () => {
    expect(() => mapClickCoords({ x: 0, y: 0 }, { zoom: 0, panX: 0, panY: 0 }, 8, 8)).toThrow(
      RangeError,
    );
  });
});
