import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { decodeRle, encodeRle, RleError, type Bitmap } from "../src/rle.js";

interface FixtureCase {
  width: number;
  height: number;
  counts: number[];
  bits: string;
}

const fixturePath = fileURLToPath(new URL("./fixtures/rle_cases.json", import.meta.url));
const fixtureCases = JSON.parse(readFileSync(fixturePath, "utf-8")) as FixtureCase[];

function bitmapFromBits(width: number, height: number, bits: string): Bitmap {
  const data = new Uint8Array(width * height);
  for (let i = 0; i < bits.length; i++) {
    data[i] = bits[i] === "1" ? 1 : 0;
  }
  return { width, height, data };
}

/** Deterministic PRNG so the browser-side property test is reproducible. */
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

describe("rle codec against the service implementation", () => {
  it("decodes all server-encoded fixtures and re-encodes them identically (1000 bitmaps)", () => {
    expect(fixtureCases.length).toBe(1000);
    for (const fixture of fixtureCases) {
      const expected = bitmapFromBits(fixture.width, fixture.height, fixture.bits);
      const decoded = decodeRle({
        width: fixture.width,
        height: fixture.height,
        counts: fixture.counts,
      });
      expect(decoded.width).toBe(fixture.width);
      expect(decoded.height).toBe(fixture.height);
      expect(Buffer.from(decoded.data).equals(Buffer.from(expected.data))).toBe(true);
      const encoded = encodeRle(expected);
      expect(encoded.counts).toEqual(fixture.counts);
    }
  });
});

describe("rle codec properties", () => {
  it("round-trips random bitmaps", () => {
    const rand = mulberry32(7);
    for (let trial = 0; trial < 1000; trial++) {
      const width = 1 + Math.floor(rand() * 24);
      const height = 1 + Math.floor(rand() * 24);
      const density = rand();
      const data = new Uint8Array(width * height);
      for (let i = 0; i < data.length; i++) {
        data[i] = rand() < density ? 1 : 0;
      }
      const bitmap: Bitmap = { width, height, data };
      const decoded = decodeRle(encodeRle(bitmap));
      expect(Buffer.from(decoded.data).equals(Buffer.from(data))).toBe(true);
    }
  });

  it("encodes an all-background bitmap as a single run", () => {
    const bitmap: Bitmap = { width: 3, height: 2, data: new Uint8Array(6) };
    expect(encodeRle(bitmap).counts).toEqual([6]);
    const decoded = decodeRle({ width: 3, height: 2, counts: [6] });
    expect(Array.from(decoded.data)).toEqual([0, 0, 0, 0, 0, 0]);
  });

  it("starts with a zero-length run when pixel (0,0) is foreground", () => {
    const bitmap: Bitmap = { width: 2, height: 1, data: Uint8Array.from([1, 0]) };
    expect(encodeRle(bitmap).counts).toEqual([0, 1, 1]);
  });
});

describe("rle validation", () => {
  it("rejects run lengths that do not sum to width*height", () => {
    expect(() => decodeRle({ width: 2, height: 2, counts: [1, 2] })).toThrow(RleError);
  });

  it("rejects negative and fractional runs", () => {
    expect(() => decodeRle({ width: 2, height: 1, counts: [-1, 3] })).toThrow(RleError);
    expect(() => decodeRle({ width: 2, height: 1, counts: [0.5, 1.5] })).toThrow(RleError);
  });

  it("rejects bad dimensions", () => {
    expect(() => decodeRle({ width: 0, height: 4, counts: [] })).toThrow(RleError);
    expect(() => decodeRle({ width: 2.5, height: 4, counts: [10] })).toThrow(RleError);
  });

  it("rejects bitmaps whose buffer does not match the declared size", () => {
    expect(() => encodeRle({ width: 3, height: 3, data: new Uint8Array(8) })).toThrow(RleError);
  });
});
