/** Run-length payload exchanged with the session service. */
export interface RlePayload {
  width: number;
  height: number;
  counts: number[];
}

/** Binary bitmap in row-major order, one byte per pixel (0 or 1). */
export interface Bitmap {
  width: number;
  height: number;
  data: Uint8Array;
}

export class RleError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "RleError";
  }
}

function checkDims(width: number, height: number): void {
  if (!Number.isInteger(width) || !Number.isInteger(height) || width <= 0 || height <= 0) {
    throw new RleError(`bad dimensions ${width}x${height}`);
  }
}

/**
 * Encode a bitmap as alternating run lengths, starting with a background
 * run (which is 0 when the first pixel is foreground).
 */
export function encodeRle(bitmap: Bitmap): RlePayload {
  const { width, height, data } = bitmap;
  checkDims(width, height);
  if (data.length !== width * height) {
    throw new RleError(`bitmap has ${data.length} pixels, expected ${width * height}`);
  }
  const counts: number[] = [];
  let current = 0;
  let run = 0;
  for (let i = 0; i < data.length; i++) {
    const value = data[i]! ? 1 : 0;
    if (value === current) {
      run += 1;
    } else {
      counts.push(run);
      current = value;
      run = 1;
    }
  }
  counts.push(run);
  return { width, height, counts };
}

/** Exact inverse of the server encoding; rejects malformed payloads. */
export function decodeRle(payload: RlePayload): Bitmap {
  const { width, height, counts } = payload;
  checkDims(width, height);
  if (!Array.isArray(counts)) {
    throw new RleError("counts must be an array");
  }
  let total = 0;
  for (const count of counts) {
    if (!Number.isInteger(count) || count < 0) {
      throw new RleError(`bad run length ${count}`);
    }
    total += count;
  }
  if (total !== width * height) {
    throw new RleError(`run lengths sum to ${total}, expected ${width * height}`);
  }
  const data = new Uint8Array(width * height);
  let offset = 0;
  let value = 0;
  for (const count of counts) {
    if (value === 1) {
      data.fill(1, offset, offset + count);
    }
    offset += count;
    value = 1 - value;
  }
  return { width, height, data };
}
