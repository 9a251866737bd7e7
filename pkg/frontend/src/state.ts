import type { ClickResponse, OpenResponse, Polarity, UndoResponse } from "./api.js";
import { ApiError } from "./api.js";
import type { Bitmap, RlePayload } from "./rle.js";
import { decodeRle, RleError } from "./rle.js";

export interface Marker {
  x: number;
  y: number;
  polarity: Polarity;
  /** 1-based position among server-acknowledged clicks; null while pending. */
  index: number | null;
}

export interface ViewState {
  width: number;
  height: number;
  /** Last mask the server returned; null before the first click. */
  mask: Bitmap | null;
  /** Acknowledged markers first (index set), then optimistic pending ones. */
  markers: readonly Marker[];
  overlayOpacity: number;
  tF1Ms: number;
  lastTF2Ms: number | null;
  /** Client-side mirror of the two-stage total: t_f1 + sum of acknowledged t_f2. */
  totalMs: number;
  busy: boolean;
  lastError: string | null;
}

interface Transport {
  openSession(imageBase64: string): Promise<OpenResponse>;
  addClick(sessionId: string, x: number, y: number, polarity: Polarity): Promise<ClickResponse>;
  undo(sessionId: string): Promise<UndoResponse>;
  exportMask(sessionId: string): Promise<RlePayload>;
}

interface QueuedClick {
  x: number;
  y: number;
  polarity: Polarity;
  marker: Marker;
  resolve: (acknowledged: boolean) => void;
  reject: (error: unknown) => void;
}

/**
 * Session state machine.  The displayed mask is always a decoded server
 * response (the client never edits mask pixels), markers mirror the
 * server-acknowledged click history exactly, and at most one click request
 * is in flight — extra clicks queue and dispatch in order.
 */
export class SessionController {
  private sessionId: string | null = null;
  private width = 0;
  private height = 0;
  private mask: Bitmap | null = null;
  private acknowledged: Marker[] = [];
  private pending: Marker[] = [];
  private clickTimesMs: number[] = [];
  private tF1Ms = 0;
  private queue: QueuedClick[] = [];
  private inFlight = false;
  private lastError: string | null = null;
  /** Bumped on every open(); in-flight replies from older sessions are dropped. */
  private epoch = 0;
  overlayOpacity = 0.5;

  constructor(
    private readonly api: Transport,
    private readonly onChange: (state: ViewState) => void = () => {},
  ) {}

  get state(): ViewState {
    const lastTime = this.clickTimesMs.length
      ? this.clickTimesMs[this.clickTimesMs.length - 1]!
      : null;
    return {
      width: this.width,
      height: this.height,
      mask: this.mask,
      markers: [...this.acknowledged, ...this.pending],
      overlayOpacity: this.overlayOpacity,
      tF1Ms: this.tF1Ms,
      lastTF2Ms: lastTime,
      totalMs: this.tF1Ms + this.clickTimesMs.reduce((a, b) => a + b, 0),
      busy: this.inFlight || this.queue.length > 0,
      lastError: this.lastError,
    };
  }

  private emit(): void {
    this.onChange(this.state);
  }

  /** Open a fresh session; any previous session state is discarded. */
  async open(imageBase64: string): Promise<OpenResponse> {
    this.epoch += 1;
    for (const item of this.queue.splice(0)) {
      item.reject(new Error("session reset"));
    }
    this.inFlight = false;
    this.sessionId = null;
    this.mask = null;
    this.acknowledged = [];
    this.pending = [];
    this.clickTimesMs = [];
    this.tF1Ms = 0;
    this.lastError = null;
    this.emit();
    const response = await this.api.openSession(imageBase64);
    this.sessionId = response.session_id;
    this.width = response.width;
    this.height = response.height;
    this.tF1Ms = response.t_f1_ms;
    this.emit();
    return response;
  }

  /**
   * Queue a click.  The marker shows immediately (optimistic) and is rolled
   * back if the server rejects it.  Resolves true once acknowledged.
   */
  requestClick(x: number, y: number, polarity: Polarity): Promise<boolean> {
    if (this.sessionId === null) {
      return Promise.reject(new Error("no open session"));
    }
    const marker: Marker = { x, y, polarity, index: null };
    this.pending.push(marker);
    const promise = new Promise<boolean>((resolve, reject) => {
      this.queue.push({ x, y, polarity, marker, resolve, reject });
    });
    this.emit();
    void this.pump();
    return promise;
  }

  private async pump(): Promise<void> {
    if (this.inFlight) {
      return;
    }
    const item = this.queue.shift();
    if (!item || this.sessionId === null) {
      return;
    }
    this.inFlight = true;
    const epoch = this.epoch;
    try {
      const response = await this.api.addClick(this.sessionId, item.x, item.y, item.polarity);
      if (epoch !== this.epoch) {
        item.reject(new Error("session reset"));
        return;
      }
      this.pending = this.pending.filter((m) => m !== item.marker);
      item.marker.index = this.acknowledged.length + 1;
      this.acknowledged.push(item.marker);
      this.clickTimesMs.push(response.t_f2_ms);
      try {
        this.mask = decodeRle(response.mask_rle);
        this.lastError = null;
      } catch (error) {
        if (!(error instanceof RleError)) {
          throw error;
        }
        this.lastError = `protocol error: ${error.message}`;
      }
      item.resolve(true);
    } catch (error) {
      if (epoch !== this.epoch) {
        item.reject(new Error("session reset"));
        return;
      }
      this.pending = this.pending.filter((m) => m !== item.marker);
      if (error instanceof ApiError) {
        this.lastError = error.detail;
        item.resolve(false);
      } else {
        item.reject(error);
      }
    } finally {
      if (epoch === this.epoch) {
        this.inFlight = false;
        this.emit();
        if (this.queue.length > 0) {
          void this.pump();
        }
      }
    }
  }

  /** Undo the last acknowledged click; requires an idle request pipeline. */
  async undo(): Promise<boolean> {
    if (this.sessionId === null) {
      throw new Error("no open session");
    }
    if (this.inFlight || this.queue.length > 0) {
      throw new Error("cannot undo while clicks are in flight");
    }
    this.inFlight = true;
    this.emit();
    try {
      const response = await this.api.undo(this.sessionId);
      if (response.status === "noop" || response.mask_rle === undefined) {
        return false;
      }
      this.mask = decodeRle(response.mask_rle);
      this.acknowledged.pop();
      this.clickTimesMs.pop();
      this.lastError = null;
      return true;
    } finally {
      this.inFlight = false;
      this.emit();
    }
  }

  /** Fetch the server's current mask without touching local state. */
  async exportMask(): Promise<Bitmap> {
    if (this.sessionId === null) {
      throw new Error("no open session");
    }
    return decodeRle(await this.api.exportMask(this.sessionId));
  }

  get id(): string | null {
    return this.sessionId;
  }

  setOpacity(value: number): void {
    this.overlayOpacity = Math.min(1, Math.max(0, value));
    this.emit();
  }
}
