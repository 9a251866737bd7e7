import { SessionApi } from "./api.js";
import type { Frame } from "./overlay.js";
import { renderOverlay } from "./overlay.js";
import { SessionController, type ViewState } from "./state.js";
import { IDENTITY, mapClickCoords, type ViewTransform } from "./transform.js";

function byId<T extends HTMLElement>(id: string): T {
  const element = document.getElementById(id);
  if (!element) {
    throw new Error(`missing element #${id}`);
  }
  return element as T;
}

function get2d(target: HTMLCanvasElement): CanvasRenderingContext2D {
  const context = target.getContext("2d");
  if (!context) {
    throw new Error("2d canvas unavailable");
  }
  return context;
}

const canvas = byId<HTMLCanvasElement>("view");
const ctx = get2d(canvas);
const fileInput = byId<HTMLInputElement>("file");
const undoButton = byId<HTMLButtonElement>("undo");
const exportButton = byId<HTMLButtonElement>("export");
const invertToggle = byId<HTMLInputElement>("invert");
const opacitySlider = byId<HTMLInputElement>("opacity");
const statusLine = byId<HTMLElement>("status");
const errorBanner = byId<HTMLElement>("error");
const readoutF1 = byId<HTMLElement>("t-f1");
const readoutF2 = byId<HTMLElement>("t-f2");
const readoutTotal = byId<HTMLElement>("t-total");

const api = new SessionApi("");
const controller = new SessionController(api, onStateChange);

let imageFrame: Frame | null = null;
let imageCanvas: HTMLCanvasElement | null = null;
let transform: ViewTransform = { ...IDENTITY };
let panning: { startX: number; startY: number; panX: number; panY: number } | null = null;

function fitTransform(width: number, height: number): ViewTransform {
  const zoom = Math.min(canvas.width / width, canvas.height / height);
  return {
    zoom,
    panX: (canvas.width - width * zoom) / 2,
    panY: (canvas.height - height * zoom) / 2,
  };
}

function redraw(state: ViewState): void {
  ctx.setTransform(1, 0, 0, 1, 0, 0);
  ctx.fillStyle = "#202124";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  if (!imageFrame || !imageCanvas) {
    return;
  }
  const composited = renderOverlay(
    imageFrame,
    state.mask,
    state.markers,
    state.overlayOpacity,
    Math.max(2, Math.round(3 / transform.zoom)),
  );
  const imageData = new ImageData(composited.pixels, composited.width, composited.height);
  const scratch = imageCanvas.getContext("2d");
  if (!scratch) {
    return;
  }
  scratch.putImageData(imageData, 0, 0);
  ctx.imageSmoothingEnabled = transform.zoom < 1;
  ctx.setTransform(transform.zoom, 0, 0, transform.zoom, transform.panX, transform.panY);
  ctx.drawImage(imageCanvas, 0, 0);
}

function onStateChange(state: ViewState): void {
  undoButton.disabled = state.busy || state.markers.length === 0;
  exportButton.disabled = state.busy || state.mask === null;
  readoutF1.textContent = state.tF1Ms ? `${state.tF1Ms.toFixed(1)} ms` : "–";
  readoutF2.textContent = state.lastTF2Ms === null ? "–" : `${state.lastTF2Ms.toFixed(1)} ms`;
  readoutTotal.textContent = state.tF1Ms ? `${state.totalMs.toFixed(1)} ms` : "–";
  errorBanner.textContent = state.lastError ?? "";
  errorBanner.hidden = state.lastError === null;
  statusLine.textContent = state.busy
    ? "predicting…"
    : state.markers.length
      ? `${state.markers.length} click(s)`
      : imageFrame
        ? "click the object to segment it"
        : "open an image to start";
  redraw(state);
}

async function openFile(file: File): Promise<void> {
  const dataUrl = await new Promise<string>((resolve, reject) => {
    const reader = new FileReader();
    reader.onload = () => resolve(reader.result as string);
    reader.onerror = () => reject(reader.error);
    reader.readAsDataURL(file);
  });
  const base64 = dataUrl.slice(dataUrl.indexOf(",") + 1);
  statusLine.textContent = "extracting features…";
  try {
    const opened = await controller.open(base64);
    const bitmap = await createImageBitmap(file);
    imageCanvas = document.createElement("canvas");
    imageCanvas.width = opened.width;
    imageCanvas.height = opened.height;
    const scratch = imageCanvas.getContext("2d");
    if (!scratch) {
      throw new Error("2d canvas unavailable");
    }
    scratch.drawImage(bitmap, 0, 0);
    const data = scratch.getImageData(0, 0, opened.width, opened.height);
    imageFrame = {
      width: opened.width,
      height: opened.height,
      pixels: new Uint8ClampedArray(data.data),
    };
    transform = fitTransform(opened.width, opened.height);
    onStateChange(controller.state);
  } catch (error) {
    errorBanner.textContent = error instanceof Error ? error.message : String(error);
    errorBanner.hidden = false;
    statusLine.textContent = "failed to open image";
  }
}

fileInput.addEventListener("change", () => {
  const file = fileInput.files?.[0];
  if (file) {
    void openFile(file);
  }
});

canvas.addEventListener("contextmenu", (event) => event.preventDefault());

canvas.addEventListener("mousedown", (event) => {
  if (event.altKey || event.button === 1) {
    panning = {
      startX: event.offsetX,
      startY: event.offsetY,
      panX: transform.panX,
      panY: transform.panY,
    };
    event.preventDefault();
    return;
  }
  if (!imageFrame || controller.id === null) {
    return;
  }
  const point = mapClickCoords(
    { x: event.offsetX, y: event.offsetY },
    transform,
    imageFrame.width,
    imageFrame.height,
  );
  if (!point) {
    return;
  }
  let polarity: "positive" | "negative" = event.button === 2 ? "negative" : "positive";
  if (invertToggle.checked) {
    polarity = polarity === "positive" ? "negative" : "positive";
  }
  void controller.requestClick(point.x, point.y, polarity);
});

canvas.addEventListener("mousemove", (event) => {
  if (panning) {
    transform = {
      zoom: transform.zoom,
      panX: panning.panX + (event.offsetX - panning.startX),
      panY: panning.panY + (event.offsetY - panning.startY),
    };
    redraw(controller.state);
  }
});

window.addEventListener("mouseup", () => {
  panning = null;
});

canvas.addEventListener("wheel", (event) => {
  if (!imageFrame) {
    return;
  }
  event.preventDefault();
  const factor = event.deltaY < 0 ? 1.2 : 1 / 1.2;
  const zoom = Math.min(32, Math.max(0.1, transform.zoom * factor));
  // Keep the pixel under the cursor fixed while zooming.
  const scale = zoom / transform.zoom;
  transform = {
    zoom,
    panX: event.offsetX - (event.offsetX - transform.panX) * scale,
    panY: event.offsetY - (event.offsetY - transform.panY) * scale,
  };
  redraw(controller.state);
});

undoButton.addEventListener("click", () => {
  void controller.undo().catch((error: unknown) => {
    errorBanner.textContent = error instanceof Error ? error.message : String(error);
    errorBanner.hidden = false;
  });
});

exportButton.addEventListener("click", () => {
  const sessionId = controller.id;
  if (sessionId === null) {
    return;
  }
  void api
    .exportPng(sessionId)
    .then((blob) => {
      const url = URL.createObjectURL(blob);
      const link = document.createElement("a");
      link.href = url;
      link.download = "mask.png";
      link.click();
      URL.revokeObjectURL(url);
    })
    .catch((error: unknown) => {
      errorBanner.textContent = error instanceof Error ? error.message : String(error);
      errorBanner.hidden = false;
    });
});

opacitySlider.addEventListener("input", () => {
  controller.setOpacity(Number(opacitySlider.value) / 100);
});

onStateChange(controller.state);
