/**
 * Browser entry: upload an image, click to segment, watch the mask evolve.
 *
 * Rendering is two offscreen layers (image, tinted mask) composited under a
 * single viewport transform; markers are drawn in screen space on top so
 * they stay crisp at any zoom.
 */

import { ApiClient, ApiError, type RoundPayload, type UndoPayload } from "./api.js";
import { renderOverlay } from "./overlay.js";
import { sparklinePath } from "./sparkline.js";
import {
  fitImage,
  imagePixelAt,
  imageToScreen,
  pan,
  zoomAt,
  type Viewport,
} from "./transform.js";
import { SessionViewModel } from "./viewmodel.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el as T;
};

const canvas = $<HTMLCanvasElement>("canvas");
const ctx = canvas.getContext("2d")!;
const fileInput = $<HTMLInputElement>("file");
const undoButton = $<HTMLButtonElement>("undo");
const statusLine = $<HTMLElement>("status");
const sparkline = $<HTMLElement>("sparkline");

const api = new ApiClient(location.origin.replace(/\/$/, ""));

let sessionId: string | null = null;
let vm: SessionViewModel | null = null;
let viewport: Viewport = { scale: 1, offsetX: 0, offsetY: 0 };
let imageLayer: ImageBitmap | null = null;
let maskLayer: HTMLCanvasElement | null = null;
let socket: WebSocket | null = null;

function setStatus(text: string): void {
  statusLine.textContent = text;
}

function rebuildMaskLayer(): void {
  if (!vm) return;
  const layer = document.createElement("canvas");
  layer.width = vm.width;
  layer.height = vm.height;
  const pixels = renderOverlay(vm.mask, vm.width, vm.height);
  layer.getContext("2d")!.putImageData(new ImageData(pixels, vm.width, vm.height), 0, 0);
  maskLayer = layer;
}

function draw(): void {
  ctx.setTransform(1, 0, 0, 1, 0, 0);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (!imageLayer || !vm) return;
  ctx.imageSmoothingEnabled = false;
  ctx.setTransform(viewport.scale, 0, 0, viewport.scale, viewport.offsetX, viewport.offsetY);
  ctx.drawImage(imageLayer, 0, 0);
  if (maskLayer) ctx.drawImage(maskLayer, 0, 0);
  ctx.setTransform(1, 0, 0, 1, 0, 0);
  for (const m of vm.markers()) {
    const p = imageToScreen(viewport, { x: m.col + 0.5, y: m.row + 0.5 });
    ctx.beginPath();
    ctx.arc(p.x, p.y, m.source === "human" ? 6 : 4, 0, 2 * Math.PI);
    ctx.fillStyle = m.polarity === "positive" ? "#2e7d32" : "#c62828";
    ctx.globalAlpha = m.pending ? 0.4 : 1;
    ctx.fill();
    ctx.globalAlpha = 1;
    if (m.source === "pseudo") {
      ctx.strokeStyle = "#fff";
      ctx.setLineDash([2, 2]);
      ctx.stroke();
      ctx.setLineDash([]);
    }
  }
}

function refreshSparkline(): void {
  if (!vm) return;
  sparkline.innerHTML =
    `<svg width="160" height="40" viewBox="0 0 160 40">` +
    `<path d="${sparklinePath(vm.iouHistory, 160, 40)}" fill="none" stroke="#4285f4"/></svg>`;
}

function applyRound(payload: RoundPayload): void {
  if (!vm) return;
  vm.applyRound(payload);
  rebuildMaskLayer();
  refreshSparkline();
  const iou = payload.iou === null ? "" : ` IoU ${payload.iou.toFixed(4)}`;
  setStatus(`round ${payload.round + 1}: ${payload.pseudo_clicks.length} pseudo click(s)${iou}`);
  draw();
}

function applyUndo(payload: UndoPayload): void {
  if (!vm) return;
  vm.applyUndo(payload);
  rebuildMaskLayer();
  refreshSparkline();
  setStatus(`undid to ${payload.clicks_total} click(s)`);
  draw();
}

function subscribe(id: string): void {
  socket?.close();
  socket = new WebSocket(api.eventsUrl(id));
  socket.onmessage = (event) => {
    const payload = JSON.parse(event.data as string) as RoundPayload | UndoPayload;
    // own HTTP responses already applied; events cover other tabs
    if (payload.type === "round" && vm && payload.round >= vm.clicksTotal) applyRound(payload);
    if (payload.type === "undo" && vm && payload.clicks_total < vm.clicksTotal) applyUndo(payload);
  };
}

fileInput.addEventListener("change", async () => {
  const file = fileInput.files?.[0];
  if (!file) return;
  try {
    const info = await api.createSession(file);
    sessionId = info.id;
    vm = new SessionViewModel(info.image_shape);
    imageLayer = await createImageBitmap(file);
    viewport = fitImage(imageLayer.width, imageLayer.height, canvas.width, canvas.height);
    rebuildMaskLayer();
    refreshSparkline();
    subscribe(info.id);
    setStatus(`session ${info.id.slice(0, 8)} (${info.segmenter}); click the object`);
    draw();
  } catch (err) {
    setStatus(err instanceof ApiError ? err.message : `upload failed: ${err}`);
  }
});

canvas.addEventListener("contextmenu", (e) => e.preventDefault());

let dragging = false;
let lastDrag = { x: 0, y: 0 };
let dragMoved = false;

canvas.addEventListener("mousedown", (e) => {
  if (e.button === 1 || e.shiftKey) {
    dragging = true;
    dragMoved = false;
    lastDrag = { x: e.offsetX, y: e.offsetY };
    e.preventDefault();
  }
});

canvas.addEventListener("mousemove", (e) => {
  if (!dragging) return;
  viewport = pan(viewport, e.offsetX - lastDrag.x, e.offsetY - lastDrag.y);
  lastDrag = { x: e.offsetX, y: e.offsetY };
  dragMoved = true;
  draw();
});

window.addEventListener("mouseup", () => {
  dragging = false;
});

canvas.addEventListener("wheel", (e) => {
  e.preventDefault();
  viewport = zoomAt(viewport, { x: e.offsetX, y: e.offsetY }, e.deltaY < 0 ? 1.2 : 1 / 1.2);
  draw();
});

canvas.addEventListener("mouseup", async (e) => {
  if (dragMoved || !sessionId || !vm || e.shiftKey || e.button === 1) return;
  const pixel = imagePixelAt(viewport, { x: e.offsetX, y: e.offsetY }, vm.width, vm.height);
  if (!pixel || vm.busy) return;
  const polarity = e.button === 2 ? "negative" : "positive";
  vm.beginClick(pixel.row, pixel.col, polarity);
  draw();
  try {
    applyRound(await api.postClick(sessionId, { ...pixel, polarity }));
  } catch (err) {
    vm.rollbackClick();
    draw();
    setStatus(
      err instanceof ApiError && err.status === 409
        ? "busy, try again"
        : `click failed: ${err}`,
    );
  }
});

undoButton.addEventListener("click", async () => {
  if (!sessionId || !vm || vm.busy) return;
  try {
    applyUndo(await api.undo(sessionId));
  } catch (err) {
    setStatus(err instanceof ApiError && err.status === 409 ? "nothing to undo" : `undo failed: ${err}`);
  }
});
