/**
 * Thin typed client for the annotation server's HTTP endpoints. The fetch
 * implementation is injectable so tests can stub the transport.
 */

import type { Rle } from "./rle.js";

export type Polarity = "positive" | "negative";

export interface ClickDict {
  row: number;
  col: number;
  polarity: Polarity;
  source: "human" | "pseudo";
  index: number;
}

export interface SessionInfo {
  id: string;
  config: Record<string, unknown>;
  image_shape: [number, number];
  segmenter: string;
  has_gt: boolean;
}

export interface RoundPayload {
  type: "round";
  round: number;
  clicks_total: number;
  mask: Rle;
  pseudo_clicks: ClickDict[];
  human_click: ClickDict;
  iou_initial: number | null;
  iou: number | null;
  prob_png?: string;
}

export interface UndoPayload {
  type: "undo";
  round: number;
  clicks_total: number;
  mask: Rle;
  iou: number | null;
}

export interface Snapshot {
  id: string;
  created_at: number;
  config: Record<string, unknown>;
  segmenter: string;
  image_shape: [number, number];
  round: number;
  clicks_total: number;
  human_clicks: ClickDict[];
  pseudo_clicks: ClickDict[];
  mask: Rle;
  iou_history: (number | null)[];
  iou: number | null;
  has_gt: boolean;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function parseOrThrow<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = (await resp.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // non-JSON error body, keep the status text
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

export interface CreateSessionOptions {
  gt?: Blob;
  config?: Record<string, unknown>;
  segmenter?: string;
}

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async createSession(image: Blob, opts: CreateSessionOptions = {}): Promise<SessionInfo> {
    const form = new FormData();
    form.append("image", image, "image.png");
    if (opts.gt) form.append("gt", opts.gt, "gt.png");
    if (opts.config) form.append("config", JSON.stringify(opts.config));
    if (opts.segmenter) form.append("segmenter", opts.segmenter);
    const resp = await this.fetchImpl(`${this.baseUrl}/sessions`, {
      method: "POST",
      body: form,
    });
    return parseOrThrow<SessionInfo>(resp);
  }

  async postClick(
    sessionId: string,
    click: { row: number; col: number; polarity: Polarity; include_prob?: boolean },
  ): Promise<RoundPayload> {
    const resp = await this.fetchImpl(`${this.baseUrl}/sessions/${sessionId}/clicks`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(click),
    });
    return parseOrThrow<RoundPayload>(resp);
  }

  async undo(sessionId: string): Promise<UndoPayload> {
    const resp = await this.fetchImpl(`${this.baseUrl}/sessions/${sessionId}/undo`, {
      method: "POST",
    });
    return parseOrThrow<UndoPayload>(resp);
  }

  async getSnapshot(sessionId: string): Promise<Snapshot> {
    const resp = await this.fetchImpl(`${this.baseUrl}/sessions/${sessionId}`);
    return parseOrThrow<Snapshot>(resp);
  }

  maskPngUrl(sessionId: string): string {
    return `${this.baseUrl}/sessions/${sessionId}/mask.png`;
  }

  /** ws:// or wss:// URL of the session's event stream. */
  eventsUrl(sessionId: string): string {
    const ws = this.baseUrl.replace(/^http/, "ws");
    return `${ws}/sessions/${sessionId}/events`;
  }
}
