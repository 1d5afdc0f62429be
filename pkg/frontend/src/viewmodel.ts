/**
 * Client-side session state: the applied rounds, the current mask, and an
 * optional in-flight click. Server payloads are the only source of truth;
 * an optimistic marker is shown while a click is processing and rolled back
 * if the server rejects it (409 busy, 422 out of bounds). Undo payloads and
 * snapshots both rebuild the state, so a reload reconstructs exactly what
 * the event stream would have produced.
 */

import type { ClickDict, Polarity, RoundPayload, Snapshot, UndoPayload } from "./api.js";
import { decodeMask } from "./rle.js";

export interface Marker {
  row: number;
  col: number;
  polarity: Polarity;
  source: "human" | "pseudo";
  round: number;
  pending?: boolean;
}

export interface AppliedRound {
  round: number;
  humanClick: ClickDict;
  pseudoClicks: ClickDict[];
  iou: number | null;
}

export class SessionViewModel {
  readonly width: number;
  readonly height: number;
  private rounds: AppliedRound[] = [];
  private maskData: Uint8Array;
  private pending: Marker | null = null;

  constructor(imageShape: [number, number]) {
    [this.height, this.width] = imageShape;
    this.maskData = new Uint8Array(this.height * this.width);
  }

  get mask(): Uint8Array {
    return this.maskData;
  }

  get clicksTotal(): number {
    return this.rounds.length;
  }

  get iouHistory(): (number | null)[] {
    return this.rounds.map((r) => r.iou);
  }

  get busy(): boolean {
    return this.pending !== null;
  }

  pseudoCountForRound(round: number): number {
    const entry = this.rounds.find((r) => r.round === round);
    return entry ? entry.pseudoClicks.length : 0;
  }

  markers(): Marker[] {
    const out: Marker[] = [];
    for (const r of this.rounds) {
      const h = r.humanClick;
      out.push({ row: h.row, col: h.col, polarity: h.polarity, source: "human", round: r.round });
      for (const p of r.pseudoClicks) {
        out.push({ row: p.row, col: p.col, polarity: p.polarity, source: "pseudo", round: r.round });
      }
    }
    if (this.pending) out.push(this.pending);
    return out;
  }

  /** Show an optimistic marker while the request is in flight. */
  beginClick(row: number, col: number, polarity: Polarity): void {
    if (this.pending) throw new Error("a click is already pending");
    this.pending = { row, col, polarity, source: "human", round: this.rounds.length, pending: true };
  }

  /** Drop the optimistic marker; server state is unchanged (409/422/network). */
  rollbackClick(): void {
    this.pending = null;
  }

  applyRound(payload: RoundPayload): void {
    this.pending = null;
    this.rounds = this.rounds.filter((r) => r.round < payload.round);
    this.rounds.push({
      round: payload.round,
      humanClick: payload.human_click,
      pseudoClicks: payload.pseudo_clicks,
      iou: payload.iou,
    });
    this.maskData = this.decodeSized(payload.mask);
  }

  applyUndo(payload: UndoPayload): void {
    this.pending = null;
    this.rounds = this.rounds.slice(0, payload.clicks_total);
    this.maskData = this.decodeSized(payload.mask);
  }

  /** Rebuild everything from a GET snapshot (page reload, reconnect). */
  loadSnapshot(snapshot: Snapshot): void {
    this.pending = null;
    const byRound = new Map<number, ClickDict[]>();
    for (const p of snapshot.pseudo_clicks) {
      const bucket = byRound.get(p.index) ?? [];
      bucket.push(p);
      byRound.set(p.index, bucket);
    }
    this.rounds = snapshot.human_clicks.map((click, i) => ({
      round: click.index,
      humanClick: click,
      pseudoClicks: byRound.get(click.index) ?? [],
      iou: snapshot.iou_history[i] ?? null,
    }));
    this.maskData = this.decodeSized(snapshot.mask);
  }

  private decodeSized(rle: { size: [number, number]; counts: number[] }): Uint8Array {
    const [h, w] = rle.size;
    if (h !== this.height || w !== this.width) {
      throw new Error(`mask ${h}x${w} does not match session ${this.height}x${this.width}`);
    }
    return decodeMask(rle);
  }
}
