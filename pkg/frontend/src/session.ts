// Draft-session state machine for one browser tab.
//
// Pick flow is strictly serial: while a request is in flight every further
// pick is refused, so the service always sees one mutation at a time and the
// rendered view is always a response the service actually sent.

import { ApiClient, ApiError, RankedCard, SessionView } from "./api.js";

export type WhatIfPreview = {
  selected: RankedCard;
  ranking: RankedCard[]; // remaining pack ranked under pool + selected
};

export type SessionEvents = {
  onView?: (view: SessionView, agreedWithModel: boolean) => void;
  onBusy?: (busy: boolean) => void;
  onError?: (message: string, status: number) => void;
};

export class DraftSession {
  view: SessionView | null = null;
  busy = false;
  private lastTopCard: number | null = null;

  constructor(private api: ApiClient, private events: SessionEvents = {}) {}

  private setBusy(value: boolean) {
    this.busy = value;
    this.events.onBusy?.(value);
  }

  private show(view: SessionView, pickedCard: number | null) {
    const agreed = pickedCard !== null && pickedCard === this.lastTopCard;
    this.view = view;
    this.lastTopCard = view.pack.length ? view.pack[0].card_id : null;
    this.events.onView?.(view, agreed);
  }

  async start(players: number, seed: number, humanSeat = 0): Promise<SessionView> {
    this.setBusy(true);
    try {
      const view = await this.api.newDraft(players, seed, humanSeat);
      this.show(view, null);
      return view;
    } catch (err) {
      this.fail(err);
      throw err;
    } finally {
      this.setBusy(false);
    }
  }

  /** One serial pick; refused while a previous pick is still in flight. */
  async pick(cardId: number): Promise<SessionView | null> {
    if (this.busy || !this.view || this.view.finished) return null;
    this.setBusy(true);
    try {
      const view = await this.api.pick(this.view.session_id, cardId);
      this.show(view, cardId);
      return view;
    } catch (err) {
      this.fail(err);
      throw err;
    } finally {
      this.setBusy(false);
    }
  }

  /**
   * Preview: how would the rest of the current pack rank if `cardId` joined
   * the pool? Pure read (one /rank call); committing is a separate pick().
   */
  async whatIf(cardId: number): Promise<WhatIfPreview> {
    if (!this.view) throw new Error("no live session");
    const selected = this.view.pack.find((c) => c.card_id === cardId);
    if (!selected) throw new Error(`card ${cardId} not in the current pack`);
    const pool = this.view.pool.map((c) => c.card_id).concat([cardId]);
    const remaining = this.view.pack.filter((c) => c.card_id !== cardId).map((c) => c.card_id);
    const response = await this.api.rank(pool, remaining);
    return { selected, ranking: response.ranking };
  }

  private fail(err: unknown) {
    if (err instanceof ApiError) {
      this.events.onError?.(err.detail, err.status);
    } else {
      this.events.onError?.(String(err), 0);
    }
  }
}
