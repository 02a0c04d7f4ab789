// DOM layer: pack grid with rank badges and score bars, pick-ordered pool,
// what-if preview panel, error banner, completion screen. No card imagery,
// no client-side scoring; every number on screen came from the service.

import { ApiClient, PoolCard, RankedCard, SessionView } from "./api.js";
import { DraftSession, WhatIfPreview } from "./session.js";

const TOTAL_DECISIONS = 42;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function poolItem(card: PoolCard): HTMLElement {
  const item = el("li", "pool-card", card.name);
  item.dataset.cardId = String(card.card_id);
  return item;
}

function scoreBar(card: RankedCard, bestScore: number, worstScore: number): HTMLElement {
  const bar = el("div", "score-bar");
  const fill = el("div", "score-fill");
  const span = bestScore - worstScore;
  const fraction = span > 1e-12 ? (card.score - worstScore) / span : 1;
  fill.style.width = `${Math.round(10 + 90 * fraction)}%`;
  bar.appendChild(fill);
  return bar;
}

export class AdvisorApp {
  session: DraftSession;
  private banner: HTMLElement;
  private startForm: HTMLFormElement;
  private main: HTMLElement;
  private header: HTMLElement;
  private statusText: HTMLElement;
  private agreedBadge: HTMLElement;
  private packGrid: HTMLElement;
  private poolList: HTMLOListElement;
  private whatIfPanel: HTMLElement;
  private done: HTMLElement;

  constructor(private root: HTMLElement, api: ApiClient) {
    this.session = new DraftSession(api, {
      onView: (view, agreed) => this.renderView(view, agreed),
      onBusy: (busy) => this.setControlsEnabled(!busy),
      onError: (message, status) => this.showError(message, status),
    });

    this.banner = el("div", "banner hidden");
    this.startForm = this.buildStartForm();
    this.header = el("header", "status");
    this.statusText = el("span", "status-text");
    this.agreedBadge = el("span", "agreed hidden", "agreed with model");
    this.packGrid = el("section", "pack");
    this.poolList = el("ol", "pool") as HTMLOListElement;
    this.whatIfPanel = el("div", "whatif hidden");
    this.done = el("section", "done hidden");

    this.main = el("main", "hidden");
    this.header.append(this.statusText, this.agreedBadge);
    this.main.append(this.header, this.packGrid, this.whatIfPanel);
    const poolWrap = el("aside");
    poolWrap.append(el("h2", undefined, "Your pool"), this.poolList);
    this.main.appendChild(poolWrap);

    root.append(this.banner, this.startForm, this.main, this.done);
  }

  private buildStartForm(): HTMLFormElement {
    const form = el("form", "start-form") as HTMLFormElement;
    const players = el("input") as HTMLInputElement;
    players.name = "players";
    players.type = "number";
    players.value = "8";
    players.min = "2";
    players.max = "8";
    const seed = el("input") as HTMLInputElement;
    seed.name = "seed";
    seed.type = "number";
    seed.value = "0";
    const go = el("button", "start", "Start draft") as HTMLButtonElement;
    go.type = "submit";
    form.append(el("label", undefined, "Players "), players,
                el("label", undefined, " Seed "), seed, go);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      this.clearError();
      this.session.start(Number(players.value), Number(seed.value)).catch(() => {});
    });
    return form;
  }

  private setControlsEnabled(enabled: boolean) {
    this.root.querySelectorAll("button").forEach((b) => {
      (b as HTMLButtonElement).disabled = !enabled;
    });
  }

  private showError(message: string, status: number) {
    this.banner.textContent = status ? `Error ${status}: ${message} — try again` : message;
    this.banner.classList.remove("hidden");
    if (status === 409) {
      this.packGrid.classList.add("shake");
      setTimeout(() => this.packGrid.classList.remove("shake"), 400);
    }
  }

  private clearError() {
    this.banner.classList.add("hidden");
    this.banner.textContent = "";
  }

  private renderView(view: SessionView, agreedWithModel: boolean) {
    this.startForm.classList.add("hidden");
    this.whatIfPanel.classList.add("hidden");
    if (view.finished) {
      this.renderCompletion(view);
      return;
    }
    this.main.classList.remove("hidden");
    this.statusText.textContent =
      `Round ${view.round}, pick ${view.pick_number} — decision ${view.picks_made + 1} of ${TOTAL_DECISIONS}`;
    this.agreedBadge.classList.toggle("hidden", !agreedWithModel);

    this.packGrid.replaceChildren();
    const best = view.pack[0]?.score ?? 0;
    const worst = view.pack[view.pack.length - 1]?.score ?? 0;
    view.pack.forEach((card, index) => {
      const button = el("button", "card") as HTMLButtonElement;
      button.type = "button";
      button.dataset.cardId = String(card.card_id);
      button.append(
        el("span", "badge", String(index + 1)),
        el("span", "name", card.name),
        scoreBar(card, best, worst),
        el("span", "score", card.score.toFixed(4)),
      );
      button.addEventListener("click", () => this.openWhatIf(card.card_id));
      this.packGrid.appendChild(button);
    });

    this.poolList.replaceChildren(...view.pool.map((c) => poolItem(c)));
  }

  private openWhatIf(cardId: number) {
    this.clearError();
    this.session
      .whatIf(cardId)
      .then((preview) => this.renderWhatIf(preview))
      .catch((err) => this.showError(String(err), 0));
  }

  private renderWhatIf(preview: WhatIfPreview) {
    this.whatIfPanel.replaceChildren(
      el("h3", undefined, `If you take ${preview.selected.name}, the rest would rank:`),
    );
    const list = el("ol", "whatif-ranking");
    preview.ranking.forEach((card) => {
      list.appendChild(el("li", "whatif-card", `${card.name} (${card.score.toFixed(4)})`));
    });
    const confirm = el("button", "confirm", `Take ${preview.selected.name}`) as HTMLButtonElement;
    confirm.type = "button";
    confirm.addEventListener("click", () => {
      this.clearError();
      this.session.pick(preview.selected.card_id).catch(() => {});
    });
    const cancel = el("button", "cancel", "Cancel") as HTMLButtonElement;
    cancel.type = "button";
    cancel.addEventListener("click", () => this.whatIfPanel.classList.add("hidden"));
    this.whatIfPanel.append(list, confirm, cancel);
    this.whatIfPanel.classList.remove("hidden");
  }

  private renderCompletion(view: SessionView) {
    this.main.classList.add("hidden");
    this.done.replaceChildren(
      el("h2", undefined, `Draft complete — your ${view.pool.length}-card pool`),
    );
    const list = el("ol", "final-pool");
    view.pool.forEach((c) => list.appendChild(poolItem(c)));
    this.done.append(list);
    this.done.classList.remove("hidden");
  }
}

export function mount(root: HTMLElement, baseUrl: string): AdvisorApp {
  return new AdvisorApp(root, new ApiClient(baseUrl));
}
