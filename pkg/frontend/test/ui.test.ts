import { beforeEach, describe, expect, it } from "vitest";

import { ApiError, RankedCard, SessionView } from "../src/api.js";
import { AdvisorApp } from "../src/ui.js";

function card(id: number, score: number): RankedCard {
  return { card_id: id, name: `card_${id}`, score };
}

function firstView(packSize = 15): SessionView {
  const pack = Array.from({ length: packSize }, (_, i) => card(i, 1 - i / packSize));
  return {
    session_id: "s1",
    round: 1,
    pick_number: 1,
    picks_made: 0,
    pool: [],
    pack,
    finished: false,
    checkpoint_id: "ck",
  };
}

async function settle() {
  for (let i = 0; i < 4; i++) await Promise.resolve();
}

function startDraft(root: HTMLElement) {
  (root.querySelector("form.start-form") as HTMLFormElement).dispatchEvent(
    new Event("submit", { bubbles: true, cancelable: true }),
  );
  return settle();
}

describe("AdvisorApp", () => {
  let root: HTMLElement;

  beforeEach(() => {
    document.body.innerHTML = '<div id="app"></div>';
    root = document.getElementById("app")!;
  });

  it("renders 15 cards with rank badge 1 on the top-scored card", async () => {
    const app = new AdvisorApp(root, { newDraft: async () => firstView() } as any);
    await startDraft(root);
    const cards = root.querySelectorAll(".pack .card");
    expect(cards.length).toBe(15);
    const top = cards[0];
    expect(top.querySelector(".badge")!.textContent).toBe("1");
    expect(top.querySelector(".name")!.textContent).toBe("card_0");
    expect(root.querySelector(".pool")!.children.length).toBe(0);
    void app;
  });

  it("shows a banner instead of crashing when the service is down", async () => {
    const api = {
      newDraft: async () => {
        throw new ApiError(0, "service unreachable");
      },
    } as any;
    new AdvisorApp(root, api);
    await startDraft(root);
    const banner = root.querySelector(".banner")!;
    expect(banner.classList.contains("hidden")).toBe(false);
    expect(banner.textContent).toContain("service unreachable");
  });

  it("opens a what-if preview and picks on confirm", async () => {
    const next = firstView(14);
    next.picks_made = 1;
    next.pool = [{ card_id: 0, name: "card_0" }];
    const api = {
      newDraft: async () => firstView(),
      rank: async () => ({ ranking: [card(1, 0.4)], checkpoint_id: "ck" }),
      pick: async () => next,
    } as any;
    new AdvisorApp(root, api);
    await startDraft(root);
    (root.querySelector(".pack .card") as HTMLButtonElement).click();
    await settle();
    const panel = root.querySelector(".whatif")!;
    expect(panel.classList.contains("hidden")).toBe(false);
    expect(panel.querySelectorAll(".whatif-card").length).toBe(1);
    (panel.querySelector("button.confirm") as HTMLButtonElement).click();
    await settle();
    expect(root.querySelectorAll(".pack .card").length).toBe(14);
    expect(root.querySelector(".pool")!.textContent).toContain("card_0");
    // the user took the top-ranked card, so the agreement badge shows
    expect(root.querySelector(".agreed")!.classList.contains("hidden")).toBe(false);
  });

  it("cancel hides the preview without picking", async () => {
    let picked = 0;
    const api = {
      newDraft: async () => firstView(),
      rank: async () => ({ ranking: [], checkpoint_id: "ck" }),
      pick: async () => {
        picked += 1;
        return firstView();
      },
    } as any;
    new AdvisorApp(root, api);
    await startDraft(root);
    (root.querySelector(".pack .card") as HTMLButtonElement).click();
    await settle();
    (root.querySelector(".whatif button.cancel") as HTMLButtonElement).click();
    expect(root.querySelector(".whatif")!.classList.contains("hidden")).toBe(true);
    expect(picked).toBe(0);
  });

  it("shakes the pack and offers retry on an illegal pick", async () => {
    const api = {
      newDraft: async () => firstView(),
      rank: async () => ({ ranking: [], checkpoint_id: "ck" }),
      pick: async () => {
        throw new ApiError(409, "card 0 not in your pack");
      },
    } as any;
    new AdvisorApp(root, api);
    await startDraft(root);
    (root.querySelector(".pack .card") as HTMLButtonElement).click();
    await settle();
    (root.querySelector(".whatif button.confirm") as HTMLButtonElement).click();
    await settle();
    expect(root.querySelector(".pack")!.classList.contains("shake")).toBe(true);
    const banner = root.querySelector(".banner")!;
    expect(banner.textContent).toContain("409");
    expect(banner.textContent).toContain("try again");
    // controls are re-enabled for the retry
    const anyCard = root.querySelector(".pack .card") as HTMLButtonElement;
    expect(anyCard.disabled).toBe(false);
  });

  it("disables buttons while a pick is in flight", async () => {
    let release!: (v: SessionView) => void;
    const gate = new Promise<SessionView>((r) => (release = r));
    const api = {
      newDraft: async () => firstView(),
      rank: async () => ({ ranking: [], checkpoint_id: "ck" }),
      pick: () => gate,
    } as any;
    new AdvisorApp(root, api);
    await startDraft(root);
    (root.querySelector(".pack .card") as HTMLButtonElement).click();
    await settle();
    (root.querySelector(".whatif button.confirm") as HTMLButtonElement).click();
    await settle();
    expect((root.querySelector(".pack .card") as HTMLButtonElement).disabled).toBe(true);
    release(firstView(14));
    await settle();
    expect((root.querySelector(".pack .card") as HTMLButtonElement).disabled).toBe(false);
  });

  it("renders the completion screen with the final pool", async () => {
    const finished: SessionView = {
      ...firstView(0),
      finished: true,
      picks_made: 42,
      pool: Array.from({ length: 45 }, (_, i) => ({ card_id: i, name: `card_${i}` })),
      final_pools: [],
      transcript: [],
    };
    const api = { newDraft: async () => finished } as any;
    new AdvisorApp(root, api);
    await startDraft(root);
    const done = root.querySelector(".done")!;
    expect(done.classList.contains("hidden")).toBe(false);
    expect(done.querySelectorAll(".final-pool .pool-card").length).toBe(45);
    expect(done.textContent).toContain("45-card pool");
  });
});
