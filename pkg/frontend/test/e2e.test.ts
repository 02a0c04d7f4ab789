// Scripted browser run of a complete human draft against the live service:
// 42 picks through the real DOM, every rendered ranking cross-checked against
// a direct /rank call for the same (pool, pack), ending on the 45-card pool
// view. The service is spawned by global-setup.

import { describe, expect, inject, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { AdvisorApp } from "../src/ui.js";

const TOTAL_PICKS = 42;

async function until(cond: () => boolean, what: string, ms = 20_000) {
  const deadline = Date.now() + ms;
  while (Date.now() < deadline) {
    if (cond()) return;
    await new Promise((r) => setTimeout(r, 10));
  }
  throw new Error(`timed out waiting for ${what}`);
}

describe("live draft end to end", () => {
  it("completes a 42-pick draft with every ranking traceable to /rank", async () => {
    const base = inject("serviceUrl");
    const api = new ApiClient(base);
    expect((await api.health()).model_loaded).toBe(true);

    document.body.innerHTML = '<div id="app"></div>';
    const root = document.getElementById("app")!;
    new AdvisorApp(root, api);

    (root.querySelector('input[name="players"]') as HTMLInputElement).value = "2";
    (root.querySelector('input[name="seed"]') as HTMLInputElement).value = "11";
    (root.querySelector("form.start-form") as HTMLFormElement).dispatchEvent(
      new Event("submit", { bubbles: true, cancelable: true }),
    );
    await until(() => root.querySelectorAll(".pack .card").length === 15, "initial pack");

    let lastPicked: number | null = null;
    for (let pick = 0; pick < TOTAL_PICKS; pick++) {
      const cards = Array.from(root.querySelectorAll(".pack .card")) as HTMLButtonElement[];
      const shownIds = cards.map((c) => Number(c.dataset.cardId));
      const shownScores = cards.map((c) =>
        Number(c.querySelector(".score")!.textContent),
      );
      expect(shownIds.length).toBe(15 - (pick % 14));

      // the rendered pool is the context: picks in order plus the card the
      // game added automatically at each round's end
      const pool = Array.from(root.querySelectorAll(".pool .pool-card")).map(
        (li) => Number((li as HTMLElement).dataset.cardId),
      );
      const autoAdds = Math.floor(pick / 14);
      expect(pool.length).toBe(pick + autoAdds);
      if (lastPicked !== null) expect(pool).toContain(lastPicked);

      // independent oracle: ask the service directly for the same pool/pack
      // (id-sorted input also proves the displayed order comes from scores)
      const direct = await api.rank(pool, [...shownIds].sort((a, b) => a - b));
      expect(shownIds).toEqual(direct.ranking.map((c) => c.card_id));
      direct.ranking.forEach((card, i) => {
        expect(Math.abs(shownScores[i] - card.score)).toBeLessThan(1e-4);
      });

      // open the what-if preview for the top card and cross-check it too
      cards[0].click();
      await until(
        () => !root.querySelector(".whatif")!.classList.contains("hidden"),
        `what-if panel (pick ${pick + 1})`,
      );
      if (pick < 3) {
        const previewNames = Array.from(
          root.querySelectorAll(".whatif .whatif-card"),
        ).map((li) => li.textContent!.replace(/ \(.*\)$/, ""));
        const hypothetical = await api.rank(
          pool.concat([shownIds[0]]),
          shownIds.slice(1),
        );
        expect(previewNames).toEqual(hypothetical.ranking.map((c) => c.name));
      }

      (root.querySelector(".whatif button.confirm") as HTMLButtonElement).click();
      lastPicked = shownIds[0];
      const decisionsMade = pick + 1;
      await until(
        () =>
          root.textContent!.includes(`decision ${decisionsMade + 1} of 42`) ||
          !root.querySelector(".done")!.classList.contains("hidden"),
        `view after pick ${decisionsMade}`,
      );
    }

    const done = root.querySelector(".done")!;
    expect(done.classList.contains("hidden")).toBe(false);
    expect(done.querySelectorAll(".final-pool .pool-card").length).toBe(45);
  });
});
