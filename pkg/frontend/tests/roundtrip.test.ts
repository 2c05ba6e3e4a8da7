/**
 * End-to-end round trip against a live review service: the DOM app issues
 * real HTTP requests; only fetch is wrapped where a test needs to count
 * requests or force a failure.
 */

import { afterAll, afterEach, beforeAll, describe, expect, it } from "vitest";

import { initApp, type ReviewApp } from "../src/main";
import { startFixture, type Fixture } from "./fixture";

let fx: Fixture;
const realFetch = globalThis.fetch;

beforeAll(async () => {
  fx = await startFixture(12, 8);
});

afterAll(async () => {
  await fx.stop();
});

afterEach(() => {
  globalThis.fetch = realFetch;
  document.body.textContent = "";
});

function mount(): HTMLElement {
  const root = document.createElement("div");
  document.body.appendChild(root);
  return root;
}

function statText(app: ReviewApp, field: string): string {
  const el = app.root.querySelector<HTMLElement>(`[data-field="${field}"]`);
  if (!el) {
    throw new Error(`missing stat ${field}`);
  }
  return el.textContent ?? "";
}

function badgeOf(app: ReviewApp, imageId: string): string {
  for (const card of app.root.querySelectorAll<HTMLElement>(".card")) {
    if (card.dataset.id === imageId) {
      return card.querySelector(".badge")?.textContent ?? "";
    }
  }
  throw new Error(`no card for ${imageId}`);
}

async function waitFor(condition: () => boolean, ms = 8000): Promise<void> {
  const start = Date.now();
  while (!condition()) {
    if (Date.now() - start > ms) {
      throw new Error("condition not met in time");
    }
    await new Promise((resolve) => setTimeout(resolve, 25));
  }
}

describe("review round trip", () => {
  it("confirming three items drops the pending count by exactly three", async () => {
    let posts = 0;
    globalThis.fetch = ((input: RequestInfo | URL, init?: RequestInit) => {
      if (init?.method === "POST") {
        posts += 1;
      }
      return realFetch(input, init);
    }) as typeof fetch;

    const app = initApp(mount(), fx.url);
    await app.ready;
    expect(statText(app, "pending")).toBe("12");
    expect(statText(app, "confirmed")).toBe("0");
    expect(app.root.querySelectorAll(".card").length).toBe(12);

    // First verdict through the keyboard path: the selected card is the
    // first in server order.
    expect(app.state.selectedId).toBe(fx.flaggedIds[0]);
    app.root.dispatchEvent(new KeyboardEvent("keydown", { key: "c", bubbles: true }));
    await waitFor(() => statText(app, "pending") === "11");

    await app.decide(fx.flaggedIds[1], "confirm-inappropriate");
    await app.decide(fx.flaggedIds[2], "confirm-inappropriate");

    expect(statText(app, "pending")).toBe("9");
    expect(statText(app, "confirmed")).toBe("3");
    expect(posts).toBe(3);

    // The pending view no longer shows the confirmed items.
    const shown = Array.from(
      app.root.querySelectorAll<HTMLElement>(".card"),
      (card) => card.dataset.id,
    );
    for (const id of fx.flaggedIds.slice(0, 3)) {
      expect(shown).not.toContain(id);
    }
  });

  it("a fresh page load reproduces the server state exactly", async () => {
    const app = initApp(mount(), fx.url);
    await app.ready;
    expect(statText(app, "pending")).toBe("9");
    expect(statText(app, "confirmed")).toBe("3");

    await app.setFilter("confirmed");
    const cards = Array.from(app.root.querySelectorAll<HTMLElement>(".card"));
    expect(cards.map((c) => c.dataset.id)).toEqual(fx.flaggedIds.slice(0, 3));
    for (const card of cards) {
      expect(card.querySelector(".badge")?.textContent).toBe("confirmed");
    }
  });

  it("a failed decision restores the prior badge and keeps the item pending", async () => {
    const app = initApp(mount(), fx.url);
    await app.ready;
    const target = fx.flaggedIds[5];
    expect(badgeOf(app, target)).toBe("pending");

    globalThis.fetch = ((input: RequestInfo | URL, init?: RequestInit) => {
      if (init?.method === "POST") {
        return Promise.resolve(
          new Response(JSON.stringify({ error: "IoFailure", message: "disk full" }), {
            status: 500,
            headers: { "Content-Type": "application/json" },
          }),
        );
      }
      return realFetch(input, init);
    }) as typeof fetch;

    const outcome = await app.decide(target, "confirm-inappropriate");
    expect(outcome?.ok).toBe(false);
    expect(badgeOf(app, target)).toBe("pending");
    const banner = app.root.querySelector<HTMLElement>(".banner");
    expect(banner?.hidden).toBe(false);
    expect(banner?.textContent).toContain("verdict restored");

    // Server side is untouched.
    globalThis.fetch = realFetch;
    const response = await realFetch(`${fx.url}/api/summary`);
    const summary = await response.json();
    expect(summary.pending).toBe(9);
    expect(summary.confirmed).toBe(3);
  });

  it("keyboard movement, paging past the end, and the blur toggle", async () => {
    const app = initApp(mount(), fx.url);
    await app.ready;

    // j moves the selection forward, k back.
    const ids = Array.from(
      app.root.querySelectorAll<HTMLElement>(".card"),
      (card) => card.dataset.id,
    );
    app.root.dispatchEvent(new KeyboardEvent("keydown", { key: "j", bubbles: true }));
    expect(app.state.selectedId).toBe(ids[1]);
    app.root.dispatchEvent(new KeyboardEvent("keydown", { key: "k", bubbles: true }));
    expect(app.state.selectedId).toBe(ids[0]);

    // Paging past the last item shows the explicit end-of-queue state.
    await app.page(1);
    expect(app.root.querySelector(".end-of-queue")).not.toBeNull();
    await app.page(-1);
    expect(app.root.querySelector(".end-of-queue")).toBeNull();

    // No images are served, so cards fall back to caption placeholders and
    // review still works (metadata-only mode).
    expect(app.root.querySelectorAll(".thumb.placeholder").length).toBeGreaterThan(0);
    expect(app.root.querySelectorAll("img.thumb").length).toBe(0);

    // Blur toggle flips the grid's reveal class.
    expect(app.root.querySelector(".grid")?.classList.contains("reveal")).toBe(false);
    app.root.dispatchEvent(new KeyboardEvent("keydown", { key: "b", bubbles: true }));
    expect(app.root.querySelector(".grid")?.classList.contains("reveal")).toBe(true);
  });

  it("renders all three clouds in server order with affine sizes", async () => {
    const app = initApp(mount(), fx.url);
    await app.ready;

    const response = await realFetch(`${fx.url}/api/clouds`);
    const payload = await response.json();
    const figures = Array.from(app.root.querySelectorAll<HTMLElement>(".cloud"));
    expect(figures.map((f) => f.dataset.kind)).toEqual(Object.keys(payload.clouds));

    for (const figure of figures) {
      const kind = figure.dataset.kind as string;
      const entries = payload.clouds[kind].entries as Array<{ term: string; weight: number }>;
      const terms = Array.from(
        figure.querySelectorAll<HTMLElement>(".cloud-term"),
        (t) => t.textContent,
      );
      expect(terms).toEqual(entries.map((e) => e.term));
      if (entries.length > 1) {
        const weights = entries.map((e) => e.weight);
        const sizes = Array.from(
          figure.querySelectorAll<HTMLElement>(".cloud-term"),
          (t) => parseFloat(t.style.fontSize),
        );
        // Heavier terms never render smaller.
        for (let i = 1; i < sizes.length; i++) {
          if (weights[i - 1] > weights[i]) {
            expect(sizes[i - 1]).toBeGreaterThan(sizes[i]);
          }
        }
      }
    }
  });
});
