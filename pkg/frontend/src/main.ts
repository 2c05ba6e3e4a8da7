/**
 * Single-page review client. All authoritative state lives on the server;
 * this module only mirrors it, so a page reload always reproduces exactly
 * what the server knows.
 */

import { ApiClient } from "./api";
import { renderCloud } from "./clouds";
import { cardFor, renderGrid, setCardVerdict } from "./grid";
import { initKeyboard } from "./keyboard";
import { DecisionQueue, type DecisionOutcome } from "./optimistic";
import {
  REPORT_FILTERS,
  type ReportFilter,
  type ReportPage,
  type Summary,
  type Verdict,
} from "./types";

const PAGE_SIZE = 24;

export interface AppState {
  filter: ReportFilter;
  offset: number;
  limit: number;
  selectedId: string | null;
  revealed: boolean;
}

const SUMMARY_FIELDS = [
  "total",
  "flagged",
  "confirmed",
  "rejected",
  "unsure",
  "pending",
] as const;

export class ReviewApp {
  readonly state: AppState = {
    filter: "pending",
    offset: 0,
    limit: PAGE_SIZE,
    selectedId: null,
    revealed: false,
  };
  /** Resolves once the first load (page, summary, clouds) has rendered. */
  readonly ready: Promise<void>;

  private api: ApiClient;
  private queue: DecisionQueue;
  private doc: Document;
  private banner!: HTMLElement;
  private summaryEl!: HTMLElement;
  private gridEl!: HTMLElement;
  private cloudsEl!: HTMLElement;
  private pageInfo!: HTMLElement;
  private filterSelect!: HTMLSelectElement;
  private blurToggle!: HTMLButtonElement;

  constructor(readonly root: HTMLElement, baseUrl: string) {
    this.api = new ApiClient(baseUrl);
    this.queue = new DecisionQueue((id, verdict) => this.api.decide(id, verdict));
    this.doc = root.ownerDocument;
    this.buildSkeleton();
    initKeyboard(this.root, {
      verdict: (v) => void this.decideSelected(v),
      move: (delta) => this.move(delta),
      page: (delta) => void this.page(delta),
      toggleBlur: () => this.toggleBlur(),
    });
    this.ready = Promise.all([this.refresh(), this.loadClouds()]).then(() => undefined);
  }

  // ---- layout ----

  private buildSkeleton(): void {
    const doc = this.doc;
    this.root.textContent = "";
    this.root.tabIndex = -1;
    this.root.classList.add("review-app");

    const header = doc.createElement("header");
    const title = doc.createElement("h1");
    title.textContent = "Flag review";
    header.appendChild(title);

    this.filterSelect = doc.createElement("select");
    this.filterSelect.className = "filter";
    for (const f of REPORT_FILTERS) {
      const option = doc.createElement("option");
      option.value = f;
      option.textContent = f;
      this.filterSelect.appendChild(option);
    }
    this.filterSelect.value = this.state.filter;
    this.filterSelect.addEventListener("change", () => {
      void this.setFilter(this.filterSelect.value as ReportFilter);
    });
    header.appendChild(this.filterSelect);

    this.blurToggle = doc.createElement("button");
    this.blurToggle.type = "button";
    this.blurToggle.className = "blur-toggle";
    this.blurToggle.textContent = "reveal images";
    this.blurToggle.title = "shortcut: b";
    this.blurToggle.addEventListener("click", () => this.toggleBlur());
    header.appendChild(this.blurToggle);
    this.root.appendChild(header);

    this.banner = doc.createElement("div");
    this.banner.className = "banner";
    this.banner.hidden = true;
    this.root.appendChild(this.banner);

    this.summaryEl = doc.createElement("section");
    this.summaryEl.className = "summary";
    for (const field of SUMMARY_FIELDS) {
      const stat = doc.createElement("span");
      stat.className = "stat";
      const label = doc.createElement("label");
      label.textContent = field;
      const value = doc.createElement("strong");
      value.dataset.field = field;
      value.textContent = "-";
      stat.append(label, value);
      this.summaryEl.appendChild(stat);
    }
    const ratio = doc.createElement("span");
    ratio.className = "stat";
    const ratioLabel = doc.createElement("label");
    ratioLabel.textContent = "confirmed ratio";
    const ratioValue = doc.createElement("strong");
    ratioValue.dataset.field = "ratio";
    ratioValue.textContent = "-";
    ratio.append(ratioLabel, ratioValue);
    this.summaryEl.appendChild(ratio);

    const progress = doc.createElement("div");
    progress.className = "progress";
    const fill = doc.createElement("div");
    fill.className = "progress-fill";
    progress.appendChild(fill);
    this.summaryEl.appendChild(progress);
    this.root.appendChild(this.summaryEl);

    this.gridEl = doc.createElement("section");
    this.gridEl.className = "grid";
    this.root.appendChild(this.gridEl);

    const pager = doc.createElement("nav");
    pager.className = "pager";
    const prev = doc.createElement("button");
    prev.type = "button";
    prev.className = "prev";
    prev.textContent = "prev";
    prev.title = "shortcut: p";
    prev.addEventListener("click", () => void this.page(-1));
    const next = doc.createElement("button");
    next.type = "button";
    next.className = "next";
    next.textContent = "next";
    next.title = "shortcut: n";
    next.addEventListener("click", () => void this.page(1));
    this.pageInfo = doc.createElement("span");
    this.pageInfo.className = "page-info";
    pager.append(prev, this.pageInfo, next);
    this.root.appendChild(pager);

    this.cloudsEl = doc.createElement("section");
    this.cloudsEl.className = "clouds";
    this.root.appendChild(this.cloudsEl);
  }

  // ---- data flow ----

  /** Reloads the current page and the summary from the server. */
  async refresh(): Promise<void> {
    try {
      const [page, summary] = await Promise.all([
        this.api.report(this.state.filter, this.state.offset, this.state.limit),
        this.api.summary(),
      ]);
      this.renderPage(page);
      this.renderSummary(summary);
      this.clearBanner();
    } catch (err) {
      this.showBanner(
        `Could not reach the review service; showing stale data (${String(
          err instanceof Error ? err.message : err,
        )})`,
      );
    }
  }

  private async loadClouds(): Promise<void> {
    try {
      const payload = await this.api.clouds();
      this.cloudsEl.textContent = "";
      // Server map order is stable; render in that order.
      for (const cloud of Object.values(payload.clouds)) {
        this.cloudsEl.appendChild(renderCloud(this.doc, cloud));
      }
    } catch (err) {
      this.showBanner(
        `Word clouds unavailable (${String(err instanceof Error ? err.message : err)})`,
      );
    }
  }

  private renderPage(page: ReportPage): void {
    renderGrid(this.gridEl, page.items, {
      imageUrl: (id) => this.api.imageUrl(id),
      onVerdict: (id, verdict) => void this.decide(id, verdict),
      onSelect: (id) => {
        this.state.selectedId = id;
        this.markSelection();
      },
    });
    this.gridEl.classList.toggle("reveal", this.state.revealed);
    const first = page.total === 0 ? 0 : page.offset + 1;
    const last = Math.min(page.offset + page.items.length, page.total);
    this.pageInfo.textContent = `${first}-${last} of ${page.total} (${page.filter})`;
    const ids = page.items.map((item) => item.id);
    if (this.state.selectedId === null || !ids.includes(this.state.selectedId)) {
      this.state.selectedId = ids[0] ?? null;
    }
    this.markSelection();
  }

  private renderSummary(summary: Summary): void {
    for (const field of SUMMARY_FIELDS) {
      const el = this.summaryEl.querySelector<HTMLElement>(`[data-field="${field}"]`);
      if (el) {
        el.textContent = String(summary[field]);
      }
    }
    const ratioEl = this.summaryEl.querySelector<HTMLElement>('[data-field="ratio"]');
    if (ratioEl) {
      ratioEl.textContent = `${(summary.ratio * 100).toFixed(1)}%`;
    }
    const fill = this.summaryEl.querySelector<HTMLElement>(".progress-fill");
    if (fill) {
      const reviewed = summary.flagged - summary.pending;
      const fraction = summary.flagged > 0 ? reviewed / summary.flagged : 0;
      fill.style.width = `${(fraction * 100).toFixed(1)}%`;
      fill.title = `${reviewed} of ${summary.flagged} reviewed`;
    }
  }

  // ---- decisions ----

  /**
   * Optimistically applies a verdict to a card, posts it, and either folds
   * the acknowledged summary in or rolls the badge back. Returns null when a
   * decision for the item is already in flight.
   */
  async decide(imageId: string, verdict: Verdict): Promise<DecisionOutcome | null> {
    const card = cardFor(this.gridEl, imageId);
    const prior = card?.dataset.verdict
      ? (card.dataset.verdict as Verdict)
      : null;
    const outcome = await this.queue.submit(imageId, verdict, prior, (v) => {
      const target = cardFor(this.gridEl, imageId);
      if (target) {
        setCardVerdict(target, v);
      }
    });
    if (outcome === null) {
      return null;
    }
    if (outcome.ok && outcome.summary) {
      this.renderSummary(outcome.summary);
      this.clearBanner();
      // Under a verdict filter the item may no longer belong on this page.
      if (this.state.filter !== "all") {
        await this.refresh();
      }
    } else if (!outcome.ok) {
      this.showBanner(`Decision failed, verdict restored (${outcome.error})`);
    }
    return outcome;
  }

  private async decideSelected(verdict: Verdict): Promise<void> {
    if (this.state.selectedId !== null) {
      await this.decide(this.state.selectedId, verdict);
    }
  }

  // ---- navigation ----

  async setFilter(filter: ReportFilter): Promise<void> {
    this.state.filter = filter;
    this.state.offset = 0;
    this.filterSelect.value = filter;
    await this.refresh();
  }

  async page(delta: number): Promise<void> {
    const next = Math.max(0, this.state.offset + delta * this.state.limit);
    if (next === this.state.offset) {
      return;
    }
    // Moving forward is allowed even when it lands past the end; the empty
    // page renders the explicit end-of-queue state.
    this.state.offset = next;
    await this.refresh();
  }

  move(delta: number): void {
    const cards = Array.from(this.gridEl.querySelectorAll<HTMLElement>(".card"));
    if (cards.length === 0) {
      return;
    }
    const current = cards.findIndex((c) => c.dataset.id === this.state.selectedId);
    const target = current === -1 ? 0 : Math.min(cards.length - 1, Math.max(0, current + delta));
    cards[target].focus();
    this.state.selectedId = cards[target].dataset.id ?? null;
    this.markSelection();
  }

  toggleBlur(): void {
    this.state.revealed = !this.state.revealed;
    this.gridEl.classList.toggle("reveal", this.state.revealed);
    this.blurToggle.textContent = this.state.revealed ? "blur images" : "reveal images";
  }

  private markSelection(): void {
    for (const card of this.gridEl.querySelectorAll<HTMLElement>(".card")) {
      card.classList.toggle("selected", card.dataset.id === this.state.selectedId);
    }
  }

  // ---- banner ----

  private showBanner(message: string): void {
    this.banner.textContent = message;
    this.banner.hidden = false;
  }

  private clearBanner(): void {
    this.banner.hidden = true;
    this.banner.textContent = "";
  }
}

export function initApp(root: HTMLElement, baseUrl: string = ""): ReviewApp {
  return new ReviewApp(root, baseUrl);
}

// Boot only inside the served page; tests import initApp and drive it.
const mount = typeof document !== "undefined" ? document.getElementById("app") : null;
if (mount !== null) {
  initApp(mount, "");
}
