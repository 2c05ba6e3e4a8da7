"use strict";
(() => {
  // src/api.ts
  var ApiError = class extends Error {
    constructor(status, code, message) {
      super(message);
      this.status = status;
      this.code = code;
      this.name = "ApiError";
    }
  };
  async function toApiError(response) {
    let code = "HttpError";
    let message = `${response.status} ${response.statusText}`;
    try {
      const body = await response.json();
      if (body && typeof body.error === "string") {
        code = body.error;
        message = typeof body.message === "string" ? body.message : message;
      }
    } catch {
    }
    return new ApiError(response.status, code, message);
  }
  var ApiClient = class {
    constructor(baseUrl = "") {
      this.baseUrl = baseUrl;
    }
    async getJson(path) {
      const response = await fetch(this.baseUrl + path);
      if (!response.ok) {
        throw await toApiError(response);
      }
      return await response.json();
    }
    report(filter, offset, limit) {
      const query = new URLSearchParams({
        filter,
        offset: String(offset),
        limit: String(limit)
      });
      return this.getJson(`/api/report?${query}`);
    }
    summary() {
      return this.getJson("/api/summary");
    }
    clouds() {
      return this.getJson("/api/clouds");
    }
    /** POST one verdict; resolves to the server's post-decision summary. */
    async decide(imageId, verdict, note) {
      const payload = { image_id: imageId, verdict };
      if (note !== void 0) {
        payload.note = note;
      }
      const response = await fetch(this.baseUrl + "/api/decision", {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(payload)
      });
      if (!response.ok) {
        throw await toApiError(response);
      }
      const body = await response.json();
      return body.summary;
    }
    imageUrl(imageId) {
      return `${this.baseUrl}/api/image/${encodeURIComponent(imageId)}`;
    }
  };

  // src/clouds.ts
  var MIN_FONT = 12;
  var MAX_FONT = 40;
  function fontSizeFor(weight, wmin, wmax) {
    if (wmax <= wmin) {
      return MAX_FONT;
    }
    return MIN_FONT + (weight - wmin) / (wmax - wmin) * (MAX_FONT - MIN_FONT);
  }
  var CLOUD_TITLES = {
    "annotation-frequency": "Annotation labels (flagged subset)",
    "caption-frequency": "Caption terms (flagged subset)",
    "chi-squared": "Terms overrepresented among flagged images"
  };
  function renderCloud(doc, cloud) {
    const figure = doc.createElement("figure");
    figure.className = "cloud";
    figure.dataset.kind = cloud.kind;
    const caption = doc.createElement("figcaption");
    caption.textContent = CLOUD_TITLES[cloud.kind] ?? cloud.kind;
    figure.appendChild(caption);
    const list = doc.createElement("ul");
    list.className = "cloud-terms";
    if (cloud.entries.length === 0) {
      const item = doc.createElement("li");
      item.className = "cloud-empty";
      item.textContent = "no terms";
      list.appendChild(item);
    } else {
      const weights = cloud.entries.map((e) => e.weight);
      const wmin = Math.min(...weights);
      const wmax = Math.max(...weights);
      for (const entry of cloud.entries) {
        const item = doc.createElement("li");
        const term = doc.createElement("span");
        term.className = "cloud-term";
        term.textContent = entry.term;
        term.style.fontSize = `${fontSizeFor(entry.weight, wmin, wmax).toFixed(2)}px`;
        term.title = `weight ${entry.weight}, in ${entry.image_count} image(s)`;
        item.appendChild(term);
        list.appendChild(item);
      }
    }
    figure.appendChild(list);
    return figure;
  }

  // src/grid.ts
  var VERDICT_LABELS = {
    "confirm-inappropriate": "confirmed",
    "reject-flag": "rejected",
    unsure: "unsure"
  };
  function badgeText(verdict) {
    return verdict === null ? "pending" : VERDICT_LABELS[verdict];
  }
  function setCardVerdict(card, verdict) {
    card.dataset.verdict = verdict ?? "";
    const badge = card.querySelector(".badge");
    if (badge) {
      badge.textContent = badgeText(verdict);
      badge.className = `badge badge-${verdict === null ? "pending" : VERDICT_LABELS[verdict]}`;
    }
  }
  function renderThumb(doc, item, hooks) {
    if (item.has_image) {
      const img = doc.createElement("img");
      img.className = "thumb sensitive";
      img.src = hooks.imageUrl(item.id);
      img.alt = `image ${item.id}`;
      img.loading = "lazy";
      return img;
    }
    const placeholder = doc.createElement("div");
    placeholder.className = "thumb placeholder";
    placeholder.textContent = item.captions[0] ?? "(no image, no caption)";
    return placeholder;
  }
  function renderCard(doc, item, hooks) {
    const card = doc.createElement("article");
    card.className = "card";
    card.tabIndex = 0;
    card.dataset.id = item.id;
    card.addEventListener("focus", () => hooks.onSelect(item.id));
    card.addEventListener("click", () => hooks.onSelect(item.id));
    card.appendChild(renderThumb(doc, item, hooks));
    const header = doc.createElement("div");
    header.className = "card-header";
    const name = doc.createElement("span");
    name.className = "card-id";
    name.textContent = item.id;
    const score = doc.createElement("span");
    score.className = "score";
    score.textContent = `p=${item.p.toFixed(3)}`;
    score.title = "flag probability from the scan; not recomputed here";
    const badge = doc.createElement("span");
    badge.className = "badge";
    header.append(name, score, badge);
    card.appendChild(header);
    setCardVerdict(card, item.verdict);
    if (item.labels.length > 0) {
      const labels = doc.createElement("div");
      labels.className = "labels";
      for (const label of item.labels) {
        const chip = doc.createElement("span");
        chip.className = "chip";
        chip.textContent = label;
        labels.appendChild(chip);
      }
      card.appendChild(labels);
    }
    if (item.captions.length > 0) {
      const captions = doc.createElement("ul");
      captions.className = "captions";
      for (const text of item.captions) {
        const line = doc.createElement("li");
        line.textContent = text;
        captions.appendChild(line);
      }
      card.appendChild(captions);
    }
    const actions = doc.createElement("div");
    actions.className = "actions";
    const buttons = [
      ["confirm-inappropriate", "confirm", "c"],
      ["reject-flag", "reject", "r"],
      ["unsure", "unsure", "u"]
    ];
    for (const [verdict, label, key] of buttons) {
      const button = doc.createElement("button");
      button.type = "button";
      button.dataset.verdict = verdict;
      button.textContent = label;
      button.title = `shortcut: ${key}`;
      button.addEventListener("click", (event) => {
        event.stopPropagation();
        hooks.onVerdict(item.id, verdict);
      });
      actions.appendChild(button);
    }
    card.appendChild(actions);
    return card;
  }
  function renderGrid(container, items, hooks) {
    const doc = container.ownerDocument;
    container.textContent = "";
    if (items.length === 0) {
      const done = doc.createElement("p");
      done.className = "end-of-queue";
      done.textContent = "End of queue: nothing to review under this filter.";
      container.appendChild(done);
      return;
    }
    for (const item of items) {
      container.appendChild(renderCard(doc, item, hooks));
    }
  }
  function cardFor(container, imageId) {
    for (const card of container.querySelectorAll(".card")) {
      if (card.dataset.id === imageId) {
        return card;
      }
    }
    return null;
  }

  // src/keyboard.ts
  var KEY_VERDICTS = {
    c: "confirm-inappropriate",
    r: "reject-flag",
    u: "unsure"
  };
  function isTypingTarget(target) {
    if (!(target instanceof HTMLElement)) {
      return false;
    }
    return target instanceof HTMLInputElement || target instanceof HTMLTextAreaElement || target instanceof HTMLSelectElement || target.isContentEditable;
  }
  function initKeyboard(root, handlers) {
    root.addEventListener("keydown", (event) => {
      if (event.ctrlKey || event.altKey || event.metaKey) {
        return;
      }
      if (isTypingTarget(event.target)) {
        return;
      }
      const verdict = KEY_VERDICTS[event.key];
      if (verdict !== void 0) {
        event.preventDefault();
        handlers.verdict(verdict);
        return;
      }
      switch (event.key) {
        case "j":
        case "ArrowDown":
        case "ArrowRight":
          event.preventDefault();
          handlers.move(1);
          break;
        case "k":
        case "ArrowUp":
        case "ArrowLeft":
          event.preventDefault();
          handlers.move(-1);
          break;
        case "n":
        case "PageDown":
          event.preventDefault();
          handlers.page(1);
          break;
        case "p":
        case "PageUp":
          event.preventDefault();
          handlers.page(-1);
          break;
        case "b":
          event.preventDefault();
          handlers.toggleBlur();
          break;
        default:
          break;
      }
    });
  }

  // src/optimistic.ts
  var DecisionQueue = class {
    constructor(send) {
      this.send = send;
      this.inflight = /* @__PURE__ */ new Set();
    }
    busy(imageId) {
      return this.inflight.has(imageId);
    }
    /**
     * Applies `verdict` through `apply` right away, then confirms it with the
     * server. On failure `apply(prior)` undoes the optimistic change.
     * Returns null if a decision for this item is already in flight.
     */
    async submit(imageId, verdict, prior, apply) {
      if (this.inflight.has(imageId)) {
        return null;
      }
      this.inflight.add(imageId);
      apply(verdict);
      try {
        const summary = await this.send(imageId, verdict);
        return { ok: true, summary };
      } catch (err) {
        apply(prior);
        return { ok: false, error: err instanceof Error ? err.message : String(err) };
      } finally {
        this.inflight.delete(imageId);
      }
    }
  };

  // src/types.ts
  var REPORT_FILTERS = [
    "pending",
    "confirmed",
    "rejected",
    "unsure",
    "all"
  ];

  // src/main.ts
  var PAGE_SIZE = 24;
  var SUMMARY_FIELDS = [
    "total",
    "flagged",
    "confirmed",
    "rejected",
    "unsure",
    "pending"
  ];
  var ReviewApp = class {
    constructor(root, baseUrl) {
      this.root = root;
      this.state = {
        filter: "pending",
        offset: 0,
        limit: PAGE_SIZE,
        selectedId: null,
        revealed: false
      };
      this.api = new ApiClient(baseUrl);
      this.queue = new DecisionQueue((id, verdict) => this.api.decide(id, verdict));
      this.doc = root.ownerDocument;
      this.buildSkeleton();
      initKeyboard(this.root, {
        verdict: (v) => void this.decideSelected(v),
        move: (delta) => this.move(delta),
        page: (delta) => void this.page(delta),
        toggleBlur: () => this.toggleBlur()
      });
      this.ready = Promise.all([this.refresh(), this.loadClouds()]).then(() => void 0);
    }
    // ---- layout ----
    buildSkeleton() {
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
        void this.setFilter(this.filterSelect.value);
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
    async refresh() {
      try {
        const [page, summary] = await Promise.all([
          this.api.report(this.state.filter, this.state.offset, this.state.limit),
          this.api.summary()
        ]);
        this.renderPage(page);
        this.renderSummary(summary);
        this.clearBanner();
      } catch (err) {
        this.showBanner(
          `Could not reach the review service; showing stale data (${String(
            err instanceof Error ? err.message : err
          )})`
        );
      }
    }
    async loadClouds() {
      try {
        const payload = await this.api.clouds();
        this.cloudsEl.textContent = "";
        for (const cloud of Object.values(payload.clouds)) {
          this.cloudsEl.appendChild(renderCloud(this.doc, cloud));
        }
      } catch (err) {
        this.showBanner(
          `Word clouds unavailable (${String(err instanceof Error ? err.message : err)})`
        );
      }
    }
    renderPage(page) {
      renderGrid(this.gridEl, page.items, {
        imageUrl: (id) => this.api.imageUrl(id),
        onVerdict: (id, verdict) => void this.decide(id, verdict),
        onSelect: (id) => {
          this.state.selectedId = id;
          this.markSelection();
        }
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
    renderSummary(summary) {
      for (const field of SUMMARY_FIELDS) {
        const el = this.summaryEl.querySelector(`[data-field="${field}"]`);
        if (el) {
          el.textContent = String(summary[field]);
        }
      }
      const ratioEl = this.summaryEl.querySelector('[data-field="ratio"]');
      if (ratioEl) {
        ratioEl.textContent = `${(summary.ratio * 100).toFixed(1)}%`;
      }
      const fill = this.summaryEl.querySelector(".progress-fill");
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
    async decide(imageId, verdict) {
      const card = cardFor(this.gridEl, imageId);
      const prior = card?.dataset.verdict ? card.dataset.verdict : null;
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
        if (this.state.filter !== "all") {
          await this.refresh();
        }
      } else if (!outcome.ok) {
        this.showBanner(`Decision failed, verdict restored (${outcome.error})`);
      }
      return outcome;
    }
    async decideSelected(verdict) {
      if (this.state.selectedId !== null) {
        await this.decide(this.state.selectedId, verdict);
      }
    }
    // ---- navigation ----
    async setFilter(filter) {
      this.state.filter = filter;
      this.state.offset = 0;
      this.filterSelect.value = filter;
      await this.refresh();
    }
    async page(delta) {
      const next = Math.max(0, this.state.offset + delta * this.state.limit);
      if (next === this.state.offset) {
        return;
      }
      this.state.offset = next;
      await this.refresh();
    }
    move(delta) {
      const cards = Array.from(this.gridEl.querySelectorAll(".card"));
      if (cards.length === 0) {
        return;
      }
      const current = cards.findIndex((c) => c.dataset.id === this.state.selectedId);
      const target = current === -1 ? 0 : Math.min(cards.length - 1, Math.max(0, current + delta));
      cards[target].focus();
      this.state.selectedId = cards[target].dataset.id ?? null;
      this.markSelection();
    }
    toggleBlur() {
      this.state.revealed = !this.state.revealed;
      this.gridEl.classList.toggle("reveal", this.state.revealed);
      this.blurToggle.textContent = this.state.revealed ? "blur images" : "reveal images";
    }
    markSelection() {
      for (const card of this.gridEl.querySelectorAll(".card")) {
        card.classList.toggle("selected", card.dataset.id === this.state.selectedId);
      }
    }
    // ---- banner ----
    showBanner(message) {
      this.banner.textContent = message;
      this.banner.hidden = false;
    }
    clearBanner() {
      this.banner.hidden = true;
      this.banner.textContent = "";
    }
  };
  function initApp(root, baseUrl = "") {
    return new ReviewApp(root, baseUrl);
  }
  var mount = typeof document !== "undefined" ? document.getElementById("app") : null;
  if (mount !== null) {
    initApp(mount, "");
  }
})();
