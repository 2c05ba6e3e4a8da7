/**
 * Review queue grid. Cards render in exactly the order the server returned;
 * the only client-side state a card holds is its current verdict badge.
 */

import type { ReviewItemView, Verdict } from "./types";

export const VERDICT_LABELS: Record<Verdict, string> = {
  "confirm-inappropriate": "confirmed",
  "reject-flag": "rejected",
  unsure: "unsure",
};

export interface GridHooks {
  imageUrl(imageId: string): string;
  onVerdict(imageId: string, verdict: Verdict): void;
  onSelect(imageId: string): void;
}

function badgeText(verdict: Verdict | null): string {
  return verdict === null ? "pending" : VERDICT_LABELS[verdict];
}

/** Flips a card's verdict badge; null means back to pending. */
export function setCardVerdict(card: HTMLElement, verdict: Verdict | null): void {
  card.dataset.verdict = verdict ?? "";
  const badge = card.querySelector<HTMLElement>(".badge");
  if (badge) {
    badge.textContent = badgeText(verdict);
    badge.className = `badge badge-${verdict === null ? "pending" : VERDICT_LABELS[verdict]}`;
  }
}

function renderThumb(doc: Document, item: ReviewItemView, hooks: GridHooks): HTMLElement {
  if (item.has_image) {
    const img = doc.createElement("img");
    // Blurred until hovered or focused; the CSS honours the grid's
    // reveal toggle. Curators opt in to seeing flagged content.
    img.className = "thumb sensitive";
    img.src = hooks.imageUrl(item.id);
    img.alt = `image ${item.id}`;
    img.loading = "lazy";
    return img;
  }
  // Metadata-only mode: no image bytes served, review happens on text.
  const placeholder = doc.createElement("div");
  placeholder.className = "thumb placeholder";
  placeholder.textContent = item.captions[0] ?? "(no image, no caption)";
  return placeholder;
}

function renderCard(doc: Document, item: ReviewItemView, hooks: GridHooks): HTMLElement {
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
  const buttons: Array<[Verdict, string, string]> = [
    ["confirm-inappropriate", "confirm", "c"],
    ["reject-flag", "reject", "r"],
    ["unsure", "unsure", "u"],
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

/**
 * Replaces the grid's contents with one card per item (server order); an
 * empty page renders the explicit end-of-queue state instead.
 */
export function renderGrid(
  container: HTMLElement,
  items: ReviewItemView[],
  hooks: GridHooks,
): void {
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

export function cardFor(container: HTMLElement, imageId: string): HTMLElement | null {
  // Ids are arbitrary strings, so match on the dataset rather than building
  // a selector that would need escaping.
  for (const card of container.querySelectorAll<HTMLElement>(".card")) {
    if (card.dataset.id === imageId) {
      return card;
    }
  }
  return null;
}
