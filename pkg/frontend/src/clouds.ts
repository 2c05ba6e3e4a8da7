/**
 * Word cloud rendering. Term order is taken from the server JSON as-is and
 * font sizes follow the same affine weight mapping the server uses for its
 * SVG rendering, so browser and file output agree.
 */

import type { WordCloud } from "./types";

export const MIN_FONT = 12;
export const MAX_FONT = 40;

/** Affine map from weight to px; all-equal weights get the maximum size. */
export function fontSizeFor(weight: number, wmin: number, wmax: number): number {
  if (wmax <= wmin) {
    return MAX_FONT;
  }
  return MIN_FONT + ((weight - wmin) / (wmax - wmin)) * (MAX_FONT - MIN_FONT);
}

const CLOUD_TITLES: Record<string, string> = {
  "annotation-frequency": "Annotation labels (flagged subset)",
  "caption-frequency": "Caption terms (flagged subset)",
  "chi-squared": "Terms overrepresented among flagged images",
};

export function renderCloud(doc: Document, cloud: WordCloud): HTMLElement {
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
