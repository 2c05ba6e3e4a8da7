/**
 * Keyboard-first review: verdicts, selection movement, paging, and the blur
 * toggle all hang off single keystrokes so a curator never leaves home row.
 */

import type { Verdict } from "./types";

export const KEY_VERDICTS: Record<string, Verdict> = {
  c: "confirm-inappropriate",
  r: "reject-flag",
  u: "unsure",
};

export interface KeyboardHandlers {
  verdict(verdict: Verdict): void;
  move(delta: number): void;
  page(delta: number): void;
  toggleBlur(): void;
}

function isTypingTarget(target: EventTarget | null): boolean {
  if (!(target instanceof HTMLElement)) {
    return false;
  }
  return (
    target instanceof HTMLInputElement ||
    target instanceof HTMLTextAreaElement ||
    target instanceof HTMLSelectElement ||
    target.isContentEditable
  );
}

export function initKeyboard(root: HTMLElement, handlers: KeyboardHandlers): void {
  root.addEventListener("keydown", (event: KeyboardEvent) => {
    if (event.ctrlKey || event.altKey || event.metaKey) {
      return;
    }
    if (isTypingTarget(event.target)) {
      return;
    }
    const verdict = KEY_VERDICTS[event.key];
    if (verdict !== undefined) {
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
