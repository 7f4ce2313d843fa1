import { el } from "./dom.js";

/**
 * Render a long hex string as a shortened span. The full value is always
 * kept in the title attribute, so nothing is truncated without a way to
 * read the whole thing.
 */
export function shortHex(hex: string, keep = 8): HTMLElement {
  const text =
    hex.length > keep * 2 + 1 ? `${hex.slice(0, keep)}…${hex.slice(-keep)}` : hex;
  const span = el("span", { class: "hex", title: hex }, text);
  return span;
}

export function formatTimestamp(ms: number): string {
  return new Date(ms).toISOString().replace("T", " ").replace(/\.\d+Z$/, "Z");
}

export type NoticeKind = "ok" | "error" | "info";

export function notice(kind: NoticeKind, ...children: (Node | string)[]): HTMLElement {
  return el("div", { class: `notice notice-${kind}`, role: "status" }, ...children);
}
