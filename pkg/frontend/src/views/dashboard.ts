import { el, swap } from "../dom.js";
import { notice, shortHex } from "../format.js";
import type { AppContext } from "../context.js";

/** Landing screen after login: who you are plus live chain vitals. */
export function dashboardView(ctx: AppContext): HTMLElement {
  const session = ctx.session;
  const vitals = el("div", { class: "card vitals" }, "loading chain state…");

  Promise.all([ctx.api.health(), ctx.api.chainSummary()])
    .then(([health, chain]) => {
      swap(
        vitals,
        el("h2", {}, "Ledger"),
        el(
          "dl",
          {},
          el("dt", {}, "Height"),
          el("dd", {}, String(health.height)),
          el("dt", {}, "Difficulty"),
          el("dd", {}, `${health.difficulty_bits} bits`),
          el("dt", {}, "Pending transactions"),
          el("dd", {}, String(chain.pending)),
          el("dt", {}, "Tip digest"),
          el("dd", {}, shortHex(chain.tip_digest, 12)),
          el("dt", {}, "Mining mode"),
          el("dd", {}, health.auto_mine ? "automatic" : "manual"),
        ),
      );
    })
    .catch((err: unknown) => {
      swap(vitals, notice("error", `could not load chain state: ${String(err)}`));
    });

  const who = session
    ? el(
        "div",
        { class: "card whoami" },
        el("h2", {}, "Signed in"),
        el(
          "dl",
          {},
          el("dt", {}, "Name"),
          el("dd", {}, session.displayName),
          el("dt", {}, "Role"),
          el("dd", {}, session.role),
          el("dt", {}, "Identity"),
          el("dd", {}, shortHex(session.identityId, 12)),
        ),
      )
    : el("div", { class: "card whoami" }, "no session");

  return el(
    "section",
    { class: "screen screen-dashboard" },
    el("h1", {}, "Dashboard"),
    el("div", { class: "two-col" }, who, vitals),
  );
}
