import { el, swap } from "../dom.js";
import { notice, shortHex } from "../format.js";
import { ApiError } from "../api.js";
import type { AuditEntry } from "../api.js";
import type { AppContext } from "../context.js";

/** Per-patient audit trail: anchors, grants, revokes and appointments in
 * block order, exactly as the chain recorded them. */
export function auditView(ctx: AppContext): HTMLElement {
  const patientId = el("input", { type: "text", name: "patientId", inputmode: "numeric" });
  const result = el("div", { class: "audit-result" });

  function renderEntries(entries: AuditEntry[]): void {
    if (entries.length === 0) {
      swap(result, el("div", { class: "empty-state" }, "no activity for this patient"));
      return;
    }
    const table = el(
      "table",
      { class: "audit-table" },
      el(
        "tr",
        {},
        el("th", {}, "Block"),
        el("th", {}, "Kind"),
        el("th", {}, "Detail"),
        el("th", {}, "Transaction"),
      ),
    );
    for (const entry of entries) {
      table.append(
        el(
          "tr",
          { class: "audit-row" },
          el("td", {}, `${entry.block_index}.${entry.tx_index}`),
          el("td", {}, entry.kind),
          el("td", {}, entry.detail),
          el("td", {}, shortHex(entry.tx_id)),
        ),
      );
    }
    swap(result, table);
  }

  const form = el(
    "form",
    { class: "card audit-form" },
    el("h2", {}, "Audit trail"),
    el("label", { class: "field" }, "Patient-ID", patientId),
    el("button", { type: "submit" }, "Load"),
    result,
  );

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const pid = parseInt(patientId.value.trim(), 10);
    if (!Number.isFinite(pid) || pid < 1) {
      swap(result, notice("error", "enter a positive patient id"));
      return;
    }
    ctx.api
      .audit(pid)
      .then(renderEntries)
      .catch((err: unknown) => {
        if (err instanceof ApiError && err.status === 403) {
          swap(
            result,
            el("div", { class: "denied-state" }, notice("error", `permission denied (${err.code})`)),
          );
        } else {
          swap(result, notice("error", String(err)));
        }
      });
  });

  return el(
    "section",
    { class: "screen screen-audit" },
    el("h1", {}, "Audit"),
    form,
  );
}
