import { el, swap } from "../dom.js";
import { formatTimestamp, notice, shortHex } from "../format.js";
import { ApiError } from "../api.js";
import type { AppointmentInfo, IdentityInfo } from "../api.js";
import type { AppContext } from "../context.js";

/**
 * Appointment booking. The provider is picked from the registered
 * directory, so an unknown provider cannot be selected at all.
 */
export function appointmentsView(ctx: AppContext): HTMLElement {
  const message = el("div", { class: "appointment-message" });
  const provider = el("select", { name: "provider" });
  const patientId = el("input", { type: "text", name: "patientId", inputmode: "numeric" });
  const slot = el("input", { type: "datetime-local", name: "slot" });
  const note = el("input", { type: "text", name: "note", placeholder: "reason for visit" });

  const knownProviders = new Map<string, string>();

  ctx.api
    .listIdentities()
    .then((identities: IdentityInfo[]) => {
      swap(provider);
      for (const ident of identities) {
        if (ident.role !== "provider") continue;
        knownProviders.set(ident.identity_id, ident.display_name);
        provider.append(el("option", { value: ident.identity_id }, ident.display_name));
      }
      if (knownProviders.size === 0) {
        swap(message, notice("info", "no providers registered yet"));
      }
    })
    .catch(() => {
      swap(message, notice("error", "could not load the provider directory"));
    });

  const listSlot = el("div", { class: "appointment-list" });

  function renderList(entries: AppointmentInfo[]): void {
    if (entries.length === 0) {
      swap(listSlot, el("div", { class: "empty-state" }, "no appointments visible to you"));
      return;
    }
    const table = el(
      "table",
      { class: "appointments-table" },
      el(
        "tr",
        {},
        el("th", {}, "Patient"),
        el("th", {}, "Provider"),
        el("th", {}, "Slot"),
        el("th", {}, "Note"),
        el("th", {}, "Block"),
      ),
    );
    for (const entry of entries) {
      table.append(
        el(
          "tr",
          { class: "appointment-row" },
          el("td", {}, String(entry.patient_id)),
          el(
            "td",
            {},
            knownProviders.get(entry.provider_id) ?? "",
            " ",
            shortHex(entry.provider_id, 6),
          ),
          el("td", {}, formatTimestamp(entry.slot_ms)),
          el("td", {}, entry.note),
          el("td", {}, String(entry.block_index)),
        ),
      );
    }
    swap(listSlot, table);
  }

  function refresh(): void {
    ctx.api
      .listAppointments()
      .then(renderList)
      .catch((err: unknown) => {
        swap(listSlot, notice("error", `could not load appointments: ${String(err)}`));
      });
  }

  const form = el(
    "form",
    { class: "card appointment-form" },
    el("h2", {}, "Book an appointment"),
    el("label", { class: "field" }, "Patient-ID", patientId),
    el("label", { class: "field" }, "Provider", provider),
    el("label", { class: "field" }, "Slot", slot),
    el("label", { class: "field" }, "Note", note),
    el("button", { type: "submit" }, "Book"),
    message,
  );

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const pid = parseInt(patientId.value.trim(), 10);
    if (!Number.isFinite(pid) || pid < 1) {
      swap(message, notice("error", "enter a positive patient id"));
      return;
    }
    if (!provider.value) {
      swap(message, notice("error", "pick a provider"));
      return;
    }
    if (!slot.value) {
      swap(message, notice("error", "pick a time slot"));
      return;
    }
    ctx.api
      .bookAppointment(pid, provider.value, new Date(slot.value).getTime(), note.value)
      .then((result) => {
        swap(message, notice("ok", `booked; recorded in block ${result.block_index}`));
        refresh();
      })
      .catch((err: unknown) => {
        const text =
          err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
        swap(message, notice("error", `booking failed: ${text}`));
      });
  });

  const refreshButton = el("button", { type: "button", name: "refresh" }, "Refresh");
  refreshButton.addEventListener("click", refresh);
  const listCard = el(
    "div",
    { class: "card appointment-list-card" },
    el("h2", {}, "Appointments"),
    refreshButton,
    listSlot,
  );

  refresh();

  return el(
    "section",
    { class: "screen screen-appointments" },
    el("h1", {}, "Appointments"),
    el("div", { class: "two-col" }, form, listCard),
  );
}
