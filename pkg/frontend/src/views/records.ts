import { el, swap } from "../dom.js";
import { notice, shortHex } from "../format.js";
import { validateRecordForm } from "../validate.js";
import { ApiError } from "../api.js";
import type { IdentityInfo, StoredRecord } from "../api.js";
import type { AppContext } from "../context.js";

function field(labelText: string, input: HTMLInputElement): HTMLElement {
  const error = el("span", { class: "field-error", "data-for": input.name });
  return el("label", { class: "field" }, labelText, input, error);
}

function showFieldErrors(
  form: HTMLElement,
  errors: Partial<Record<string, string>>,
  names: string[],
): void {
  for (const name of names) {
    const slot = form.querySelector<HTMLElement>(`[data-for="${name}"]`);
    if (slot) slot.textContent = errors[name] ?? "";
  }
}

/**
 * Medical record dashboard: the patient-details form, a record lookup
 * with explicit denied/empty states, and the owner's grant controls.
 */
export function recordsView(ctx: AppContext): HTMLElement {
  const banner = el("div", { class: "banner-slot" });

  const username = el("input", { type: "text", name: "username" });
  const age = el("input", { type: "text", name: "age", inputmode: "numeric" });
  const temperature = el("input", { type: "text", name: "temperature" });
  const time = el("input", { type: "text", name: "time" });
  const patientId = el("input", { type: "text", name: "patientId", inputmode: "numeric" });
  if (ctx.session) username.value = ctx.session.displayName;

  const form = el(
    "form",
    { class: "card record-form" },
    el("h2", {}, "Patient details"),
    field("Username", username),
    field("Age", age),
    field("Temperature", temperature),
    field("Time", time),
    field("Patient-ID", patientId),
    el("button", { type: "submit" }, "Submit"),
  );
  const fieldNames = ["username", "age", "temperature", "time", "patientId"];

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const checked = validateRecordForm({
      username: username.value,
      age: age.value,
      temperature: temperature.value,
      time: time.value,
      patientId: patientId.value,
    });
    if (!checked.ok) {
      showFieldErrors(form, checked.errors, fieldNames);
      swap(banner, notice("error", "fix the highlighted fields"));
      return;
    }
    showFieldErrors(form, {}, fieldNames);
    ctx.api
      .submitRecord(checked.value)
      .then((result) => {
        swap(
          banner,
          notice(
            "ok",
            el("strong", { class: "status-text" }, result.status),
            el(
              "div",
              { class: "store-detail" },
              `block ${result.block_index}, ${result.attempts} attempts, content `,
              shortHex(result.content_address),
            ),
          ),
        );
      })
      .catch((err: unknown) => {
        if (err instanceof ApiError) {
          swap(banner, notice("error", `store failed (${err.code}): ${err.message}`));
        } else {
          swap(banner, notice("error", `store failed: ${String(err)}`));
        }
      });
  });

  // -- lookup ------------------------------------------------------------

  const lookupId = el("input", { type: "text", name: "lookupId", inputmode: "numeric" });
  const listSlot = el("div", { class: "record-list" });
  const lookupForm = el(
    "form",
    { class: "card record-lookup" },
    el("h2", {}, "Stored records"),
    el("label", { class: "field" }, "Patient-ID", lookupId),
    el("button", { type: "submit" }, "Load"),
    listSlot,
  );

  function recordRows(records: StoredRecord[]): HTMLElement {
    const table = el(
      "table",
      { class: "records-table" },
      el(
        "tr",
        {},
        el("th", {}, "Username"),
        el("th", {}, "Age"),
        el("th", {}, "Temperature"),
        el("th", {}, "Time"),
        el("th", {}, "Block"),
        el("th", {}, "Content address"),
      ),
    );
    for (const record of records) {
      table.append(
        el(
          "tr",
          { class: "record-row" },
          el("td", {}, record.username),
          el("td", {}, String(record.age)),
          el("td", {}, record.temperature),
          el("td", {}, record.time),
          el("td", {}, String(record.block_index)),
          el("td", {}, shortHex(record.content_address)),
        ),
      );
    }
    return table;
  }

  lookupForm.addEventListener("submit", (event) => {
    event.preventDefault();
    const pid = parseInt(lookupId.value.trim(), 10);
    if (!Number.isFinite(pid) || pid < 1) {
      swap(listSlot, notice("error", "enter a positive patient id"));
      return;
    }
    ctx.api
      .getRecords(pid)
      .then((records) => {
        swap(listSlot, recordRows(records));
      })
      .catch((err: unknown) => {
        if (err instanceof ApiError && err.status === 403) {
          swap(
            listSlot,
            el(
              "div",
              { class: "denied-state" },
              notice("error", `permission denied (${err.code})`),
            ),
          );
        } else if (err instanceof ApiError && err.status === 404) {
          swap(
            listSlot,
            el("div", { class: "empty-state" }, `no records for patient ${pid}`),
          );
        } else {
          swap(listSlot, notice("error", String(err)));
        }
      });
  });

  // -- access controls ---------------------------------------------------

  const grantee = el("select", { name: "grantee" });
  const scope = el("select", { name: "scope" });
  scope.append(el("option", { value: "read" }, "read"));
  scope.append(el("option", { value: "read_write" }, "read and write"));
  const expires = el("input", { type: "datetime-local", name: "expires" });
  const accessPid = el("input", { type: "text", name: "accessPid", inputmode: "numeric" });
  const accessMessage = el("div", { class: "access-message" });

  const accessCard = el(
    "div",
    { class: "card access-card" },
    el("h2", {}, "Access"),
    el("label", { class: "field" }, "Patient-ID", accessPid),
    el("label", { class: "field" }, "Grantee", grantee),
    el("label", { class: "field" }, "Scope", scope),
    el("label", { class: "field" }, "Expires (optional)", expires),
    el(
      "div",
      { class: "button-row" },
      el("button", { type: "button", name: "grant" }, "Grant"),
      el("button", { type: "button", name: "revoke" }, "Revoke"),
    ),
    accessMessage,
  );

  function fillGrantees(identities: IdentityInfo[]): void {
    swap(grantee);
    for (const ident of identities) {
      if (ctx.session && ident.identity_id === ctx.session.identityId) continue;
      grantee.append(
        el(
          "option",
          { value: ident.identity_id },
          `${ident.display_name} (${ident.role})`,
        ),
      );
    }
  }

  ctx.api
    .listIdentities()
    .then(fillGrantees)
    .catch(() => {
      swap(accessMessage, notice("error", "could not load the identity directory"));
    });

  function accessAction(action: "grant" | "revoke"): void {
    const pid = parseInt(accessPid.value.trim(), 10);
    if (!Number.isFinite(pid) || pid < 1) {
      swap(accessMessage, notice("error", "enter a positive patient id"));
      return;
    }
    if (!grantee.value) {
      swap(accessMessage, notice("error", "pick a grantee"));
      return;
    }
    const call =
      action === "grant"
        ? ctx.api.grant(
            pid,
            grantee.value,
            scope.value,
            expires.value ? new Date(expires.value).getTime() : null,
          )
        : ctx.api.revoke(pid, grantee.value);
    call
      .then((result) => {
        swap(
          accessMessage,
          notice("ok", `${action} recorded in block ${result.block_index}`),
        );
      })
      .catch((err: unknown) => {
        const text =
          err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
        swap(accessMessage, notice("error", `${action} failed: ${text}`));
      });
  }

  accessCard
    .querySelector<HTMLButtonElement>('button[name="grant"]')!
    .addEventListener("click", () => accessAction("grant"));
  accessCard
    .querySelector<HTMLButtonElement>('button[name="revoke"]')!
    .addEventListener("click", () => accessAction("revoke"));

  return el(
    "section",
    { class: "screen screen-records" },
    el("h1", {}, "Medical records"),
    banner,
    el("div", { class: "two-col" }, form, el("div", {}, lookupForm, accessCard)),
  );
}
