import { el, swap } from "../dom.js";
import { formatTimestamp, notice, shortHex } from "../format.js";
import { ApiError } from "../api.js";
import type { BlockSummary, VerifyFailure } from "../api.js";
import type { AppContext } from "../context.js";

function blockRow(block: BlockSummary, failures: VerifyFailure[]): HTMLElement {
  const mine = failures.filter((f) => f.block_index === block.index);
  const status =
    mine.length === 0
      ? el("span", { class: "block-ok" }, "ok")
      : el("span", { class: "block-bad" }, mine.map((f) => f.reason).join(", "));
  return el(
    "tr",
    { class: mine.length === 0 ? "block-row" : "block-row failing" },
    el("td", {}, String(block.index)),
    el("td", {}, shortHex(block.digest)),
    el("td", {}, String(block.tx_count)),
    el("td", {}, formatTimestamp(block.timestamp_ms)),
    el("td", {}, status),
  );
}

/**
 * Chain screen: the integrity check over the persisted log, and the manual
 * mining control for deployments that do not auto-mine.
 */
export function chainView(ctx: AppContext): HTMLElement {
  const integrityResult = el("div", { class: "integrity-result" });
  const checkButton = el("button", { type: "button", name: "check" }, "Check integrity");

  checkButton.addEventListener("click", () => {
    swap(integrityResult, "checking…");
    Promise.all([ctx.api.verifyChain(), ctx.api.chainSummary()])
      .then(([report, chain]) => {
        const headline = report.ok
          ? notice("ok", "chain verifies: every block checks out")
          : notice(
              "error",
              `chain verification FAILED at block ${report.failures[0]?.block_index}`,
            );
        const table = el(
          "table",
          { class: "blocks-table" },
          el(
            "tr",
            {},
            el("th", {}, "Index"),
            el("th", {}, "Digest"),
            el("th", {}, "Txs"),
            el("th", {}, "Timestamp"),
            el("th", {}, "Status"),
          ),
        );
        for (const block of chain.blocks) {
          table.append(blockRow(block, report.failures));
        }
        swap(integrityResult, headline, table);
      })
      .catch((err: unknown) => {
        swap(integrityResult, notice("error", `integrity check failed: ${String(err)}`));
      });
  });

  const integrityCard = el(
    "div",
    { class: "card integrity-card" },
    el("h2", {}, "Integrity"),
    checkButton,
    integrityResult,
  );

  const mineResult = el("div", { class: "mine-result" });
  const mineButton = el("button", { type: "button", name: "mine" }, "Mine");

  mineButton.addEventListener("click", () => {
    swap(mineResult, "mining…");
    ctx.api
      .mine()
      .then((result) => {
        swap(
          mineResult,
          el(
            "div",
            { class: "card mined-block" },
            el("h3", {}, `Block ${result.block_index}`),
            el(
              "dl",
              {},
              el("dt", {}, "Digest"),
              el("dd", {}, shortHex(result.digest, 12)),
              el("dt", {}, "Transactions"),
              el("dd", {}, String(result.tx_count)),
              el("dt", {}, "Attempts"),
              el("dd", {}, String(result.attempts)),
            ),
          ),
        );
      })
      .catch((err: unknown) => {
        if (err instanceof ApiError && err.code === "NothingToMine") {
          swap(mineResult, notice("info", "nothing to mine: the pending pool is empty"));
        } else {
          const text =
            err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
          swap(mineResult, notice("error", `mining failed: ${text}`));
        }
      });
  });

  const miningCard = el(
    "div",
    { class: "card mining-card" },
    el("h2", {}, "Mining"),
    mineButton,
    mineResult,
  );

  return el(
    "section",
    { class: "screen screen-chain" },
    el("h1", {}, "Block chain"),
    el("div", { class: "two-col" }, integrityCard, miningCard),
  );
}
