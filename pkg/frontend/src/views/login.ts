import { el, swap } from "../dom.js";
import { notice } from "../format.js";
import { parseKeyfile, signChallenge } from "../crypto.js";
import { rememberSeed, saveSession, storedSeed } from "../session.js";
import { ApiError } from "../api.js";
import type { AppContext } from "../context.js";

/**
 * Login screen. Sign-in needs a username plus a key: either a keypair file
 * (as written by the key generator) or a seed remembered from an earlier
 * registration in this browser session. Registration returns the seed once
 * and the console keeps it for the dev-mode shortcut.
 */
export function loginView(ctx: AppContext): HTMLElement {
  const message = el("div", { class: "login-message" });

  const username = el("input", {
    type: "text",
    name: "username",
    placeholder: "username",
    autocomplete: "username",
  });
  const keyfile = el("input", { type: "file", name: "keyfile" });
  const loginForm = el(
    "form",
    { class: "card login-form" },
    el("h2", {}, "Sign in"),
    el("label", {}, "Username", username),
    el("label", {}, "Keypair file (optional if registered here)", keyfile),
    el("button", { type: "submit" }, "Log in"),
  );

  const regRole = el("select", { name: "role" });
  for (const role of ["patient", "provider", "admin"]) {
    regRole.append(el("option", { value: role }, role));
  }
  const regName = el("input", { type: "text", name: "name", placeholder: "display name" });
  const regForm = el(
    "form",
    { class: "card register-form" },
    el("h2", {}, "New identity"),
    el("label", {}, "Role", regRole),
    el("label", {}, "Name", regName),
    el("button", { type: "submit" }, "Register"),
  );

  async function seedForLogin(name: string): Promise<string> {
    const file = keyfile.files && keyfile.files[0];
    if (file) {
      return parseKeyfile(await file.text()).seedHex;
    }
    const remembered = storedSeed(name);
    if (remembered) return remembered;
    throw new Error("no key for this username; upload a keypair file or register first");
  }

  async function doLogin(name: string, seedHex: string): Promise<void> {
    const challenge = await ctx.api.loginChallenge(name);
    const signature = await signChallenge(seedHex, challenge.challenge);
    const result = await ctx.api.login(name, challenge.challenge_id, signature);
    saveSession({
      token: result.token,
      identityId: result.identity_id,
      role: result.role,
      displayName: result.display_name,
      expiresAtMs: result.expires_at_ms,
    });
    ctx.setSession({
      token: result.token,
      identityId: result.identity_id,
      role: result.role,
      displayName: result.display_name,
      expiresAtMs: result.expires_at_ms,
    });
    ctx.navigate("#/dashboard");
  }

  loginForm.addEventListener("submit", (event) => {
    event.preventDefault();
    const name = username.value.trim();
    if (!name) {
      swap(message, notice("error", "enter a username"));
      return;
    }
    seedForLogin(name)
      .then((seedHex) => doLogin(name, seedHex))
      .catch((err: unknown) => {
        const text =
          err instanceof ApiError ? `${err.code}: ${err.message}` : String((err as Error).message);
        swap(message, notice("error", `login failed: ${text}`));
      });
  });

  regForm.addEventListener("submit", (event) => {
    event.preventDefault();
    const role = regRole.value;
    const name = regName.value.trim();
    if (!name) {
      swap(message, notice("error", "enter a display name to register"));
      return;
    }
    ctx.api
      .register(role, name)
      .then((result) => {
        rememberSeed(name, result.seed);
        swap(
          message,
          notice(
            "ok",
            `registered '${name}' as ${role}; keep this seed to sign in elsewhere: `,
            el("code", {}, result.seed),
          ),
        );
        return doLogin(name, result.seed);
      })
      .catch((err: unknown) => {
        const text =
          err instanceof ApiError ? `${err.code}: ${err.message}` : String((err as Error).message);
        swap(message, notice("error", `registration failed: ${text}`));
      });
  });

  return el(
    "section",
    { class: "screen screen-login" },
    el("h1", {}, "Health record console"),
    message,
    el("div", { class: "two-col" }, loginForm, regForm),
  );
}
