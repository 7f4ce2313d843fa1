/**
 * View session state. Without a token only the login route is reachable;
 * the session survives page refresh via sessionStorage until the token's
 * TTL runs out.
 *
 * The seed vault is the dev-mode login shortcut: registering through the
 * console remembers the returned seed per username, so typing just the
 * username logs in again without re-uploading a keypair file.
 */

export interface ViewSession {
  token: string;
  identityId: string;
  role: string;
  displayName: string;
  expiresAtMs: number;
}

const SESSION_KEY = "medledger.session";
const SEED_VAULT_KEY = "medledger.seeds";

function defaultStorage(): Storage {
  return sessionStorage;
}

export function loadSession(store: Storage = defaultStorage()): ViewSession | null {
  const raw = store.getItem(SESSION_KEY);
  if (!raw) return null;
  let parsed: unknown;
  try {
    parsed = JSON.parse(raw);
  } catch {
    store.removeItem(SESSION_KEY);
    return null;
  }
  const session = parsed as ViewSession;
  if (
    typeof session !== "object" ||
    session === null ||
    typeof session.token !== "string" ||
    typeof session.expiresAtMs !== "number"
  ) {
    store.removeItem(SESSION_KEY);
    return null;
  }
  if (Date.now() >= session.expiresAtMs) {
    store.removeItem(SESSION_KEY);
    return null;
  }
  return session;
}

export function saveSession(session: ViewSession, store: Storage = defaultStorage()): void {
  store.setItem(SESSION_KEY, JSON.stringify(session));
}

export function clearSession(store: Storage = defaultStorage()): void {
  store.removeItem(SESSION_KEY);
}

function loadVault(store: Storage): Record<string, string> {
  const raw = store.getItem(SEED_VAULT_KEY);
  if (!raw) return {};
  try {
    const parsed = JSON.parse(raw);
    return typeof parsed === "object" && parsed !== null
      ? (parsed as Record<string, string>)
      : {};
  } catch {
    return {};
  }
}

export function rememberSeed(
  username: string,
  seedHex: string,
  store: Storage = defaultStorage(),
): void {
  const vault = loadVault(store);
  vault[username] = seedHex;
  store.setItem(SEED_VAULT_KEY, JSON.stringify(vault));
}

export function storedSeed(username: string, store: Storage = defaultStorage()): string | null {
  const vault = loadVault(store);
  return vault[username] ?? null;
}
