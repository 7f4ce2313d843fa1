/**
 * Login-challenge signing.
 *
 * This is the only cryptography the console performs; every authorization
 * decision is the service's. Keys are Ed25519; the 32-byte seed from a
 * keypair file (or returned once at registration) is wrapped in a PKCS#8
 * envelope so WebCrypto can import it.
 */

// ASN.1 header for an Ed25519 private key; the raw seed follows directly.
const PKCS8_ED25519_PREFIX = "302e020100300506032b657004220420";

export function hexToBytes(hex: string): Uint8Array<ArrayBuffer> {
  const clean = hex.trim().toLowerCase();
  if (clean.length % 2 !== 0 || /[^0-9a-f]/.test(clean)) {
    throw new Error(`not a hex string: ${hex.slice(0, 24)}`);
  }
  const out = new Uint8Array(clean.length / 2);
  for (let i = 0; i < out.length; i++) {
    out[i] = parseInt(clean.slice(i * 2, i * 2 + 2), 16);
  }
  return out;
}

export function bytesToHex(data: Uint8Array): string {
  let out = "";
  for (const byte of data) out += byte.toString(16).padStart(2, "0");
  return out;
}

export interface ParsedKeyfile {
  seedHex: string;
  role?: string;
  name?: string;
}

/**
 * Parse a keypair file: line 1 is the 32-byte seed in hex, optional lines
 * 2 and 3 carry the role and display name the key was generated for.
 */
export function parseKeyfile(text: string): ParsedKeyfile {
  const lines = text.split(/\r?\n/);
  const seedLine = (lines[0] ?? "").trim();
  if (seedLine.length !== 64) {
    throw new Error("keypair file must start with a 64-character hex seed");
  }
  hexToBytes(seedLine); // throws on non-hex
  const parsed: ParsedKeyfile = { seedHex: seedLine.toLowerCase() };
  if (lines.length > 1 && lines[1].trim()) parsed.role = lines[1].trim();
  if (lines.length > 2 && lines[2].trim()) parsed.name = lines[2].trim();
  return parsed;
}

async function importSigningKey(seedHex: string): Promise<CryptoKey> {
  const seed = hexToBytes(seedHex);
  if (seed.length !== 32) throw new Error("seed must be 32 bytes");
  const pkcs8 = new Uint8Array(48);
  pkcs8.set(hexToBytes(PKCS8_ED25519_PREFIX), 0);
  pkcs8.set(seed, 16);
  return crypto.subtle.importKey("pkcs8", pkcs8, { name: "Ed25519" }, true, ["sign"]);
}

/** Sign the hex-encoded login challenge, returning the hex signature. */
export async function signChallenge(seedHex: string, challengeHex: string): Promise<string> {
  const key = await importSigningKey(seedHex);
  const signature = await crypto.subtle.sign("Ed25519", key, hexToBytes(challengeHex));
  return bytesToHex(new Uint8Array(signature));
}

/** Derive the public key for a seed (hex), e.g. to display the identity. */
export async function publicKeyFromSeed(seedHex: string): Promise<string> {
  const key = await importSigningKey(seedHex);
  const jwk = await crypto.subtle.exportKey("jwk", key);
  if (!jwk.x) throw new Error("exported key has no public part");
  return bytesToHex(base64UrlToBytes(jwk.x));
}

function base64UrlToBytes(data: string): Uint8Array<ArrayBuffer> {
  const base64 = data.replace(/-/g, "+").replace(/_/g, "/");
  const padded = base64 + "=".repeat((4 - (base64.length % 4)) % 4);
  const raw = atob(padded);
  const out = new Uint8Array(raw.length);
  for (let i = 0; i < raw.length; i++) out[i] = raw.charCodeAt(i);
  return out;
}
