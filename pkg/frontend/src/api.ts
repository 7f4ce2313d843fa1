/**
 * Typed client for the service's REST API. Every error response carries a
 * {code, message} body; expired or bad tokens additionally trigger the
 * onUnauthorized callback so the app can bounce to the login screen.
 */

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface HealthInfo {
  ok: boolean;
  height: number;
  difficulty_bits: number;
  auto_mine: boolean;
}

export interface RegisterResult {
  identity_id: string;
  public_key: string;
  seed: string;
  tx_id: string;
  block_index: number;
}

export interface IdentityInfo {
  identity_id: string;
  role: string;
  display_name: string;
}

export interface ChallengeInfo {
  challenge_id: string;
  challenge: string;
  expires_at_ms: number;
}

export interface LoginResult {
  token: string;
  identity_id: string;
  role: string;
  display_name: string;
  expires_at_ms: number;
}

export interface RecordSubmission {
  username: string;
  age: number;
  temperature: string | number;
  time: string | number;
  patient_id: number;
  extra?: Record<string, string>;
}

export interface StoreResult {
  status: string;
  content_address: string;
  tx_id: string;
  block_index: number;
  attempts: number;
}

export interface StoredRecord {
  username: string;
  age: number;
  temperature: string;
  time: string;
  patient_id: number;
  extra: Record<string, string>;
  content_address: string;
  tx_id: string;
  block_index: number;
}

export interface TxResult {
  tx_id: string;
  block_index: number;
}

export interface AppointmentInfo {
  patient_id: number;
  provider_id: string;
  slot_ms: number;
  note: string;
  block_index: number;
  tx_id: string;
}

export interface BlockSummary {
  index: number;
  digest: string;
  prev_hash: string;
  timestamp_ms: number;
  difficulty_bits: number;
  nonce: number;
  tx_count: number;
}

export interface ChainSummary {
  height: number;
  tip_digest: string;
  pending: number;
  blocks: BlockSummary[];
}

export interface VerifyFailure {
  block_index: number;
  reason: string;
}

export interface VerifyReport {
  ok: boolean;
  failures: VerifyFailure[];
}

export interface MineResult {
  block_index: number;
  digest: string;
  tx_count: number;
  attempts: number;
}

export interface AuditEntry {
  block_index: number;
  tx_index: number;
  tx_id: string;
  kind: string;
  detail: string;
}

export interface ClientOptions {
  baseUrl?: string;
  getToken?: () => string | null;
  onUnauthorized?: () => void;
  fetchFn?: typeof fetch;
}

export interface ApiClient {
  health(): Promise<HealthInfo>;
  register(role: string, name: string): Promise<RegisterResult>;
  listIdentities(): Promise<IdentityInfo[]>;
  loginChallenge(username: string): Promise<ChallengeInfo>;
  login(username: string, challengeId: string, signatureHex: string): Promise<LoginResult>;
  submitRecord(record: RecordSubmission): Promise<StoreResult>;
  getRecords(patientId: number): Promise<StoredRecord[]>;
  grant(
    patientId: number,
    granteeId: string,
    scope: string,
    expiresAtMs: number | null,
  ): Promise<TxResult>;
  revoke(patientId: number, granteeId: string): Promise<TxResult>;
  bookAppointment(
    patientId: number,
    providerId: string,
    slotMs: number,
    note: string,
  ): Promise<TxResult>;
  listAppointments(): Promise<AppointmentInfo[]>;
  verifyChain(): Promise<VerifyReport>;
  chainSummary(): Promise<ChainSummary>;
  mine(): Promise<MineResult>;
  audit(patientId: number): Promise<AuditEntry[]>;
}

export function createClient(options: ClientOptions = {}): ApiClient {
  const baseUrl = (options.baseUrl ?? "").replace(/\/$/, "");
  const getToken = options.getToken ?? (() => null);
  const fetchFn = options.fetchFn ?? ((input, init) => fetch(input, init));

  async function request<T>(
    method: string,
    path: string,
    body?: unknown,
    authed = true,
  ): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (authed) {
      const token = getToken();
      if (token) headers["Authorization"] = `Bearer ${token}`;
    }
    const response = await fetchFn(baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let code = `Http${response.status}`;
      let message = response.statusText || `request failed with ${response.status}`;
      try {
        const data: unknown = await response.json();
        if (data && typeof data === "object") {
          const err = data as { code?: unknown; message?: unknown; detail?: unknown };
          if (typeof err.code === "string") code = err.code;
          if (typeof err.message === "string") message = err.message;
          else if (err.detail !== undefined) message = JSON.stringify(err.detail);
        }
      } catch {
        // non-JSON error body; keep the status-derived fallbacks
      }
      if (response.status === 401 && authed && options.onUnauthorized) {
        options.onUnauthorized();
      }
      throw new ApiError(response.status, code, message);
    }
    return (await response.json()) as T;
  }

  return {
    health: () => request<HealthInfo>("GET", "/api/health", undefined, false),
    register: (role, name) =>
      request<RegisterResult>("POST", "/api/identities", { role, name }, false),
    listIdentities: async () =>
      (await request<{ identities: IdentityInfo[] }>("GET", "/api/identities")).identities,
    loginChallenge: (username) =>
      request<ChallengeInfo>("POST", "/api/login/challenge", { username }, false),
    login: (username, challengeId, signatureHex) =>
      request<LoginResult>(
        "POST",
        "/api/login",
        { username, challenge_id: challengeId, signature: signatureHex },
        false,
      ),
    submitRecord: (record) => request<StoreResult>("POST", "/api/records", record),
    getRecords: async (patientId) =>
      (await request<{ records: StoredRecord[] }>("GET", `/api/records/${patientId}`)).records,
    grant: (patientId, granteeId, scope, expiresAtMs) =>
      request<TxResult>("POST", "/api/grants", {
        patient_id: patientId,
        grantee_id: granteeId,
        scope,
        expires_at_ms: expiresAtMs,
      }),
    revoke: (patientId, granteeId) =>
      request<TxResult>("POST", "/api/grants/revoke", {
        patient_id: patientId,
        grantee_id: granteeId,
      }),
    bookAppointment: (patientId, providerId, slotMs, note) =>
      request<TxResult>("POST", "/api/appointments", {
        patient_id: patientId,
        provider_id: providerId,
        slot_ms: slotMs,
        note,
      }),
    listAppointments: async () =>
      (await request<{ appointments: AppointmentInfo[] }>("GET", "/api/appointments"))
        .appointments,
    verifyChain: () => request<VerifyReport>("GET", "/api/chain/verify", undefined, false),
    chainSummary: () => request<ChainSummary>("GET", "/api/chain", undefined, false),
    mine: () => request<MineResult>("POST", "/api/mine"),
    audit: async (patientId) =>
      (await request<{ entries: AuditEntry[] }>("GET", `/api/audit/${patientId}`)).entries,
  };
}
