import type { ApiClient } from "./api.js";
import type { ViewSession } from "./session.js";

/** Everything a screen needs: the API, the session, and navigation. */
export interface AppContext {
  api: ApiClient;
  session: ViewSession | null;
  setSession(session: ViewSession | null): void;
  navigate(route: string): void;
}
