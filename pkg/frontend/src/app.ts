import { createClient } from "./api.js";
import { clearSession, loadSession } from "./session.js";
import type { ViewSession } from "./session.js";
import { el, swap } from "./dom.js";
import type { AppContext } from "./context.js";
import { loginView } from "./views/login.js";
import { dashboardView } from "./views/dashboard.js";
import { recordsView } from "./views/records.js";
import { chainView } from "./views/chain.js";
import { appointmentsView } from "./views/appointments.js";
import { auditView } from "./views/audit.js";

type View = (ctx: AppContext) => HTMLElement;

const ROUTES: Record<string, View> = {
  "#/login": loginView,
  "#/dashboard": dashboardView,
  "#/records": recordsView,
  "#/chain": chainView,
  "#/appointments": appointmentsView,
  "#/audit": auditView,
};

const NAV_ITEMS: [string, string][] = [
  ["#/dashboard", "Dashboard"],
  ["#/records", "Records"],
  ["#/chain", "Chain"],
  ["#/appointments", "Appointments"],
  ["#/audit", "Audit"],
];

export interface StartOptions {
  apiBase?: string;
  fetchFn?: typeof fetch;
}

export interface AppHandle {
  /** Detach the router from the window, e.g. before mounting another app. */
  dispose(): void;
}

/** Mount the single-page console into `root` and start the hash router. */
export function startApp(root: HTMLElement, options: StartOptions = {}): AppHandle {
  let session: ViewSession | null = loadSession();

  const api = createClient({
    baseUrl: options.apiBase ?? "",
    getToken: () => session?.token ?? null,
    onUnauthorized: () => {
      clearSession();
      session = null;
      navigate("#/login");
    },
    fetchFn: options.fetchFn,
  });

  function currentRoute(): string {
    if (!session) return "#/login";
    const hash = location.hash || "#/dashboard";
    return hash in ROUTES && hash !== "#/login" ? hash : "#/dashboard";
  }

  function navigate(route: string): void {
    if (location.hash !== route) {
      location.hash = route;
    }
    render();
  }

  function setSession(next: ViewSession | null): void {
    session = next;
    if (next === null) {
      clearSession();
      navigate("#/login");
    }
  }

  function buildNav(active: string): HTMLElement {
    const nav = el("nav", { class: "topnav" }, el("span", { class: "brand" }, "medledger"));
    if (!session) return nav;
    for (const [route, label] of NAV_ITEMS) {
      const link = el(
        "a",
        { href: route, class: route === active ? "active" : "" },
        label,
      );
      nav.append(link);
    }
    const logout = el("button", { type: "button", class: "logout" }, "Log out");
    logout.addEventListener("click", () => setSession(null));
    nav.append(
      el(
        "span",
        { class: "session-tag" },
        `${session.displayName} (${session.role})`,
      ),
      logout,
    );
    return nav;
  }

  function render(): void {
    const route = currentRoute();
    if (location.hash !== route) {
      // Normalize the address bar without firing another hashchange.
      try {
        history.replaceState(null, "", route);
      } catch {
        location.hash = route;
      }
    }
    const view = ROUTES[route];
    const ctx: AppContext = { api, session, setSession, navigate };
    swap(root, buildNav(route), view(ctx));
  }

  window.addEventListener("hashchange", render);
  render();
  return {
    dispose() {
      window.removeEventListener("hashchange", render);
    },
  };
}
