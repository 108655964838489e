/** Entry point: session picker, then the wizard. The API base URL comes from
 * the `api` query parameter (default http://127.0.0.1:8000); the active
 * session id lives in the URL hash so reloads land on the same session. */

import { ApiClient } from "./api.js";
import { el, clear } from "./dom.js";
import { SessionStore } from "./state.js";
import { Wizard } from "./wizard.js";

function apiBase(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  return fromQuery ?? "http://127.0.0.1:8000";
}

async function openSession(mount: HTMLElement, api: ApiClient, sessionId: string): Promise<void> {
  const store = new SessionStore(api, sessionId);
  const wizard = new Wizard(store);
  clear(mount);
  mount.append(wizard.root);
  window.location.hash = `#/session/${sessionId}`;
  await store.refresh();
}

function renderPicker(mount: HTMLElement, api: ApiClient): void {
  clear(mount);
  const scenarioInput = el("input", {
    id: "scenario-input",
    placeholder: 'scenario, e.g. "cyber attack"',
  }) as HTMLInputElement;
  const sessionInput = el("input", { id: "session-input", placeholder: "…or an existing session id" }) as HTMLInputElement;
  const error = el("p", { class: "banner", id: "picker-error" });
  error.hidden = true;

  const start = async (action: () => Promise<void>) => {
    try {
      error.hidden = true;
      await action();
    } catch (problem) {
      error.textContent = String(problem);
      error.hidden = false;
    }
  };

  mount.append(
    el(
      "div",
      { class: "picker" },
      el("h1", {}, "schemaloop"),
      el("p", {}, "build an event schema with a model in the loop: steps → nodes → graph → grounding"),
      scenarioInput,
      el(
        "button",
        {
          id: "create-session",
          onclick: () =>
            void start(async () => {
              const snapshot = await api.createSession(scenarioInput.value);
              await openSession(mount, api, snapshot.session_id);
            }),
        },
        "Create session",
      ),
      sessionInput,
      el(
        "button",
        {
          id: "open-session",
          onclick: () =>
            void start(async () => {
              await api.getSession(sessionInput.value.trim());
              await openSession(mount, api, sessionInput.value.trim());
            }),
        },
        "Open session",
      ),
      error,
    ),
  );
}

export async function boot(mount: HTMLElement): Promise<void> {
  const api = new ApiClient(apiBase());
  const match = window.location.hash.match(/^#\/session\/(.+)$/);
  if (match) {
    try {
      await api.getSession(match[1]);
      await openSession(mount, api, match[1]);
      return;
    } catch {
      window.location.hash = "";
    }
  }
  renderPicker(mount, api);
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  void boot(document.getElementById("app")!);
}
