// Studio bootstrap: resume the session named in the URL hash, or show the
// new-session form. All state is rebuilt from the API, so reloads are safe.

import { ApiClient } from "./api.js";
import { render } from "./render.js";
import { StudioApp } from "./state.js";

const API_BASE = (window as { BRIEFSTUDIO_API?: string }).BRIEFSTUDIO_API ?? "";

const app = new StudioApp(new ApiClient(API_BASE));
const mount = document.getElementById("app")!;

app.subscribe(() => render(app, mount));

async function boot(): Promise<void> {
  const match = window.location.hash.match(/^#\/session\/(.+)$/);
  if (match) {
    try {
      await app.loadSession(match[1]);
    } catch {
      window.location.hash = "";
    }
  }
  render(app, mount);
}

window.addEventListener("hashchange", () => void boot());
void boot();
