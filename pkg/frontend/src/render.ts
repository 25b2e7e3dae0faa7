// DOM rendering for the three-step studio. No framework: each state change
// re-renders the active screen from the session document.

import type { StudioApp } from "./state.js";
import { isCardSelected, newestFirst } from "./state.js";
import type { ElementCard, ElementTypeKey, FieldKey, HistoryItem } from "./types.js";
import {
  ELEMENT_LABELS,
  ELEMENT_ORDER,
  FIELD_LABELS,
  FIELD_ORDER,
  isVisual,
} from "./types.js";

function el(
  tag: string,
  attrs: string | Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElement {
  const node = document.createElement(tag);
  if (typeof attrs === "string") {
    if (attrs) node.className = attrs;
  } else {
    for (const [key, value] of Object.entries(attrs)) {
      if (key === "className") node.className = value;
      else node.setAttribute(key, value);
    }
  }
  for (const child of children) {
    node.appendChild(typeof child === "string" ? document.createTextNode(child) : child);
  }
  return node;
}

function btn(label: string, className: string, onClick: () => void, disabled = false): HTMLButtonElement {
  const b = el("button", className, [label]) as HTMLButtonElement;
  b.type = "button";
  b.disabled = disabled;
  b.addEventListener("click", onClick);
  return b;
}

function promptText(label: string, initial = ""): string | null {
  const value = window.prompt(label, initial);
  if (value === null) return null;
  const trimmed = value.trim();
  return trimmed ? trimmed : null;
}

// -- step 1 ------------------------------------------------------------

function renderStep1(app: StudioApp): HTMLElement {
  const session = app.state.session!;
  const wrap = el("div", "step step-1");

  const briefBox = el("textarea", { className: "brief-input", rows: "6" }) as HTMLTextAreaElement;
  briefBox.value = session.brief_text;
  briefBox.readOnly = true;
  wrap.appendChild(
    el("section", "brief", [
      el("h2", "", ["Design brief"]),
      briefBox,
      btn("Extract requirements", "primary", () => void app.extract(), app.state.busy),
    ]),
  );

  const grid = el("div", "requirement-grid");
  for (const field of FIELD_ORDER) {
    grid.appendChild(renderRequirementCard(app, field));
  }
  wrap.appendChild(grid);
  return wrap;
}

function renderRequirementCard(app: StudioApp, field: FieldKey): HTMLElement {
  const session = app.state.session!;
  const entries = session.requirement_cards[field] ?? [];
  const card = el("div", "req-card", [el("h3", "", [FIELD_LABELS[field]])]);

  const list = el("ul", "entries");
  for (const entry of entries) {
    const item = el("li", `entry origin-${entry.origin}`, [
      el("span", "entry-text", [entry.text]),
      btn("Edit", "mini", () => {
        const text = promptText(`Edit ${FIELD_LABELS[field]} entry`, entry.text);
        if (text) void app.editEntry(entry.id, text);
      }),
      btn("Delete", "mini danger", () => void app.deleteEntry(entry.id)),
    ]);
    list.appendChild(item);
  }
  card.appendChild(list);

  const chips = app.state.candidates[field] ?? [];
  if (chips.length) {
    const chipRow = el("div", "chips");
    for (const chip of chips) {
      chipRow.appendChild(
        el("span", "chip", [
          chip.text,
          btn("Accept", "mini", () => void app.acceptCandidate(field, chip.text)),
          btn("Reject", "mini danger", () => app.rejectCandidate(field, chip.text)),
        ]),
      );
    }
    card.appendChild(chipRow);
  }

  card.appendChild(
    el("div", "card-actions", [
      btn("Add entry", "mini", () => {
        const text = promptText(`New ${FIELD_LABELS[field]} entry`);
        if (text) void app.addEntry(field, text);
      }),
      btn("Recommend", "mini", () => void app.recommendField(field), app.state.busy),
    ]),
  );
  return card;
}

// -- step 2 -------------------------------------------------------------

function renderStep2(app: StudioApp): HTMLElement {
  const wrap = el("div", "step step-2");
  const columns = el("div", "element-columns");
  for (const type of ELEMENT_ORDER) {
    columns.appendChild(renderElementColumn(app, type));
  }
  wrap.appendChild(columns);
  return wrap;
}

function renderElementColumn(app: StudioApp, type: ElementTypeKey): HTMLElement {
  const session = app.state.session!;
  const cards = session.element_cards[type] ?? [];
  const column = el("div", "element-column", [el("h3", "", [ELEMENT_LABELS[type]])]);
  for (const card of cards) {
    column.appendChild(renderElementCard(app, card));
  }
  column.appendChild(
    el("div", "column-actions", [
      btn("Add", "mini", () => {
        const hint = type === "text" ? "Role: content" : "rough prompt";
        const rough = promptText(`New ${ELEMENT_LABELS[type]} card (${hint})`);
        if (rough) void app.addElement(type, rough);
      }),
      btn(
        cards.length ? "Extra recommendation" : "Recommend",
        "mini",
        () => void app.recommendElements(type),
        app.state.busy,
      ),
    ]),
  );
  return column;
}

function renderElementCard(app: StudioApp, card: ElementCard): HTMLElement {
  const selected = isCardSelected(app.state.draft, card);
  const node = el("div", `element-card status-${card.status}${selected ? " selected" : ""}`);
  node.addEventListener("click", (event) => {
    if ((event.target as HTMLElement).tagName === "BUTTON") return;
    void app.toggleCard(card.id);
  });

  if (isVisual(card.type)) {
    if (card.preview_ref) {
      const img = el("img", {
        className: "preview",
        src: app.api.imageUrl(card.preview_ref.content_hash),
        alt: card.rough_prompt,
        loading: "lazy",
      });
      node.appendChild(img);
    } else if (card.status === "failed") {
      node.appendChild(el("div", "error-badge", [card.error ?? "failed"]));
    } else {
      node.appendChild(el("div", "preview placeholder", ["generating…"]));
    }
    node.appendChild(el("p", "rough", [card.rough_prompt]));
  } else {
    const colon = card.rough_prompt.indexOf(":");
    node.appendChild(el("p", "text-role", [card.rough_prompt.slice(0, colon)]));
    node.appendChild(el("p", "text-content", [card.rough_prompt.slice(colon + 1).trim()]));
  }

  const actions = el("div", "card-actions", [
    btn("Edit", "mini", () => {
      const rough = promptText("Edit rough prompt", card.rough_prompt);
      if (rough) void app.editCard(card.id, rough);
    }),
    btn("Delete", "mini danger", () => void app.deleteCard(card.id)),
  ]);
  if (isVisual(card.type)) {
    actions.appendChild(
      btn(card.status === "failed" ? "Retry" : "Regenerate", "mini", () =>
        void app.regenerateCard(card.id),
      ),
    );
  }
  node.appendChild(actions);
  return node;
}

// -- step 3 --------------------------------------------------------------

function renderStep3(app: StudioApp): HTMLElement {
  const session = app.state.session!;
  const wrap = el("div", "step step-3");

  const strip = el("div", "selected-strip", [el("h3", "", ["Selected elements"])]);
  const draft = app.state.draft;
  const picks: (ElementCard | null)[] = [
    draft.composition_id ? find(app, draft.composition_id) : null,
    draft.background_id ? find(app, draft.background_id) : null,
    draft.typography_id ? find(app, draft.typography_id) : null,
    draft.object_id ? find(app, draft.object_id) : null,
    ...draft.text_ids.map((id) => find(app, id)),
  ];
  const shown = picks.filter((c): c is ElementCard => c !== null);
  if (!shown.length) {
    strip.appendChild(el("p", "muted", ["Nothing selected yet."]));
  }
  for (const card of shown) {
    strip.appendChild(
      el("span", "strip-item", [`${ELEMENT_LABELS[card.type]}: ${card.rough_prompt}`]),
    );
  }
  strip.appendChild(btn("Change in Step 2", "mini", () => app.goto(2)));
  wrap.appendChild(strip);

  if (app.state.hint) {
    wrap.appendChild(el("div", "hint", [app.state.hint]));
  }

  wrap.appendChild(
    el("div", "generate-row", [
      btn("Generate", "primary", () => void app.generate(), !app.canGenerate || app.state.busy),
      btn(
        "Regenerate",
        "",
        () => void app.regenerateDesign(),
        session.history.length === 0 || app.state.busy,
      ),
    ]),
  );

  const latest = app.state.history[0];
  if (latest) {
    wrap.appendChild(renderArtifactDetail(app, latest, true));
  }

  const gallery = el("div", "history-gallery", [el("h3", "", ["History"])]);
  for (const item of app.state.history) {
    const thumb = el("img", {
      className: "history-thumb",
      src: app.api.imageUrl(item.artifact.image_ref.content_hash),
      alt: item.artifact.id,
    });
    thumb.addEventListener("click", () => {
      const detail = renderArtifactDetail(app, item, false);
      gallery.insertBefore(detail, gallery.children[1] ?? null);
    });
    gallery.appendChild(thumb);
  }
  wrap.appendChild(gallery);
  return wrap;
}

function find(app: StudioApp, cardId: string): ElementCard | null {
  const session = app.state.session!;
  for (const type of ELEMENT_ORDER) {
    for (const card of session.element_cards[type] ?? []) {
      if (card.id === cardId) return card;
    }
  }
  return null;
}

function renderArtifactDetail(app: StudioApp, item: HistoryItem, isLatest: boolean): HTMLElement {
  const detail = el("div", `artifact-detail${isLatest ? " latest" : ""}`);
  detail.appendChild(
    el("img", {
      className: "final-image",
      src: app.api.imageUrl(item.artifact.image_ref.content_hash),
      alt: item.artifact.id,
    }),
  );
  if (item.integrated_prompt) {
    detail.appendChild(el("p", "integrated-prompt", [item.integrated_prompt.text]));
    const used = item.integrated_prompt.selection_snapshot;
    const usedList = el("ul", "used-elements");
    const cards = [used.composition, used.background, used.typography, used.object, ...used.texts];
    for (const card of cards) {
      if (!card) continue;
      usedList.appendChild(el("li", "", [`${ELEMENT_LABELS[card.type]}: ${card.rough_prompt}`]));
    }
    detail.appendChild(usedList);
    detail.appendChild(
      btn("Use as starting point", "mini", () => void app.useArtifactAsStart(item.artifact.id)),
    );
  }
  return detail;
}

// -- shell ---------------------------------------------------------------

export function render(app: StudioApp, mount: HTMLElement): void {
  mount.replaceChildren();
  const session = app.state.session;
  if (!session) {
    mount.appendChild(renderSessionForm(app));
    return;
  }

  const tabs = el("nav", "tabs");
  const labels: [1 | 2 | 3, string][] = [
    [1, "1 · Requirements"],
    [2, "2 · Elements"],
    [3, "3 · Design"],
  ];
  for (const [step, label] of labels) {
    const tab = btn(label, app.state.step === step ? "tab active" : "tab", () => app.goto(step));
    tabs.appendChild(tab);
  }
  mount.appendChild(
    el("header", "topbar", [el("h1", "", ["briefstudio"]), tabs, el("span", "session-id", [session.id])]),
  );

  if (app.state.pendingJobs.size > 0 || app.state.busy) {
    mount.appendChild(el("div", "progress", ["Working…"]));
  }

  if (app.state.step === 1) mount.appendChild(renderStep1(app));
  else if (app.state.step === 2) mount.appendChild(renderStep2(app));
  else mount.appendChild(renderStep3(app));

  const toasts = app.state.toasts.splice(0, app.state.toasts.length);
  if (toasts.length) {
    mount.appendChild(el("div", "toasts", toasts.map((t) => el("div", "toast", [t]))));
  }
}

function renderSessionForm(app: StudioApp): HTMLElement {
  const form = el("div", "session-form", [el("h1", "", ["briefstudio"])]);
  const brief = el("textarea", { className: "brief-input", rows: "8", placeholder: "Paste the design brief…" }) as HTMLTextAreaElement;
  const format = el("input", { className: "fmt", placeholder: "deliverable format (e.g. poster)" }) as HTMLInputElement;
  const orientation = el("select", "orientation") as HTMLSelectElement;
  for (const value of ["portrait", "landscape", "square"]) {
    const option = el("option", { value }, [value]) as HTMLOptionElement;
    orientation.appendChild(option);
  }
  form.appendChild(brief);
  form.appendChild(format);
  form.appendChild(orientation);
  form.appendChild(
    btn("Start session", "primary", () => {
      if (!brief.value.trim()) return;
      void app
        .createSession({
          brief_text: brief.value,
          deliverable_format: format.value || "poster",
          orientation: orientation.value,
        })
        .then(() => {
          if (app.state.session) window.location.hash = `#/session/${app.state.session.id}`;
        });
    }),
  );
  return form;
}

export { newestFirst };
