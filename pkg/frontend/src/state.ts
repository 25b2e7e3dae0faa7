// View state and the pure selection logic behind the three-step workflow.
//
// The studio holds no state that cannot be rebuilt from GET /sessions/{id}:
// the session document is the source of truth, the draft selection mirrors
// the server's card flags and only diverges while the user is mid-pick.

import { ApiClient, JobFailedError, jobResult, pollJob } from "./api.js";
import type {
  ElementCard,
  ElementTypeKey,
  FieldKey,
  HistoryItem,
  JobHandle,
  RequirementCards,
  RequirementEntry,
  SelectionSet,
  SessionDoc,
} from "./types.js";
import { ELEMENT_ORDER, isVisual } from "./types.js";

export type Step = 1 | 2 | 3;

export interface DraftSelection {
  composition_id: string | null;
  object_id: string | null;
  background_id: string | null;
  typography_id: string | null;
  text_ids: string[];
}

export function emptyDraft(): DraftSelection {
  return {
    composition_id: null,
    object_id: null,
    background_id: null,
    typography_id: null,
    text_ids: [],
  };
}

/** Rebuild the draft from the card selected flags in a session document. */
export function draftFromSession(session: SessionDoc): DraftSelection {
  const draft = emptyDraft();
  for (const type of ELEMENT_ORDER) {
    for (const card of session.element_cards[type] ?? []) {
      if (!card.selected) continue;
      if (type === "text") draft.text_ids.push(card.id);
      else draft[`${type}_id` as "composition_id"] = card.id;
    }
  }
  return draft;
}

/** Click-to-select with slot semantics: a visual card replaces the previous
 * pick of its category; clicking a selected card deselects it; text cards
 * toggle independently. */
export function toggleCard(draft: DraftSelection, card: ElementCard): DraftSelection {
  const next: DraftSelection = { ...draft, text_ids: [...draft.text_ids] };
  if (card.type === "text") {
    const at = next.text_ids.indexOf(card.id);
    if (at >= 0) next.text_ids.splice(at, 1);
    else next.text_ids.push(card.id);
    return next;
  }
  const slot = `${card.type}_id` as "composition_id";
  next[slot] = next[slot] === card.id ? null : card.id;
  return next;
}

export function draftComplete(draft: DraftSelection): boolean {
  return draft.composition_id !== null && draft.text_ids.length >= 1;
}

export function draftsEqual(a: DraftSelection, b: DraftSelection): boolean {
  return (
    a.composition_id === b.composition_id &&
    a.object_id === b.object_id &&
    a.background_id === b.background_id &&
    a.typography_id === b.typography_id &&
    a.text_ids.length === b.text_ids.length &&
    a.text_ids.every((id, i) => b.text_ids[i] === id)
  );
}

export function selectionToDraft(selection: SelectionSet): DraftSelection {
  return {
    composition_id: selection.composition_id,
    object_id: selection.object_id,
    background_id: selection.background_id,
    typography_id: selection.typography_id,
    text_ids: [...selection.text_ids],
  };
}

/** Generate is available exactly when the server accepted the current draft
 * as the selection (composition plus at least one text). */
export function generateEnabled(session: SessionDoc | null, draft: DraftSelection): boolean {
  if (!session || session.selection === null) return false;
  if (!draftComplete(draft)) return false;
  return draftsEqual(draft, selectionToDraft(session.selection));
}

export function cardById(session: SessionDoc, cardId: string): ElementCard | null {
  for (const type of ELEMENT_ORDER) {
    for (const card of session.element_cards[type] ?? []) {
      if (card.id === cardId) return card;
    }
  }
  return null;
}

export function isCardSelected(draft: DraftSelection, card: ElementCard): boolean {
  if (card.type === "text") return draft.text_ids.includes(card.id);
  return draft[`${card.type}_id` as "composition_id"] === card.id;
}

export function newestFirst<T>(items: T[]): T[] {
  return [...items].reverse();
}

export interface CandidateChip {
  field: FieldKey;
  text: string;
  reasoning?: string;
}

export interface StudioState {
  step: Step;
  session: SessionDoc | null;
  draft: DraftSelection;
  candidates: Partial<Record<FieldKey, CandidateChip[]>>;
  history: HistoryItem[];
  pendingJobs: Set<string>;
  busy: boolean;
  toasts: string[];
  hint: string | null;
}

type Listener = (state: StudioState) => void;

/** Controller binding the API client to view state. The DOM layer renders
 * from state snapshots and calls these methods; the scripted tests drive the
 * same methods headlessly. */
export class StudioApp {
  state: StudioState = {
    step: 1,
    session: null,
    draft: emptyDraft(),
    candidates: {},
    history: [],
    pendingJobs: new Set(),
    busy: false,
    toasts: [],
    hint: null,
  };
  private listeners: Listener[] = [];
  pollIntervalMs = 200;

  constructor(public api: ApiClient) {}

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  private toast(message: string): void {
    this.state.toasts.push(message);
    this.emit();
  }

  /** Run a job to completion, tracking it in pending state. */
  private async runJob(job: JobHandle): Promise<JobHandle> {
    this.state.pendingJobs.add(job.job_id);
    this.emit();
    try {
      return await pollJob(this.api, job, { intervalMs: this.pollIntervalMs });
    } finally {
      this.state.pendingJobs.delete(job.job_id);
      this.emit();
    }
  }

  private async guard<T>(work: () => Promise<T>): Promise<T | null> {
    this.state.busy = true;
    this.state.hint = null;
    this.emit();
    try {
      return await work();
    } catch (error) {
      if (error instanceof JobFailedError || error instanceof Error) {
        const code = (error as JobFailedError).code ?? "error";
        if (code === "missing_composition") {
          this.state.hint =
            "The selection needs a Composition card; pick one in Step 2.";
          this.state.step = this.state.step === 3 ? 3 : this.state.step;
        }
        this.toast(`${code}: ${error.message}`);
      }
      return null;
    } finally {
      this.state.busy = false;
      this.emit();
    }
  }

  get sessionId(): string {
    if (!this.state.session) throw new Error("no session loaded");
    return this.state.session.id;
  }

  async refresh(): Promise<void> {
    const session = await this.api.getSession(this.sessionId);
    this.state.session = session;
    this.state.draft = draftFromSession(session);
    this.emit();
  }

  async createSession(body: {
    brief_text: string;
    output_language?: string;
    deliverable_format?: string;
    orientation?: string;
  }): Promise<void> {
    const session = await this.api.createSession(body);
    this.state.session = session;
    this.state.draft = draftFromSession(session);
    this.state.step = 1;
    this.emit();
  }

  /** Rebuild the whole view from the server (refresh safety). */
  async loadSession(sessionId: string): Promise<void> {
    const session = await this.api.getSession(sessionId);
    this.state.session = session;
    this.state.draft = draftFromSession(session);
    this.state.history = newestFirst((await this.api.getHistory(sessionId)).history);
    this.emit();
  }

  goto(step: Step): void {
    this.state.step = step;
    this.emit();
  }

  // -- step 1 -----------------------------------------------------------

  async extract(): Promise<void> {
    await this.guard(async () => {
      const job = await this.runJob(await this.api.extract(this.sessionId));
      jobResult<RequirementCards>(job, "requirement_cards");
      await this.refresh();
    });
  }

  async recommendField(field: FieldKey, n = 3): Promise<void> {
    await this.guard(async () => {
      const job = await this.runJob(await this.api.recommendRequirements(this.sessionId, field, n));
      const candidates = jobResult<RequirementEntry[]>(job, "candidates");
      this.state.candidates[field] = candidates.map((c) => ({
        field,
        text: c.text,
      }));
      this.emit();
    });
  }

  /** Accepting a chip persists the entry with its recommended origin. */
  async acceptCandidate(field: FieldKey, text: string): Promise<void> {
    await this.guard(async () => {
      await this.api.addEntry(this.sessionId, field, text, "recommended");
      this.dropChip(field, text);
      await this.refresh();
    });
  }

  /** Rejecting removes the chip only; the card set is untouched. */
  rejectCandidate(field: FieldKey, text: string): void {
    this.dropChip(field, text);
    this.emit();
  }

  private dropChip(field: FieldKey, text: string): void {
    this.state.candidates[field] = (this.state.candidates[field] ?? []).filter(
      (c) => c.text !== text,
    );
  }

  async addEntry(field: FieldKey, text: string): Promise<void> {
    await this.guard(async () => {
      await this.api.addEntry(this.sessionId, field, text, "manual");
      await this.refresh();
    });
  }

  async editEntry(entryId: string, text: string): Promise<void> {
    await this.guard(async () => {
      await this.api.editEntry(this.sessionId, entryId, text);
      await this.refresh();
    });
  }

  async deleteEntry(entryId: string): Promise<void> {
    await this.guard(async () => {
      await this.api.deleteEntry(this.sessionId, entryId);
      await this.refresh();
    });
  }

  // -- step 2 -----------------------------------------------------------

  async recommendElements(type: ElementTypeKey, n?: number): Promise<void> {
    await this.guard(async () => {
      const job = await this.runJob(await this.api.recommendElements(this.sessionId, type, n));
      jobResult(job, "cards");
      await this.refresh();
    });
  }

  async addElement(type: ElementTypeKey, roughPrompt: string): Promise<void> {
    await this.guard(async () => {
      await this.runJob(await this.api.addElement(this.sessionId, type, roughPrompt));
      await this.refresh();
    });
  }

  async editCard(cardId: string, roughPrompt: string): Promise<void> {
    await this.guard(async () => {
      await this.runJob(await this.api.editCard(this.sessionId, cardId, roughPrompt));
      await this.refresh();
    });
  }

  async regenerateCard(cardId: string): Promise<void> {
    await this.guard(async () => {
      await this.runJob(await this.api.regenerateCard(this.sessionId, cardId));
      await this.refresh();
    });
  }

  async deleteCard(cardId: string): Promise<void> {
    await this.guard(async () => {
      await this.api.deleteCard(this.sessionId, cardId);
      await this.refresh();
    });
  }

  /** Click-to-select. When the draft is complete it is pushed to the server
   * so Generate can unlock; an incomplete draft stays local. */
  async toggleCard(cardId: string): Promise<void> {
    const session = this.state.session;
    if (!session) return;
    const card = cardById(session, cardId);
    if (!card) return;
    const draft = toggleCard(this.state.draft, card);
    this.state.draft = draft;
    this.emit();
    if (draftComplete(draft)) {
      await this.guard(async () => {
        await this.api.putSelection(this.sessionId, {
          composition_id: draft.composition_id,
          object_id: draft.object_id,
          background_id: draft.background_id,
          typography_id: draft.typography_id,
          text_ids: draft.text_ids,
        });
        await this.refresh();
      });
    }
  }

  // -- step 3 -----------------------------------------------------------

  get canGenerate(): boolean {
    return generateEnabled(this.state.session, this.state.draft);
  }

  async generate(): Promise<void> {
    await this.guard(async () => {
      const job = await this.runJob(await this.api.integrate(this.sessionId));
      jobResult(job, "artifact");
      await this.refresh();
      await this.loadHistory();
    });
  }

  async regenerateDesign(): Promise<void> {
    await this.guard(async () => {
      const job = await this.runJob(await this.api.regenerateDesign(this.sessionId));
      jobResult(job, "artifact");
      await this.refresh();
      await this.loadHistory();
    });
  }

  async loadHistory(): Promise<void> {
    this.state.history = newestFirst((await this.api.getHistory(this.sessionId)).history);
    this.emit();
  }

  /** Re-select a history item's element snapshot where the cards still exist. */
  async useArtifactAsStart(artifactId: string): Promise<void> {
    const session = this.state.session;
    if (!session) return;
    const item = this.state.history.find((h) => h.artifact.id === artifactId);
    const snapshot = item?.integrated_prompt?.selection_snapshot;
    if (!snapshot) return;
    const pick = (card: ElementCard | null): string | null =>
      card && cardById(session, card.id) ? card.id : null;
    const draft: DraftSelection = {
      composition_id: pick(snapshot.composition),
      object_id: pick(snapshot.object),
      background_id: pick(snapshot.background),
      typography_id: pick(snapshot.typography),
      text_ids: snapshot.texts.map((c) => pick(c)).filter((id): id is string => id !== null),
    };
    this.state.draft = draft;
    this.emit();
    if (draftComplete(draft)) {
      await this.guard(async () => {
        await this.api.putSelection(this.sessionId, {
          composition_id: draft.composition_id,
          object_id: draft.object_id,
          background_id: draft.background_id,
          typography_id: draft.typography_id,
          text_ids: draft.text_ids,
        });
        await this.refresh();
      });
    } else {
      this.state.hint =
        "Parts of that selection were deleted; re-pick the missing elements in Step 2.";
      this.emit();
    }
  }
}

export { isVisual };
