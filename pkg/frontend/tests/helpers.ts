// Factories for session documents used by the unit tests.

import type {
  ElementCard,
  ElementTypeKey,
  FieldKey,
  RequirementCards,
  SessionDoc,
} from "../src/types.js";

export function makeCard(
  id: string,
  type: ElementTypeKey,
  overrides: Partial<ElementCard> = {},
): ElementCard {
  return {
    id,
    type,
    rough_prompt: type === "text" ? "Headline: words" : `rough ${id}`,
    reasoning: null,
    influencing_fields: [],
    enhanced_prompt: null,
    preview_ref: null,
    status: "drafted",
    revision: 0,
    parent_id: null,
    selected: false,
    error: null,
    ...overrides,
  };
}

export function emptyRequirementCards(): RequirementCards {
  const fields: FieldKey[] = [
    "deliverable_format",
    "business_context",
    "target_audience",
    "creative_direction",
    "tone_and_manner",
    "keywords_and_motifs",
    "design_specifications",
    "restrictions",
  ];
  return Object.fromEntries(fields.map((f) => [f, []])) as RequirementCards;
}

export function makeSession(cards: ElementCard[], overrides: Partial<SessionDoc> = {}): SessionDoc {
  const byType: Record<ElementTypeKey, ElementCard[]> = {
    object: [],
    background: [],
    text: [],
    typography: [],
    composition: [],
  };
  for (const card of cards) byType[card.type].push(card);
  return {
    id: "s1",
    brief_text: "brief",
    output_language: "en",
    deliverable_context: { deliverable_format: "poster", orientation: "portrait" },
    created_at: "2025-10-01T00:00:00+00:00",
    requirement_cards: emptyRequirementCards(),
    element_cards: byType,
    selection: null,
    integrated_prompts: [],
    history: [],
    next_seq: 1,
    ...overrides,
  };
}
