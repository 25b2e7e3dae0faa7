// API payload types, mirroring the server's session document one-to-one.

export type FieldKey =
  | "deliverable_format"
  | "business_context"
  | "target_audience"
  | "creative_direction"
  | "tone_and_manner"
  | "keywords_and_motifs"
  | "design_specifications"
  | "restrictions";

export type ElementTypeKey = "object" | "background" | "text" | "typography" | "composition";

export type CardStatus = "drafted" | "enhanced" | "previewed" | "failed";

export const FIELD_ORDER: FieldKey[] = [
  "deliverable_format",
  "business_context",
  "target_audience",
  "creative_direction",
  "tone_and_manner",
  "keywords_and_motifs",
  "design_specifications",
  "restrictions",
];

export const FIELD_LABELS: Record<FieldKey, string> = {
  deliverable_format: "Deliverable Format",
  business_context: "Business Context",
  target_audience: "Target Audience",
  creative_direction: "Creative Direction",
  tone_and_manner: "Tone and Manner",
  keywords_and_motifs: "Keywords and Motifs",
  design_specifications: "Design Specifications",
  restrictions: "Restrictions",
};

export const ELEMENT_ORDER: ElementTypeKey[] = [
  "object",
  "background",
  "text",
  "typography",
  "composition",
];

export const ELEMENT_LABELS: Record<ElementTypeKey, string> = {
  object: "Objects",
  background: "Backgrounds",
  text: "Text",
  typography: "Typography",
  composition: "Composition",
};

export function isVisual(type: ElementTypeKey): boolean {
  return type !== "text";
}

export interface ImageRef {
  content_hash: string;
  width: number;
  height: number;
  media_type: string;
}

export interface RequirementEntry {
  id: string;
  field: FieldKey;
  text: string;
  origin: "extracted" | "recommended" | "manual";
  created_at: string;
}

export type RequirementCards = Record<FieldKey, RequirementEntry[]>;

export interface ElementCard {
  id: string;
  type: ElementTypeKey;
  rough_prompt: string;
  reasoning: string | null;
  influencing_fields: string[];
  enhanced_prompt: string | null;
  preview_ref: ImageRef | null;
  status: CardStatus;
  revision: number;
  parent_id: string | null;
  selected: boolean;
  error: string | null;
}

export interface SelectionSet {
  composition_id: string | null;
  object_id: string | null;
  background_id: string | null;
  typography_id: string | null;
  text_ids: string[];
}

export interface SelectionSnapshot {
  composition: ElementCard;
  object: ElementCard | null;
  background: ElementCard | null;
  typography: ElementCard | null;
  texts: ElementCard[];
}

export interface IntegratedPrompt {
  id: string;
  text: string;
  selection_snapshot: SelectionSnapshot;
  created_at: string;
}

export interface DesignArtifact {
  id: string;
  image_ref: ImageRef;
  integrated_prompt_id: string;
  duration_ms: number;
  created_at: string;
}

export interface SessionDoc {
  id: string;
  brief_text: string;
  output_language: string;
  deliverable_context: {
    deliverable_format: string;
    orientation: "portrait" | "landscape" | "square" | null;
  };
  created_at: string;
  requirement_cards: RequirementCards;
  element_cards: Record<ElementTypeKey, ElementCard[]>;
  selection: SelectionSet | null;
  integrated_prompts: IntegratedPrompt[];
  history: DesignArtifact[];
  next_seq: number;
}

export interface JobHandle {
  job_id: string;
  kind: string;
  state: "queued" | "running" | "done" | "failed";
  result: Record<string, unknown> | null;
  error: { code: string; message: string } | null;
}

export interface HistoryItem {
  artifact: DesignArtifact;
  integrated_prompt: IntegratedPrompt | null;
}

export interface MetricsResponse {
  metrics: {
    images_generated: number;
    completion_time_s: number | null;
    time_per_generation_s: number | null;
  };
  prompt_diversity: {
    item_count: number;
    pair_count: number;
    mean_pairwise_distance: number;
    per_pair: { id_a: string; id_b: string; distance: number }[];
  } | null;
}
