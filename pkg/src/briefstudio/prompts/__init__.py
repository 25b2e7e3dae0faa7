"""Prompt template rendering with strict variable substitution.

Template bodies live in ``templates/`` as UTF-8 text files, one per kind,
with variable slots spelled ``{name}``. Those files are the single source
of truth; this module never inlines template prose. Rendering is pure:
identical inputs yield byte-identical text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import date
from enum import Enum
from importlib import resources
from typing import Optional, Sequence

from briefstudio.domain import (
    CANONICAL_FIELD_ORDER,
    ElementType,
    RequirementCardSet,
    RequirementField,
    ValidatedSelection,
    collapse_to_single_line,
    parse_text_entry,
)
from briefstudio.errors import (
    MissingContextError,
    MissingVariableError,
    UnresolvedPlaceholderError,
    ValidationError,
)


class PromptTemplateKind(Enum):
    REQUIREMENT_EXTRACTOR = "RequirementExtractor"
    REQUIREMENT_RECOMMENDER = "RequirementRecommender"
    ELEMENT_RECOMMENDER = "ElementRecommender"
    ENHANCE_OBJECT = "EnhanceObject"
    ENHANCE_BACKGROUND = "EnhanceBackground"
    ENHANCE_TYPOGRAPHY = "EnhanceTypography"
    ENHANCE_COMPOSITION = "EnhanceComposition"
    DESIGN_INTEGRATOR = "DesignIntegrator"


ENHANCER_KINDS = {
    ElementType.OBJECT: PromptTemplateKind.ENHANCE_OBJECT,
    ElementType.BACKGROUND: PromptTemplateKind.ENHANCE_BACKGROUND,
    ElementType.TYPOGRAPHY: PromptTemplateKind.ENHANCE_TYPOGRAPHY,
    ElementType.COMPOSITION: PromptTemplateKind.ENHANCE_COMPOSITION,
}

_TEMPLATE_FILES = {
    PromptTemplateKind.REQUIREMENT_EXTRACTOR: "requirement_extractor.txt",
    PromptTemplateKind.REQUIREMENT_RECOMMENDER: "requirement_recommender.txt",
    PromptTemplateKind.ELEMENT_RECOMMENDER: "element_recommender.txt",
    PromptTemplateKind.ENHANCE_OBJECT: "enhance_object.txt",
    PromptTemplateKind.ENHANCE_BACKGROUND: "enhance_background.txt",
    PromptTemplateKind.ENHANCE_TYPOGRAPHY: "enhance_typography.txt",
    PromptTemplateKind.ENHANCE_COMPOSITION: "enhance_composition.txt",
    PromptTemplateKind.DESIGN_INTEGRATOR: "design_integrator.txt",
}

_DECLARED_VARIABLES: dict[PromptTemplateKind, frozenset[str]] = {
    PromptTemplateKind.REQUIREMENT_EXTRACTOR: frozenset(
        {"output_language", "field_descriptions", "user_input"}
    ),
    PromptTemplateKind.REQUIREMENT_RECOMMENDER: frozenset(
        {
            "num_candidates",
            "output_language",
            "known_requirements",
            "target_field",
            "field_description",
        }
    ),
    PromptTemplateKind.ELEMENT_RECOMMENDER: frozenset(
        {
            "num_candidates",
            "element_type",
            "output_language",
            "current_date",
            "requirements_text",
            "predetermined_section",
            "element_description",
        }
    ),
    PromptTemplateKind.ENHANCE_OBJECT: frozenset({"output_language", "rough_prompt"}),
    PromptTemplateKind.ENHANCE_BACKGROUND: frozenset({"output_language", "rough_prompt"}),
    PromptTemplateKind.ENHANCE_TYPOGRAPHY: frozenset({"output_language", "rough_prompt"}),
    PromptTemplateKind.ENHANCE_COMPOSITION: frozenset(
        {"output_language", "rough_prompt", "deliverable_format", "orientation"}
    ),
    PromptTemplateKind.DESIGN_INTEGRATOR: frozenset(
        {"output_language", "selected_elements"}
    ),
}

EMPTY_FIELD_MARKER = "(none)"
EMPTY_PREDETERMINED_MARKER = "(no prior recommendations)"

_MAX_SUBSTITUTION_PASSES = 5


@dataclass(frozen=True)
class RenderedPrompt:
    kind: PromptTemplateKind
    text: str
    variables_used: dict[str, str]


def template_path(kind: PromptTemplateKind) -> str:
    return _TEMPLATE_FILES[kind]


def load_template(kind: PromptTemplateKind) -> str:
    ref = resources.files("briefstudio.prompts").joinpath(
        "templates", _TEMPLATE_FILES[kind]
    )
    return ref.read_text(encoding="utf-8")


def declared_variables(kind: PromptTemplateKind) -> frozenset[str]:
    return _DECLARED_VARIABLES[kind]


def _substitute(kind: PromptTemplateKind, variables: dict[str, str]) -> str:
    declared = _DECLARED_VARIABLES[kind]
    missing = declared - variables.keys()
    if missing:
        raise MissingVariableError(
            f"{kind.value} render missing variables: {sorted(missing)}"
        )
    extra = variables.keys() - declared
    if extra:
        raise MissingVariableError(
            f"{kind.value} render got undeclared variables: {sorted(extra)}"
        )
    text = load_template(kind)
    # Variable values may themselves carry slots (the typography guideline
    # embeds {output_language}); substitute to a fixpoint, bounded.
    for _ in range(_MAX_SUBSTITUTION_PASSES):
        replaced = text
        for name in declared:
            replaced = replaced.replace("{" + name + "}", variables[name])
        if replaced == text:
            break
        text = replaced
    residual = [n for n in declared if "{" + n + "}" in text]
    if residual:
        raise UnresolvedPlaceholderError(
            f"{kind.value} render left unresolved placeholders: {residual}"
        )
    return text


def _render(kind: PromptTemplateKind, variables: dict[str, str]) -> RenderedPrompt:
    return RenderedPrompt(kind=kind, text=_substitute(kind, variables), variables_used=dict(variables))


def guideline_for(element_type: ElementType, output_language: Optional[str] = None) -> str:
    """Verbatim recommendation guideline for one element type.

    The typography guideline carries an {output_language} slot; it is
    substituted when a language is given, otherwise left intact.
    """
    ref = resources.files("briefstudio.prompts").joinpath(
        "templates", "guidelines", f"{element_type.key}.txt"
    )
    text = ref.read_text(encoding="utf-8").rstrip("\n")
    if output_language is not None:
        text = text.replace("{output_language}", output_language)
    return text


def serialize_field_descriptions(
    field_specs: Sequence[tuple[RequirementField, str, str]]
) -> str:
    lines = [f"- {f.key} ({label}): {description}" for f, label, description in field_specs]
    return "\n".join(lines)


def canonical_field_specs() -> tuple[tuple[RequirementField, str, str], ...]:
    return tuple((f, f.label, f.description) for f in CANONICAL_FIELD_ORDER)


def serialize_requirements(card_set: RequirementCardSet) -> str:
    """Card set as "Label:\\n- entry" blocks in canonical field order."""
    blocks: list[str] = []
    for f in CANONICAL_FIELD_ORDER:
        entries = card_set.entries(f)
        if entries:
            body = "\n".join(f"- {e.text}" for e in entries)
        else:
            body = EMPTY_FIELD_MARKER
        blocks.append(f"{f.label}:\n{body}")
    return "\n".join(blocks)


def serialize_predetermined(rough_prompts: Sequence[str]) -> str:
    if not rough_prompts:
        return f"\n\n{EMPTY_PREDETERMINED_MARKER}"
    body = "\n".join(f"- {p}" for p in rough_prompts)
    return f"\n\nExisting values:\n{body}"


def serialize_selected_elements(selection: ValidatedSelection) -> str:
    """Selection as labeled sections, composition first, blank-line separated.

    Visual slots use the enhanced prompt when present and fall back to the
    rough prompt; text cards contribute one "Role: content" line each, in
    selection order. Prompts are collapsed to single lines so section
    boundaries stay unambiguous.
    """
    sections: list[str] = []

    def visual_section(card) -> None:
        prompt = card.enhanced_prompt if card.enhanced_prompt else card.rough_prompt
        sections.append(f"{card.type.label}:\n{collapse_to_single_line(prompt)}")

    visual_section(selection.composition)
    if selection.background is not None:
        visual_section(selection.background)
    lines = []
    for card in selection.texts:
        role, content = parse_text_entry(card.rough_prompt)
        lines.append(collapse_to_single_line(f"{role}: {content}"))
    sections.append("Text:\n" + "\n".join(lines))
    if selection.typography is not None:
        visual_section(selection.typography)
    if selection.object is not None:
        visual_section(selection.object)
    return "\n\n".join(sections)


def render_requirement_extractor(
    output_language: str,
    field_specs: Sequence[tuple[RequirementField, str, str]],
    user_input: str,
) -> RenderedPrompt:
    if not user_input.strip():
        raise ValidationError("user input must be non-empty")
    covered = {f for f, _, _ in field_specs}
    if covered != set(CANONICAL_FIELD_ORDER):
        raise MissingVariableError(
            "field descriptions must cover all eight requirement fields"
        )
    return _render(
        PromptTemplateKind.REQUIREMENT_EXTRACTOR,
        {
            "output_language": output_language,
            "field_descriptions": serialize_field_descriptions(field_specs),
            "user_input": user_input,
        },
    )


def render_requirement_recommender(
    num_candidates: int,
    output_language: str,
    known_requirements: RequirementCardSet,
    target_field: RequirementField,
    field_description: str,
) -> RenderedPrompt:
    if num_candidates < 1:
        raise ValidationError("num_candidates must be at least 1")
    return _render(
        PromptTemplateKind.REQUIREMENT_RECOMMENDER,
        {
            "num_candidates": str(num_candidates),
            "output_language": output_language,
            "known_requirements": serialize_requirements(known_requirements),
            "target_field": target_field.label,
            "field_description": field_description,
        },
    )


def render_element_recommender(
    element_type: ElementType,
    num_candidates: int,
    output_language: str,
    current_date: date,
    requirements: RequirementCardSet,
    predetermined: Sequence[str] = (),
) -> RenderedPrompt:
    if num_candidates < 1:
        raise ValidationError("num_candidates must be at least 1")
    return _render(
        PromptTemplateKind.ELEMENT_RECOMMENDER,
        {
            "num_candidates": str(num_candidates),
            "element_type": element_type.label,
            "output_language": output_language,
            "current_date": current_date.isoformat(),
            "requirements_text": serialize_requirements(requirements),
            "predetermined_section": serialize_predetermined(predetermined),
            "element_description": guideline_for(element_type),
        },
    )


def render_enhancer(
    kind: PromptTemplateKind,
    rough_prompt: str,
    output_language: str,
    deliverable_format: Optional[str] = None,
    orientation: Optional[str] = None,
) -> RenderedPrompt:
    if kind not in ENHANCER_KINDS.values():
        raise ValidationError(f"{kind.value} is not an enhancer template")
    if not rough_prompt.strip():
        raise ValidationError("rough prompt must be non-empty")
    variables = {"output_language": output_language, "rough_prompt": rough_prompt}
    if kind is PromptTemplateKind.ENHANCE_COMPOSITION:
        if not deliverable_format:
            raise MissingContextError(
                "composition enhancement requires a deliverable format",
                details={"missing": "deliverable_format"},
            )
        if not orientation:
            raise MissingContextError(
                "composition enhancement requires an orientation",
                details={"missing": "orientation"},
            )
        variables["deliverable_format"] = deliverable_format
        variables["orientation"] = orientation
    return _render(kind, variables)


def render_integrator(selection: ValidatedSelection, output_language: str) -> RenderedPrompt:
    return _render(
        PromptTemplateKind.DESIGN_INTEGRATOR,
        {
            "output_language": output_language,
            "selected_elements": serialize_selected_elements(selection),
        },
    )
