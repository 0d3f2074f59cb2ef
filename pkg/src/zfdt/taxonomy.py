"""The seven fine-grained information categories shared by every pipeline stage.

The fixed ordering matters: it drives tie-breaking when a community's category
is ambiguous, and it fixes the section order of rendered records and answers.
"""

from __future__ import annotations

import enum


class Category(enum.Enum):
    DISEASES = "diseases"
    RECOMMENDED_FORMULAS = "recommended_formulas"
    HERBAL_INGREDIENTS = "herbal_ingredients"
    SYMPTOMS_POPULATION = "symptoms_population"
    PULSE_TONGUE = "pulse_tongue"
    CONTRAINDICATIONS = "contraindications"
    PREPARATION_METHODS = "preparation_methods"
    UNKNOWN = "unknown"


#: The seven real categories in canonical (tie-break) order.
CATEGORY_ORDER: tuple[Category, ...] = (
    Category.DISEASES,
    Category.RECOMMENDED_FORMULAS,
    Category.HERBAL_INGREDIENTS,
    Category.SYMPTOMS_POPULATION,
    Category.PULSE_TONGUE,
    Category.CONTRAINDICATIONS,
    Category.PREPARATION_METHODS,
)

#: Section header used when rendering one record element / answer section.
SECTION_HEADERS: dict[Category, str] = {
    Category.DISEASES: "Disease",
    Category.RECOMMENDED_FORMULAS: "Recommended Formula",
    Category.HERBAL_INGREDIENTS: "Herbal Ingredients",
    Category.SYMPTOMS_POPULATION: "Applicable Symptoms and Population",
    Category.PULSE_TONGUE: "Pulse and Tongue Diagnosis",
    Category.CONTRAINDICATIONS: "Contraindications",
    Category.PREPARATION_METHODS: "Preparation Methods",
}

#: The six answer components counted by the structural-clarity metric
#: (every element except the disease statement itself).
CLARITY_COMPONENTS: tuple[Category, ...] = tuple(
    c for c in CATEGORY_ORDER if c is not Category.DISEASES
)


def category_rank(category: Category) -> int:
    """Position in the canonical order; UNKNOWN sorts last."""
    try:
        return CATEGORY_ORDER.index(category)
    except ValueError:
        return len(CATEGORY_ORDER)


def normalize_name(name: str) -> str:
    """Canonical entity-name form: trim, case-fold, collapse inner whitespace."""
    return " ".join(name.split()).casefold()
