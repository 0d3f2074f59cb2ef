from .report import METRIC_COLUMNS, MetricReport, evaluate_suite
from .rules import RuleTable, load_rule_table
from .tcm import (
    DEFAULT_GLOSSARY,
    GeneratorJudge,
    GlossaryProfessionalismJudge,
    KgHallucinationJudge,
    MetricWeights,
    RoleAssignment,
    SharedEntityCoherenceJudge,
    ccr,
    cchr,
    cscr,
    extract_fact_triples,
    fact_score,
    kg_fact_oracle,
    lr,
    parse_herbs,
    parse_roles,
    scr,
    split_sentences,
)
from .text import bleu, rouge_s

__all__ = [
    "METRIC_COLUMNS",
    "MetricReport",
    "evaluate_suite",
    "RuleTable",
    "load_rule_table",
    "DEFAULT_GLOSSARY",
    "GeneratorJudge",
    "GlossaryProfessionalismJudge",
    "KgHallucinationJudge",
    "MetricWeights",
    "RoleAssignment",
    "SharedEntityCoherenceJudge",
    "ccr",
    "cchr",
    "cscr",
    "extract_fact_triples",
    "fact_score",
    "kg_fact_oracle",
    "lr",
    "parse_herbs",
    "parse_roles",
    "scr",
    "split_sentences",
    "bleu",
    "rouge_s",
]
