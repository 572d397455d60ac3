"""Monte-Carlo campaigns, MCS search, scheme comparison and reports."""

from .campaign import (ALL_SCHEMES, CampaignCounts, CampaignError, CampaignSpec, CaseContext, build_run_frame,
                       prepare_case, run_campaign, run_once, solve_precoders, sound_csit)
from .compare import CaseResult, SchemeResult, case_specs, compare_schemes, ordering_summary, run_cases
from .report import (RESULTS_SCHEMA_VERSION, ReportError, dumps_results, emit_report, load_results,
                     results_from_dict, results_to_dict)
from .search import SearchResult, brute_force_mcs, ranking_key, search_triples
from .seeds import rng_for, seed_sequence

__all__ = [
    "ALL_SCHEMES", "CampaignCounts", "CampaignError", "CampaignSpec", "CaseContext", "build_run_frame",
    "prepare_case", "run_campaign", "run_once", "solve_precoders", "sound_csit",
    "CaseResult", "SchemeResult", "case_specs", "compare_schemes", "ordering_summary", "run_cases",
    "RESULTS_SCHEMA_VERSION", "ReportError", "dumps_results", "emit_report", "load_results",
    "results_from_dict", "results_to_dict",
    "SearchResult", "brute_force_mcs", "ranking_key", "search_triples", "rng_for", "seed_sequence",
]
