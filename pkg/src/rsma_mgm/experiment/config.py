"""Campaign spec files (JSON, versioned, strict about field names)."""

from __future__ import annotations

import json
from dataclasses import fields
from pathlib import Path

from ..phy.receiver import ReceiverConfig
from ..precoding import SolverConfig
from ..scenario import ScenarioConfig, ScenarioError, load_scenario, scenario_from_dict
from .campaign import CampaignSpec

CAMPAIGN_SCHEMA_VERSION = 1

_TOP = {"schema_version", "scenario", "schemes", "runs", "mcs_search_space", "seed", "case_index",
        "per_run_csit", "static_channels", "phase_error", "mismatch_aware", "solver", "receiver"}


class ConfigError(ValueError):
    """Invalid campaign file; the message names the offending field."""


def _strict(d: dict, cls, where: str):
    allowed = {f.name for f in fields(cls)}
    extra = sorted(set(d) - allowed)
    if extra:
        raise ConfigError(f"{where}.{extra[0]}: unknown field")
    kwargs = {k: (tuple(v) if isinstance(v, list) else v) for k, v in d.items()}
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def campaign_from_dict(d: dict, base_dir: Path | None = None) -> CampaignSpec:
    """Build a spec; ``scenario`` is either an inline object or a path relative to ``base_dir``."""
    if not isinstance(d, dict):
        raise ConfigError("<root>: campaign must be a JSON object")
    extra = sorted(set(d) - _TOP)
    if extra:
        raise ConfigError(f"{extra[0]}: unknown field")
    if d.get("schema_version") != CAMPAIGN_SCHEMA_VERSION:
        raise ConfigError(f"schema_version: expected {CAMPAIGN_SCHEMA_VERSION}, got {d.get('schema_version')!r}")
    if "scenario" not in d:
        raise ConfigError("scenario: missing")
    sc = d["scenario"]
    try:
        if isinstance(sc, str):
            path = Path(sc)
            if not path.is_absolute() and base_dir is not None:
                path = base_dir / path
            if not path.is_file():
                raise ConfigError(f"scenario: file not found: {path}")
            scenario = load_scenario(path)
        else:
            scenario = scenario_from_dict(sc)
    except ScenarioError as exc:
        raise ConfigError(f"scenario.{exc}") from None
    kwargs = {k: d[k] for k in ("runs", "seed", "case_index", "per_run_csit", "static_channels",
                                "phase_error", "mismatch_aware") if k in d}
    if "schemes" in d:
        kwargs["schemes"] = tuple(d["schemes"])
    if "mcs_search_space" in d:
        kwargs["mcs_search_space"] = {k: tuple(int(i) for i in v) for k, v in d["mcs_search_space"].items()}
    if "solver" in d:
        kwargs["solver"] = _strict(d["solver"], SolverConfig, "solver")
    if "receiver" in d:
        kwargs["receiver"] = _strict(d["receiver"], ReceiverConfig, "receiver")
    try:
        return CampaignSpec(scenario, **kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def campaign_to_dict(spec: CampaignSpec, scenario_ref: str | None = None) -> dict:
    d = spec.to_dict()
    d["schema_version"] = CAMPAIGN_SCHEMA_VERSION
    if scenario_ref is not None:
        d["scenario"] = scenario_ref
    return d


def dumps_campaign(spec: CampaignSpec, scenario_ref: str | None = None) -> str:
    return json.dumps(campaign_to_dict(spec, scenario_ref), indent=2, sort_keys=True) + "\n"


def load_campaign(path) -> CampaignSpec:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return campaign_from_dict(data, path.parent)


def default_campaign(scenario: ScenarioConfig, case_index: int = 1, **kwargs) -> CampaignSpec:
    return CampaignSpec(scenario, case_index=case_index, **kwargs)
