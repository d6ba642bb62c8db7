"""Generative question-pool optimizer with a simulated click feedback loop."""

import json as _json

from ._genrec import (
    __version__,
    action_distribution,
    builtin_personas_json,
    default_config_json,
    parse_new_question,
    prompt_template,
    run_experiment_json,
    sample_action,
    score_keyword_persona,
    score_length_chars,
    score_length_words,
    theoretical_ctr,
    topics,
    variance_study_json,
)

__all__ = [
    "__version__",
    "action_distribution",
    "builtin_personas",
    "default_config",
    "parse_new_question",
    "prompt_template",
    "run_experiment",
    "sample_action",
    "score_keyword_persona",
    "score_length_chars",
    "score_length_words",
    "theoretical_ctr",
    "topics",
    "variance_study",
]


def default_config():
    """Default experiment configuration as a dict."""
    return _json.loads(default_config_json())


def builtin_personas():
    """Bundled persona registry entries as a list of dicts."""
    return _json.loads(builtin_personas_json())["personas"]


def run_experiment(config, journal_path=""):
    """Run a full experiment from a config dict (or JSON string).

    Returns the run summary as a dict; pass ``journal_path`` to also write the
    line-delimited run log.
    """
    if not isinstance(config, str):
        config = _json.dumps(config)
    return _json.loads(run_experiment_json(config, journal_path))


def variance_study(config, s_values, replications=100):
    """CTR variance across simulation counts on a frozen pool."""
    if not isinstance(config, str):
        config = _json.dumps(config)
    return _json.loads(variance_study_json(config, list(s_values), replications))
