"""Correspondence-attack analysis for continuously published, anonymized event logs."""

from .attacks import AnonymityIndicators, AttackReport, PairAnalyzer, ReleasePair, attack_report, fa_ca_ba, ka
from .model import SimpleEventLog, SimpleProcessInstance, parse_raw_log, to_simple_log

__version__ = "0.1.0"

__all__ = [
    "AnonymityIndicators",
    "AttackReport",
    "PairAnalyzer",
    "ReleasePair",
    "SimpleEventLog",
    "SimpleProcessInstance",
    "attack_report",
    "fa_ca_ba",
    "ka",
    "parse_raw_log",
    "to_simple_log",
]
