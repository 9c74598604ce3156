"""Registry of identities, randomized verification, limit lemmas and proof replays."""
from .registry import IdentityDef, Param, get, list_identities
from .replay import (
    check_delta_limit_even,
    check_delta_limit_odd,
    replay_biba_double_sum,
    replay_new1_double_sum,
)
from .verify import (
    TrialRecord,
    TrialStatus,
    VerificationReport,
    evaluate_side,
    sample_free,
    verify_many,
    verify_once,
)

__all__ = [
    "IdentityDef", "Param", "TrialRecord", "TrialStatus", "VerificationReport",
    "check_delta_limit_even", "check_delta_limit_odd", "evaluate_side", "get", "list_identities",
    "replay_biba_double_sum", "replay_new1_double_sum", "sample_free", "verify_many", "verify_once",
]
