"""Listening-test backend: stimuli, session protocols, responses, analysis."""

from .analysis import (ComparisonResult, MUSHRA_COMPARISONS,
                       analyze_intelligibility, analyze_mushra,
                       analyze_sessions, boxplot_stats)
from .responses import (DuplicateResponseError, ResponseError, StoredResponse,
                        validate_intelligibility_payload,
                        validate_mushra_payload)
from .scoring import score_keywords
from .service import PlaybackLimitError, SessionRegistry, create_app
from .sessions import (IntelligibilityTrial, MushraTrial, Session,
                       SessionBuildError, build_intelligibility_session,
                       build_mushra_session, build_training_session,
                       session_from_dict)
from .stimuli import (ANCHOR_SNR_DB, CandidateUnit, INTELLIGIBILITY_CONDITIONS,
                      MUSHRA_CONDITIONS, StimulusRecord, StimulusStore,
                      prepare_stimuli)

__all__ = [
    "ANCHOR_SNR_DB", "CandidateUnit", "ComparisonResult",
    "DuplicateResponseError", "INTELLIGIBILITY_CONDITIONS",
    "IntelligibilityTrial", "MUSHRA_COMPARISONS", "MUSHRA_CONDITIONS",
    "MushraTrial", "PlaybackLimitError", "ResponseError", "Session",
    "SessionBuildError", "SessionRegistry", "StimulusRecord", "StimulusStore",
    "StoredResponse", "analyze_intelligibility", "analyze_mushra",
    "analyze_sessions", "boxplot_stats", "build_intelligibility_session",
    "build_mushra_session", "build_training_session", "create_app",
    "prepare_stimuli", "score_keywords", "session_from_dict",
    "validate_intelligibility_payload", "validate_mushra_payload",
]
