"""HTTP service through which subjects run listening-test sessions.

JSON over HTTP under the ``/v1`` prefix:

=======  =============================================  =======================
POST     /v1/sessions                                   create a session
GET      /v1/sessions/{sid}                             progress summary
GET      /v1/sessions/{sid}/trials/next                 next unanswered trial
GET      /v1/sessions/{sid}/trials/{tid}                one trial descriptor
GET      .../trials/{tid}/stimuli/{handle}/audio        WAV bytes
GET      .../trials/{tid}/stimuli/{handle}/video        frames as base64 JSON
POST     /v1/sessions/{sid}/responses                   submit one response
GET      /v1/sessions/{sid}/export                      line-delimited JSON
GET      /v1/report                                     pooled analysis
GET      /v1/health                                     liveness probe
=======  =============================================  =======================

Rating trials never reveal which slot holds which processing condition:
stimuli are addressed by opaque per-trial handles (``ref``, ``slot0`` ...
``slot6``) resolved server-side, and the hidden reference slot streams the
very same file as the open reference button. Keyword trials are play-once:
the audio endpoint refuses a second request for the same trial with 409.
Responses are validated, stored immutably with a timestamp, and duplicate
submissions are rejected unless they carry the same idempotency token, in
which case the original acknowledgement is replayed (safe client retries).

State is in memory; give ``create_app`` a ``state_dir`` to also persist
sessions as atomically-written JSON and responses / playback claims as
append-only NDJSON, from which a restarted service resumes.
"""

from __future__ import annotations

import base64
import csv
import io
import json
import logging
import os
import threading
import time
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse, Response

from ..harness.grid import COLOURS, DIGITS, LETTERS
from .analysis import analyze_sessions
from .responses import (DuplicateResponseError, ResponseError, StoredResponse,
                        validate_intelligibility_payload,
                        validate_mushra_payload)
from .sessions import (Session, SessionBuildError,
                       build_intelligibility_session, build_mushra_session,
                       build_training_session, session_from_dict)
from .stimuli import StimulusStore

logger = logging.getLogger(__name__)

API_PREFIX = "/v1"
SESSION_KINDS = ("mushra", "intelligibility", "intelligibility_training")
PLAY_ONCE_KINDS = ("intelligibility", "intelligibility_training")
RATING_BANDS = ("bad", "poor", "fair", "good", "excellent")

_BUILDERS = {
    "mushra": build_mushra_session,
    "intelligibility": build_intelligibility_session,
    "intelligibility_training": build_training_session,
}


class PlaybackLimitError(RuntimeError):
    """A play-once stimulus was requested again."""


class SessionRegistry:
    """Sessions, stored responses, and per-trial playback counts.

    All mutation goes through one lock; with a ``state_dir`` every change
    is also written down (sessions atomically, events append-only) so a
    restarted service carries on with the same sessions, answers, and
    playback budgets.
    """

    def __init__(self, state_dir: str | Path | None = None):
        self._lock = threading.Lock()
        self.sessions: dict[str, Session] = {}
        self.responses: dict[str, dict[str, StoredResponse]] = {}
        self.playback: dict[str, dict[str, int]] = {}
        self.state_dir = Path(state_dir) if state_dir is not None else None
        if self.state_dir is not None:
            self._reload()

    # --- persistence -------------------------------------------------------

    def _reload(self) -> None:
        sessions_dir = self.state_dir / "sessions"
        if sessions_dir.is_dir():
            for path in sorted(sessions_dir.glob("*.json")):
                with open(path, encoding="utf-8") as fh:
                    session = session_from_dict(json.load(fh))
                self.sessions[session.session_id] = session
        for name, replay in (("responses.ndjson", self._replay_response),
                             ("playback.ndjson", self._replay_playback)):
            path = self.state_dir / name
            if not path.is_file():
                continue
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        replay(json.loads(line))
        if self.sessions:
            logger.info("restored %d sessions from %s", len(self.sessions),
                        self.state_dir)

    def _replay_response(self, entry: dict) -> None:
        self.responses.setdefault(entry["session_id"], {})[
            entry["trial_id"]] = StoredResponse(
                trial_id=entry["trial_id"], payload=entry["payload"],
                timestamp=entry["timestamp"], token=entry.get("token", ""))

    def _replay_playback(self, entry: dict) -> None:
        counts = self.playback.setdefault(entry["session_id"], {})
        counts[entry["trial_id"]] = counts.get(entry["trial_id"], 0) + 1

    def _append(self, name: str, entry: dict) -> None:
        if self.state_dir is None:
            return
        self.state_dir.mkdir(parents=True, exist_ok=True)
        with open(self.state_dir / name, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def _write_session(self, session: Session) -> None:
        if self.state_dir is None:
            return
        sessions_dir = self.state_dir / "sessions"
        sessions_dir.mkdir(parents=True, exist_ok=True)
        tmp = sessions_dir / f".{session.session_id}.tmp"
        tmp.write_text(json.dumps(session.to_dict()), encoding="utf-8")
        os.replace(tmp, sessions_dir / f"{session.session_id}.json")

    # --- state transitions -------------------------------------------------

    def create(self, build, kind: str, seed: int) -> Session:
        with self._lock:
            session_id = f"s{len(self.sessions) + 1:04d}-{kind}-{seed}"
            session = build(session_id)
            self.sessions[session_id] = session
            self.responses.setdefault(session_id, {})
            self.playback.setdefault(session_id, {})
            self._write_session(session)
            return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            try:
                return self.sessions[session_id]
            except KeyError:
                raise KeyError(f"unknown session {session_id!r}") from None

    def answered(self, session_id: str) -> dict[str, StoredResponse]:
        with self._lock:
            return dict(self.responses.get(session_id, {}))

    def record(self, session_id: str, trial_id: str, payload: dict,
               token: str) -> tuple[StoredResponse, bool]:
        """Store one response; an identical-token resubmission is replayed."""
        with self._lock:
            existing = self.responses[session_id].get(trial_id)
            if existing is not None:
                if token and existing.token == token:
                    return existing, True
                raise DuplicateResponseError(
                    f"trial {trial_id} already has a stored response")
            stored = StoredResponse(trial_id=trial_id, payload=payload,
                                    timestamp=time.time(), token=token)
            self.responses[session_id][trial_id] = stored
            self._append("responses.ndjson",
                         {"session_id": session_id, **stored.to_dict()})
            return stored, False

    def claim_playback(self, session_id: str, trial_id: str,
                       limit: int = 1) -> None:
        with self._lock:
            counts = self.playback.setdefault(session_id, {})
            if counts.get(trial_id, 0) >= limit:
                raise PlaybackLimitError(
                    f"the stimulus for trial {trial_id} has already been "
                    f"played; each keyword-trial stimulus plays only once")
            counts[trial_id] = counts.get(trial_id, 0) + 1
            self._append("playback.ndjson",
                         {"session_id": session_id, "trial_id": trial_id})

    def session_pairs(self) -> list[tuple[Session, dict[str, dict]]]:
        """(session, {trial_id: stored response dict}) for analysis/export."""
        with self._lock:
            return [(session,
                     {tid: resp.to_dict() for tid, resp in
                      self.responses.get(sid, {}).items()})
                    for sid, session in sorted(self.sessions.items())]


def _summary(session: Session, answered: dict) -> dict:
    done = sum(1 for t in session.trials if t.trial_id in answered)
    next_id = next((t.trial_id for t in session.trials
                    if t.trial_id not in answered), None)
    return {"session_id": session.session_id, "kind": session.kind,
            "subject": session.subject, "seed": session.seed,
            "n_trials": len(session.trials), "n_answered": done,
            "complete": done == len(session.trials),
            "next_trial_id": next_id}


def create_app(store: StimulusStore,
               state_dir: str | Path | None = None,
               registry: SessionRegistry | None = None) -> FastAPI:
    """Build the service around one stimulus store."""
    registry = registry if registry is not None else SessionRegistry(state_dir)
    app = FastAPI(title="listening-test service", version="1")
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    app.state.store = store
    app.state.registry = registry

    def _session(session_id: str) -> Session:
        try:
            return registry.get(session_id)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None

    def _trial(session: Session, trial_id: str):
        try:
            return session.trial(trial_id)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None

    def _resolve(session: Session, trial, handle: str) -> str:
        if session.kind == "mushra":
            if handle == "ref":
                return trial.reference_id
            if handle.startswith("slot") and handle[4:].isdigit():
                index = int(handle[4:])
                if index < len(trial.rated_ids):
                    return trial.rated_ids[index]
        elif handle == "av":
            return trial.stimulus_id
        raise HTTPException(
            status_code=404,
            detail=f"trial {trial.trial_id} has no stimulus handle "
                   f"{handle!r}")

    def _stimulus_view(session_id: str, trial_id: str, handle: str,
                       stimulus_id: str) -> dict:
        base = (f"{API_PREFIX}/sessions/{session_id}/trials/{trial_id}"
                f"/stimuli/{handle}")
        has_video = bool(store.record(stimulus_id).frames_path)
        return {"handle": handle, "audio_url": f"{base}/audio",
                "video_url": f"{base}/video" if has_video else None}

    def _trial_view(session: Session, trial, position: int) -> dict:
        # The subject-facing descriptor: never the condition behind a slot,
        # never the keyword truth, never the mixing SNR.
        common = {"trial_id": trial.trial_id, "kind": session.kind,
                  "position": position, "n_trials": len(session.trials),
                  "sequence_index": trial.sequence_index}
        if session.kind == "mushra":
            return {**common,
                    "reference": _stimulus_view(
                        session.session_id, trial.trial_id, "ref",
                        trial.reference_id),
                    "slots": [
                        _stimulus_view(session.session_id, trial.trial_id,
                                       f"slot{i}", stimulus_id)
                        for i, stimulus_id in enumerate(trial.rated_ids)],
                    "rating_scale": {"min": 0, "max": 100,
                                     "bands": list(RATING_BANDS),
                                     "band_edges": [0, 20, 40, 60, 80, 100]},
                    "playback_limit": None}
        return {**common,
                "training": session.kind == "intelligibility_training",
                "stimulus": _stimulus_view(session.session_id, trial.trial_id,
                                           "av", trial.stimulus_id),
                "inputs": {"colours": list(COLOURS), "digits": list(DIGITS),
                           "letters": list(LETTERS)},
                "playback_limit": 1}

    @app.get(f"{API_PREFIX}/health")
    def health() -> dict:
        return {"status": "ok", "api_version": "v1",
                "n_stimuli": len(store.records),
                "n_sessions": len(registry.sessions)}

    @app.post(f"{API_PREFIX}/sessions", status_code=201)
    def create_session(body: dict) -> dict:
        kind = body.get("kind")
        if kind not in SESSION_KINDS:
            raise HTTPException(status_code=422,
                                detail=f"kind must be one of {SESSION_KINDS}")
        seed = body.get("seed")
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise HTTPException(status_code=422,
                                detail="seed must be an integer")
        subject = body.get("subject", "anonymous")
        if not isinstance(subject, str) or not subject:
            raise HTTPException(status_code=422,
                                detail="subject must be a non-empty string")
        builder = _BUILDERS[kind]
        try:
            session = registry.create(
                lambda session_id: builder(store, seed,
                                           session_id=session_id,
                                           subject=subject),
                kind, seed)
        except SessionBuildError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None
        logger.info("created %s session %s (%d trials)", kind,
                    session.session_id, len(session.trials))
        return _summary(session, {})

    @app.get(f"{API_PREFIX}/sessions/{{session_id}}")
    def session_status(session_id: str) -> dict:
        session = _session(session_id)
        return _summary(session, registry.answered(session_id))

    @app.get(f"{API_PREFIX}/sessions/{{session_id}}/trials/next")
    def next_trial(session_id: str) -> dict:
        session = _session(session_id)
        answered = registry.answered(session_id)
        for position, trial in enumerate(session.trials):
            if trial.trial_id not in answered:
                return {"complete": False,
                        "trial": _trial_view(session, trial, position)}
        return {"complete": True, "trial": None}

    @app.get(f"{API_PREFIX}/sessions/{{session_id}}/trials/{{trial_id}}")
    def get_trial(session_id: str, trial_id: str) -> dict:
        session = _session(session_id)
        trial = _trial(session, trial_id)
        position = [t.trial_id for t in session.trials].index(trial_id)
        return _trial_view(session, trial, position)

    @app.get(f"{API_PREFIX}/sessions/{{session_id}}/trials/{{trial_id}}"
             f"/stimuli/{{handle}}/audio")
    def get_audio(session_id: str, trial_id: str, handle: str) -> Response:
        session = _session(session_id)
        trial = _trial(session, trial_id)
        stimulus_id = _resolve(session, trial, handle)
        if session.kind in PLAY_ONCE_KINDS:
            try:
                registry.claim_playback(session_id, trial_id)
            except PlaybackLimitError as exc:
                raise HTTPException(status_code=409,
                                    detail=str(exc)) from None
        record = store.record(stimulus_id)
        data = (store.root / record.audio_path).read_bytes()
        return Response(content=data, media_type="audio/wav")

    @app.get(f"{API_PREFIX}/sessions/{{session_id}}/trials/{{trial_id}}"
             f"/stimuli/{{handle}}/video")
    def get_video(session_id: str, trial_id: str, handle: str) -> dict:
        session = _session(session_id)
        trial = _trial(session, trial_id)
        stimulus_id = _resolve(session, trial, handle)
        loaded = store.video(stimulus_id)
        if loaded is None:
            raise HTTPException(
                status_code=404,
                detail=f"stimulus behind handle {handle!r} has no video")
        frames, fps = loaded
        frames = np.ascontiguousarray(frames, dtype=np.uint8)
        n_frames, height, width = frames.shape
        return {"fps": fps, "width": width, "height": height,
                "n_frames": n_frames,
                "frames": [base64.b64encode(frame.tobytes()).decode("ascii")
                           for frame in frames]}

    @app.post(f"{API_PREFIX}/sessions/{{session_id}}/responses")
    def post_response(session_id: str, body: dict) -> dict:
        session = _session(session_id)
        trial_id = body.get("trial_id")
        if not isinstance(trial_id, str):
            raise HTTPException(status_code=422,
                                detail="body must include a trial_id string")
        _trial(session, trial_id)
        token = body.get("token", "")
        if not isinstance(token, str):
            raise HTTPException(status_code=422,
                                detail="token must be a string")
        validate = (validate_mushra_payload if session.kind == "mushra"
                    else validate_intelligibility_payload)
        try:
            payload = validate(body.get("payload"))
        except ResponseError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        try:
            stored, replayed = registry.record(session_id, trial_id, payload,
                                               token)
        except DuplicateResponseError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None
        answered = registry.answered(session_id)
        return {"stored": True, "replayed": replayed, "trial_id": trial_id,
                "timestamp": stored.timestamp, "n_answered": len(answered),
                "complete": len(answered) == len(session.trials)}

    @app.get(f"{API_PREFIX}/sessions/{{session_id}}/export")
    def export_session(session_id: str) -> PlainTextResponse:
        session = _session(session_id)
        answered = registry.answered(session_id)
        lines = [json.dumps({
            "type": "session", "session_id": session.session_id,
            "kind": session.kind, "seed": session.seed,
            "subject": session.subject, "n_trials": len(session.trials)})]
        for trial in session.trials:
            lines.append(json.dumps({"type": "trial", **trial.to_dict()}))
        for trial in session.trials:
            stored = answered.get(trial.trial_id)
            if stored is not None:
                lines.append(json.dumps({"type": "response",
                                         **stored.to_dict()}))
        return PlainTextResponse("\n".join(lines) + "\n",
                                 media_type="application/x-ndjson")

    @app.get(f"{API_PREFIX}/report")
    def report(format: str = "json", table: str = "comparisons"):
        result = analyze_sessions(registry.session_pairs())
        if format == "json":
            return result
        if format != "csv":
            raise HTTPException(status_code=422,
                                detail="format must be 'json' or 'csv'")
        if table == "comparisons":
            rows = result["mushra"]["comparisons"]
            fields = ["condition_a", "condition_b", "snr_db", "n_pairs",
                      "p_value", "significant", "corrected_threshold",
                      "d_c", "magnitude", "degenerate"]
        elif table == "intelligibility":
            rows = result["intelligibility"]["table"]
            fields = ["snr_db", "condition", "n", "colour_pct", "letter_pct",
                      "digit_pct", "mean_pct"]
        else:
            raise HTTPException(
                status_code=422,
                detail="table must be 'comparisons' or 'intelligibility'")
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
        return PlainTextResponse(buffer.getvalue(), media_type="text/csv")

    return app
