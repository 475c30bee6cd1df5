"""User profiles and the account-linking handshake.

A linked user skips Participant-ID confirmation at the start of surveys.
Profile state is persisted as USER_PARAM_SET events on the user's stream
(``user:<id>``), so profiles are fully reconstructible from the log.
"""

from __future__ import annotations

import hashlib
import secrets
from dataclasses import dataclass, field, replace
from typing import Dict, Optional

from .answers import CUP_ML
from .store import EventStore

DEFAULT_GOAL_ML = round(8 * CUP_ML)  # 8 cups/day
DEFAULT_TOKEN_TTL_MS = 10 * 60 * 1000
MAX_PASSWORD_RETRIES = 5

LINK_UNLINKED = "UNLINKED"
LINK_PENDING = "PENDING"
LINK_LINKED = "LINKED"

GOAL = "GOAL"    # reach at least
LIMIT = "LIMIT"  # stay under


class AccountError(Exception):
    pass


class UnknownUserError(AccountError):
    pass


class LinkStateError(AccountError):
    pass


class BadCredentialsError(AccountError):
    pass


def user_stream(user_id: str) -> str:
    return f"user:{user_id}"


def _hash_password(password: str, salt: str) -> str:
    return hashlib.pbkdf2_hmac(
        "sha256", password.encode("utf-8"), salt.encode("utf-8"), 50_000
    ).hex()


@dataclass(frozen=True)
class UserProfile:
    user_id: str
    display_name: str
    link_status: str = LINK_UNLINKED
    secret_hash: str = ""
    secret_salt: str = ""
    timezone: str = "UTC"
    fluid_goal_ml: int = DEFAULT_GOAL_ML
    goal_mode: str = GOAL
    schedule_ref: str = "default"


@dataclass
class LinkToken:
    token: str
    user_id: str
    issued_at: int
    expires_at: int
    used: bool = False
    failed_attempts: int = 0


class AccountService:
    """Profile registry backed by the event store."""

    def __init__(self, store: EventStore, token_ttl_ms: int = DEFAULT_TOKEN_TTL_MS):
        self.store = store
        self.token_ttl_ms = token_ttl_ms
        self._profiles: Dict[str, UserProfile] = {}
        self._tokens: Dict[str, LinkToken] = {}
        self._load_from_store()

    def _load_from_store(self) -> None:
        for stream_id in self.store.stream_ids():
            if not stream_id.startswith("user:"):
                continue
            for record in self.store.read_stream(stream_id):
                if record.kind != "USER_PARAM_SET":
                    continue
                self._apply_param(record.payload)

    def _apply_param(self, payload: dict) -> None:
        user_id = payload["user_id"]
        key = payload["key"]
        value = payload["value"]
        profile = self._profiles.get(user_id)
        if key == "profile" and isinstance(value, dict):
            self._profiles[user_id] = UserProfile(**value)
            return
        if profile is None:
            return
        if key == "fluid_goal":
            profile = replace(profile, fluid_goal_ml=value["goal_ml"],
                              goal_mode=value["mode"])
        elif key == "link_status":
            profile = replace(profile, link_status=value)
        elif key == "timezone":
            profile = replace(profile, timezone=value)
        self._profiles[user_id] = profile

    def _record_param(self, user_id: str, key: str, value, at: int) -> None:
        self.store.append(user_stream(user_id), "USER_PARAM_SET", {
            "user_id": user_id, "key": key, "value": value,
        }, at)

    # -- enrollment --------------------------------------------------------

    def enroll(self, user_id: str, display_name: str, password: str, at: int,
               timezone: str = "UTC",
               fluid_goal_ml: int = DEFAULT_GOAL_ML,
               goal_mode: str = GOAL,
               salt: Optional[str] = None) -> UserProfile:
        if user_id in self._profiles:
            raise AccountError(f"user {user_id} already enrolled")
        if fluid_goal_ml <= 0:
            raise AccountError("fluid goal must be positive")
        # explicit salt keeps seeded simulations byte-reproducible
        salt = salt if salt is not None else secrets.token_hex(8)
        profile = UserProfile(
            user_id=user_id,
            display_name=display_name,
            secret_hash=_hash_password(password, salt),
            secret_salt=salt,
            timezone=timezone,
            fluid_goal_ml=fluid_goal_ml,
            goal_mode=goal_mode,
        )
        self._profiles[user_id] = profile
        self._record_param(user_id, "profile", profile.__dict__, at)
        return profile

    def get(self, user_id: str) -> UserProfile:
        try:
            return self._profiles[user_id]
        except KeyError:
            raise UnknownUserError(f"unknown user: {user_id}") from None

    def users(self) -> Dict[str, UserProfile]:
        return dict(self._profiles)

    # -- account linking ---------------------------------------------------

    def begin_link(self, user_id: str, now: int) -> LinkToken:
        profile = self.get(user_id)
        if profile.link_status != LINK_UNLINKED:
            raise LinkStateError(f"user {user_id} is {profile.link_status}")
        token = LinkToken(
            token=secrets.token_urlsafe(24),
            user_id=user_id,
            issued_at=now,
            expires_at=now + self.token_ttl_ms,
        )
        self._tokens[token.token] = token
        self._set_link_status(user_id, LINK_PENDING, now)
        return token

    def confirm_link(self, token_value: str, password: str, now: int) -> UserProfile:
        token = self._tokens.get(token_value)
        if token is None or token.used:
            raise BadCredentialsError("invalid token")
        if now > token.expires_at:
            raise BadCredentialsError("expired token")
        profile = self.get(token.user_id)
        if _hash_password(password, profile.secret_salt) != profile.secret_hash:
            token.failed_attempts += 1
            if token.failed_attempts >= MAX_PASSWORD_RETRIES:
                token.used = True
                self._set_link_status(token.user_id, LINK_UNLINKED, now)
            raise BadCredentialsError("wrong password")
        token.used = True
        return self._set_link_status(token.user_id, LINK_LINKED, now)

    def _set_link_status(self, user_id: str, status: str, at: int) -> UserProfile:
        profile = replace(self._profiles[user_id], link_status=status)
        self._profiles[user_id] = profile
        self._record_param(user_id, "link_status", status, at)
        return profile

    # -- goal configuration ------------------------------------------------

    def set_goal(self, user_id: str, goal_ml: int, mode: str, at: int) -> UserProfile:
        if goal_ml <= 0:
            raise AccountError("goal must be positive")
        if mode not in (GOAL, LIMIT):
            raise AccountError(f"unknown goal mode: {mode}")
        profile = replace(self.get(user_id), fluid_goal_ml=goal_ml, goal_mode=mode)
        self._profiles[user_id] = profile
        self._record_param(user_id, "fluid_goal", {"goal_ml": goal_ml, "mode": mode}, at)
        return profile
