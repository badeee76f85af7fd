"""The interpretation matrix: one resolution per RFC ambiguity plus improvement toggles."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, fields, replace
from typing import Iterator

CHOICES = {
    "amb1": ("1a", "1b"),
    "amb2": ("2a", "2b", "2c", "2d", "2e"),
    "amb3": ("derived", "3b"),
    "amb4": ("4a", "4b"),
    "amb5": ("5a", "5b", "5c"),
    "amb6": ("6a", "6b"),
    "amb7": ("7a", "7b"),
    "amb8": ("8a", "8b", "8c", "8d", "8e", "8f"),
    "amb9": ("9a", "9b"),
    "amb10": ("10a", "10b"),
}

IMPROVEMENTS = ("skip-rreqid", "fwd-rrep", "bcast-rerr", "fwd-rreq", "extra-precursor")

LOOP_FREE = "loop-free-acceptable"
LOOPS = "loops"
HANDICAPPED = "handicapped"
LOST_RREP = "lost-rrep"
INCOMPATIBLE = "incompatible"
CLASSES = (LOOP_FREE, LOOPS, HANDICAPPED, LOST_RREP, INCOMPATIBLE)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class InterpretationConfig:
    amb1: str = "1b"
    amb2: str = "2c"
    amb3: str = "derived"
    amb4: str = "4a"
    amb5: str = "5a"
    amb6: str = "6a"
    amb7: str = "7a"
    amb8: str = "8f"
    amb9: str = "9a"
    amb10: str = "10a"
    improvements: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        for f in fields(self):
            if f.name == "improvements":
                continue
            v = getattr(self, f.name)
            if v not in CHOICES[f.name]:
                raise ConfigError(f"invalid value {v!r} for {f.name}")
        for imp in self.improvements:
            if imp not in IMPROVEMENTS:
                raise ConfigError(f"unknown improvement {imp!r}")
        object.__setattr__(self, "improvements", frozenset(self.improvements))
        if self.amb3 == "3b" and not (self.amb1 == "1a" and self.amb2 == "2a"):
            raise ConfigError("amb3=3b only combines with amb1=1a and amb2=2a")

    def has(self, improvement: str) -> bool:
        return improvement in self.improvements

    @property
    def amb3_effective(self) -> str:
        """The reading of ambiguity 3, which is determined by ambiguities 1 and 2."""
        if self.amb3 == "3b":
            return "3b"
        return "3c" if self.amb2 == "2a" else "3a"

    # what the engine actually needs

    @property
    def update_variant(self) -> str:
        return self.amb2

    @property
    def rrep_overlay_everywhere(self) -> bool:
        return self.amb3 == "3b"

    @property
    def rrep_overlay(self) -> bool:
        return self.amb1 == "1a"

    def key(self) -> str:
        parts = [f"{f.name}={getattr(self, f.name)}" for f in fields(self) if f.name != "improvements"]
        if self.improvements:
            parts.append("improve=" + "+".join(sorted(self.improvements)))
        return ",".join(parts)

    def short(self) -> str:
        """Only the fields that differ from the default, as parseable text."""
        default = InterpretationConfig()
        parts = [f"{f.name}={getattr(self, f.name)}" for f in fields(self)
                 if f.name != "improvements" and getattr(self, f.name) != getattr(default, f.name)]
        if self.improvements:
            parts.append("improve=" + "+".join(sorted(self.improvements)))
        return ",".join(parts) or "default"

    def matches(self, key: str, value: str) -> bool:
        """Guard used by scenario assertions: does field key have this value?"""
        if key == "improve":
            return value in self.improvements
        if key not in CHOICES:
            raise ConfigError(f"unknown key {key!r}")
        return getattr(self, key) == value


DEFAULT = InterpretationConfig()


def parse_config(text: str) -> InterpretationConfig:
    text = (text or "").strip()
    if not text or text == "default":
        return DEFAULT
    kw: dict = {}
    improvements: set = set()
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if "=" not in token:
            raise ConfigError(f"expected key=value, got {token!r}")
        k, v = (s.strip() for s in token.split("=", 1))
        if k == "improve":
            for imp in v.replace("|", "+").split("+"):
                imp = imp.strip()
                if imp not in IMPROVEMENTS:
                    raise ConfigError(f"unknown improvement {imp!r}")
                improvements.add(imp)
        elif k in CHOICES:
            if v not in CHOICES[k]:
                raise ConfigError(f"invalid value {v!r} for {k}")
            kw[k] = v
        else:
            raise ConfigError(f"unknown key {k!r}")
    return InterpretationConfig(improvements=frozenset(improvements), **kw)


def classify(cfg: InterpretationConfig) -> str:
    """Classify an interpretation by the findings for each resolution.

    The checks run in priority order so that every configuration gets exactly
    one class.
    """
    unsafe_invalidate = cfg.amb8 in ("8a", "8b", "8c")
    if (cfg.amb1 == "1a" or cfg.amb2 == "2b" or cfg.amb7 == "7b"
            or (unsafe_invalidate and cfg.amb5 == "5a" and cfg.amb6 == "6a")
            or (cfg.amb8 == "8a" and cfg.amb9 == "9b")):
        return LOOPS
    if unsafe_invalidate and cfg.amb2 == "2d" and cfg.amb5 == "5a" and cfg.amb6 == "6b":
        return INCOMPATIBLE
    if cfg.amb4 == "4b":
        return HANDICAPPED
    if cfg.amb10 == "10b":
        return LOST_RREP
    return LOOP_FREE


def enumerate_interpretations() -> Iterator[InterpretationConfig]:
    """All readings of the RFC: 2e and the improvements are not among them."""
    rest = [CHOICES[k] for k in ("amb4", "amb5", "amb6", "amb7", "amb8", "amb9", "amb10")]
    for amb1, amb2 in itertools.product(("1a", "1b"), ("2a", "2b", "2c", "2d")):
        amb3s = ("derived", "3b") if (amb1, amb2) == ("1a", "2a") else ("derived",)
        for amb3 in amb3s:
            for amb4, amb5, amb6, amb7, amb8, amb9, amb10 in itertools.product(*rest):
                yield InterpretationConfig(amb1, amb2, amb3, amb4, amb5, amb6, amb7, amb8, amb9, amb10)


def class_counts() -> dict:
    counts = {c: 0 for c in CLASSES}
    for cfg in enumerate_interpretations():
        counts[classify(cfg)] += 1
    return counts


def with_improvements(cfg: InterpretationConfig, *names: str) -> InterpretationConfig:
    return replace(cfg, improvements=cfg.improvements | frozenset(names))
