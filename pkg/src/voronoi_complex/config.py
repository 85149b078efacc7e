"""Run configuration: defaults, optional ``key=value`` file, command-line overrides."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path


@dataclass(frozen=True)
class RunConfig:
    rank: int = 5
    group: str = "GL"
    threads: int = 1
    faces: str = "dd"
    backend: str = "auto"
    out: str = "out"
    walk_max_iter: int = 200
    time_budget: float | None = None

    def __post_init__(self):
        if self.group not in ("GL", "SL"):
            raise ValueError(f"group must be GL or SL, got {self.group!r}")
        if self.faces not in ("dd", "intersect"):
            raise ValueError(f"faces must be dd or intersect, got {self.faces!r}")
        if self.backend not in ("auto", "cdd", "dd", "brute"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if not 2 <= self.rank <= 8:
            raise ValueError("rank must be between 2 and 8")
        if self.threads < 1:
            raise ValueError("threads must be positive")

    @property
    def out_dir(self) -> Path:
        return Path(self.out)

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


_ALIASES = {"out_dir": "out", "thread_count": "threads", "walk_iterations": "walk_max_iter"}


def parse_config(text: str) -> dict:
    """Parse ``key=value`` lines; ``#`` starts a comment."""
    types = {f.name: f.type for f in fields(RunConfig)}
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = _ALIASES.get(key, key)
        if key not in types:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        t = types[key]
        if t in ("int", int):
            out[key] = int(value)
        elif "float" in str(t):
            out[key] = float(value)
        else:
            out[key] = value
    return out


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    return RunConfig(**parse_config(Path(path).read_text()))
