"""View-then-scene prompting: one description per camera, then one for the whole scene."""
from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

from ..errors import OrchestrationError, UsageError, ValidationError

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")
MAX_IN_FLIGHT = 3


def load_template(name: str) -> str:
    return resources.files(__package__).joinpath("templates", f"{name}.txt").read_text(encoding="utf-8")


@dataclass(frozen=True)
class View:
    name: str
    image: bytes | None = None


@dataclass(frozen=True)
class ViewSet:
    views: tuple

    def __post_init__(self):
        if not self.views:
            raise ValidationError("a view set needs at least one view")
        names = [v.name for v in self.views]
        if len(set(names)) != len(names):
            raise ValidationError(f"view names must be unique: {names}")

    def __len__(self):
        return len(self.views)

    @classmethod
    def from_dir(cls, path):
        """Every image file in ``path``, named by stem, in sorted filename order."""
        path = Path(path)
        if not path.is_dir():
            raise UsageError(f"{path} is not a directory")
        files = sorted(p for p in path.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
        if not files:
            raise ValidationError(f"no images ({', '.join(IMAGE_SUFFIXES)}) in {path}")
        return cls(tuple(View(p.stem, p.read_bytes()) for p in files))


@dataclass(frozen=True)
class ViewResult:
    name: str
    text: str | None
    error: str | None = None

    @property
    def ok(self):
        return self.error is None


@dataclass
class SceneDescription:
    per_view: list
    scene: str
    client_id: str
    started: str | None = field(default=None, compare=False)
    finished: str | None = field(default=None, compare=False)

    def to_dict(self, timestamps=False):
        meta = {"client": self.client_id, "n_views": len(self.per_view),
                "failed_views": [r.name for r in self.per_view if not r.ok]}
        if timestamps:
            meta.update(started=self.started, finished=self.finished)
        views = []
        for r in self.per_view:
            entry = {"name": r.name, "text": r.text}
            if not r.ok:
                entry["error"] = r.error
            views.append(entry)
        return {"views": views, "scene": self.scene, "meta": meta}

    def to_json(self, timestamps=False) -> str:
        return json.dumps(self.to_dict(timestamps), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def view_prompt(template: str, view: View) -> str:
    return template.replace("{view}", view.name)


def scene_prompt(template: str, per_view) -> str:
    block = "\n".join(f"{r.name}: {r.text}" for r in per_view)
    return template.replace("{descriptions}", block)


def describe_views(views: ViewSet, client, template: str | None = None, max_workers=MAX_IN_FLIGHT):
    """One :class:`ViewResult` per view, in input order.

    A failing view becomes an error entry; the call itself fails only when every view fails.
    """
    template = load_template("view") if template is None else template

    def one(view):
        try:
            return ViewResult(view.name, client.generate(view_prompt(template, view), view.image))
        except Exception as e:  # noqa: BLE001  surfaced per view
            log.warning("view %s failed: %s", view.name, e)
            return ViewResult(view.name, None, f"{type(e).__name__}: {e}")

    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        results = list(pool.map(one, views.views))
    if not any(r.ok for r in results):
        raise OrchestrationError("every view failed", partial=results)
    return results


def summarize_scene(per_view, client, template: str | None = None) -> str:
    """Scene-level text from the successful per-view descriptions, kept in view order."""
    template = load_template("scene") if template is None else template
    usable = [r for r in per_view if r.ok]
    if not usable:
        raise UsageError("summarize_scene needs at least one view description")
    try:
        out = client.generate(scene_prompt(template, usable))
    except Exception as e:
        raise OrchestrationError(f"scene summary failed: {e}", partial=list(per_view)) from e
    if not out.strip():
        raise OrchestrationError("scene summary came back empty", partial=list(per_view))
    return out


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def describe_scene(views: ViewSet, client, view_template=None, scene_template=None,
                   max_workers=MAX_IN_FLIGHT) -> SceneDescription:
    started = _now()
    per_view = describe_views(views, client, view_template, max_workers)
    scene = summarize_scene(per_view, client, scene_template)
    return SceneDescription(per_view, scene, client.client_id, started, _now())
