"""Two-stage scene description against a pluggable text-generation client."""
from .clients import (
    CachedClient,
    GenerationClient,
    MockClient,
    RecordingClient,
    ReplayClient,
    content_key,
)
from .http import EndpointConfig, HttpClient, build_request, http_generate, parse_response
from .orchestrate import (
    SceneDescription,
    View,
    ViewResult,
    ViewSet,
    describe_scene,
    describe_views,
    load_template,
    scene_prompt,
    summarize_scene,
    view_prompt,
)

__all__ = [
    "CachedClient", "GenerationClient", "MockClient", "RecordingClient", "ReplayClient", "content_key",
    "EndpointConfig", "HttpClient", "build_request", "http_generate", "parse_response",
    "SceneDescription", "View", "ViewResult", "ViewSet", "describe_scene", "describe_views",
    "load_template", "scene_prompt", "summarize_scene", "view_prompt",
]
