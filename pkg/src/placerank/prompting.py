"""Construction of the multimodal scoring prompt for a query-candidate pair.

The default template instructs the model to compare two street-level
images on permanent, static features only, score them against a fixed
rubric, and reply with a single raw JSON object. Building a message
sequence is a pure function of the template and the image bytes, so
identical inputs always produce identical requests.
"""

from __future__ import annotations

import base64
import hashlib
import io
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, MissingFile, UnsupportedImageType
from .retrieval import PlaceRecord

DEFAULT_SYSTEM_TEXT = """\
You are an expert in visual place recognition, functioning as a highly precise and efficient ranking engine. Your core purpose is to compare images of places and determine their similarity based on permanent, static features. You must always ignore transient elements like vehicles, people, animals, weather, and lighting. Your responses must be structured, concise, and directly address the user's query format."""

DEFAULT_USER_TEXT = """\
Your task is to meticulously analyze a query image against a candidate image and output a numerical similarity score.

Your internal thought process must follow these steps, but you MUST NOT output this process. This is your internal checklist:

1. Strictly Adhere to Constraints:
   - Your analysis must be based only on permanent, static objects (e.g., buildings, permanent signs, street furniture, architectural features).
   - You must ignore transient elements.

2. Systematic Object-by-Object Analysis:
   - Identify all distinct, permanent objects in the query image.
   - For each object, silently search for a corresponding object in the candidate image.
   - Internally compare objects based on key attributes: color, shape, structure, patterns, textures, spatial relationships, and text.
   - Carefully examine details of matched static objects to confirm they are truly the same, accounting for viewpoint changes.

3. Calculate a Similarity Score:
   - Calculate a score between 0.0 and 1.0 based on matched vs. mismatched permanent objects.
   - Use the following rubric:
     1.0: Perfect or near-perfect match.
     0.8-0.99: Very strong match. Definitely the same place.
     0.5-0.79: Probable match. Several significant landmarks match.
     0.2-0.49: Weak or partial match. Shares only generic landmarks.
     0.0-0.19: No significant match. Clearly different locations.

4. Detailed Inspection for High Scores:
   - If score > 0.8, perform a more fine-grained comparison.
   - Pay closer attention to geometric features and texts of matching static objects.

Final Output Instruction:
You MUST provide your response only as a single, raw JSON object, without any extra text or markdown. The JSON must follow this schema:

{
  "similarity_score": float,
  "justification": "A brief, one-sentence summary explaining the score.",
  "key_matching_objects": [
    "List of matched static objects."
  ],
  "key_mismatched_objects": [
    "List of mismatched static objects."
  ]
}"""

TEMPLATE_SECTION_MARKER = "---USER---"

MEDIA_TYPES = {
    ".png": "image/png",
    ".jpg": "image/jpeg",
    ".jpeg": "image/jpeg",
    ".webp": "image/webp",
}

_PIL_FORMATS = {"image/png": "PNG", "image/jpeg": "JPEG", "image/webp": "WEBP"}


@dataclass(frozen=True)
class PromptTemplate:
    system_text: str
    user_text: str
    schema_version: str = "1"

    def __post_init__(self):
        if not self.system_text or not self.user_text:
            raise ConfigError("prompt template texts must be nonempty")
        if "similarity_score" not in self.user_text:
            raise ConfigError("user text must mention the 'similarity_score' output key")

    @classmethod
    def default(cls) -> "PromptTemplate":
        return cls(system_text=DEFAULT_SYSTEM_TEXT, user_text=DEFAULT_USER_TEXT)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(self.system_text.encode("utf-8"))
        h.update(b"\x00")
        h.update(self.user_text.encode("utf-8"))
        h.update(b"\x00")
        h.update(self.schema_version.encode("utf-8"))
        return h.hexdigest()[:16]


def load_template(path: str | Path) -> PromptTemplate:
    """Load an override template: system text, a ---USER--- marker line, user text."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"prompt file not found: {path}")
    text = path.read_text(encoding="utf-8")
    lines = text.splitlines()
    try:
        marker = next(i for i, ln in enumerate(lines) if ln.strip() == TEMPLATE_SECTION_MARKER)
    except StopIteration:
        raise ConfigError(f"prompt file {path} has no {TEMPLATE_SECTION_MARKER} marker line") from None
    system_text = "\n".join(lines[:marker]).strip()
    user_text = "\n".join(lines[marker + 1:]).strip()
    return PromptTemplate(system_text=system_text, user_text=user_text, schema_version="custom")


@dataclass(frozen=True)
class TextPart:
    text: str


@dataclass(frozen=True)
class ImagePart:
    media_type: str
    base64_data: str


@dataclass(frozen=True)
class Message:
    role: str  # "system" or "user"
    parts: tuple


MessageSequence = tuple[Message, ...]


def encode_image_data_url(path: str | Path, max_side: int | None = None) -> tuple[str, str]:
    """Read an image file and return (media_type, base64 payload).

    By default the payload is the file bytes untouched. When max_side is
    given and the image is larger, it is downscaled to fit and re-encoded
    in the same format.
    """
    path = Path(path)
    ext = path.suffix.lower()
    if ext not in MEDIA_TYPES:
        raise UnsupportedImageType(ext or path.name)
    if not path.is_file():
        raise MissingFile(f"image not found: {path}")
    media_type = MEDIA_TYPES[ext]
    data = path.read_bytes()
    if max_side is not None:
        data = _downscale(data, media_type, max_side)
    return media_type, base64.b64encode(data).decode("ascii")


def _downscale(data: bytes, media_type: str, max_side: int) -> bytes:
    from PIL import Image  # deferred: only the resize path needs it

    with Image.open(io.BytesIO(data)) as img:
        if max(img.size) <= max_side:
            return data
        img.thumbnail((max_side, max_side))
        buf = io.BytesIO()
        img.save(buf, format=_PIL_FORMATS[media_type])
        return buf.getvalue()


def build_messages(
    query: PlaceRecord,
    candidate: PlaceRecord,
    template: PromptTemplate | None = None,
    max_side: int | None = None,
) -> MessageSequence:
    """Build the two-message sequence for one pair: system text, then a user
    message holding the instruction text and both images, query first."""
    template = template or PromptTemplate.default()
    try:
        q_media, q_payload = encode_image_data_url(query.image_path, max_side=max_side)
    except MissingFile:
        raise MissingFile(f"query image missing: {query.image_path}") from None
    try:
        c_media, c_payload = encode_image_data_url(candidate.image_path, max_side=max_side)
    except MissingFile:
        raise MissingFile(f"candidate image missing: {candidate.image_path}") from None
    return (
        Message(role="system", parts=(TextPart(template.system_text),)),
        Message(
            role="user",
            parts=(
                TextPart(template.user_text),
                ImagePart(media_type=q_media, base64_data=q_payload),
                ImagePart(media_type=c_media, base64_data=c_payload),
            ),
        ),
    )
