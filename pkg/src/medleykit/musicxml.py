"""Read compressed (.mxl) or plain MusicXML into a ScoreDocument.

Only what the transition labeler needs is kept: measure order, text
directions, time signatures and repeat barlines.  Both ``score-partwise``
and ``score-timewise`` documents are accepted.
"""
from __future__ import annotations

import io
import xml.etree.ElementTree as ET
import zipfile

from .core import MedleyError, Measure, ScoreDocument

CONTAINER_PATH = "META-INF/container.xml"


class MusicXMLError(MedleyError):
    pass


class NotAZipOrXml(MusicXMLError):
    pass


class MissingContainerRootfile(MusicXMLError):
    pass


class XmlSyntax(MusicXMLError):
    def __init__(self, message: str, position: tuple | None = None):
        super().__init__(message if position is None else f"{message} at line {position[0]}, column {position[1]}")
        self.position = position


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _child(element: ET.Element, name: str):
    return next((c for c in element if _local(c.tag) == name), None)


def _parse_xml(data: bytes) -> ET.Element:
    try:
        return ET.fromstring(data)
    except ET.ParseError as exc:
        raise XmlSyntax(f"malformed XML: {exc.msg}", exc.position) from None


def _looks_like_xml(data: bytes) -> bool:
    head = data.lstrip(b"\xef\xbb\xbf \t\r\n")[:1]
    return head == b"<"


def read_score_root(data: bytes) -> ET.Element:
    """Root element of the MusicXML score held in ``data`` (zipped or not)."""
    if data[:4] == b"PK\x03\x04":
        try:
            archive = zipfile.ZipFile(io.BytesIO(data))
        except zipfile.BadZipFile as exc:
            raise NotAZipOrXml(f"corrupt ZIP container: {exc}") from None
        with archive:
            if CONTAINER_PATH not in archive.namelist():
                raise MissingContainerRootfile(f"{CONTAINER_PATH} not found in archive")
            container = _parse_xml(archive.read(CONTAINER_PATH))
            rootfile = container.find(".//{*}rootfile")
            if rootfile is None:
                rootfile = container.find(".//rootfile")
            path = rootfile.get("full-path") if rootfile is not None else None
            if not path:
                raise MissingContainerRootfile("container.xml names no rootfile")
            try:
                payload = archive.read(path)
            except KeyError:
                raise MissingContainerRootfile(f"rootfile {path!r} missing from archive") from None
        return _parse_xml(payload)
    if not _looks_like_xml(data):
        raise NotAZipOrXml("input is neither a ZIP archive nor an XML document")
    return _parse_xml(data)


def _direction_texts(direction: ET.Element):
    placement = direction.get("placement", "")
    for dtype in direction.iter():
        if _local(dtype.tag) != "direction-type":
            continue
        words = [w.text or "" for w in dtype if _local(w.tag) in ("words", "rehearsal")]
        text = "".join(words).strip()
        if text:
            yield text, placement


class _MeasureState:
    def __init__(self):
        self.annotations = []
        self.time_signature = None
        self.repeat_start = False
        self.repeat_end = None
        self.number = ""
        self.unsupported = set()

    def absorb(self, measure: ET.Element):
        if not self.number:
            self.number = measure.get("number", "")
        for child in measure.iter():
            tag = _local(child.tag)
            if tag == "direction":
                self.annotations.extend(_direction_texts(child))
            elif tag == "time" and self.time_signature is None:
                beats = _child(child, "beats")
                beat_type = _child(child, "beat-type")
                if beats is not None and beat_type is not None:
                    try:
                        self.time_signature = (int(beats.text), int(beat_type.text))
                    except (TypeError, ValueError):
                        pass  # compound signatures like "3+2" are ignored
            elif tag == "repeat":
                if child.get("direction") == "forward":
                    self.repeat_start = True
                elif child.get("direction") == "backward":
                    times = child.get("times")
                    count = int(times) if times and times.isdigit() and int(times) >= 1 else 2
                    self.repeat_end = max(self.repeat_end or 0, count)
            elif tag == "ending":
                self.unsupported.add("ending")
            elif tag in ("segno", "coda"):
                self.unsupported.add(tag)
            elif tag == "sound":
                for attr in ("dacapo", "dalsegno", "tocoda", "fine"):
                    if child.get(attr):
                        self.unsupported.add(attr)

    def build(self, index: int) -> Measure:
        return Measure(
            index_real=index,
            annotations=tuple(self.annotations),
            time_signature=self.time_signature,
            repeat_start=self.repeat_start,
            repeat_end=self.repeat_end,
            number=self.number,
            unsupported=tuple(sorted(self.unsupported)),
        )


def _title(root: ET.Element) -> str:
    work = _child(root, "work")
    candidates = (_child(work, "work-title") if work is not None else None, _child(root, "movement-title"))
    for node in candidates:
        if node is not None and node.text:
            return node.text.strip()
    return ""


def score_from_root(root: ET.Element) -> ScoreDocument:
    kind = _local(root.tag)
    if kind not in ("score-partwise", "score-timewise"):
        raise MusicXMLError(f"unexpected root element <{kind}>")
    states = []
    part_ids = []
    if kind == "score-partwise":
        for part in (c for c in root if _local(c.tag) == "part"):
            part_ids.append(part.get("id", ""))
            for i, measure in enumerate(m for m in part if _local(m.tag) == "measure"):
                if i == len(states):
                    states.append(_MeasureState())
                states[i].absorb(measure)
    else:
        for measure in (c for c in root if _local(c.tag) == "measure"):
            state = _MeasureState()
            state.number = measure.get("number", "")
            for part in (c for c in measure if _local(c.tag) == "part"):
                pid = part.get("id", "")
                if pid not in part_ids:
                    part_ids.append(pid)
                state.absorb(part)
            states.append(state)
    return ScoreDocument(
        measures=tuple(s.build(i) for i, s in enumerate(states, start=1)),
        parts=tuple(part_ids),
        title=_title(root),
    )


def parse_mxl(data: bytes) -> ScoreDocument:
    """Parse MXL (ZIP with ``META-INF/container.xml``) or bare MusicXML bytes.

    Measures are indexed 1.. in notation order, independent of the
    ``number`` attribute (kept on :attr:`Measure.number`).  Annotations of
    every part are merged into their measure in document order.
    """
    return score_from_root(read_score_root(data))
