"""Parameter layouts: how a flat vector decomposes into named segments.

A layout is an ordered list of contiguous segments covering [0, d)
exactly.  Segment kinds:

  * dense-weight      — a flattened weight matrix
  * bias              — a bias vector
  * conv-filter-group — k convolution filters laid out back to back,
                        with declared per-filter sizes d_1..d_k

The conv-filter-group kind exists so per-filter norms can be computed
for the adaptive normalization operator; everything else is treated
coordinate-wise.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import FormatError, InvalidModelError

KINDS = ("dense-weight", "bias", "conv-filter-group")


@dataclass(frozen=True)
class Segment:
    name: str
    kind: str
    start: int
    size: int
    filter_sizes: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidModelError(f"segment {self.name!r}: unknown kind {self.kind!r}")
        if self.size < 1 or self.start < 0:
            raise InvalidModelError(f"segment {self.name!r}: bad extent [{self.start}, +{self.size})")
        if self.kind == "conv-filter-group":
            fs = self.filter_sizes
            if not fs or any(f < 1 for f in fs):
                raise InvalidModelError(f"segment {self.name!r}: a filter group needs k >= 1 filters of size >= 1")
            if sum(fs) != self.size:
                raise InvalidModelError(
                    f"segment {self.name!r}: filter sizes sum to {sum(fs)}, segment holds {self.size}")
        elif self.filter_sizes is not None:
            raise InvalidModelError(f"segment {self.name!r}: only filter groups declare filter sizes")

    @property
    def stop(self) -> int:
        return self.start + self.size


@dataclass(frozen=True)
class ParameterLayout:
    segments: tuple[Segment, ...]

    def __post_init__(self):
        offset = 0
        names = set()
        for seg in self.segments:
            if seg.name in names:
                raise InvalidModelError(f"duplicate segment name {seg.name!r}")
            names.add(seg.name)
            if seg.start != offset:
                raise InvalidModelError(
                    f"segment {seg.name!r} starts at {seg.start}, expected {offset} (must be contiguous)")
            offset = seg.stop
        if offset == 0:
            raise InvalidModelError("layout has no segments")

    @property
    def total(self) -> int:
        return self.segments[-1].stop

    def to_text(self) -> str:
        lines = [f"layout v1 total={self.total}"]
        for seg in self.segments:
            line = f"{seg.name} kind={seg.kind} start={seg.start} size={seg.size}"
            if seg.filter_sizes is not None:
                line += " filters=" + ",".join(str(f) for f in seg.filter_sizes)
            lines.append(line)
        return "\n".join(lines) + "\n"


def layout_from_text(text: str) -> ParameterLayout:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("layout v1 "):
        raise FormatError("layout sidecar: missing 'layout v1' header line")
    try:
        declared = int(lines[0].split("total=", 1)[1])
    except (IndexError, ValueError) as exc:
        raise FormatError(f"layout sidecar: bad header {lines[0]!r}") from exc
    segments = []
    for ln in lines[1:]:
        parts = ln.split()
        fields = {}
        for part in parts[1:]:
            if "=" not in part:
                raise FormatError(f"layout sidecar: bad field {part!r} in line {ln!r}")
            key, value = part.split("=", 1)
            fields[key] = value
        try:
            filters = None
            if "filters" in fields:
                filters = tuple(int(f) for f in fields["filters"].split(","))
            segments.append(Segment(
                name=parts[0], kind=fields["kind"], start=int(fields["start"]),
                size=int(fields["size"]), filter_sizes=filters))
        except (KeyError, ValueError) as exc:
            raise FormatError(f"layout sidecar: cannot parse line {ln!r}") from exc
    try:
        layout = ParameterLayout(tuple(segments))
    except InvalidModelError as exc:
        raise FormatError(f"layout sidecar: inconsistent layout: {exc}") from exc
    if layout.total != declared:
        raise FormatError(f"layout sidecar: header says total={declared}, segments cover {layout.total}")
    return layout


def dense_layout(sizes: list[tuple[str, str, int]]) -> ParameterLayout:
    """Build a layout from (name, kind, size) triples laid out in order."""
    segments = []
    offset = 0
    for name, kind, size in sizes:
        segments.append(Segment(name=name, kind=kind, start=offset, size=size))
        offset += size
    return ParameterLayout(tuple(segments))
