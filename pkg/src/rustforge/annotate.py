"""Bounding boxes from rendered id maps, and YOLO label serialization.

Boxes are modal: they wrap the object's *visible* pixels as recorded in the
frame's id map, so occlusion is handled exactly. Pixel boxes use inclusive
indices; the YOLO normalization therefore adds one to widths and heights,
which keeps 1-pixel objects representable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParseError
from .render import Frame

MIN_LABEL_PIXELS = 9  # objects with fewer visible pixels make degenerate labels


@dataclass(frozen=True)
class PixelBox:
    """Inclusive pixel-index bounds: x in [x_min, x_max], y in [y_min, y_max]."""

    x_min: int
    y_min: int
    x_max: int
    y_max: int

    def __post_init__(self):
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(f"degenerate pixel box {self}")
        if self.x_min < 0 or self.y_min < 0:
            raise ValueError(f"negative pixel index in {self}")


@dataclass(frozen=True)
class YoloAnnotation:
    """Normalized center/size box with its class id."""

    class_id: int
    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        for lo, hi in ((self.cx - self.w / 2, self.cx + self.w / 2), (self.cy - self.h / 2, self.cy + self.h / 2)):
            if lo < -1e-9 or hi > 1.0 + 1e-9:
                raise ValueError(f"box extends outside [0, 1]: {self}")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box must have positive size: {self}")


def bbox_from_idmap(frame: Frame, object_id: int) -> PixelBox | None:
    """Tight box over pixels carrying ``object_id``; None when absent."""
    ys, xs = np.nonzero(frame.id_map == object_id)
    if len(xs) == 0:
        return None
    return PixelBox(int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max()))


def visible_pixel_count(frame: Frame, object_id: int) -> int:
    return int(np.count_nonzero(frame.id_map == object_id))


def to_yolo(box: PixelBox, resolution: tuple[int, int], class_id: int) -> YoloAnnotation:
    """Convert an inclusive pixel box to normalized YOLO center/size."""
    w, h = resolution
    return YoloAnnotation(
        class_id=class_id,
        cx=(box.x_min + box.x_max + 1) / (2 * w),
        cy=(box.y_min + box.y_max + 1) / (2 * h),
        w=(box.x_max - box.x_min + 1) / w,
        h=(box.y_max - box.y_min + 1) / h,
    )


def to_pixel_box(anno: YoloAnnotation, resolution: tuple[int, int]) -> PixelBox:
    """Inverse of to_yolo under the same inclusive-index convention."""
    w, h = resolution
    x_min = round(anno.cx * w - anno.w * w / 2)
    x_max = round(anno.cx * w + anno.w * w / 2) - 1
    y_min = round(anno.cy * h - anno.h * h / 2)
    y_max = round(anno.cy * h + anno.h * h / 2) - 1
    return PixelBox(x_min, y_min, x_max, y_max)


def write_label_file(annotations: list[YoloAnnotation], sink) -> None:
    """Write YOLO label lines: ``<class> <cx> <cy> <w> <h>``, 6 decimals, LF."""
    for a in annotations:
        sink.write(f"{a.class_id} {a.cx:.6f} {a.cy:.6f} {a.w:.6f} {a.h:.6f}\n")


def parse_label_file(source) -> list[YoloAnnotation]:
    """Parse YOLO label lines back into annotations.

    Raises:
        ParseError: wrong field count or malformed numbers, with line number.
    """
    out = []
    for line_no, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 5:
            raise ParseError(f"expected 5 fields, got {len(fields)}", line_no)
        try:
            class_id = int(fields[0])
            cx, cy, w, h = (float(f) for f in fields[1:])
        except ValueError:
            raise ParseError(f"malformed label line {line!r}", line_no) from None
        out.append(YoloAnnotation(class_id, cx, cy, w, h))
    return out
