"""Inclusive integer bounding boxes as (x_min, y_min, x_max, y_max) tuples."""

from __future__ import annotations

Box = tuple[int, int, int, int]


def box_width(b: Box) -> int:
    return b[2] - b[0] + 1


def box_height(b: Box) -> int:
    return b[3] - b[1] + 1


def box_area(b: Box) -> int:
    return box_width(b) * box_height(b)


def box_center(b: Box) -> tuple[float, float]:
    return ((b[0] + b[2]) / 2.0, (b[1] + b[3]) / 2.0)


def box_contains(b: Box, x: int, y: int) -> bool:
    return b[0] <= x <= b[2] and b[1] <= y <= b[3]


def box_dilate(b: Box, margin: int) -> Box:
    return (b[0] - margin, b[1] - margin, b[2] + margin, b[3] + margin)


def box_union(a: Box, b: Box) -> Box:
    return (min(a[0], b[0]), min(a[1], b[1]), max(a[2], b[2]), max(a[3], b[3]))


def boxes_intersect(a: Box, b: Box) -> bool:
    return a[0] <= b[2] and b[0] <= a[2] and a[1] <= b[3] and b[1] <= a[3]


def box_intersection_area(a: Box, b: Box) -> int:
    w = min(a[2], b[2]) - max(a[0], b[0]) + 1
    h = min(a[3], b[3]) - max(a[1], b[1]) + 1
    if w <= 0 or h <= 0:
        return 0
    return w * h
