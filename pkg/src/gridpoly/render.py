"""SVG rendering of polygons with an optional walk overlay.

Free cells are ``<rect class="free">`` (the start is ``class="free start"``)
with the cell coordinates in ``data-x``/``data-y``, so :func:`parse_svg`
recovers the polygon exactly.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from typing import Sequence

from .grid import Cell, GridPolygon, polygon_from_cells

CELL = 20
PATH_COLOUR = "#1f4fd1"
_NS = "http://www.w3.org/2000/svg"


def render_svg(polygon: GridPolygon, path: Sequence[Cell] | None = None, cell: int = CELL) -> str:
    x0, y0, x1, y1 = polygon.bbox()
    x0, y0, x1, y1 = x0 - 1, y0 - 1, x1 + 1, y1 + 1
    width = (x1 - x0 + 1) * cell
    height = (y1 - y0 + 1) * cell

    def corner(c: Cell) -> tuple[int, int]:
        return (c.x - x0) * cell, (y1 - c.y) * cell

    root = ET.Element(
        "svg",
        {
            "xmlns": _NS,
            "width": str(width),
            "height": str(height),
            "viewBox": f"0 0 {width} {height}",
        },
    )
    ET.SubElement(root, "rect", {"width": str(width), "height": str(height), "fill": "#9a9a9a"})
    for c in sorted(polygon.free_cells, key=lambda c: (-c.y, c.x)):
        px, py = corner(c)
        cls = "free start" if c == polygon.start else "free"
        ET.SubElement(
            root,
            "rect",
            {
                "class": cls,
                "data-x": str(c.x),
                "data-y": str(c.y),
                "x": str(px),
                "y": str(py),
                "width": str(cell),
                "height": str(cell),
                "fill": "#ffe9a8" if c == polygon.start else "#ffffff",
                "stroke": "#cccccc",
            },
        )
    if path:
        half = cell // 2
        points = " ".join(f"{corner(c)[0] + half},{corner(c)[1] + half}" for c in path)
        ET.SubElement(
            root,
            "polyline",
            {
                "class": "path",
                "points": points,
                "fill": "none",
                "stroke": PATH_COLOUR,
                "stroke-width": str(max(2, cell // 6)),
                "stroke-linejoin": "round",
            },
        )
    ET.indent(root)
    return ET.tostring(root, encoding="unicode") + "\n"


def parse_svg(text: str) -> GridPolygon:
    """Recover the polygon from :func:`render_svg` output."""
    root = ET.fromstring(text)
    cells: list[Cell] = []
    start = None
    for el in root.iter():
        if not el.tag.endswith("rect"):
            continue
        classes = el.get("class", "").split()
        if "free" not in classes:
            continue
        c = Cell(int(el.get("data-x")), int(el.get("data-y")))
        cells.append(c)
        if "start" in classes:
            start = c
    if start is None:
        raise ValueError("no start cell in SVG")
    return polygon_from_cells(cells, start)
