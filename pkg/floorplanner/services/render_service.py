"""
Render service.
Draws a placement as SVG: die outline, labelled modules, I/O pin ticks and
highlighted overlap regions.
"""
from typing import Optional

import numpy as np
import svgwrite

from floorplanner.geometry import module_coordinates, overlapping_pairs
from floorplanner.models import Instance

MODULE_FILL = "#cfe2f3"
OVERLAP_FILL = "#e06666"
PIN_STROKE = "#38761d"


class RenderService:
    """SVG drawings of placements in die coordinates (y axis pointing up)."""

    def __init__(self, instance: Instance, labels: bool = True):
        self.instance = instance
        self.labels = labels
        self.stroke = 0.002 * instance.die.diagonal
        self.tick = 0.015 * instance.die.diagonal

    def _flip(self, y: float, height: float = 0.0) -> float:
        return self.instance.die.height - y - height

    def render(self, placement: Optional[np.ndarray] = None) -> svgwrite.Drawing:
        """
        Build the drawing.

        Args:
            placement: Coordinate vector of length 2N; None draws the outline only.

        Returns:
            svgwrite Drawing whose viewBox equals the die extents.
        """
        instance = self.instance
        die = instance.die
        drawing = svgwrite.Drawing(size=("100%", "100%"), profile="full")
        drawing.viewbox(0, 0, die.width, die.height)
        drawing.add(drawing.rect(insert=(0, 0), size=(die.width, die.height),
                                 fill="white", stroke="black", stroke_width=self.stroke,
                                 class_="die"))
        if placement is None:
            return drawing

        placement = np.asarray(placement, dtype=float)
        x, y = module_coordinates(instance, placement)
        modules = drawing.g(class_="modules")
        for module in instance.modules:
            i = module.index
            modules.add(drawing.rect(insert=(x[i], self._flip(y[i], module.height)),
                                     size=(module.width, module.height), fill=MODULE_FILL,
                                     stroke="black", stroke_width=self.stroke, class_="module"))
            if self.labels:
                font = 0.3 * min(module.width, module.height)
                modules.add(drawing.text(module.name or str(i),
                                         insert=(x[i] + module.width / 2,
                                                 self._flip(y[i] + module.height / 2)),
                                         text_anchor="middle", dominant_baseline="central",
                                         font_size=font, class_="label"))
        drawing.add(modules)

        overlaps = drawing.g(class_="overlaps")
        for i, j in overlapping_pairs(instance, placement):
            x_lo = max(x[i], x[j])
            x_hi = min(x[i] + instance.widths[i], x[j] + instance.widths[j])
            y_lo = max(y[i], y[j])
            y_hi = min(y[i] + instance.heights[i], y[j] + instance.heights[j])
            overlaps.add(drawing.rect(insert=(x_lo, self._flip(y_lo, y_hi - y_lo)),
                                      size=(x_hi - x_lo, y_hi - y_lo), fill=OVERLAP_FILL,
                                      fill_opacity=0.6, class_="overlap"))
        drawing.add(overlaps)

        pins = drawing.g(class_="io-pins")
        n, n_m = instance.n, instance.n_modules
        for io in instance.io_pins:
            if io.is_fixed:
                px, py = io.x, io.y
            else:
                px, py = placement[n_m + io.index], placement[n + n_m + io.index]
            if io.side in ("L", "R") or (io.side is None and min(px, die.width - px)
                                         <= min(py, die.height - py)):
                start, end = (px - self.tick / 2, py), (px + self.tick / 2, py)
            else:
                start, end = (px, py - self.tick / 2), (px, py + self.tick / 2)
            pins.add(drawing.line(start=(start[0], self._flip(start[1])),
                                  end=(end[0], self._flip(end[1])),
                                  stroke=PIN_STROKE, stroke_width=2 * self.stroke,
                                  class_="io-pin"))
        drawing.add(pins)
        return drawing


def render_svg(instance: Instance, placement: Optional[np.ndarray] = None,
               labels: bool = True) -> str:
    """SVG text of a placement."""
    return RenderService(instance, labels).render(placement).tostring()
