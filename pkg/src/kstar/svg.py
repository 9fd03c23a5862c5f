"""Minimal SVG document builder (no rendering dependencies)."""

from __future__ import annotations

from xml.sax.saxutils import escape, quoteattr


def _num(v: float) -> str:
    s = f"{v:.2f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


class SVG:
    def __init__(self, width: float, height: float, title: str | None = None):
        self.width = width
        self.height = height
        self.parts: list[str] = []
        if title:
            self.parts.append(f"<title>{escape(title)}</title>")

    def _attrs(self, extra: dict) -> str:
        return "".join(f" {k.replace('_', '-')}={quoteattr(str(v))}" for k, v in extra.items())

    def rect(self, x, y, w, h, fill, **extra) -> None:
        self.parts.append(
            f'<rect x="{_num(x)}" y="{_num(y)}" width="{_num(w)}" height="{_num(h)}" '
            f'fill="{fill}"{self._attrs(extra)}/>'
        )

    def line(self, x1, y1, x2, y2, stroke="#000000", **extra) -> None:
        self.parts.append(
            f'<line x1="{_num(x1)}" y1="{_num(y1)}" x2="{_num(x2)}" y2="{_num(y2)}" '
            f'stroke="{stroke}"{self._attrs(extra)}/>'
        )

    def text(self, x, y, s: str, **extra) -> None:
        self.parts.append(f'<text x="{_num(x)}" y="{_num(y)}"{self._attrs(extra)}>{escape(s)}</text>')

    def raw(self, fragment: str) -> None:
        self.parts.append(fragment)

    def render(self) -> str:
        head = (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            f'width="{_num(self.width)}" height="{_num(self.height)}" '
            f'viewBox="0 0 {_num(self.width)} {_num(self.height)}" '
            'font-family="sans-serif">\n'
        )
        return head + "\n".join(self.parts) + "\n</svg>\n"
