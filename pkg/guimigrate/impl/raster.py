"""
Screenshot rendering for the simulator and numbered-box overlays for annotated pages.

Simulator screenshots are a deterministic raster: a solid background and one filled rectangle
per visible widget, colored from a hash of (class_name, text), with a 1-pixel black border. No
glyphs are drawn. Output is binary PPM (P6).
"""

import hashlib
from io import BytesIO
from typing import Iterable, Tuple

from PIL import Image, ImageDraw

from guimigrate.model import Bounds, Screenshot, Widget
from guimigrate.util import log

FORMAT_PPM = 'ppm'
FORMAT_PNG = 'png'

BACKGROUND = (245, 245, 245)
BORDER = (0, 0, 0)
LABEL_COLOR = (230, 20, 20)
LABEL_TEXT = (255, 255, 255)


def widget_color(widget: Widget) -> Tuple[int, int, int]:
    digest = hashlib.sha256(('%s\x00%s' % (widget.class_name, widget.text)).encode('utf-8')).digest()
    return digest[0], digest[1], digest[2]


def render_screenshot(root: Widget, width: int, height: int) -> Screenshot:
    image = Image.new('RGB', (width, height), BACKGROUND)
    draw = ImageDraw.Draw(image)
    for widget in _visible_pre_order(root):
        if widget.node_path == ():
            continue
        b = widget.bounds
        if b.width <= 0 or b.height <= 0:
            continue
        draw.rectangle([b.x1, b.y1, b.x2 - 1, b.y2 - 1], fill=widget_color(widget), outline=BORDER, width=1)
    return Screenshot(_encode(image, FORMAT_PPM), width, height, FORMAT_PPM)


def draw_labels(screenshot: Screenshot, boxes: Iterable[Tuple[int, Bounds]]) -> Screenshot:
    """Draws one numbered box per (label, bounds) over a copy of the screenshot.

    Screenshots Pillow cannot decode are returned unchanged.
    """
    try:
        image = Image.open(BytesIO(screenshot.data)).convert('RGB')
    except Exception as e:
        log.warning("Cannot decode %s screenshot for annotation, leaving it unannotated: %s", screenshot.format, e)
        return screenshot
    draw = ImageDraw.Draw(image)
    for label, b in boxes:
        if b.width <= 0 or b.height <= 0:
            continue
        draw.rectangle([b.x1, b.y1, b.x2 - 1, b.y2 - 1], outline=LABEL_COLOR, width=2)
        tag = str(label)
        tag_w = 6 * len(tag) + 4
        draw.rectangle([b.x1, b.y1, b.x1 + tag_w, b.y1 + 12], fill=LABEL_COLOR)
        draw.text((b.x1 + 2, b.y1 + 1), tag, fill=LABEL_TEXT)
    fmt = screenshot.format if screenshot.format in (FORMAT_PPM, FORMAT_PNG) else FORMAT_PNG
    return Screenshot(_encode(image, fmt), image.width, image.height, fmt)


def to_png(screenshot: Screenshot) -> bytes:
    """Returns PNG bytes for the wire; PNG input passes through untouched."""
    if screenshot.format == FORMAT_PNG:
        return screenshot.data
    image = Image.open(BytesIO(screenshot.data)).convert('RGB')
    return _encode(image, FORMAT_PNG)


def _encode(image: Image.Image, fmt: str) -> bytes:
    buf = BytesIO()
    image.save(buf, format=fmt.upper())
    return buf.getvalue()


def _visible_pre_order(root: Widget):
    stack = [root]
    while stack:
        node = stack.pop()
        if not node.flags.visible:
            continue
        yield node
        stack.extend(reversed(node.children))
