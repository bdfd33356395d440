"""Scene files: a small key/table plain-text format, schema version 1.

Sections and keys::

    scene_version = 1

    [chart]
    coords   = ["r", "theta", "t"]
    box      = [[0.0, 1.0], [0.0, 6.2832], [0.0, 6.2832]]
    periodic = [false, true, true]
    sigma    = [["r", 0.0, 2]]          # coordinate, value, codimension

    [forms]
    omega       = ["-sin(t)", "0", "cos(t)"]   # components, increasing index order
    frame_forms = [["...", "...", "..."]]      # optional one-form frame

    [frame]
    T1 = ["-sin(t)", "0", "cos(t)"]

    [d_frame]                                  # optional: synthesize a metric
    E1 = ["0", "1", "0"]

    [metric]                                   # optional explicit metric
    rows = [["1","0","0"], ["0","1","0"], ["0","0","1"]]

    [parameters]
    A0 = 1.0

    [options]
    jet_order = 4
    seed = 2024
    samples = 256
    integrable_ker = true

    [quadrature]
    resolution = [64, 64, 64]
    eps0 = 0.01

Values are numbers, booleans, double-quoted strings, or (nested) arrays;
arrays may span lines.  Parse errors carry the line number.
"""

import math

from .errors import SceneError
from .fields import (
    Chart,
    ExprFormField,
    FramedScene,
    MetricField,
    SigmaLocus,
    VectorField,
)

__all__ = ["parse_config", "load_scene", "scene_from_config"]


def _parse_value(text, line_no):
    text = text.strip()
    pos = 0

    def err(msg):
        raise SceneError(f"line {line_no}: {msg}")

    def skip_ws(i):
        while i < len(text) and text[i] in " \t":
            i += 1
        return i

    def value(i):
        i = skip_ws(i)
        if i >= len(text):
            err("missing value")
        c = text[i]
        if c == "[":
            out = []
            i += 1
            i = skip_ws(i)
            if i < len(text) and text[i] == "]":
                return out, i + 1
            while True:
                v, i = value(i)
                out.append(v)
                i = skip_ws(i)
                if i >= len(text):
                    err("unterminated array")
                if text[i] == ",":
                    i += 1
                    continue
                if text[i] == "]":
                    return out, i + 1
                err(f"expected ',' or ']' near ...{text[i:i+10]!r}")
        if c == '"':
            j = text.find('"', i + 1)
            if j < 0:
                err("unterminated string")
            return text[i + 1 : j], j + 1
        # bare token: number or boolean
        j = i
        while j < len(text) and text[j] not in ",]\t ":
            j += 1
        tok = text[i:j]
        if tok == "true":
            return True, j
        if tok == "false":
            return False, j
        try:
            return (int(tok) if _is_int(tok) else float(tok)), j
        except ValueError:
            err(f"cannot parse value {tok!r}")

    v, i = value(0)
    i = skip_ws(i)
    if i != len(text):
        err(f"trailing content {text[i:]!r}")
    return v


def _is_int(tok):
    try:
        int(tok)
        return True
    except ValueError:
        return False


def parse_config(text):
    """Parse the key/table format into {section: {key: value}}."""
    sections = {"": {}}
    current = sections[""]
    pending_key = None
    pending_val = ""
    pending_line = 0
    depth = 0

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if depth > 0:
            pending_val += " " + line.strip()
            depth += line.count("[") - line.count("]")
            if depth == 0:
                current[pending_key] = _parse_value(pending_val, pending_line)
                pending_key = None
            elif depth < 0:
                raise SceneError(f"line {line_no}: unbalanced brackets")
            continue
        if not line.strip():
            continue
        s = line.strip()
        if s.startswith("["):
            if not s.endswith("]") or s.count("[") != 1:
                raise SceneError(f"line {line_no}: malformed section header")
            name = s[1:-1].strip()
            current = sections.setdefault(name, {})
            continue
        if "=" not in s:
            raise SceneError(f"line {line_no}: expected key = value")
        key, val = s.split("=", 1)
        key = key.strip()
        depth = val.count("[") - val.count("]")
        if depth > 0:
            pending_key, pending_val, pending_line = key, val, line_no
        else:
            current[key] = _parse_value(val, line_no)
    if pending_key is not None:
        raise SceneError(f"line {pending_line}: unterminated array for '{pending_key}'")
    return sections


def scene_from_config(cfg):
    """Validate a parsed config into (FramedScene, options dict)."""
    top = cfg.get("", {})
    version = top.get("scene_version")
    if version != 1:
        raise SceneError(f"unsupported scene_version {version!r} (want 1)")
    try:
        ch = cfg["chart"]
    except KeyError:
        raise SceneError("missing [chart] section") from None
    coords = ch.get("coords")
    if not coords or not all(isinstance(c, str) for c in coords):
        raise SceneError("[chart] coords must be a list of names")
    box = ch.get("box")
    periodic = ch.get("periodic", [False] * len(coords))
    sigma_rows = ch.get("sigma", [])
    sigma = []
    for row in sigma_rows:
        if len(row) != 3 or row[0] not in coords:
            raise SceneError(f"[chart] bad sigma row {row!r}")
        sigma.append(SigmaLocus(coords.index(row[0]), float(row[1]), int(row[2])))
    try:
        chart = Chart(coords, box, periodic, sigma)
    except Exception as exc:
        raise SceneError(f"[chart] {exc}") from exc

    n = chart.dim
    if n % 2 != 1:
        raise SceneError("chart dimension must be odd (2q + 1)")
    q = (n - 1) // 2

    params = {k: float(v) for k, v in cfg.get("parameters", {}).items()}

    forms = cfg.get("forms", {})
    if "omega" not in forms:
        raise SceneError("missing [forms] omega")

    def parse_form(name, srcs, degree):
        try:
            return ExprFormField.parse(chart, degree, [str(s) for s in srcs], params)
        except Exception as exc:
            raise SceneError(f"[forms] {name}: {exc}") from exc

    omega = parse_form("omega", forms["omega"], q)
    frame_forms = None
    if forms.get("frame_forms"):
        frame_forms = [
            parse_form(f"frame_forms[{i}]", row, 1)
            for i, row in enumerate(forms["frame_forms"])
        ]
        if len(frame_forms) != q:
            raise SceneError(f"[forms] frame_forms must list q = {q} one-forms")

    frame_cfg = cfg.get("frame", {})
    if not frame_cfg:
        raise SceneError("missing [frame] section with T1..Tq")
    frame = []
    for i in range(1, q + 1):
        key = f"T{i}"
        if key not in frame_cfg:
            raise SceneError(f"[frame] missing {key}")
        try:
            frame.append(VectorField.parse(chart, [str(s) for s in frame_cfg[key]], params))
        except Exception as exc:
            raise SceneError(f"[frame] {key}: {exc}") from exc

    d_frame = None
    if "d_frame" in cfg and cfg["d_frame"]:
        d_frame = []
        for key in sorted(cfg["d_frame"]):
            try:
                d_frame.append(
                    VectorField.parse(chart, [str(s) for s in cfg["d_frame"][key]], params)
                )
            except Exception as exc:
                raise SceneError(f"[d_frame] {key}: {exc}") from exc
        if len(d_frame) != q + 1:
            raise SceneError(f"[d_frame] needs q + 1 = {q + 1} fields")

    metric = None
    if "metric" in cfg and cfg["metric"]:
        rows = cfg["metric"].get("rows")
        if not rows or len(rows) != n or any(len(r) != n for r in rows):
            raise SceneError("[metric] rows must be an n-by-n matrix of expressions")
        try:
            metric = MetricField.parse(chart, [[str(e) for e in r] for r in rows], params)
        except Exception as exc:
            raise SceneError(f"[metric] {exc}") from exc

    opts = dict(cfg.get("options", {}))
    declared = {}
    for key in ("integrable_ker", "integrable_normal", "integrable_binormal"):
        if key in opts:
            declared[key] = bool(opts.pop(key))
    scene = FramedScene(
        chart,
        omega,
        frame,
        metric=metric,
        frame_forms=frame_forms,
        d_frame=d_frame,
        jet_order=int(opts.get("jet_order", 4)),
        seed=int(opts.get("seed", 2024)),
        nsamples=int(opts.get("samples", 256)),
        declared=declared,
    )
    options = {
        "quadrature": dict(cfg.get("quadrature", {})),
        "options": opts,
        "parameters": params,
    }
    try:
        scene.check_normalization()
    except Exception as exc:
        raise SceneError(f"scene validation: {exc}") from exc
    return scene, options


def load_scene(path_or_text):
    """Load a scene from a file path or raw text."""
    text = path_or_text
    if "\n" not in path_or_text and path_or_text.endswith(".scene"):
        with open(path_or_text, "r", encoding="utf-8") as fh:
            text = fh.read()
    return scene_from_config(parse_config(text))


def format_pi(x):
    """Print 2 pi-ish bounds exactly enough to round-trip."""
    return f"{x:.17g}"


TWO_PI = 2 * math.pi
