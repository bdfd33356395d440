"""Canonical example scenes used by the test suite and shipped as files.

Every builder returns a validated FramedScene.  The tilted torus is the
nonzero-invariant workhorse (its number is -(2 pi)^3); the contact torus
has vanishing transverse torsion (harmonic normal distribution under the
synthesized metric); the twisted-graph scenes carry nonzero first
variations in all three admissible directions.
"""

import math

from .fields import (
    Chart,
    ExprField,
    ExprFormField,
    FramedScene,
    MetricField,
    VectorField,
)

TWO_PI = 2 * math.pi

__all__ = [
    "t3_tilted",
    "t3_contact",
    "twisted_graph_a",
    "twisted_graph_b",
    "helix_scene",
    "q2_box",
    "scene_text",
]


def _torus_chart():
    return Chart(["x", "y", "z"], [[0, TWO_PI]] * 3, periodic=[True] * 3)


def t3_tilted(jet_order=4, with_metric=True, seed=2024):
    """omega = cos z dx + sin z dy, T = cos z d/dx + sin z d/dy + d/dz."""
    chart = _torus_chart()
    omega = ExprFormField.parse(chart, 1, ["cos(z)", "sin(z)", "0"])
    T = VectorField.parse(chart, ["cos(z)", "sin(z)", "1"])
    d_frame = None
    if with_metric:
        d_frame = [
            VectorField.parse(chart, ["-sin(z)", "cos(z)", "0"]),
            VectorField.parse(chart, ["0", "0", "1"]),
        ]
    return FramedScene(chart, omega, [T], d_frame=d_frame, jet_order=jet_order, seed=seed)


def t3_contact(jet_order=4, seed=2024):
    """Same one-form with its transverse rotation field; eta vanishes."""
    chart = _torus_chart()
    omega = ExprFormField.parse(chart, 1, ["cos(z)", "sin(z)", "0"])
    T = VectorField.parse(chart, ["cos(z)", "sin(z)", "0"])
    d_frame = [
        VectorField.parse(chart, ["-sin(z)", "cos(z)", "0"]),
        VectorField.parse(chart, ["0", "0", "1"]),
    ]
    return FramedScene(chart, omega, [T], d_frame=d_frame, jet_order=jet_order, seed=seed)


GRAPH_A = ("0.3*sin(z)*cos(x)", "0.2*cos(x)*cos(y+z)")
GRAPH_B = ("0.4*sin(y)", "0.3*cos(x) + 0.2*sin(z)*sin(x)")


def _twisted_graph(a, b, jet_order):
    chart = _torus_chart()
    omega = ExprFormField.parse(chart, 1, [a, b, "1"])
    T = VectorField.parse(chart, ["0", "0", "1"])
    return FramedScene(chart, omega, [T], jet_order=jet_order)


def twisted_graph_a(jet_order=4):
    """T = d/dz with a twisting kernel; nonzero rescaling-type variations."""
    return _twisted_graph(*GRAPH_A, jet_order)


def twisted_graph_b(jet_order=4):
    """T = d/dz variant with nonzero frame-shift variations."""
    return _twisted_graph(*GRAPH_B, jet_order)


def helix_scene(pitch=0.7, jet_order=4):
    """Unit field tangent to coaxial helices in flat space, Euclidean metric."""
    chart = Chart(["x", "y", "z"], [[0.6, 1.4], [0.6, 1.4], [0.0, 1.0]])
    nrm = f"sqrt(x^2 + y^2 + {pitch * pitch})"
    comps = [f"-y/{nrm}", f"x/{nrm}", f"{pitch}/{nrm}"]
    omega = ExprFormField.parse(chart, 1, comps)
    T = VectorField.parse(chart, comps)
    metric = MetricField.parse(chart, [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]])
    return FramedScene(chart, omega, [T], metric=metric, jet_order=jet_order)


def q2_box(jet_order=4, tilt_frame=True):
    """A q = 2 scene on a 5-dimensional box with a synthesized metric.

    omega = (dx + a dz) ^ (dy + b du); T_2 = d/dy and T_1 = d/dx plus a
    kernel-valued tilt (so the transverse mean curvature is nonzero while
    the transverse frame still commutes).  The kernel frame is supplied
    for metric synthesis, the one-form frame for averaged-integrability
    functionals.
    """
    chart = Chart(
        ["x", "y", "z", "u", "v"],
        [[0, TWO_PI]] * 5,
        periodic=[True] * 5,
    )
    a = "0.3*sin(z + u)"
    b = "0.2*cos(u) + 0.1*sin(v)"
    w1 = ["1", "0", a, "0", "0"]
    w2 = ["0", "1", "0", b, "0"]
    omega1 = ExprFormField.parse(chart, 1, w1)
    omega2 = ExprFormField.parse(chart, 1, w2)

    # omega = (dx + a dz) ^ (dy + b du)
    #       = dx^dy + b dx^du - a dy^dz + a b dz^du
    from .exterior import increasing_tuples, tuple_index

    af = ExprField.parse(a, chart)
    bf = ExprField.parse(b, chart)
    comps = [0.0] * len(increasing_tuples(5, 2))
    idx = tuple_index(5, 2)
    comps[idx[(0, 1)]] = 1.0
    comps[idx[(0, 3)]] = bf
    comps[idx[(1, 2)]] = -1 * af
    comps[idx[(2, 3)]] = af * bf
    omega = ExprFormField(chart, 2, comps)

    if tilt_frame:
        # T_1 = d/dx + 0.4 cos(z) (d/dz - a d/dx): in the kernel direction,
        # so the normalization is untouched and [T_1, T_2] = 0
        psi = "0.4*cos(z)"
        T1 = VectorField.parse(
            chart, [f"1 - ({psi})*({a})", "0", psi, "0", "0"]
        )
    else:
        T1 = VectorField.parse(chart, ["1", "0", "0", "0", "0"])
    T2 = VectorField.parse(chart, ["0", "1", "0", "0", "0"])
    d_frame = [
        VectorField.parse(chart, [f"-({a})", "0", "1", "0", "0"]),
        VectorField.parse(chart, ["0", f"-({b})", "0", "1", "0"]),
        VectorField.parse(chart, ["0", "0", "0", "0", "1"]),
    ]
    return FramedScene(
        chart,
        omega,
        [T1, T2],
        frame_forms=[omega1, omega2],
        d_frame=d_frame,
        jet_order=jet_order,
    )


def scene_text(name):
    """Scene-file text for the named gallery entry (schema version 1)."""
    b = f"{TWO_PI:.17g}"
    if name == "t3_tilted":
        return f"""scene_version = 1

[chart]
coords   = ["x", "y", "z"]
box      = [[0.0, {b}], [0.0, {b}], [0.0, {b}]]
periodic = [true, true, true]

[forms]
omega       = ["cos(z)", "sin(z)", "0"]
frame_forms = [["cos(z)", "sin(z)", "0"]]

[frame]
T1 = ["cos(z)", "sin(z)", "1"]

[d_frame]
E1 = ["-sin(z)", "cos(z)", "0"]
E2 = ["0", "0", "1"]

[options]
jet_order = 4
seed = 2024
samples = 256
"""
    if name == "t3_contact":
        return f"""scene_version = 1

[chart]
coords   = ["x", "y", "z"]
box      = [[0.0, {b}], [0.0, {b}], [0.0, {b}]]
periodic = [true, true, true]

[forms]
omega = ["cos(z)", "sin(z)", "0"]

[frame]
T1 = ["cos(z)", "sin(z)", "0"]

[d_frame]
E1 = ["-sin(z)", "cos(z)", "0"]
E2 = ["0", "0", "1"]

[options]
jet_order = 4
seed = 2024
samples = 256
"""
    if name == "twisted_graph_a":
        a, bb = GRAPH_A
        return f"""scene_version = 1

[chart]
coords   = ["x", "y", "z"]
box      = [[0.0, {b}], [0.0, {b}], [0.0, {b}]]
periodic = [true, true, true]

[forms]
omega = ["{a}", "{bb}", "1"]

[frame]
T1 = ["0", "0", "1"]

[options]
jet_order = 4
seed = 2024
samples = 256
"""
    raise KeyError(name)
