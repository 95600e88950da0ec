"""SVG Gantt charts of plans: one lane per hoist, then one per tank.

Hoist lanes show every action as a bar; tank lanes show the intervals during
which a product sits in the tank.  Horizontal geometry is exact: a bar for
``[start, end)`` spans ``x = LEFT + start * scale`` with width
``(end - start) * scale``.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

from .core.model import MOVE, PICKUP, PUTDOWN, Instance, Plan, TankKind

LEFT = 80
TOP = 20
LANE = 24
BAR = 16
COLORS = {MOVE: "#8fb8de", PICKUP: "#e07a5f", PUTDOWN: "#81b29a", "stay": "#f2cc8f"}


def occupancy(plan: Plan, inst: Instance) -> list[tuple[int, int, int, int]]:
    """``(tank, product, enter, leave)`` for every processing-tank stay in ``plan``."""
    enter: dict[tuple[int, int], int] = {}
    out = []
    for a in plan.actions:
        act = a.action
        if act.name == MOVE or inst.tanks[act.tank].kind is not TankKind.PROCESSING:
            continue
        key = (act.tank, act.product)
        if act.name == PUTDOWN:
            enter[key] = a.end
        elif act.name == PICKUP:
            t0 = enter.pop(key, 0 if inst.products[act.product].initial_location == act.tank else None)
            if t0 is not None:
                out.append((act.tank, act.product, t0, a.start))
    end = max([a.end for a in plan.actions], default=0)
    for (t, p), t0 in enter.items():
        out.append((t, p, t0, end))
    return sorted(out)


def render_svg(plan: Plan, inst: Instance, scale: float = 1.0) -> str:
    nh, nt = len(inst.hoists), len(inst.tanks)
    horizon = max([a.end for a in plan.actions], default=0)
    width = LEFT + horizon * scale + 20
    height = TOP + (nh + nt) * LANE + 20

    def num(x: float) -> str:
        return f"{x:.2f}".rstrip("0").rstrip(".")

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{num(width)}" height="{num(height)}" '
        f'viewBox="0 0 {num(width)} {num(height)}">',
        '<style>text{font-family:monospace;font-size:11px}</style>',
    ]
    labels = [f"H{h}" for h in range(nh)] + [f"T{t}" for t in range(nt)]
    for i, name in enumerate(labels):
        y = TOP + i * LANE
        out.append(f'<text x="4" y="{num(y + BAR - 3)}">{name}</text>')
        out.append(f'<line x1="{LEFT}" y1="{num(y + LANE - 2)}" x2="{num(width - 20)}" '
                   f'y2="{num(y + LANE - 2)}" stroke="#ddd"/>')

    def bar(lane: int, start: int, dur: int, color: str, title: str):
        y = TOP + lane * LANE
        out.append(f'<rect x="{num(LEFT + start * scale)}" y="{y}" width="{num(dur * scale)}" '
                   f'height="{BAR}" fill="{color}"><title>{escape(title)}</title></rect>')

    for a in plan.actions:
        act = a.action
        if act.name == MOVE:
            title = f"{a.start} Move T{act.src}->T{act.dst} ({a.duration})"
        else:
            title = f"{a.start} {act.name} p{act.product} T{act.tank} ({a.duration})"
        bar(act.hoist, a.start, a.duration, COLORS[act.name], title)
    for t, p, t0, t1 in occupancy(plan, inst):
        bar(nh + t, t0, t1 - t0, COLORS["stay"], f"p{p} in T{t} {t0}-{t1}")
    out.append("</svg>")
    return "\n".join(out) + "\n"
