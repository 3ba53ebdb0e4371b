"""CSV and SVG emission for run and sweep artifacts.

Floats are written with repr so the files round-trip exactly; the SVG
plotter is a tiny hand-rolled log-log renderer so the byte content of
every artifact is a pure function of the data (no plotting library,
no font probing, no timestamps).
"""

from __future__ import annotations

import csv
import io
import math

from .diagnostics import AprioriReport, ConvergenceReport, EnergyLedger
from .dynamics import Trajectory
from .errors import DiagnosticsError
from .regularized import RegSweepRow
from .snapio import atomic_write

__all__ = [
    "manifest_csv",
    "energy_csv",
    "monitor_csv",
    "report_csv",
    "shift_csv",
    "regsweep_csv",
    "results_csv",
    "svg_loglog",
    "write_text",
]


def write_text(path: str, text: str) -> None:
    atomic_write(path, text.encode())


def _rows(header: str, rows) -> str:
    # float() strips numpy scalars, whose repr is np.float64(...)
    lines = [header]
    for row in rows:
        lines.append(
            ",".join(repr(float(x)) if isinstance(x, float) else str(x) for x in row)
        )
    return "\n".join(lines) + "\n"


def manifest_csv(traj: Trajectory) -> str:
    return _rows(
        "step,t,dt,mass_u,mass_v,max_p",
        ((r.step, r.t, r.dt, r.mass_u, r.mass_v, r.max_p) for r in traj.records),
    )


def energy_csv(ledger: EnergyLedger) -> str:
    rows = []
    n = len(ledger.times)
    for i in range(n):
        residual = ledger.residual[i] if i < n - 1 else ""
        rows.append((
            ledger.times[i], ledger.pressure_integral[i],
            ledger.dissipation[i], ledger.source[i], residual,
        ))
    return _rows("t,pressure_integral,dissipation,source,residual", rows)


def monitor_csv(report: AprioriReport) -> str:
    header = ("t,p_l1,p_linf,w_l1,w_linf,grad_w_sq_cum,"
              "sigma_lap_sq_cum,pressure_moment,moment_u,moment_v")
    rows = zip(
        report.times, report.p_l1, report.p_linf, report.w_l1, report.w_linf,
        report.grad_w_sq_cum, report.sigma_lap_sq_cum,
        report.pressure_moment, report.moment_u, report.moment_v,
    )
    return _rows(header, rows)


def report_csv(report: ConvergenceReport) -> str:
    qcols = ",".join(f"e_p_q{i + 1}" for i in range(len(report.q_list)))
    header = f"σ,{qcols},e_grad,e_lap,e_norm,trace_gap"
    rows = []
    for row in report.rows:
        rows.append((row.sigma, *row.e_p, row.e_grad, row.e_lap, row.e_norm, row.trace_gap))
    return _rows(header, rows)


def shift_csv(report: ConvergenceReport) -> str:
    rows = []
    for curve in report.shift_curves:
        for y, omega in zip(curve.shifts, curve.omegas):
            rows.append((curve.sigma, y, omega))
    return _rows("σ,y,omega", rows)


def regsweep_csv(rows) -> str:
    return _rows(
        "epsilon,delta,l1_gap,max_p,q_active_steps",
        ((r.epsilon, r.delta, r.l1_gap, r.max_p, r.q_active_steps) for r in rows),
    )


def results_csv(results) -> str:
    # detail strings contain commas, so this one goes through csv.writer
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("index", "name", "passed", "detail"))
    for r in results:
        writer.writerow((r.index, r.name, int(r.passed), r.detail))
    return buf.getvalue()


# --- SVG ------------------------------------------------------------

_W, _H = 640, 480
_ML, _MR, _MT, _MB = 70, 20, 40, 50
_COLORS = ("#1b6ca8", "#c0392b", "#27ae60", "#8e44ad", "#d68910", "#16a085")


def _decades(lo: float, hi: float):
    a = math.floor(math.log10(lo))
    b = math.ceil(math.log10(hi))
    return [10.0**k for k in range(a, b + 1)]


class _LogAxis:
    def __init__(self, values, lo_px, hi_px):
        positive = [v for v in values if v > 0]
        if not positive:
            raise DiagnosticsError("log plot needs at least one positive value")
        self.lo = min(positive)
        self.hi = max(positive)
        if self.hi == self.lo:
            self.lo *= 0.5
            self.hi *= 2.0
        self.lo_px = lo_px
        self.hi_px = hi_px

    def __call__(self, v: float) -> float:
        frac = (math.log10(v) - math.log10(self.lo)) / (
            math.log10(self.hi) - math.log10(self.lo)
        )
        return self.lo_px + frac * (self.hi_px - self.lo_px)


def svg_loglog(title: str, xlabel: str, series: dict) -> str:
    """Render named (x, y) sequences on log-log axes.

    Non-positive points are dropped per series (a log plot cannot show
    them); a series that loses all its points is skipped with a legend
    note rather than failing the whole artifact.
    """
    cleaned = {}
    dropped = []
    for name, pts in series.items():
        keep = [(x, y) for x, y in pts if x > 0 and y > 0]
        if keep:
            cleaned[name] = keep
        else:
            dropped.append(name)
    if not cleaned:
        raise DiagnosticsError("log plot needs at least one positive series")

    xs = [x for pts in cleaned.values() for x, _ in pts]
    ys = [y for pts in cleaned.values() for _, y in pts]
    ax = _LogAxis(xs, _ML, _W - _MR)
    ay = _LogAxis(ys, _H - _MB, _MT)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="monospace" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<text x="{_W / 2:.1f}" y="{_H - 12}" text-anchor="middle">{xlabel}</text>',
    ]
    frame = (f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" '
             f'height="{_H - _MT - _MB}" fill="none" stroke="black"/>')
    out.append(frame)
    for tick in _decades(ax.lo, ax.hi):
        if not ax.lo <= tick <= ax.hi:
            continue
        px = ax(tick)
        out.append(f'<line x1="{px:.2f}" y1="{_H - _MB}" x2="{px:.2f}" '
                   f'y2="{_H - _MB + 5}" stroke="black"/>')
        out.append(f'<text x="{px:.2f}" y="{_H - _MB + 18}" '
                   f'text-anchor="middle">1e{int(round(math.log10(tick)))}</text>')
    for tick in _decades(ay.lo, ay.hi):
        if not ay.lo <= tick <= ay.hi:
            continue
        py = ay(tick)
        out.append(f'<line x1="{_ML - 5}" y1="{py:.2f}" x2="{_ML}" '
                   f'y2="{py:.2f}" stroke="black"/>')
        out.append(f'<text x="{_ML - 8}" y="{py + 4:.2f}" '
                   f'text-anchor="end">1e{int(round(math.log10(tick)))}</text>')

    for idx, (name, pts) in enumerate(cleaned.items()):
        color = _COLORS[idx % len(_COLORS)]
        coords = " ".join(f"{ax(x):.2f},{ay(y):.2f}" for x, y in pts)
        out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for x, y in pts:
            out.append(f'<circle cx="{ax(x):.2f}" cy="{ay(y):.2f}" r="3" fill="{color}"/>')
        ly = _MT + 16 + 16 * idx
        out.append(f'<line x1="{_W - _MR - 150}" y1="{ly - 4}" x2="{_W - _MR - 130}" '
                   f'y2="{ly - 4}" stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text x="{_W - _MR - 124}" y="{ly}">{name}</text>')
    for j, name in enumerate(dropped):
        ly = _MT + 16 + 16 * (len(cleaned) + j)
        out.append(f'<text x="{_W - _MR - 150}" y="{ly}" fill="#888">{name} (no positive data)</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
