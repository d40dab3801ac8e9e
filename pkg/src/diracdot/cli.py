"""Command-line front end: ``diracdot <command> [flags]``.

Exit codes: 0 on success, otherwise the ``exit_code`` of the error class
(2 usage, 3 I/O, 4 domain, 5 branch/match, 6 convergence, 7 phase,
8 lost track, 9 unmatched resonance).
"""

from __future__ import annotations

import logging
import sys

import numpy as np

from . import scans
from .config import Direction, RunConfig, convert_units, parse_config
from .core import DotParams
from .emit import emit
from .errors import DiracDotError, TrackLost

log = logging.getLogger("diracdot")


def _depth_line(label: str, v: float) -> str:
    return f"{label}: v = {scans.two_decimals(v):.2f} ({v:.12g})"


def run_spectrum(cfg: RunConfig):
    g = cfg.grids
    result = scans.bound_spectrum(cfg.mu, cfg.ell, g["v_min"], g["v_max"], g["v_steps"])
    log.info("%d bound branches, at most %d at one depth", len(result.branches), result.coexisting())
    for k, v in enumerate(result.critical_depths, 1):
        log.info(_depth_line(f"critical depth {k}", v))
    for k, v in enumerate(result.supercritical_depths, 1):
        log.info(_depth_line(f"supercritical depth {k}", v))
    for v, msg in result.gaps:
        log.warning("gap at v = %.6g: %s", v, msg)
    return result, 0


def run_capture(cfg: RunConfig):
    result = scans.capture_depths(cfg.mu, cfg.ell, cfg.extra["count"])
    for kind in dict.fromkeys(c.kind for c in result):
        for k, c in enumerate((c for c in result if c.kind is kind), 1):
            log.info(_depth_line(f"{kind.value} depth {k}", c.v))
    return result, 0


def _seeds(cfg: RunConfig, v: float) -> list:
    if "seeds" in cfg.extra:
        return cfg.extra["seeds"]
    lead = scans.leading_resonance(scans.find_resonances(DotParams(cfg.mu, v, cfg.ell)))
    if lead is None:
        raise TrackLost(f"no resonance found at v = {v} to start from")
    log.info("starting from the leading resonance %.10g%+.10gi", lead.eps.real, lead.eps.imag)
    return [lead.eps]


def run_resonances(cfg: RunConfig):
    g = cfg.grids
    if not g:
        params = cfg.params
        if "seeds" in cfg.extra:
            points = [scans.polish_resonance(params, s) for s in cfg.extra["seeds"]]
            points = [p for p in points if p is not None]
        else:
            points = scans.find_resonances(params)
        for p in points:
            log.info("%s at %.10g%+.10gi", p.classification.value, p.eps.real, p.eps.imag)
        return points, 0
    # track from the shallow end toward the deep end
    grid = np.round(np.linspace(g["v_max"], g["v_min"], g["v_steps"]), 12)
    trajectories = scans.resonance_trajectories(cfg.mu, cfg.ell, grid, _seeds(cfg, float(grid[0])))
    code = 0
    for k, t in enumerate(trajectories, 1):
        for e in t.capture_events:
            log.info(_depth_line(f"trajectory {k}: {e.kind.value} capture", e.v) + f", grid v = {e.v_grid:.6g}")
        if t.lost:
            log.error("trajectory %d: %s", k, t.message)
            code = TrackLost.exit_code
    return trajectories, code


def run_delay(cfg: RunConfig):
    g = cfg.grids
    curve = scans.delay_scan(cfg.mu, cfg.ell, cfg.v, g["eps_min"], g["eps_max"], g["eps_steps"])
    for k in scans.delay_maxima(curve):
        log.info("delay maximum at eps = %.6g (tau = %.6g)", curve.energies[k], curve.delay[k])
    if curve.flagged:
        log.warning("%d indeterminate phase points interpolated", len(curve.flagged))
    return curve, 0


def run_consistency(cfg: RunConfig):
    g = cfg.grids
    curve = scans.delay_scan(cfg.mu, cfg.ell, cfg.v, g["eps_min"], g["eps_max"], g["eps_steps"])
    params = cfg.params
    if "seeds" in cfg.extra:
        found = [scans.polish_resonance(params, s) for s in cfg.extra["seeds"]]
        found = [p for p in found if p is not None]
    else:
        found = scans.resonances_for_curve(params, curve)
    report = scans.consistency_report(cfg.mu, cfg.ell, cfg.v, found, curve)
    for r in report.rows:
        log.info("resonance %.6g%+.6gi, delay peak at %.6g, gap %.3g", r.eps_R, r.eps_I, r.delay_peak_eps, r.gap)
    return report, 0


def run_spinor(cfg: RunConfig):
    g = cfg.grids
    rho = np.linspace(g["rho_max"] / g["rho_steps"], g["rho_max"], g["rho_steps"])
    return scans.spinor_profile(cfg.params, cfg.extra["eps"], cfg.extra["kind"], rho), 0


def run_convert(cfg: RunConfig):
    x = cfg.extra
    constants = {k: x[k] for k in ("R", "vF", "hbar")}
    if x["to"] == "natural":
        values = {k: x[k] for k in ("E", "V0", "m") if k in x}
        return convert_units(Direction.TO_NATURAL, values, constants), 0
    values = {k: x[k] for k in ("eps", "v", "mu") if k in x}
    return convert_units(Direction.FROM_NATURAL, values, constants), 0


RUNNERS = {
    "spectrum": run_spectrum,
    "capture": run_capture,
    "resonances": run_resonances,
    "delay": run_delay,
    "consistency": run_consistency,
    "spinor": run_spinor,
    "convert": run_convert,
}


def run(args: list) -> int:
    """Parse, run and emit; returns the process exit code."""
    try:
        cfg = parse_config(args)
        logging.basicConfig(level=logging.WARNING if cfg.extra.get("quiet") else logging.INFO,
                            format="%(message)s", stream=sys.stderr, force=True)
        result, code = RUNNERS[cfg.command](cfg)
        for path in emit(result, cfg.output.format, cfg.output.path):
            log.info("wrote %s", path)
        return code
    except DiracDotError as exc:
        print(f"diracdot: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


def main(argv: list | None = None) -> None:
    sys.exit(run(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    main()
