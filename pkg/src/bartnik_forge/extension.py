"""Asymptotically flat extensions: collar, bend and glue onto an exterior Schwarzschild graph."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .collar import LEAVES, CollarSlab, build_collar
from .data import BartnikData, hawking_mass_of_data, roundness_constants
from .errors import DECViolation, Infeasible, MassOutOfRange, TrappedSurfaceFound
from .profiles import CMC, Blend, Profile, check_monotonicity, cmc_feasibility, g_of, v_prime
from .radial import RadialSolution, arclength_from_horizon, solve_forward
from .smoothing import BendJob, GlueJob, RadialPiece, bend, glue, round_mu

DEFAULT_ETA = 0.01
OFFSET_STEPS = 10
MAX_RETRIES = 8
FAR_FACTOR = 20.0
PIECE_NODES = 2001


def hawking_round(f, fp, x: Profile):
    """Hawking mass (f/2)(1 + x(f)^2 - f'^2) of the leaves of a round slab."""
    f = np.asarray(f, dtype=float)
    return 0.5 * f * (1.0 + x.x(f) ** 2 - fp**2)


def hcal2_round(f, fp, x: Profile):
    """Squared spacetime mean curvature (4/f^2)(f'^2 - x(f)^2) of the leaves."""
    f = np.asarray(f, dtype=float)
    return 4.0 / f**2 * (fp**2 - x.x(f) ** 2)


def graph_piece(x: Profile, m: float, sol: RadialSolution) -> RadialPiece:
    """Round slab traced by the mass-m graph; its density vanishes identically."""
    return RadialPiece("schwarzschild", sol.s0, sol.s_end, sol.at, x,
                       mu_fn=lambda s: np.zeros_like(np.asarray(s, dtype=float)))


def collar_tail(slab: CollarSlab) -> RadialPiece:
    """Round end of the collar, (1 - eps) A <= t <= A in proper length t = A s."""
    A = slab.constants.A
    if not A > 0:
        raise Infeasible("a zero-length collar has no tail to glue")
    return RadialPiece("collar", (1.0 - slab.tail_eps) * A, A, slab.radial_eval, slab.scaled_profile)


@dataclass(frozen=True, eq=False)
class SchwarzschildGlue:
    m: float
    s_hat: float
    s_o: float
    eps_offset: float
    shift: float                 # graph coordinate + shift = composite coordinate
    graph: RadialSolution
    exterior: RadialPiece        # in the composite coordinate
    bend: BendJob
    glue: GlueJob
    certificate: dict


def glue_to_schwarzschild(tail: RadialPiece, m: float, eps_offset: float | None = None,
                          r_far: float | None = None, glue_delta: float | None = None) -> SchwarzschildGlue:
    """Bend the mass-m graph just past the radius f(b) and glue it to ``tail``."""
    x = tail.profile
    b = tail.b
    fb, fpb, _ = (float(v) for v in tail.evaluate(b))
    mHb = float(hawking_round(fb, fpb, x))
    if not mHb < m < 0.5 * fb:
        raise MassOutOfRange(f"exterior mass {m:.6g} not in (m_H(b), f(b)/2) = ({mHb:.6g}, {0.5 * fb:.6g})")
    gb = float(g_of(x, fb))
    slope_ok = 0 < fpb < math.sqrt(1 + gb)
    vprime_ok = float(v_prime(x, mHb, fb)) > 0
    if slope_ok != vprime_ok:
        raise Infeasible("slope ceiling and V' > 0 disagree at the collar end")
    if not slope_ok:
        raise Infeasible(f"collar end slope {fpb:.6g} not below sqrt(1 + G) = {math.sqrt(max(1 + gb, 0)):.6g}")
    r_far = FAR_FACTOR * fb if r_far is None else r_far
    s_hat = arclength_from_horizon(x, m, fb)
    s_far = arclength_from_horizon(x, m, r_far)
    h = fb / 2000.0
    graph = solve_forward(x, m, fb, s_far - s_hat, h=h, s0=s_hat)
    base = graph_piece(x, m, graph)
    if eps_offset is None:
        eps_offset = OFFSET_STEPS * graph.h
    slope_gap = fpb - float(graph.up[0])
    for _ in range(60):
        s_o = s_hat + eps_offset
        up_o = float(graph.at(s_o)[1])
        if up_o < fpb:
            break
        eps_offset *= 0.5
    else:
        raise Infeasible("graph slope never drops below the collar slope")
    bj = bend(base, s_o, tau=0.0, constraints={"c_floor": fb, "slope_cap": up_o})
    dl = bj.delta
    right = bj.piece(s_o - dl, s_o - 0.8 * dl)
    gj = glue(tail, right, x, delta=glue_delta)
    shift = gj.right.shift
    f_end = float(bj.evaluate(s_o - dl)[0])
    G_report = check_monotonicity(x, mHb, (fb, max(f_end, fb * (1 + 1e-9))), n=401)
    cert = {
        "m": m, "mH_b": mHb, "s_hat": s_hat, "s_o": s_o, "eps_offset": eps_offset, "shift": shift,
        "slope_gap_at_s_hat": slope_gap, "graph_slope_at_s_o": up_o, "collar_slope": fpb,
        "hyp_b_slope": slope_ok, "hyp_b_vprime": vprime_ok,
        "a_radius_gap": f_end - fb, "b_slope_gap": fpb - float(bj.evaluate(s_o - dl)[1]),
        "c_min_log_excess": bj.certificate["min_log_excess"], "d_G_nondecreasing": G_report.G_nondecreasing,
        "bend": bj.certificate, "glue": gj.certificate,
    }
    exterior = base.restricted(s_o, base.b).shifted(shift)
    return SchwarzschildGlue(m, s_hat, s_o, eps_offset, shift, graph, exterior, bj, gj, cert)


@dataclass(eq=False)
class ExtensionReport:
    data: BartnikData
    collar: CollarSlab
    profile: Profile             # scaled profile used on every round piece
    exterior_mass: float
    glued: SchwarzschildGlue
    pieces: list                 # [(kind, a, b, piece)] in the composite coordinate
    samples: dict
    audits: dict
    taper: dict | None = None
    extras: dict = field(default_factory=dict)

    def evaluate(self, t):
        """(f, f', f'') of the round part of the composite at composite coordinate t."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = [np.empty_like(t) for _ in range(3)]
        for kind, a, b, piece in self.pieces:
            if kind == "collar":
                mask = t <= b
            else:
                mask = (t > a) & (t <= b) if kind != "glue" else (t >= a) & (t <= b)
            if np.any(mask):
                vals = piece.evaluate(t[mask])
                for o, v in zip(out, vals):
                    o[mask] = v
        return tuple(out)

    def to_json(self) -> dict:
        return {
            "exterior_mass": self.exterior_mass,
            "pieces": [{"kind": k, "interval": [a, b]} for k, a, b, _ in self.pieces],
            "collar": self.collar.report(),
            "certificates": self.glued.certificate,
            "audits": self.audits,
            "taper": self.taper,
            **self.extras,
        }

    def csv_columns(self):
        return self.samples


def _sample_piece(piece, kind, a, b, x, n, include_left):
    t = np.linspace(a, b, n)
    if not include_left:
        t = t[1:]
    f, fp, fpp = piece.evaluate(t)
    return {"s": t, "piece": np.full(t.size, kind, dtype=object), "f": f, "fp": fp, "fpp": fpp,
            "mu": piece.mu(t), "mH": hawking_round(f, fp, x), "Hcal2": hcal2_round(f, fp, x)}


def _composite(slab: CollarSlab, sg: SchwarzschildGlue, x: Profile, nodes: int):
    A = slab.constants.A
    m1, m2 = sg.glue.windows
    s_o = sg.s_o + sg.shift
    keep = slab.s * A <= m1
    k = slab.constants.k
    cols = [{"s": slab.s[keep] * A, "piece": np.full(int(keep.sum()), "collar", dtype=object),
             "f": slab.u[keep], "fp": k * slab.up[keep], "fpp": k**2 * slab.upp[keep],
             "mu": slab.mu[keep], "mH": slab.mH[keep], "Hcal2": slab.hcal2[keep]}]
    bend_piece = sg.bend.piece().shifted(sg.shift)
    glue_piece = sg.glue.piece()
    cols.append(_sample_piece(glue_piece, "glue", m1, m2, x, nodes, False))
    cols.append(_sample_piece(bend_piece, "bend", m2, s_o, x, nodes, False))
    g = sg.graph
    idx = np.nonzero(g.s + sg.shift > s_o)[0]
    t = g.s[idx] + sg.shift
    cols.append({"s": t, "piece": np.full(t.size, "schwarzschild", dtype=object), "f": g.u[idx],
                 "fp": g.up[idx], "fpp": g.upp[idx], "mu": np.zeros(t.size),
                 "mH": hawking_round(g.u[idx], g.up[idx], x), "Hcal2": hcal2_round(g.u[idx], g.up[idx], x)})
    collar_piece = RadialPiece("collar", 0.0, m1, slab.radial_eval, x,
                               mu_fn=lambda t: np.interp(t, slab.s * A, slab.mu))
    pieces = [("collar", 0.0, m1, collar_piece), ("glue", m1, m2, glue_piece), ("bend", m2, s_o, bend_piece),
              ("schwarzschild", s_o, float(g.s_end + sg.shift), sg.exterior)]
    samples = {key: np.concatenate([c[key] for c in cols]) for key in cols[0]}
    return pieces, samples


def trapped_audit(samples: dict, sg: SchwarzschildGlue, x: Profile, f_A: float) -> dict:
    """Leafwise Hcal^2 > 0 for s > 0, plus the glue-window margin scheme."""
    s, h2 = samples["s"], samples["Hcal2"]
    interior = s > 0
    i = int(np.argmin(np.where(interior, h2, np.inf)))
    m = sg.m
    d = (1.0 - 2.0 * m / f_A) / 3.0
    seam = sg.glue.certificate["seam"]
    r = np.linspace(f_A, seam["f2a"], 201)
    x2 = x.x(r) ** 2
    spread = float(np.max(np.abs(x2 - x2[0])))
    return {
        "min_Hcal2": float(h2[i]), "min_Hcal2_s": float(s[i]),
        "leaves_ok": bool(h2[i] > 0),
        "window_d": d, "window_x2_spread": spread, "window_ok": bool(spread < d),
        "ok": bool(h2[i] > 0 and spread < d),
    }


def _joint_defects(pieces):
    """|delta f| and |delta f'| where consecutive pieces meet."""
    out = []
    prev = pieces[0][3]
    for kind, a, b, piece in pieces[1:]:
        f0, f1, _ = (float(v) for v in prev.evaluate(a))
        g0, g1, _ = (float(v) for v in piece.evaluate(a))
        out.append({"at": a, "into": kind, "df": abs(f0 - g0), "dfp": abs(f1 - g1)})
        prev = piece
    return out


def assemble_extension(d: BartnikData, path, x: Profile, eta: float = DEFAULT_ETA, n: int = LEAVES,
                       eps_offset: float | None = None, max_retries: int = MAX_RETRIES,
                       glue_delta: float | None = None, far_factor: float = FAR_FACTOR,
                       nodes: int = PIECE_NODES) -> ExtensionReport:
    """Collar, bend and glue to the exterior graph of mass m_H(end) + eta (f(end)/2 - m_H(end))."""
    if not 0 < eta < 1:
        raise Infeasible(f"mass fraction eta must lie in (0, 1), got {eta}")
    slab = build_collar(d, path, x, n=n)
    xs = slab.scaled_profile
    tail = collar_tail(slab)
    fA, fpA, _ = (float(v) for v in tail.evaluate(tail.b))
    mHA = float(hawking_round(fA, fpA, xs))
    m_o = hawking_mass_of_data(d)
    if not fA - 2 * mHA > d.r_o - 2 * m_o:
        raise Infeasible("f - 2 m_H did not grow along the collar")
    r_far = far_factor * d.r_o
    mono_G = check_monotonicity(xs, mHA, (fA, r_far))
    mono_V = check_monotonicity(xs, mHA, (max(2 * mHA, 1e-6 * d.r_o), r_far))
    if not mono_G.G_nondecreasing:
        raise Infeasible(f"G_x decreases at r = {mono_G.G_witness}")
    if not mono_V.V_increasing:
        raise Infeasible(f"V_(x, m_H) is not strictly increasing at r = {mono_V.V_witness}")
    m = mHA + eta * (0.5 * fA - mHA)
    offsets = []
    for attempt in range(max_retries + 1):
        sg = glue_to_schwarzschild(tail, m, eps_offset=eps_offset, r_far=r_far, glue_delta=glue_delta)
        pieces, samples = _composite(slab, sg, xs, nodes)
        audit = trapped_audit(samples, sg, xs, fA)
        offsets.append(sg.eps_offset)
        if audit["ok"]:
            break
        eps_offset = 0.5 * sg.eps_offset
    else:
        raise TrappedSurfaceFound(audit["min_Hcal2_s"], audit["min_Hcal2"])
    audit["retries"] = len(offsets) - 1
    audit["eps_offsets"] = offsets
    coll = samples["piece"] == "collar"
    ext = samples["piece"] == "schwarzschild"
    g = sg.graph
    tail_on = g.s >= sg.s_o
    iso = float(np.max(np.abs(g.up[tail_on] ** 2 - (1 - 2 * m / g.u[tail_on] + xs.x(g.u[tail_on]) ** 2))))
    defects = _joint_defects(pieces)
    audits = {
        "dec_min_margin": float(slab.dec_margin.min()),
        "min_mu_collar": float(slab.mu.min()),
        "min_mu_glue": sg.glue.certificate["min_omega_margin"],
        "bend_min_log_excess": sg.bend.certificate["min_log_excess"],
        "trapped": audit,
        "min_f_minus_2mH": float(np.min(samples["f"] - 2 * samples["mH"])),
        "collar_f_minus_2mH_increasing": bool(np.all(np.diff(slab.u - 2 * slab.mH) > 0)),
        "joint_defects": defects,
        "max_joint_df": max(j["df"] for j in defects),
        "max_joint_dfp": max(j["dfp"] for j in defects),
        "exterior_isometry_residual": iso,
        "exterior_mH_deviation": float(np.max(np.abs(samples["mH"][ext] - m))) if np.any(ext) else 0.0,
        "mass_ordering": bool(m_o < m < 0.5 * fA),
        "monotonicity": {"G": mono_G.as_dict(), "V": mono_V.as_dict()},
        "collar_samples": int(coll.sum()),
    }
    return ExtensionReport(d, slab, xs, m, sg, pieces, samples, audits)


def cmc_mean_curvature(d: BartnikData, K2: float, K1: float) -> float:
    r = d.r_o
    return 3 * r**3 * abs(d.P_o) * K2 / (2 * abs(K2 * r**3 - K1))


def assemble_cmc(d: BartnikData, path, K2: float, K1: float, **opts) -> ExtensionReport:
    """Extension with x = K2 r - K1 / r^2, whose mean curvature tr K is constant."""
    rc = roundness_constants(path)
    feas = cmc_feasibility(d, K2, K1, rc)
    bad = [k for k, c in feas.items() if not c.passed]
    if bad:
        raise Infeasible(f"CMC conditions fail: {', '.join(bad)}")
    rep = assemble_extension(d, path, CMC(K2, K1), **opts)
    xs = rep.profile
    f = rep.samples["f"]
    trK = xs.dx(f) + 2 * xs.x(f) / f
    umb = np.maximum(np.abs(xs.dx(f) - trK / 3), np.abs(xs.x(f) / f - trK / 3))
    H = cmc_mean_curvature(d, K2, K1)
    rep.extras["cmc"] = {
        "K2": K2, "K1": K1, "mean_curvature": H, "trK_min": float(trK.min()), "trK_max": float(trK.max()),
        "trK_variation": float(np.ptp(trK)), "trK_vs_formula": float(np.max(np.abs(np.abs(trK) - H))),
        "umbilic_residual": float(umb.max()) if K1 == 0 else None, "maximal": K2 == 0,
        "feasibility": {k: c.as_dict() for k, c in feas.items()},
    }
    return rep


def taper_profile(rep: ExtensionReport, r_switch: float, target: Profile, nodes: int = PIECE_NODES) -> ExtensionReport:
    """Blend the exterior profile into ``target`` over [r_switch, 2 r_switch] and re-solve outward.

    Every graph in the mass-m exterior has vanishing density, so the audit
    confirms mu >= 0 up to rounding and Hcal^2 > 0 on the re-solved part.
    """
    xs, m = rep.profile, rep.exterior_mass
    if target is xs or target.describe() == xs.describe():
        rep.taper = {"r_switch": r_switch, "target": target.describe(), "identity": True}
        return rep
    sg = rep.glued
    s_sw = arclength_from_horizon(xs, m, r_switch)
    if not s_sw > sg.s_o:
        raise Infeasible(f"taper radius {r_switch:.6g} lies inside the glue window")
    blend = Blend(xs, target, r_switch)
    r_far = max(float(sg.graph.u[-1]), 4 * r_switch)
    span = arclength_from_horizon(blend, m, r_far) - s_sw
    sol = solve_forward(blend, m, r_switch, span, h=r_switch / 2000.0, s0=s_sw)
    mu = round_mu(sol.u, sol.up, sol.upp, blend)
    tol = 1e-12 / sol.u**2
    bad = np.nonzero(mu < -tol)[0]
    if bad.size:
        raise DECViolation(float(sol.s[bad[0]] + sg.shift), float(mu[bad[0]]), where=f"taper r={sol.u[bad[0]]:.6g}")
    h2 = hcal2_round(sol.u, sol.up, blend)
    if not np.all(h2 > 0):
        i = int(np.argmin(h2))
        raise TrappedSurfaceFound(float(sol.s[i] + sg.shift), float(h2[i]))
    g = sg.graph
    keep = rep.samples["s"] < s_sw + sg.shift
    t = sol.s + sg.shift
    new = {"s": t, "piece": np.full(t.size, "taper", dtype=object), "f": sol.u, "fp": sol.up, "fpp": sol.upp,
           "mu": mu, "mH": hawking_round(sol.u, sol.up, blend), "Hcal2": h2}
    rep.samples = {k: np.concatenate([rep.samples[k][keep], new[k]]) for k in rep.samples}
    tail_piece = RadialPiece("taper", float(t[0]), float(t[-1]), sol.at, blend, shift=sg.shift)
    rep.pieces = [p if p[0] != "schwarzschild" else (p[0], p[1], float(t[0]), p[3]) for p in rep.pieces]
    rep.pieces.append(("taper", float(t[0]), float(t[-1]), tail_piece))
    rep.taper = {"r_switch": r_switch, "target": target.describe(), "identity": False,
                 "min_mu": float(mu.min()), "min_Hcal2": float(h2.min()),
                 "mH_deviation": float(np.max(np.abs(new["mH"] - m))), "r_end": float(sol.u[-1]),
                 "graph_end": float(g.u[-1])}
    return rep
