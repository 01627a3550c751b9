"""Shipped geometry catalogue.

Each factory returns a :class:`ParametricImmersion` with exact derivatives.
Geometries are addressed by name plus a parameter mapping (see ``build``).
"""
from __future__ import annotations

import numpy as np

from .geometry import ParametricImmersion

TWO_PI = 2 * np.pi


def _zeros(u, *shape):
    return np.zeros((u.shape[0],) + shape)


def interval(length: float = 1.0, start: float = 0.0) -> ParametricImmersion:
    """``[start, start + length]`` in R^1 (identity chart)."""
    return ParametricImmersion(
        name="interval",
        intrinsic_dim=1,
        ambient_dim=1,
        param_box=((start, start + length),),
        periodic=(False,),
        position=lambda u: u.copy(),
        jacobian=lambda u: np.ones((u.shape[0], 1, 1)),
        hessian=lambda u: _zeros(u, 1, 1, 1),
        params={"length": length, "start": start},
    )


def line_segment(length: float = 1.0, angle: float = 0.5, offset=(0.0, 0.0)) -> ParametricImmersion:
    """Arc-length parametrised straight segment in R^2."""
    d = np.array([np.cos(angle), np.sin(angle)])
    o = np.asarray(offset, dtype=float)
    return ParametricImmersion(
        name="line_segment",
        intrinsic_dim=1,
        ambient_dim=2,
        param_box=((0.0, length),),
        periodic=(False,),
        position=lambda u: o + u[:, :1] * d,
        jacobian=lambda u: np.broadcast_to(d[None, :, None], (u.shape[0], 2, 1)).copy(),
        hessian=lambda u: _zeros(u, 2, 1, 1),
        params={"length": length, "angle": angle, "offset": list(o)},
    )


def flat_rectangle(width: float = 1.0, height: float = 1.0) -> ParametricImmersion:
    """``[0, width] x [0, height] x {0}`` in R^3 (a minimal surface)."""

    def position(u):
        return np.column_stack([u[:, 0], u[:, 1], np.zeros(len(u))])

    def jacobian(u):
        J = _zeros(u, 3, 2)
        J[:, 0, 0] = 1.0
        J[:, 1, 1] = 1.0
        return J

    return ParametricImmersion(
        name="flat_rectangle",
        intrinsic_dim=2,
        ambient_dim=3,
        param_box=((0.0, width), (0.0, height)),
        periodic=(False, False),
        position=position,
        jacobian=jacobian,
        hessian=lambda u: _zeros(u, 3, 2, 2),
        params={"width": width, "height": height},
    )


def annulus(r_inner: float = 0.5, r_outer: float = 1.5) -> ParametricImmersion:
    """Planar annulus in polar coordinates ``(r, phi)``, ``phi`` periodic."""
    if not 0 < r_inner < r_outer:
        raise ValueError("need 0 < r_inner < r_outer")

    def position(u):
        r, t = u[:, 0], u[:, 1]
        return np.column_stack([r * np.cos(t), r * np.sin(t)])

    def jacobian(u):
        r, t = u[:, 0], u[:, 1]
        J = _zeros(u, 2, 2)
        J[:, 0, 0], J[:, 1, 0] = np.cos(t), np.sin(t)
        J[:, 0, 1], J[:, 1, 1] = -r * np.sin(t), r * np.cos(t)
        return J

    def hessian(u):
        r, t = u[:, 0], u[:, 1]
        Hx = _zeros(u, 2, 2, 2)
        Hx[:, 0, 0, 1] = Hx[:, 0, 1, 0] = -np.sin(t)
        Hx[:, 1, 0, 1] = Hx[:, 1, 1, 0] = np.cos(t)
        Hx[:, 0, 1, 1] = -r * np.cos(t)
        Hx[:, 1, 1, 1] = -r * np.sin(t)
        return Hx

    return ParametricImmersion(
        name="annulus",
        intrinsic_dim=2,
        ambient_dim=2,
        param_box=((r_inner, r_outer), (0.0, TWO_PI)),
        periodic=(False, True),
        position=position,
        jacobian=jacobian,
        hessian=hessian,
        params={"r_inner": r_inner, "r_outer": r_outer},
    )


def sphere_band(theta1: float = 0.6, theta2: float = 2.2) -> ParametricImmersion:
    """Band ``theta1 <= theta <= theta2`` of the unit sphere, ``phi`` periodic.

    The poles are excluded so the chart stays regular.
    """
    if not 0 < theta1 < theta2 < np.pi:
        raise ValueError("need 0 < theta1 < theta2 < pi")

    def position(u):
        th, ph = u[:, 0], u[:, 1]
        return np.column_stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])

    def jacobian(u):
        th, ph = u[:, 0], u[:, 1]
        st, ct, sp, cp = np.sin(th), np.cos(th), np.sin(ph), np.cos(ph)
        J = _zeros(u, 3, 2)
        J[:, :, 0] = np.column_stack([ct * cp, ct * sp, -st])
        J[:, :, 1] = np.column_stack([-st * sp, st * cp, np.zeros_like(th)])
        return J

    def hessian(u):
        th, ph = u[:, 0], u[:, 1]
        st, ct, sp, cp = np.sin(th), np.cos(th), np.sin(ph), np.cos(ph)
        z = np.zeros_like(th)
        Hx = _zeros(u, 3, 2, 2)
        Hx[:, :, 0, 0] = np.column_stack([-st * cp, -st * sp, -ct])
        Hx[:, :, 0, 1] = np.column_stack([-ct * sp, ct * cp, z])
        Hx[:, :, 1, 0] = Hx[:, :, 0, 1]
        Hx[:, :, 1, 1] = np.column_stack([-st * cp, -st * sp, z])
        return Hx

    return ParametricImmersion(
        name="sphere_band",
        intrinsic_dim=2,
        ambient_dim=3,
        param_box=((theta1, theta2), (0.0, TWO_PI)),
        periodic=(False, True),
        position=position,
        jacobian=jacobian,
        hessian=hessian,
        params={"theta1": theta1, "theta2": theta2},
    )


def grim_reaper_arc(x0: float = 1.0) -> ParametricImmersion:
    """The curve ``(x, -ln cos x)``, ``|x| <= x0 < pi/2``; translates with velocity ``e_2``."""
    if not 0 < x0 < np.pi / 2:
        raise ValueError("need 0 < x0 < pi/2")

    def position(u):
        x = u[:, 0]
        return np.column_stack([x, -np.log(np.cos(x))])

    def jacobian(u):
        x = u[:, 0]
        J = _zeros(u, 2, 1)
        J[:, 0, 0] = 1.0
        J[:, 1, 0] = np.tan(x)
        return J

    def hessian(u):
        x = u[:, 0]
        Hx = _zeros(u, 2, 1, 1)
        Hx[:, 1, 0, 0] = 1.0 / np.cos(x) ** 2
        return Hx

    return ParametricImmersion(
        name="grim_reaper_arc",
        intrinsic_dim=1,
        ambient_dim=2,
        param_box=((-x0, x0),),
        periodic=(False,),
        position=position,
        jacobian=jacobian,
        hessian=hessian,
        params={"x0": x0},
    )


def grim_reaper_plane(x0: float = 0.5, t0: float = 1.0) -> ParametricImmersion:
    """Translating surface ``(x, t, -(1/2) ln cos 2x)`` in R^3, ``|x| <= x0 < pi/4``.

    Mean curvature here is normalised by ``1/n``, so the two-dimensional
    translator with unit velocity ``e_3`` is the grim reaper profile scaled by
    ``1/n = 1/2``; the unscaled cylinder over ``-ln cos x`` moves at speed 2.
    """
    if not 0 < x0 < np.pi / 4:
        raise ValueError("need 0 < x0 < pi/4")

    def position(u):
        x, t = u[:, 0], u[:, 1]
        return np.column_stack([x, t, -0.5 * np.log(np.cos(2 * x))])

    def jacobian(u):
        x = u[:, 0]
        J = _zeros(u, 3, 2)
        J[:, 0, 0] = 1.0
        J[:, 1, 1] = 1.0
        J[:, 2, 0] = np.tan(2 * x)
        return J

    def hessian(u):
        x = u[:, 0]
        Hx = _zeros(u, 3, 2, 2)
        Hx[:, 2, 0, 0] = 2.0 / np.cos(2 * x) ** 2
        return Hx

    return ParametricImmersion(
        name="grim_reaper_plane",
        intrinsic_dim=2,
        ambient_dim=3,
        param_box=((-x0, x0), (-t0, t0)),
        periodic=(False, False),
        position=position,
        jacobian=jacobian,
        hessian=hessian,
        params={"x0": x0, "t0": t0},
    )


CATALOGUE = {
    "interval": interval,
    "line_segment": line_segment,
    "flat_rectangle": flat_rectangle,
    "annulus": annulus,
    "sphere_band": sphere_band,
    "grim_reaper_arc": grim_reaper_arc,
    "grim_reaper_plane": grim_reaper_plane,
}


def build(name: str, params: dict | None = None) -> ParametricImmersion:
    try:
        factory = CATALOGUE[name]
    except KeyError:
        raise KeyError(f"unknown geometry {name!r}; known: {sorted(CATALOGUE)}") from None
    return factory(**(params or {}))


def describe() -> list[tuple[str, str]]:
    """``(name, first docstring line)`` for every catalogue entry."""
    return [(k, (f.__doc__ or "").strip().splitlines()[0]) for k, f in CATALOGUE.items()]
