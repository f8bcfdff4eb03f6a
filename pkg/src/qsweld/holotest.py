"""Numerical holomorphy verdicts for sampled parameter families.

Given samples of a complex-vector function on a ring stencil of complex
parameters, a least-squares Wirtinger fit f(t) ~ f0 + A (t - t0)
+ B conj(t - t0) yields the Cauchy-Riemann residual |B|/(|A| + eps); a
trapezoid contour integral around the outer ring yields the Morera
residual.  Both must pass for a holomorphy verdict.  This is falsifiable
evidence, not a proof.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (DimensionMismatch, IllConditioned, MissingSample,
                     RealOnlyInvariant)

TWO_PI = 2 * np.pi

DEFAULT_CR_THRESHOLD = 1e-3
DEFAULT_MORERA_THRESHOLD = 1e-3
EPS = 1e-9


@dataclass
class Stencil:
    """Ring stencil of parameter samples with complex-vector values."""

    center: complex
    radii: tuple
    angles_per_ring: int
    samples: dict  # complex t -> complex vector

    @classmethod
    def t_values(cls, center: complex, radii, angles_per_ring: int):
        ts = [complex(center)]
        for rho in radii:
            for ang in np.linspace(0, TWO_PI, angles_per_ring,
                                   endpoint=False):
                ts.append(complex(center + rho * np.exp(1j * ang)))
        return ts

    @classmethod
    def from_function(cls, func, center: complex, radii,
                      angles_per_ring: int = 8) -> "Stencil":
        ts = cls.t_values(center, radii, angles_per_ring)
        samples = {t: np.atleast_1d(np.asarray(func(t), dtype=complex))
                   for t in ts}
        return cls(center=complex(center), radii=tuple(radii),
                   angles_per_ring=angles_per_ring, samples=samples)

    def validate(self):
        if len(self.radii) < 2 or self.angles_per_ring < 8:
            raise IllConditioned("need >= 2 rings and >= 8 angles per ring")
        ts = self.t_values(self.center, self.radii, self.angles_per_ring)
        for t in ts:
            if t not in self.samples:
                raise MissingSample(f"no sample at t = {t}")
        dims = {np.shape(v) for v in self.samples.values()}
        if len(dims) != 1:
            raise DimensionMismatch(f"sample shapes differ: {dims}")
        tv = np.asarray(ts)
        if len(np.unique(np.round(tv, 15))) != len(tv):
            raise IllConditioned("duplicate parameter values")
        spread = tv - np.mean(tv)
        mat = np.column_stack([spread.real, spread.imag])
        if np.linalg.matrix_rank(mat, tol=1e-12) < 2:
            raise IllConditioned("stencil is collinear")
        return ts


@dataclass
class HoloVerdict:
    cr_residual: float
    morera_residual: float
    passed: bool
    per_component: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "cr": self.cr_residual,
            "morera": self.morera_residual,
            "pass": bool(self.passed),
            "thresholds": self.thresholds,
            "components": {k: list(map(float, v))
                           for k, v in self.per_component.items()},
        }


def cr_residual(stencil: Stencil,
                cr_threshold: float = DEFAULT_CR_THRESHOLD,
                morera_threshold: float = DEFAULT_MORERA_THRESHOLD,
                eps: float = EPS) -> HoloVerdict:
    """Wirtinger least-squares fit and contour test on a stencil."""
    ts = stencil.validate()
    tv = np.asarray(ts)
    values = np.stack([stencil.samples[t] for t in ts])  # (S, d)
    dt = tv - stencil.center
    design = np.column_stack([np.ones_like(dt), dt, np.conj(dt)])
    coef, *_ = np.linalg.lstsq(design, values, rcond=None)
    a_coef, b_coef = coef[1], coef[2]
    a_norm = float(np.linalg.norm(a_coef))
    b_norm = float(np.linalg.norm(b_coef))
    cr = b_norm / (a_norm + eps)

    # Morera residual around the outermost ring (trapezoid rule)
    rho = max(stencil.radii)
    ring = [complex(stencil.center + rho * np.exp(1j * ang))
            for ang in np.linspace(0, TWO_PI, stencil.angles_per_ring,
                                   endpoint=False)]
    ring_vals = np.stack([stencil.samples[t] for t in ring])
    ring_t = np.asarray(ring)
    dt_ring = (np.roll(ring_t, -1) - np.roll(ring_t, 1)) / 2.0
    integral = np.sum(ring_vals * dt_ring[:, None], axis=0)
    scale = TWO_PI * rho * np.mean(np.abs(ring_vals), axis=0) + eps
    morera_comp = np.abs(integral) / scale
    morera = float(np.max(morera_comp))

    per_component = {
        "cr": np.abs(b_coef) / (np.abs(a_coef) + eps),
        "morera": morera_comp,
    }
    passed = (cr < cr_threshold) and (morera < morera_threshold)
    return HoloVerdict(cr_residual=cr, morera_residual=morera,
                       passed=bool(passed),
                       per_component=per_component,
                       thresholds={"cr": cr_threshold,
                                   "morera": morera_threshold,
                                   "eps": eps})


def _hash_payload(obj) -> str:
    text = json.dumps(obj, sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def holomorphy_report(family_manifest, invariant_selector="invariants",
                      cr_threshold: float = DEFAULT_CR_THRESHOLD,
                      morera_threshold: float = DEFAULT_MORERA_THRESHOLD):
    """Assemble a stencil from a family manifest and render a verdict.

    The manifest is a dict (or path to JSON) with keys "stencil"
    ({"center", "radii", "angles_per_ring"}) and "samples" (a list of
    {"t": [re, im], <selector>: [[re, im], ...]}).  Real-only invariant
    data is refused: holomorphy verdicts need complex samples.
    Returns (HoloVerdict, provenance dict).
    """
    if not isinstance(family_manifest, dict):
        with open(family_manifest) as fh:
            family_manifest = json.load(fh)
    doc = family_manifest
    st = doc.get("stencil")
    if st is None:
        raise MissingSample("manifest has no 'stencil' block")
    samples = {}
    dim = None
    for entry in doc.get("samples", []):
        if invariant_selector not in entry:
            raise MissingSample(
                f"sample at t={entry.get('t')} lacks "
                f"'{invariant_selector}'")
        t = complex(entry["t"][0], entry["t"][1])
        raw = np.asarray(entry[invariant_selector], dtype=float)
        if raw.ndim == 1:
            raw = raw[None, :] if raw.size == 2 else raw[:, None]
        if raw.ndim != 2 or raw.shape[1] != 2:
            raise DimensionMismatch(
                "invariant entries must be [re, im] pairs")
        vec = raw[:, 0] + 1j * raw[:, 1]
        if dim is None:
            dim = vec.size
        elif vec.size != dim:
            raise DimensionMismatch(
                f"invariant dimension changed: {vec.size} != {dim}")
        samples[t] = vec
    if not samples:
        raise MissingSample("manifest has no samples")
    if all(np.max(np.abs(v.imag)) == 0.0 for v in samples.values()):
        raise RealOnlyInvariant(
            "selector yields real-only data; holomorphy needs the complex "
            "invariant (e.g. a cross-ratio), not a real one")
    stencil = Stencil(center=complex(st["center"][0], st["center"][1]),
                      radii=tuple(st["radii"]),
                      angles_per_ring=int(st["angles_per_ring"]),
                      samples=samples)
    verdict = cr_residual(stencil, cr_threshold, morera_threshold)
    provenance = {
        "selector": invariant_selector,
        "thresholds": verdict.thresholds,
        "inputs": [_hash_payload(doc)],
        "cr": verdict.cr_residual,
        "morera": verdict.morera_residual,
        "pass": verdict.passed,
    }
    return verdict, provenance
