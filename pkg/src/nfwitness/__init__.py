"""Exact quadratic-field arithmetic, Hilbert symbols, quaternion trace sets,
ray-class Artin maps, Hilbert-symbol prescriptions, and constructive
non-integrality witnesses."""

from nfwitness.qfield import FieldCtx, NfElem, parse_elem, render_elem

__all__ = ["FieldCtx", "NfElem", "parse_elem", "render_elem"]

__version__ = "0.1.0"
