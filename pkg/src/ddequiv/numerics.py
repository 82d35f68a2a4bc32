"""Tolerance-aware complex helpers and the canonical complex table."""

from __future__ import annotations

from .errors import NonFiniteValue
from .kernel import ComplexTable

DEFAULT_EPS = 1e-10

__all__ = ["ComplexTable", "NonFiniteValue", "DEFAULT_EPS", "approx_eq",
           "cadd", "cmul", "cconj", "cmod2"]


def approx_eq(a: complex, b: complex, eps: float = DEFAULT_EPS) -> bool:
    """Component-wise closeness, the same test the complex table uses."""
    return abs(a.real - b.real) < eps and abs(a.imag - b.imag) < eps


def cadd(a: complex, b: complex) -> complex:
    return complex(a.real + b.real, a.imag + b.imag)


def cmul(a: complex, b: complex) -> complex:
    return complex(a.real * b.real - a.imag * b.imag, a.real * b.imag + a.imag * b.real)


def cconj(a: complex) -> complex:
    return complex(a.real, -a.imag)


def cmod2(a: complex) -> float:
    return a.real * a.real + a.imag * a.imag
