"""Symmetrical-component arithmetic for three-phase phasors.

Sequence values are referenced to phase a: ``decompose`` returns the
phase-a component of each sequence set, and ``reconstruct`` recovers the
b and c phase values by +/-120 degree rotations.  All functions accept
python complex scalars or numpy arrays of complex values and broadcast
elementwise, so bulk checks over many triples stay vectorised.
"""

import math
from dataclasses import dataclass

SQRT3 = math.sqrt(3.0)

# e^{+j 2pi/3}, the rotation that advances a phasor by one phase position
ROT = complex(-0.5, SQRT3 / 2.0)
ROT2 = ROT * ROT


@dataclass(frozen=True)
class PhaseTriple:
    """Per-phase complex values (a, b, c); fields may be arrays."""

    a: complex
    b: complex
    c: complex


@dataclass(frozen=True)
class SequenceTriple:
    """Zero/positive/negative sequence components referenced to phase a."""

    zero: complex
    pos: complex
    neg: complex


def zero_seq(x: PhaseTriple):
    """Zero-sequence component: the common-mode third of the phase sum."""
    return (x.a + x.b + x.c) / 3.0


def neg_seq(x: PhaseTriple):
    """Negative-sequence component referenced to phase a.

    Equivalent to (a + rot^2 b + rot c)/3 written out with real
    coefficients, which keeps the expression cheap for array inputs.
    """
    return (2.0 * x.a - (1.0 + 1j * SQRT3) * x.b - (1.0 - 1j * SQRT3) * x.c) / 6.0


def pos_seq(x: PhaseTriple):
    """Positive-sequence component, the remainder after zero and negative."""
    return x.a - zero_seq(x) - neg_seq(x)


def decompose(x: PhaseTriple) -> SequenceTriple:
    """Split a phase triple into its zero/positive/negative components."""
    zero = zero_seq(x)
    neg = neg_seq(x)
    return SequenceTriple(zero=zero, pos=x.a - zero - neg, neg=neg)


def reconstruct(s: SequenceTriple) -> PhaseTriple:
    """Rebuild the phase triple from phase-a referenced sequence values."""
    return PhaseTriple(
        a=s.zero + s.pos + s.neg,
        b=s.zero + ROT2 * s.pos + ROT * s.neg,
        c=s.zero + ROT * s.pos + ROT2 * s.neg,
    )
