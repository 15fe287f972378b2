# defaults/polynomials.py

"""
Default reduction polynomials for GF(2^w), 1 <= w <= 16.
Bit i of each value is the coefficient of x^i. All entries are primitive,
so x itself generates the multiplicative group.
"""

DEFAULT_POLYNOMIALS = {
    1: 0x3,        # x + 1
    2: 0x7,        # x^2 + x + 1
    3: 0xB,        # x^3 + x + 1
    4: 0x13,       # x^4 + x + 1
    5: 0x25,       # x^5 + x^2 + 1
    6: 0x43,       # x^6 + x + 1
    7: 0x89,       # x^7 + x^3 + 1
    8: 0x11D,      # x^8 + x^4 + x^3 + x^2 + 1
    9: 0x211,      # x^9 + x^4 + 1
    10: 0x409,     # x^10 + x^3 + 1
    11: 0x805,     # x^11 + x^2 + 1
    12: 0x1053,    # x^12 + x^6 + x^4 + x + 1
    13: 0x201B,    # x^13 + x^4 + x^3 + x + 1
    14: 0x4443,    # x^14 + x^10 + x^6 + x + 1
    15: 0x8003,    # x^15 + x + 1
    16: 0x1100B,   # x^16 + x^12 + x^3 + x + 1
}


def default_polynomial(width: int) -> int:
    if width not in DEFAULT_POLYNOMIALS:
        raise KeyError(f"no default reduction polynomial for width {width}")
    return DEFAULT_POLYNOMIALS[width]


def describe_polynomial(poly: int) -> str:
    """Render a bit-packed polynomial as 'x^8 + x^4 + ... + 1'."""
    terms = []
    for i in range(poly.bit_length() - 1, -1, -1):
        if poly >> i & 1:
            terms.append("1" if i == 0 else "x" if i == 1 else f"x^{i}")
    return " + ".join(terms) if terms else "0"
