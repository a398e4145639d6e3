"""Opcode and error-code constants for the tape evaluators.

The numeric values are mirrored verbatim by the Cython backend; change them
in both places or not at all.
"""

OP_CONST = 0
OP_VAR = 1
OP_PARAM = 2
OP_NEG = 3
OP_ADD = 4
OP_SUB = 5
OP_MUL = 6
OP_DIV = 7
OP_POWI = 8  # integer exponent in arg, repeated multiplication
OP_POWR = 9  # real exponent stored in the constant pool, base must be > 0

ERR_NONE = 0
ERR_DIV_ZERO = 1
ERR_POW_DOMAIN = 2
ERR_ZERO_NEG_POW = 3
ERR_NONFINITE = 4

ERR_MESSAGES = {
    ERR_DIV_ZERO: "division by zero",
    ERR_POW_DOMAIN: "fractional power of a non-positive base",
    ERR_ZERO_NEG_POW: "zero raised to a negative power",
    ERR_NONFINITE: "non-finite intermediate result",
}

# Integral exponents above this magnitude are evaluated through the real
# power path instead of a multiplication loop.
MAX_POWI = 1024
