"""Small one-dimensional searches shared by the fusion and union solvers."""
import math

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, a: float, b: float, xtol: float = 1e-12, max_iter: int = 500):
    """Minimize a unimodal ``f`` on ``[a, b]``.  Returns ``(x, f(x))`` for the best probe."""
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while b - a > xtol and it < max_iter:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = f(d)
        it += 1
    return (c, fc) if fc <= fd else (d, fd)
