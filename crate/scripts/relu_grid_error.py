#!/usr/bin/env python3
"""Brute-force grid error of Chebyshev interpolants of ReLU on [-1, 1].

Coefficients come from the discrete cosine sum over first-kind Chebyshev
roots, using cos(j*theta) directly instead of the three-term recurrence.
The interpolant is evaluated on a uniform grid with the trigonometric form
T_j(x) = cos(j * arccos(x)) in 50-digit arithmetic.

Usage: relu_grid_error.py [DEGREE ...] [--grid N]
"""
import sys

import mpmath as mp

mp.mp.dps = 50


def relu(x):
    return x if x > 0 else mp.mpf(0)


def coefficients(f, degree):
    n = degree + 1
    thetas = [(k + mp.mpf(1) / 2) * mp.pi / n for k in range(n)]
    values = [f(mp.cos(t)) for t in thetas]
    coeffs = []
    for j in range(n):
        s = mp.fsum(v * mp.cos(j * t) for v, t in zip(values, thetas))
        coeffs.append((2 if j > 0 else 1) * s / n)
    return coeffs


def grid_error(f, degree, grid):
    coeffs = coefficients(f, degree)
    worst = mp.mpf(0)
    for i in range(grid):
        x = mp.mpf(-1) + 2 * mp.mpf(i) / (grid - 1)
        theta = mp.acos(x)
        approx = mp.fsum(c * mp.cos(j * theta) for j, c in enumerate(coeffs))
        worst = max(worst, abs(approx - f(x)))
    return worst


def main(argv):
    grid = 10001
    degrees = []
    it = iter(argv)
    for arg in it:
        if arg == "--grid":
            grid = int(next(it))
        else:
            degrees.append(int(arg))
    if not degrees:
        degrees = [50]
    print("degree,max_error")
    for d in degrees:
        print(f"{d},{mp.nstr(grid_error(relu, d, grid), 20)}")


if __name__ == "__main__":
    main(sys.argv[1:])
