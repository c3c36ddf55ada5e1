"""Fit a split normal to an asymmetric interval and read it back.

Run with:
    python3 demos/split_normal_fit.py

Demonstrates:
- fitting sigma1 and sigma2 so the 95% interval lands on given bounds
- the fitted tail masses, checked against the stated level
- a symmetric interval collapsing to an ordinary normal
"""

from snmqd.splitnorm import fit


def show(lower, point, upper, alpha=0.05):
    res = fit(lower, point, upper, alpha)
    sn = res.dist
    print(f"  triple ({lower:+.2f}, {point:+.2f}, {upper:+.2f})")
    print(f"    sigma1 = {sn.sigma1:.5f}  sigma2 = {sn.sigma2:.5f}  ({res.iterations} iterations)")
    print(f"    cdf(lower) = {sn.cdf(lower):.6f}  cdf(upper) = {sn.cdf(upper):.6f}")
    print(f"    2.5% / 97.5% quantiles: {sn.quantile(alpha / 2):+.5f} / {sn.quantile(1 - alpha / 2):+.5f}")


def main():
    print("Asymmetric interval, longer right tail:")
    show(-1.0, 0.0, 3.0)
    print()
    print("Symmetric interval, equal scales (a normal with sigma 1):")
    show(-1.959964, 0.0, 1.959964)


if __name__ == "__main__":
    main()
