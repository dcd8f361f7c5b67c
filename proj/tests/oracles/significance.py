"""Reference z-statistics and two-sided normal tail probabilities (mpmath)."""

from mpmath import mp, mpf, sqrt, erfc

mp.dps = 40

print("z(0.660, 0.277, 1005) =", mp.nstr(mpf("0.660") / (mpf("0.277") / sqrt(1005)), 20))
for z in ["0", "0.5", "1", "1.959963984540054", "2.5", "3", "4", "6", "8.5"]:
    print(f"p({z}) =", mp.nstr(erfc(mpf(z) / sqrt(2)), 20))
