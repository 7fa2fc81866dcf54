"""Search for an annotator pair whose absolute differences give a target
"mean ± SD" (population SD) and exact-match agreement, both at two decimals.

Used to build the header/footer agreement fixture (1.88 ± 2.12 at 0.40
agreement).  Prints the first multiset of differences found and an (a, b)
pair realising it.
"""

import argparse
import statistics
from functools import lru_cache


def solve(mean, sd, agreement, max_n=40, max_diff=12):
    for n in range(1, max_n + 1):
        zeros = round(agreement * n)
        if f"{zeros / n:.2f}" != f"{agreement:.2f}":
            continue
        k = n - zeros
        for total in range(k, k * max_diff + 1):
            if f"{total / n:.2f}" != f"{mean:.2f}":
                continue
            found = _multiset(k, total, n, mean, sd, max_diff)
            if found is not None:
                return [0] * zeros + list(found)
    return None


def _multiset(k, total, n, mean, sd, max_diff):
    @lru_cache(maxsize=None)
    def search(count, remaining, squares_left, low):
        if count == 0:
            return () if remaining == 0 and squares_left == 0 else None
        for d in range(low, max_diff + 1):
            if d * count > remaining:
                break
            rest = search(count - 1, remaining - d, squares_left - d * d, d)
            if rest is not None:
                return (d,) + rest
        return None

    for squares in range(total, k * max_diff * max_diff + 1):
        var = squares / n - (total / n) ** 2
        if var < 0 or f"{var ** 0.5:.2f}" != f"{sd:.2f}":
            continue
        found = search(k, total, squares, 1)
        if found is not None:
            return found
    return None


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--mean", type=float, default=1.88)
    p.add_argument("--sd", type=float, default=2.12)
    p.add_argument("--agreement", type=float, default=0.40)
    args = p.parse_args()
    diffs = solve(args.mean, args.sd, args.agreement)
    if diffs is None:
        raise SystemExit("no solution in the search range")
    a = [3 + (i % 4) for i in range(len(diffs))]
    b = [x + d for x, d in zip(a, diffs)]
    print("diffs", diffs)
    print("a", a)
    print("b", b)
    print(f"{statistics.fmean(diffs):.2f} ± {statistics.pstdev(diffs):.2f}, n={len(diffs)}")


if __name__ == "__main__":
    main()
