"""Key-creation efficiency versus cascade depth.

The exact column is the inner-slot energy fraction (2^n - 1)/2^n; the
measured column is the fraction of single-click rounds that land on a
usable slot in a seeded Monte Carlo run. The right-hand column is the
n/(n+1) efficiency of the comparison system, which the cascade beats for
every n above 1 and leaves far behind as n grows.
"""

from dpsqkd import SessionConfig, competitor_efficiency, run_session, theoretical_efficiency


def main():
    rounds = 30_000
    print(f"{rounds} rounds per n, return energy 0.3 photons, ideal detectors\n")
    print(f"{'n':>2} {'slots':>6} {'measured':>9} {'exact':>9} {'n/(n+1)':>9}")
    for n in range(1, 7):
        cfg = SessionConfig(
            n_stages=n,
            rounds=rounds,
            mean_photons_return=0.3,
            sample_prob=0.0,
            master_seed=140 + n,
        )
        stats = run_session(cfg).stats
        exact = theoretical_efficiency(n)
        competitor = competitor_efficiency(n)
        print(
            f"{n:>2} {2 ** n:>6} {stats.efficiency:>9.4f} "
            f"{float(exact):>9.4f} {float(competitor):>9.4f}"
        )
    print(
        "\nmeasured converges on the exact fraction as rounds grow (the small"
        "\nexcess is single-click conditioning at finite pulse energy);"
        "\nthe exact column approaches 1 while n/(n+1) crawls."
    )


if __name__ == "__main__":
    main()
