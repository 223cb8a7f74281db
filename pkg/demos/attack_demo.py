"""The reference-pulse intercept-resend attack, with and without checks.

The attacker swaps Bob's outgoing train for one with identical slot
energies but no phase structure, reads Alice's modulation off the
reflection against her kept reference, and resends Bob's stored train
re-encoded. Nothing downstream of the swap can tell: sifted keys agree
perfectly while she holds a full copy.

What stops her is Alice's sampling check: diverted trains are interfered
in a randomly chosen basis and compared against Bob's announced phase.
The flat substitute fails that comparison half the time on average.
"""

from dpsqkd import EveKind, SessionConfig, run_session


def describe(title, stats):
    print(f"\n{title}")
    print(f"  sifted key bits      : {stats.sifted_length}")
    print(f"  sifted mismatches    : {stats.mismatches}")
    qber = "n/a" if stats.qber is None else f"{stats.qber:.4f}"
    print(f"  disclosed-subset QBER: {qber}")
    leak = "n/a" if stats.eve_agreement is None else f"{stats.eve_agreement:.1%}"
    print(f"  attacker key overlap : {leak}")
    rate = "n/a" if stats.check_error_rate is None else f"{stats.check_error_rate:.3f}"
    print(f"  matched-check errors : {rate} over {stats.check_rounds_matched} rounds")
    print(f"  session alarm        : {'RAISED' if stats.alarm else 'quiet'}")


def main():
    rounds = 8000
    base = dict(
        rounds=rounds,
        mean_photons_return=0.5,
        eve_kind=EveKind.INTERCEPT_RESEND_REFERENCE,
    )

    off = run_session(
        SessionConfig(**base, sample_prob=0.0, decoy_prob=0.0, master_seed=1)
    ).stats
    describe("checks disabled (sampling off)", off)

    on = run_session(SessionConfig(**base, sample_prob=0.2, master_seed=2)).stats
    describe("checks enabled (20% of trains sampled)", on)

    print(
        "\nWithout the check the attack is invisible and the key is fully"
        "\nleaked; with it the matched-basis error rate jumps to ~50% and the"
        "\nsession alarms immediately."
    )


if __name__ == "__main__":
    main()
