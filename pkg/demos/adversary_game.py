"""Play the block adversary against several strategies.

The adversary grows a chain of blocks while the agent explores, committing
each block only once the agent's motion has revealed enough.  The script
prints the blocks each strategy was handed, its steps against the certified
optimum, and the ratio the (i)-only chain formula predicts.
"""

from gridpoly import adversary as adv
from gridpoly.explore import make_strategy
from gridpoly.grid import render_ascii


def main(max_blocks: int = 4) -> None:
    print(f"{'strategy':12s} {'n':>2s}  blocks      steps/opt   ratio     (i)-chain formula")
    for name in ("lhdfs", "tangent", "scripted-i"):
        for n in range(1, max_blocks + 1):
            strategy = adv.triggering_strategy(n) if name == "scripted-i" else make_strategy(name)
            r = adv.adversary_run(strategy, n)
            print(
                f"{name:12s} {n:2d}  {''.join(r.blocks):10s} {r.transcript.steps:4d}/{r.tour.length:<4d}"
                f"  {str(r.ratio):8s}  {adv.ratio_limit(n)}"
            )
    r = adv.adversary_run(make_strategy("tangent"), 2)
    print("\nfinal polygon after two rounds against the tangent-rule strategy:")
    print(render_ascii(r.polygon, r.transcript.path))
    print(f"blocks needed for epsilon = 1/1000: {adv.blocks_needed('1/1000')}")


if __name__ == "__main__":
    main()
