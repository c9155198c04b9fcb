"""Randomized check of the gap disjunction on planted continued-fraction instances."""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass

from _config import parse_config, write_text

from liouville.core import format_rational
from liouville.measure import gap_trials


@dataclass
class GapConfig:
    trials: int = 1000
    seed: int = 0
    integer_u: bool = False
    out: str = ""


def main() -> None:
    cfg = parse_config(GapConfig)
    results = gap_trials(cfg.trials, cfg.seed, cfg.integer_u)
    sides = Counter("both" if v.q2_ge_q_pow_u and v.q_ge_q2_pow_u else
                    "q2>=q^u" if v.q2_ge_q_pow_u else "q>=q2^u" if v.q_ge_q2_pow_u else "neither"
                    for _, v in results)
    bad = [{"p": str(i.p), "q": str(i.q), "p2": str(i.p2), "q2": str(i.q2), "u": format_rational(i.u)}
           for i, v in results if not v.holds]
    doc = {"config": asdict(cfg), "sides": dict(sorted(sides.items())), "counterexamples": bad,
           "max_u": format_rational(max(i.u for i, _ in results))}
    write_text(json.dumps(doc, indent=2) + "\n", cfg.out)


if __name__ == "__main__":
    main()
