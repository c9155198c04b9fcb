"""Build a common companion of two witnessed numbers and verify all four restricted witnesses."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass

from _config import parse_config, write_text

from liouville.measure import companion
from liouville.specs import parse_base, parse_number, parse_u
from liouville.witness import natural_witness


@dataclass
class CompanionConfig:
    xi: str = "classic:2"
    xi_base: str = "factorial-pow2"
    eta: str = "classic:3"
    eta_base: str = "factorial-pow:3"
    u: str = "identity"
    n_even: int = 3
    n_odd: int = 2
    out: str = ""


def main() -> None:
    cfg = parse_config(CompanionConfig)
    u = parse_u(cfg.u)
    wx = natural_witness(parse_number(cfg.xi), parse_base(cfg.xi_base), u)
    wy = natural_witness(parse_number(cfg.eta), parse_base(cfg.eta_base), u)
    c = companion(wx, wy)
    report = {"config": asdict(cfg), "shift": c.shift,
              "q_bits": [int(c.q.term(n).bit_length()) for n in range(1, 2 * max(cfg.n_even, cfg.n_odd) + 1)]}
    for name, w, hi in (("rho_even", c.rho_even, cfg.n_even), ("xi_even", c.xi_even, cfg.n_even),
                        ("rho_odd", c.rho_odd, cfg.n_odd), ("eta_odd", c.eta_odd, cfg.n_odd)):
        report[name] = [v.verdict for v in w.verify_range(1, hi)]
    write_text(json.dumps(report, indent=2) + "\n", cfg.out)


if __name__ == "__main__":
    main()
