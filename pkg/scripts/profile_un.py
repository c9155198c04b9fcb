"""u_n profile of a number along a base sequence, as CSV."""
from __future__ import annotations

from dataclasses import dataclass

from _config import parse_config, write_text

from liouville.measure import un_profile
from liouville.cli import parse_range
from liouville.specs import parse_base, parse_number


@dataclass
class ProfileConfig:
    number: str = "classic:10"
    base: str = "factorial-pow:10"
    n: str = "2..6"
    frac_bits: int = 64
    out: str = ""


def main() -> None:
    cfg = parse_config(ProfileConfig)
    lo, hi = parse_range(cfg.n)
    prof = un_profile(parse_number(cfg.number), parse_base(cfg.base), range(lo, hi + 1), cfg.frac_bits)
    write_text(prof.to_csv(), cfg.out)


if __name__ == "__main__":
    main()
