"""Growth-criterion ratios: a base sequence, or two interleaved tau-families."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from _config import parse_config, write_text

from liouville.core import format_rational
from liouville.measure import criterion_report, interleaved_tau_ratios
from liouville.specs import parse_base, parse_u


@dataclass
class CriterionConfig:
    base: str = "factorial-pow2"
    u: str = "identity"
    n_max: int = 12
    theta: str = "1/2"
    tau_pair: str = ""  # e.g. "1/3,2/3" switches to the interleaved families
    n_lo: int = 3
    n_hi: int = 64
    out: str = ""


def tau_table(cfg: CriterionConfig) -> str:
    t1, t2 = cfg.tau_pair.split(",")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "merged_index", "odd_over_even", "even_over_odd"])
    for r in interleaved_tau_ratios(t1, t2, range(cfg.n_lo, cfg.n_hi + 1)):
        w.writerow([r.n, r.merged_index, format_rational(r.odd_over_even), format_rational(r.even_over_odd)])
    return buf.getvalue()


def main() -> None:
    cfg = parse_config(CriterionConfig)
    if cfg.tau_pair:
        write_text(tau_table(cfg), cfg.out)
    else:
        write_text(criterion_report(parse_base(cfg.base), parse_u(cfg.u), cfg.n_max, cfg.theta).to_csv(), cfg.out)


if __name__ == "__main__":
    main()
