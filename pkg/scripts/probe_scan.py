"""Finite-scale non-membership probe over a range of indices.

The default run shows the parity pattern of the sqrt-lambda number against
q_n = 2^{n!}: even indices carry its defining approximations (FAIL), odd
indices have none below the threshold (PASS).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from _config import parse_config, write_text

from liouville.measure import nonmember_probe
from liouville.specs import parse_base, parse_number, parse_u


@dataclass
class ProbeConfig:
    number: str = "prop12:sqrt"
    base: str = "factorial-pow2"
    u: str = "identity"
    kappa1: str = "1"
    kappa2: str = "1/2"
    n_lo: int = 2
    n_hi: int = 7
    out: str = ""


def main() -> None:
    cfg = parse_config(ProbeConfig)
    x, q, u = parse_number(cfg.number), parse_base(cfg.base), parse_u(cfg.u)
    buf = io.StringIO()
    rows = [nonmember_probe(x, q, u, cfg.kappa1, cfg.kappa2, n).as_dict() for n in range(cfg.n_lo, cfg.n_hi + 1)]
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    write_text(buf.getvalue(), cfg.out)


if __name__ == "__main__":
    main()
