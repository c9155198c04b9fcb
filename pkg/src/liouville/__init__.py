"""Certified arithmetic and measurements for Liouville numbers and Liouville sets."""
from .core import Interval, Log2Interval, compare_to_power, floor_pow, log2_interval, nearest_int
from .errors import LiouvilleError
from .measure import (
    companion,
    cf_convergents,
    criterion_report,
    gap_check,
    nonmember_probe,
    two_squares_check,
    un_profile,
)
from .numbers import erdos_split, liouville_classic, xi_prop12, xi_prop13, xi_prop14, xi_t, xi_theorem3
from .sequences import FactorialPow2, Identity, lemma4_indices, lemma8_interleave, merge, prop13_schedule
from .specs import parse_base, parse_number, parse_u
from .witness import (
    ApproxWitness,
    affine_q,
    apply_rational_function,
    combine2,
    emit_certificate,
    load_certificate,
    natural_witness,
    normalize,
    reciprocal,
)
