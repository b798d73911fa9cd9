"""Exact-arithmetic constructions and machine checks for sign-universal
Walsh series in weighted L1."""

from .exactnum import QS2, DyadicRational, Mag, half_power, qs2_parse, qs2_str
from .geometry import (DyadicInterval, DyadicSet, StepFunction,
                       step_from_json, step_to_json)
from .walsh import (block_kernel, fwht_analysis, fwht_analysis_float,
                    fwht_synthesis, fwht_synthesis_float, l1_prefix_majorant,
                    rademacher, walsh_eval)
from .flatpoly import FlatPoly, bent_pattern, build_flat_poly
from .cascade import (CascadePair, Schedule, ScheduleInfeasible,
                      build_cascade, choose_schedule)
from .cascade_verify import verify_cascade
from .stepapprox import StepApprox, build_step_approx, verify_step_approx
from .enumeration import StepEnumeration, enumerate_steps, find_index
from .weight import WeightFunction, build_weight, verify_weight
from .universal import (SignSelection, UniversalFunction, approximate,
                        build_universal, convergence_report, verify_universal)
from .config import RunConfig

__version__ = "0.1.0"
