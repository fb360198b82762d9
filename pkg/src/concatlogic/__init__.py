"""First-order theories of binary strings with concatenation and a
substring or prefix relation."""

from .axiomatics import Proof, Refused, check_proof, prove_atomic, prove_sigma
from .logic import classify, parse, parse_formula, parse_term, show
from .normalform import normalize
from .pcp import PcpInstance, solve_pcp, verify_solution
from .semantics import Structure, Verdict, decide_sigma_0mk, evaluate
from .wordeq import solve

__all__ = ["parse", "parse_formula", "parse_term", "show", "classify",
           "Structure", "Verdict", "evaluate", "decide_sigma_0mk", "normalize", "solve",
           "Proof", "Refused", "check_proof", "prove_atomic", "prove_sigma",
           "PcpInstance", "solve_pcp", "verify_solution"]
