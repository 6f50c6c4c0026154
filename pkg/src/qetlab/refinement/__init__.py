"""Refinement types over cost-structure terms, with a sampling validity oracle."""

from .check import Checker, Obligation, RefinementResult, Subtyper, check_refined, subtype
from .formula import (BOT, TOP, And, Definition, Exists, FCall, FCS, FNum, FOp, Forall, Formula,
                      FormulaTyper, FVar, Implies, Not, Or, Pred, conj, fv, pretty, rel)
from .oracle import (Falsified, FormulaEvaluator, NotFalsified, OracleConfig, VerifiedSyntactic,
                     Witness, member, meet, replay, validity)
from .reftypes import (Admissibility, Bind, DepArrow, Fact, ForallType, RefBase, admissible,
                       alpha_eq_type, pretty_type, skeleton, subst_type, unrefined, wf)
from .rty import RtySpec, parse_definition, parse_formula, parse_rtype, parse_rty

__all__ = [
    "Admissibility", "And", "BOT", "Bind", "Checker", "Definition", "DepArrow", "Exists",
    "FCS", "FCall", "FNum", "FOp", "FVar", "Fact", "Falsified", "Forall", "ForallType",
    "Formula", "FormulaEvaluator", "FormulaTyper", "Implies", "Not", "NotFalsified", "Obligation",
    "Or", "OracleConfig", "Pred", "RefBase", "RefinementResult", "RtySpec", "Subtyper", "TOP",
    "VerifiedSyntactic", "Witness", "admissible", "alpha_eq_type", "check_refined", "conj",
    "fv", "meet", "member", "parse_definition", "parse_formula", "parse_rtype", "parse_rty",
    "pretty", "pretty_type", "rel", "replay", "skeleton", "subst_type", "subtype",
    "unrefined", "validity", "wf",
]
