"""Instance files, rule-verification suites, and the command-line interface."""
from .instance import Instance, InstanceError, corpus_ids, load_instance
from .report import InclusionReport
from .suites import SUITES, Options, run_suite

__all__ = ["Instance", "InstanceError", "corpus_ids", "load_instance", "InclusionReport",
           "SUITES", "Options", "run_suite"]
