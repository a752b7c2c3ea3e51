"""kmroth: convolution algebra, Bohr-set calculus and density-increment
machinery for three-term arithmetic progressions on finite abelian groups.

The public surface mirrors the layering of the toolkit:

* groups / functions / fourier - exact and floating arithmetic of functions
  on a finite abelian group: convolutions, inner products, norms, spectra;
* bohr / subspaces - the structured-cell calculus (Bohr sets and F_q^n
  subspaces) with exact regularity certification;
* steps - the certified proof-step operations (lifting, unbalancing,
  dependent random choice, almost-periodicity oracles, density increment,
  narrowing);
* pipelines - end-to-end drivers and constructions;
* verify - the brute-force lemma-verification harness and constants ledger;
* cli - the `km` command.
"""

from ._kernels import BACKEND
from .groups import Group, GSet, count_3aps, dilate_set, make_group, sumset
from .functions import (
    FuncR,
    ProbMeasure,
    conv,
    diffconv,
    inner_wrt,
    lp_norm_wrt,
    mu_of_set,
    uniform,
)
from .fourier import FuncC, dft, moment_via_spectrum, spectral_min
from .bohr import APRun, BohrSet, bohr_build, dilate, extract_ap, freq_dilate, is_regular, join, regular_dilate
from .subspaces import Subspace, enumerate_subspaces
from .steps import (
    bohr_unbalance,
    bour_narrow,
    density_increment_step,
    drc,
    find_smoothing_bohr,
    find_smoothing_subspace,
    holder_lift,
    sift,
    unbalance,
)
from .pipelines import (
    behrend,
    embed_interval,
    longest_ap,
    roth_ffq_driver,
    roth_znz_driver,
    three_sumset_ap_pipeline,
)
from .constants import Constants, load_constants
from .verify import SuiteSpec, run_suite

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "__version__",
    "Group", "GSet", "count_3aps", "dilate_set", "make_group", "sumset",
    "FuncR", "ProbMeasure", "conv", "diffconv", "inner_wrt", "lp_norm_wrt",
    "mu_of_set", "uniform",
    "FuncC", "dft", "moment_via_spectrum", "spectral_min",
    "APRun", "BohrSet", "bohr_build", "dilate", "extract_ap", "freq_dilate",
    "is_regular", "join", "regular_dilate",
    "Subspace", "enumerate_subspaces",
    "bohr_unbalance", "bour_narrow", "density_increment_step", "drc",
    "find_smoothing_bohr", "find_smoothing_subspace", "holder_lift", "sift",
    "unbalance",
    "behrend", "embed_interval", "longest_ap", "roth_ffq_driver",
    "roth_znz_driver", "three_sumset_ap_pipeline",
    "Constants", "load_constants",
    "SuiteSpec", "run_suite",
]
