"""vega: variational equations of homogeneous potentials along Darboux points.

Exact construction of the higher variational equations VE_p, differential
Galois obstruction verdicts for degree k = 2 (resonant subsystem criteria
and the non-resonant inductive analysis), and closed-form solving of every
VE_p for degree k = -2 inside the algebra spanned by I^m E_omega.
"""

__version__ = "0.1.0"

from .polycore import (  # noqa: F401
    QC,
    ForceField,
    HomogeneousPotential,
    PoleAtPoint,
    Poly,
    RatFunc,
    derivative_tensor,
    euler_check,
    evaluate,
    partial_derivative,
)
from .darboux import (  # noqa: F401
    DarbouxData,
    Freq,
    ResonanceClass,
    classify_resonance,
    eigenframe,
    normalize_darboux,
    verify_darboux,
)
from .vebuild import (  # noqa: F401
    ForcingTerm,
    VESystem,
    build_ve_chain,
    coupling_theta,
    coupling_xi,
    extract_ex2,
    extract_ve2_ab,
    extract_ve2_alpha,
    superpose,
)
from .galois_k2 import (  # noqa: F401
    Certificate,
    Verdict,
    check_ex2,
    check_ve2_alpha,
    inductive_analysis,
    verdict_ve2,
)
from .balgebra_km2 import (  # noqa: F401
    BElement,
    Regime,
    b_mul,
    eval_belement,
    integrate_over_phi2,
    solve_forced,
    solve_homogeneous,
    solve_jordan_chain,
    solve_ve_chain_km2,
)
from . import trig  # noqa: F401
from . import numeric  # noqa: F401
