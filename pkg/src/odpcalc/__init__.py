"""Stationarity and constraint qualification checks for constraints ``F(x)`` in a union of boxes."""

__version__ = "0.1.0"

from .amseq import (AMRecord, AMSequence, generate_am_sequence, load_sequence,  # noqa: E402
                    refine_nonzero_multipliers, tail_normalize, verify_am_sequence,
                    verify_dir_am_sequence)
from .corpus import corpus_manifest, load_corpus_problem, load_corpus_sequence  # noqa: E402
from .errors import *  # noqa: E402,F401,F403
from .orthogeom import (CellUnion, OrthoSet, dir_limiting_normal_cone,  # noqa: E402
                        limiting_normal_cone, regular_normal_cone, tangent_cone)
from .problem import ProblemSpec, load_problem, problem_from_dict  # noqa: E402
from .pwexpr import (VectorFunc, dir_derivative, dir_limiting_subdiff,  # noqa: E402
                     limiting_subdiff, scalarization_subdiff)
from .quals import (check_foscms, check_gacq_ggcq, check_nnamcq, estimate_mscq,  # noqa: E402
                    falsify_am_regularity)
from .stationarity import (check_dir_m_stationarity, check_m_stationarity,  # noqa: E402
                           critical_cone_membership, strict_local_min_by_trivial_cone)
from .submfc import check_odp_submfc, check_odp_submfc_dir, submfc_consequence  # noqa: E402
from .verdict import Certificate, Status, Verdict  # noqa: E402
