"""Weighted backward shifts: dynamics, invariant product measures and orthogonality."""
from .autocorr import (DensityProfile, Profile, acf, equivalence_regime, limit_scale_detect, log_substitution,
                       one_sided_slopes, psi, theta)
from .hellinger import (HellingerReport, discrete_marginal_test, gaussian_equivalence_test, hellinger,
                        kakutani_decide, kakutani_witness, translate_test)
from .measures import (DiscreteGroup, Gaussian, GridDensity, InvariantProductMeasure, Mixture, RotationInvariant,
                       UniformInterval, marginal_at, marginal_from_json, moment_identity, sample, symmetrize_phase)
from .orbits import (Ball, CoordinateBand, Halfspace, OrbitTrace, empirical_orthogonality_witness,
                     fhc_transfer_constant, orbit_trace, shift_power, visit_density)
from .orthocheck import (OrthogonalityReport, PeriodicWitness, orthogonality_report, ratio_series,
                         scalar_pair_test, shared_periodic_point, similarity_test, window_orthogonality_test)
from .verdict import DEFAULT, Status, Tolerances, Verdict
from .weights import (Constant, EpsilonSequence, FormulaPositions, PrefixThenConstant, RatioTelescope, ScaledCopy,
                      SparseException, WeightSpec, classify, fixed_point, log_products, spec_from_json, summability)

__version__ = "0.1.0"
