"""Information-geometric renormalisation flows on finite quantum systems."""

from .errors import (
    ChannelError,
    DomainError,
    FlowDegeneracyError,
    GibbsOverflowError,
    HermiticityError,
    LatticeError,
    NumericalError,
    PictureError,
    RankDeficiencyError,
)
from .flow import (
    CertificateReport,
    FlowTrajectory,
    apply_generator,
    beta,
    check_contract_identity,
    check_contraction,
    evolve,
    flow_trajectory,
    invariant_field_residual,
    nabla,
    pushforward,
    speed,
    speed_density_exact,
)
from .geometry import (
    Picture,
    TangentVector,
    free_energy,
    hamiltonian_tangent,
    metric_hamiltonians,
    metric_states,
    omega,
    omega_inv,
    relative_entropy,
    state_tangent,
)
from .lattice import (
    IsingPoint1D,
    LatticeSpec,
    diffusion_kernel_check,
    heisenberg_adjoint_single_site,
    ising1d_beta,
    ising1d_speed_density,
    swap_generator,
    translation_operator,
)
from .operators import (
    GibbsState,
    SpectralDecomposition,
    eig,
    embed_site_operator,
    matrix_function,
    normalize_to_gibbs,
    partial_trace,
    random_gibbs,
    random_hermitian,
)
from .superop import KrausChannel, LindbladGenerator, Superoperator
